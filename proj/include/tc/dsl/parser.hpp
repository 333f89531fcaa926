#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "tc/dsl/ast.hpp"

namespace tc::dsl {

/// First syntax error in a source file; points at the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, std::string message);

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }
    const std::string& message() const noexcept { return message_; }

private:
    int line_;
    int column_;
    std::string message_;
};

/// Parses one `service` block. Throws ParseError; no recovery.
CoordinationLogic parse(std::string_view source);

}  // namespace tc::dsl
