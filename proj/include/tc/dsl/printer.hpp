#pragma once

#include <string>

#include "tc/dsl/ast.hpp"

namespace tc::dsl {

/// Canonical source text: 2-space indent, one statement per line.
std::string pretty_print(const CoordinationLogic& logic);

std::string format_expr(const Expr& e);

/// Shortest fixed-notation spelling that reads back to the same double;
/// integral values print without a fraction.
std::string format_number(double v);

std::string quote_string(const std::string& s);

}  // namespace tc::dsl
