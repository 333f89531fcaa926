#pragma once

#include <set>
#include <string>
#include <vector>

#include "tc/dsl/ast.hpp"

namespace tc::dsl {

enum class Severity { Error, Warning };

struct Finding {
    Severity severity = Severity::Error;
    std::string path;  // e.g. "handlers[1].body[0].role"
    std::string message;
    SourcePos pos;

    bool operator==(const Finding& o) const {
        return severity == o.severity && path == o.path && message == o.message && pos.line == o.pos.line &&
               pos.column == o.pos.column;
    }
};

struct ValidationReport {
    std::vector<Finding> findings;  // sorted by (line, column)

    std::size_t error_count() const;
    std::size_t warning_count() const;
    bool ok() const { return error_count() == 0; }
};

/// Checks a parsed logic against the capability vocabulary and the table
/// functions available at run time. Never throws; problems are findings.
///
/// Variables visible in a handler are its own trigger params plus the params
/// of every request trigger, since request params stay bound for the whole
/// session.
ValidationReport validate(const CoordinationLogic& logic, const std::set<std::string>& vocabulary,
                          const std::set<std::string>& table_functions);

std::string_view to_string(Severity s);

}  // namespace tc::dsl
