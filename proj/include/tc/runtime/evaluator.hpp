#pragma once

#include "tc/dsl/ast.hpp"
#include "tc/runtime/value.hpp"

namespace tc::runtime {

/// Throws Error(MissingParam, name) for an unbound variable and
/// Error(TableMiss, `fn,"key"`) when a table has no entry.
Value evaluate(const dsl::Expr& expr, const Bindings& bindings, const Tables& tables);

/// Compares the canonical spellings of both sides.
bool evaluate_guard(const dsl::Condition& cond, const Bindings& bindings, const Tables& tables);

/// Lookup key for a table call: canonical args joined by ','.
std::string table_key(const std::vector<Value>& args);

}  // namespace tc::runtime
