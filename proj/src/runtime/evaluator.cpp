#include "tc/runtime/evaluator.hpp"

#include "tc/dsl/printer.hpp"
#include "tc/error.hpp"

namespace tc::runtime {

std::string table_key(const std::vector<Value>& args) {
    std::string key;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) key += ',';
        key += canonical(args[i]);
    }
    return key;
}

Value evaluate(const dsl::Expr& expr, const Bindings& bindings, const Tables& tables) {
    return std::visit(
        [&](const auto& node) -> Value {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, dsl::StringLit>) {
                return node.value;
            } else if constexpr (std::is_same_v<T, dsl::NumberLit>) {
                return node.value;
            } else if constexpr (std::is_same_v<T, dsl::VarRef>) {
                auto it = bindings.find(node.name);
                if (it == bindings.end()) throw Error(ErrorCode::MissingParam, node.name, "no value bound");
                return it->second;
            } else {
                std::vector<Value> args;
                args.reserve(node.args.size());
                for (const auto& a : node.args) args.push_back(evaluate(a, bindings, tables));
                auto key = table_key(args);
                auto detail = node.function + "," + dsl::quote_string(key);
                auto table = tables.find(node.function);
                if (table == tables.end()) throw Error(ErrorCode::TableMiss, detail, "no such table");
                auto hit = table->second.find(key);
                if (hit == table->second.end()) throw Error(ErrorCode::TableMiss, detail, "no entry for key");
                return hit->second;
            }
        },
        expr.node);
}

bool evaluate_guard(const dsl::Condition& cond, const Bindings& bindings, const Tables& tables) {
    bool equal = canonical(evaluate(cond.lhs, bindings, tables)) == canonical(evaluate(cond.rhs, bindings, tables));
    return cond.op == dsl::RelOp::Eq ? equal : !equal;
}

}  // namespace tc::runtime
