#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tc::dsl {

/// 1-based position in the source text. Not part of structural equality.
struct SourcePos {
    int line = 0;
    int column = 0;
};

struct StringLit {
    std::string value;
    bool operator==(const StringLit&) const = default;
};

struct NumberLit {
    double value = 0.0;
    bool operator==(const NumberLit&) const = default;
};

struct VarRef {
    std::string name;
    bool operator==(const VarRef&) const = default;
};

struct Expr;

struct TableCall {
    std::string function;
    std::vector<Expr> args;
    bool operator==(const TableCall&) const;
};

struct Expr {
    std::variant<StringLit, NumberLit, VarRef, TableCall> node;
    SourcePos pos;

    bool operator==(const Expr& other) const { return node == other.node; }
};

inline bool TableCall::operator==(const TableCall& other) const {
    return function == other.function && args == other.args;
}

enum class RelOp { Eq, Ne };

struct Condition {
    Expr lhs;
    RelOp op = RelOp::Eq;
    Expr rhs;
    bool operator==(const Condition&) const = default;
};

struct NearUser {
    std::optional<double> radius_m;  // unbounded when absent
    bool operator==(const NearUser&) const = default;
};

struct InZone {
    std::string zone;
    bool operator==(const InZone&) const = default;
};

using Constraint = std::variant<NearUser, InZone>;

struct RoleSpec {
    std::string name;
    std::string capability;
    std::vector<Constraint> constraints;
    SourcePos pos;

    bool operator==(const RoleSpec& o) const {
        return name == o.name && capability == o.capability && constraints == o.constraints;
    }
};

inline constexpr const char* kRequestTrigger = "request";

struct Trigger {
    enum class Kind { Request, Event };
    Kind kind = Kind::Request;
    std::string event_type;  // empty for Request
    std::vector<std::string> params;

    /// Name as written in source: "request" or the event type.
    const std::string& name() const;
    bool operator==(const Trigger&) const = default;
};

struct Statement {
    std::string role;
    std::string verb;
    std::vector<Expr> args;
    std::optional<std::string> subscription;
    SourcePos pos;

    bool operator==(const Statement& o) const {
        return role == o.role && verb == o.verb && args == o.args && subscription == o.subscription;
    }
};

struct Handler {
    Trigger trigger;
    std::optional<Condition> guard;
    std::vector<Statement> body;
    SourcePos pos;

    bool operator==(const Handler& o) const {
        return trigger == o.trigger && guard == o.guard && body == o.body;
    }
};

struct CoordinationLogic {
    std::string name;
    std::vector<RoleSpec> roles;
    std::vector<Handler> handlers;

    bool operator==(const CoordinationLogic&) const = default;

    const RoleSpec* find_role(std::string_view role) const;
};

}  // namespace tc::dsl
