#include "tc/dsl/printer.hpp"

#include <charconv>
#include <cmath>

namespace tc::dsl {

std::string format_number(double v) {
    if (v == 0.0) return "0";  // also folds -0
    char buf[512];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    if (ec != std::errc()) return std::to_string(v);
    return std::string(buf, end);
}

std::string quote_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

struct ExprPrinter {
    std::string operator()(const StringLit& s) const { return quote_string(s.value); }
    std::string operator()(const NumberLit& n) const { return format_number(n.value); }
    std::string operator()(const VarRef& v) const { return v.name; }
    std::string operator()(const TableCall& c) const {
        std::string out = c.function + "(";
        for (std::size_t i = 0; i < c.args.size(); ++i) {
            if (i) out += ", ";
            out += format_expr(c.args[i]);
        }
        return out + ")";
    }
};

std::string format_constraint(const Constraint& c) {
    if (const auto* near = std::get_if<NearUser>(&c)) {
        if (!near->radius_m) return "near user";
        return "near user within " + format_number(*near->radius_m) + " m";
    }
    return "in zone " + quote_string(std::get<InZone>(c).zone);
}

}  // namespace

std::string format_expr(const Expr& e) {
    return std::visit(ExprPrinter{}, e.node);
}

std::string pretty_print(const CoordinationLogic& logic) {
    std::string out = "service " + logic.name + " {\n";
    for (const auto& role : logic.roles) {
        out += "  role " + role.name + " requires capability " + role.capability;
        for (const auto& c : role.constraints) out += " " + format_constraint(c);
        out += "\n";
    }
    if (!logic.roles.empty() && !logic.handlers.empty()) out += "\n";
    for (std::size_t h = 0; h < logic.handlers.size(); ++h) {
        const auto& handler = logic.handlers[h];
        if (h) out += "\n";
        out += "  on " + handler.trigger.name() + "(";
        for (std::size_t i = 0; i < handler.trigger.params.size(); ++i) {
            if (i) out += ", ";
            out += handler.trigger.params[i];
        }
        out += ")";
        if (handler.guard) {
            out += " when " + format_expr(handler.guard->lhs);
            out += handler.guard->op == RelOp::Eq ? " == " : " != ";
            out += format_expr(handler.guard->rhs);
        }
        out += " {\n";
        for (const auto& stmt : handler.body) {
            out += "    " + stmt.role + "." + stmt.verb + "(";
            for (std::size_t i = 0; i < stmt.args.size(); ++i) {
                if (i) out += ", ";
                out += format_expr(stmt.args[i]);
            }
            out += ")";
            if (stmt.subscription) out += " -> " + *stmt.subscription;
            out += "\n";
        }
        out += "  }\n";
    }
    out += "}\n";
    return out;
}

}  // namespace tc::dsl
