#include "tc/dsl/validator.hpp"

#include <algorithm>
#include <map>

#include "tc/names.hpp"

namespace tc::dsl {

std::size_t ValidationReport::error_count() const {
    return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(),
                                                  [](const Finding& f) { return f.severity == Severity::Error; }));
}

std::size_t ValidationReport::warning_count() const {
    return findings.size() - error_count();
}

std::string_view to_string(Severity s) {
    return s == Severity::Error ? "error" : "warning";
}

namespace {

class Checker {
public:
    Checker(const CoordinationLogic& logic, const std::set<std::string>& vocabulary,
            const std::set<std::string>& tables)
        : logic_(logic), vocabulary_(vocabulary), tables_(tables) {}

    ValidationReport run() {
        check_roles();
        for (const auto& h : logic_.handlers) {
            if (h.trigger.kind == Trigger::Kind::Request) {
                request_params_.insert(h.trigger.params.begin(), h.trigger.params.end());
            } else {
                event_types_.insert(h.trigger.event_type);
            }
        }
        for (std::size_t i = 0; i < logic_.handlers.size(); ++i) check_handler(i);
        for (const auto& role : logic_.roles) {
            if (!used_roles_.contains(role.name) && first_role_index_[role.name] == &role)
                warn("roles[" + std::to_string(index_of(role)) + "]", "role '" + role.name + "' is never used",
                     role.pos);
        }
        std::stable_sort(report_.findings.begin(), report_.findings.end(), [](const Finding& a, const Finding& b) {
            if (a.pos.line != b.pos.line) return a.pos.line < b.pos.line;
            return a.pos.column < b.pos.column;
        });
        return std::move(report_);
    }

private:
    void error(std::string path, std::string message, SourcePos pos) {
        report_.findings.push_back({Severity::Error, std::move(path), std::move(message), pos});
    }
    void warn(std::string path, std::string message, SourcePos pos) {
        report_.findings.push_back({Severity::Warning, std::move(path), std::move(message), pos});
    }

    std::size_t index_of(const RoleSpec& role) const { return static_cast<std::size_t>(&role - logic_.roles.data()); }

    void check_roles() {
        for (std::size_t i = 0; i < logic_.roles.size(); ++i) {
            const auto& role = logic_.roles[i];
            const auto path = "roles[" + std::to_string(i) + "]";
            if (!first_role_index_.emplace(role.name, &role).second)
                error(path + ".name", "duplicate role name '" + role.name + "'", role.pos);
            if (!is_capability_name(role.capability))
                error(path + ".capability", "malformed capability name '" + role.capability + "'", role.pos);
            else if (!vocabulary_.contains(role.capability))
                error(path + ".capability", "capability '" + role.capability + "' is not in the vocabulary",
                      role.pos);
            int near = 0, zone = 0;
            for (const auto& c : role.constraints) {
                if (std::holds_alternative<NearUser>(c)) {
                    ++near;
                } else {
                    ++zone;
                }
            }
            if (near > 1) error(path + ".constraints", "more than one 'near user' constraint", role.pos);
            if (zone > 1) error(path + ".constraints", "more than one 'in zone' constraint", role.pos);
        }
    }

    void check_handler(std::size_t index) {
        const auto& h = logic_.handlers[index];
        const auto path = "handlers[" + std::to_string(index) + "]";
        std::set<std::string> bound(h.trigger.params.begin(), h.trigger.params.end());
        bound.insert(request_params_.begin(), request_params_.end());

        if (h.guard) {
            check_expr(h.guard->lhs, bound, path + ".guard.lhs");
            check_expr(h.guard->rhs, bound, path + ".guard.rhs");
        }
        for (std::size_t s = 0; s < h.body.size(); ++s) {
            const auto& stmt = h.body[s];
            const auto spath = path + ".body[" + std::to_string(s) + "]";
            if (!first_role_index_.contains(stmt.role)) {
                error(spath + ".role", "undeclared role '" + stmt.role + "'", stmt.pos);
            } else {
                used_roles_.insert(stmt.role);
            }
            if (!is_lower_identifier(stmt.verb))
                error(spath + ".verb", "verb '" + stmt.verb + "' must match [a-z][a-z0-9_]*", stmt.pos);
            for (std::size_t a = 0; a < stmt.args.size(); ++a)
                check_expr(stmt.args[a], bound, spath + ".args[" + std::to_string(a) + "]");
            if (stmt.subscription && !event_types_.contains(*stmt.subscription))
                warn(spath + ".subscription", "no 'on " + *stmt.subscription + "' handler for subscription",
                     stmt.pos);
        }
    }

    void check_expr(const Expr& e, const std::set<std::string>& bound, const std::string& path) {
        if (const auto* v = std::get_if<VarRef>(&e.node)) {
            if (!bound.contains(v->name)) error(path, "variable '" + v->name + "' is not bound by the trigger", e.pos);
        } else if (const auto* call = std::get_if<TableCall>(&e.node)) {
            if (!tables_.contains(call->function))
                error(path, "unknown table function '" + call->function + "'", e.pos);
            for (std::size_t i = 0; i < call->args.size(); ++i)
                check_expr(call->args[i], bound, path + ".args[" + std::to_string(i) + "]");
        }
    }

    const CoordinationLogic& logic_;
    const std::set<std::string>& vocabulary_;
    const std::set<std::string>& tables_;
    std::map<std::string, const RoleSpec*> first_role_index_;
    std::set<std::string> request_params_;
    std::set<std::string> event_types_;
    std::set<std::string> used_roles_;
    ValidationReport report_;
};

}  // namespace

ValidationReport validate(const CoordinationLogic& logic, const std::set<std::string>& vocabulary,
                          const std::set<std::string>& table_functions) {
    return Checker(logic, vocabulary, table_functions).run();
}

}  // namespace tc::dsl
