#include "tc/runtime/engine.hpp"

#include "tc/dsl/parser.hpp"
#include "tc/dsl/vocabulary.hpp"
#include "tc/runtime/evaluator.hpp"

namespace tc::runtime {

using ordered_json = nlohmann::ordered_json;
using SteadyClock = std::chrono::steady_clock;

std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::Running: return "running";
        case SessionState::Completed: return "completed";
        case SessionState::Failed: return "failed";
    }
    return "?";
}

PlanFailed::PlanFailed(std::string session_id, const Error& cause)
    : Error(ErrorCode::PlanFailed, std::string(to_string(cause.code())) + "(" + cause.detail() + ")", cause.what()),
      session_id_(std::move(session_id)) {}

struct Engine::Session {
    std::string id;
    std::string logic_name;
    std::shared_ptr<const dsl::CoordinationLogic> logic;
    Bindings params;
    planner::PlanContext ctx;

    mutable std::mutex mutex;
    mutable std::condition_variable log_cv;
    std::condition_variable mailbox_cv;

    planner::BindingPlan plan;
    SessionState state = SessionState::Running;
    std::string reason;
    std::set<Subscription> subscriptions;
    std::vector<LogEntry> log;
    std::deque<Event> mailbox;
    bool busy = false;
    bool stop = false;
    std::uint64_t next_correlation = 0;
    SteadyClock::time_point last_activity = SteadyClock::now();
    std::thread worker;
};

namespace {

ordered_json args_json(const std::vector<Value>& args) {
    ordered_json out = ordered_json::array();
    for (const auto& a : args) out.push_back(ordered_json(to_json(a)));
    return out;
}

std::string reason_of(const Error& e) { return std::string(to_string(e.code())) + "(" + e.detail() + ")"; }

}  // namespace

Engine::Engine(registry::Registry& registry, Dispatcher& dispatcher, const Clock& clock, EngineConfig config,
               Tables tables)
    : registry_(registry), dispatcher_(dispatcher), clock_(clock), config_(std::move(config)), tables_(std::move(tables)) {
    if (config_.vocabulary.empty()) config_.vocabulary = dsl::default_vocabulary();
    table_functions_ = dsl::default_table_functions();
    for (const auto& [fn, _] : tables_) table_functions_.insert(fn);
}

Engine::~Engine() { shutdown(); }

dsl::ValidationReport Engine::put_logic(std::string name, const std::string& source) {
    auto logic = std::make_shared<dsl::CoordinationLogic>(dsl::parse(source));
    auto report = dsl::validate(*logic, config_.vocabulary, table_functions_);
    if (!report.ok()) return report;
    if (name.empty()) name = logic->name;
    std::lock_guard lock(logics_mutex_);
    logics_[name] = StoredLogic{source, std::move(logic)};
    return report;
}

std::optional<std::string> Engine::logic_source(const std::string& name) const {
    std::lock_guard lock(logics_mutex_);
    auto it = logics_.find(name);
    if (it == logics_.end()) return std::nullopt;
    return it->second.source;
}

std::shared_ptr<Engine::Session> Engine::find(const std::string& session_id) const {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    return it == sessions_.end() ? nullptr : it->second;
}

void Engine::append(Session& s, LogEntry entry) {
    LogEntry full;
    full["seq"] = s.log.size();
    full["at"] = clock_.now();
    for (auto& [k, v] : entry.items()) full[k] = std::move(v);
    s.log.push_back(std::move(full));
    s.log_cv.notify_all();
}

void Engine::finish(Session& s, SessionState state, const std::string& reason) {
    if (s.state != SessionState::Running) return;
    s.state = state;
    s.reason = reason;
    s.subscriptions.clear();
    append(s, {{"kind", "state_change"}, {"state", to_string(state)}, {"reason", reason}});
    s.mailbox_cv.notify_all();
}

std::string Engine::start_session(const std::string& logic_name, Bindings params, registry::Location user) {
    std::shared_ptr<const dsl::CoordinationLogic> logic;
    {
        std::lock_guard lock(logics_mutex_);
        auto it = logics_.find(logic_name);
        if (it == logics_.end()) throw Error(ErrorCode::UnknownLogic, logic_name, "no logic stored under this name");
        logic = it->second.logic;
    }

    auto s = std::make_shared<Session>();
    s->logic_name = logic_name;
    s->logic = logic;
    s->params = std::move(params);
    s->ctx = planner::PlanContext{std::move(user), clock_.now(), config_.ttl_ms, {}};
    {
        std::lock_guard lock(sessions_mutex_);
        s->id = "s-" + std::to_string(++next_session_);
    }

    std::optional<Error> plan_error;
    try {
        s->plan = planner::plan_bindings(*logic, registry_.snapshot(s->ctx.now), s->ctx);
    } catch (const Error& e) {
        plan_error = e;
    }
    {
        std::lock_guard lock(sessions_mutex_);
        sessions_[s->id] = s;
    }
    if (plan_error) {
        std::lock_guard lock(s->mutex);
        finish(*s, SessionState::Failed, reason_of(*plan_error));
        throw PlanFailed(s->id, *plan_error);
    }

    for (const auto& h : logic->handlers) {
        if (h.trigger.kind != dsl::Trigger::Kind::Request) continue;
        run_handler(*s, h, s->params);
        std::lock_guard lock(s->mutex);
        if (s->state != SessionState::Running) break;
    }

    std::lock_guard lock(s->mutex);
    if (s->state != SessionState::Running) return s->id;
    if (s->subscriptions.empty()) {
        finish(*s, SessionState::Completed, "handlers_done");
        return s->id;
    }
    std::lock_guard sessions_lock(sessions_mutex_);
    if (shut_down_) {
        finish(*s, SessionState::Completed, "shutdown");
    } else {
        s->last_activity = SteadyClock::now();
        s->worker = std::thread([this, s] { worker(s); });
    }
    return s->id;
}

void Engine::run_handler(Session& s, const dsl::Handler& h, Bindings bindings) {
    auto handler_error = [&](const Error& e) {
        std::lock_guard lock(s.mutex);
        append(s, {{"kind", "handler_error"},
                   {"trigger", h.trigger.name()},
                   {"code", to_string(e.code())},
                   {"detail", e.detail()}});
    };
    try {
        for (const auto& p : h.trigger.params) {
            if (!bindings.contains(p)) throw Error(ErrorCode::MissingParam, p, "trigger parameter not supplied");
        }
        if (h.guard && !evaluate_guard(*h.guard, bindings, tables_)) return;
    } catch (const Error& e) {
        handler_error(e);
        return;
    }
    for (const auto& st : h.body) {
        try {
            if (!run_statement(s, h, st, bindings)) return;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::TableMiss && e.code() != ErrorCode::MissingParam) throw;
            handler_error(e);
            return;
        }
    }
}

DispatchResult Engine::send(Session& s, const std::string& role, const std::string& verb,
                            const std::vector<Value>& args) {
    AbstractInstruction instr;
    planner::Binding binding;
    {
        std::lock_guard lock(s.mutex);
        binding = s.plan.bindings.at(role);
        instr = AbstractInstruction{s.id, s.id + "-" + std::to_string(++s.next_correlation), role, verb, args,
                                    clock_.now()};
        append(s, {{"kind", "instruction"},
                   {"correlation", instr.correlation_id},
                   {"role", role},
                   {"verb", verb},
                   {"args", args_json(args)}});
    }
    auto result = dispatcher_.dispatch(instr, binding.device_id, binding.route, config_.dispatch);
    std::lock_guard lock(s.mutex);
    const auto& o = result.outcome;
    append(s, {{"kind", "dispatch_result"},
               {"correlation", result.correlation_id},
               {"outcome", to_string(o.kind)},
               {"code", o.kind == OutcomeKind::DeviceError ? ordered_json(o.code) : ordered_json()},
               {"message", o.kind == OutcomeKind::Ok ? ordered_json() : ordered_json(o.message)},
               {"attempts", result.attempts},
               {"device_id", binding.device_id},
               {"route", planner::route_name(result.route_used)}});
    return result;
}

bool Engine::run_statement(Session& s, const dsl::Handler&, const dsl::Statement& st, const Bindings& bindings) {
    std::vector<Value> args;
    args.reserve(st.args.size());
    for (const auto& a : st.args) args.push_back(evaluate(a, bindings, tables_));

    auto result = send(s, st.role, st.verb, args);
    if (result.outcome.retryable()) {
        std::unique_lock lock(s.mutex);
        auto failed = s.plan.bindings.at(st.role).device_id;
        s.ctx.excluded.insert(failed);
        s.ctx.now = clock_.now();
        planner::BindingPlan next;
        try {
            next = planner::replan(*s.logic, registry_.snapshot(s.ctx.now), s.ctx, failed, s.plan);
        } catch (const Error& e) {
            finish(s, SessionState::Failed, reason_of(e));
            return false;
        }
        for (const auto& [role, b] : next.bindings) {
            const auto& before = s.plan.bindings.at(role);
            if (before.device_id == b.device_id) continue;
            append(s, {{"kind", "rebind"},
                       {"role", role},
                       {"from", before.device_id},
                       {"to", b.device_id},
                       {"route", planner::route_name(b.route)}});
            std::set<Subscription> rewired;
            for (auto sub : s.subscriptions) {
                if (sub.role == role) sub.device_id = b.device_id;
                rewired.insert(std::move(sub));
            }
            s.subscriptions = std::move(rewired);
        }
        s.plan = std::move(next);
        lock.unlock();

        result = send(s, st.role, st.verb, args);
        if (result.outcome.retryable()) {
            std::lock_guard relock(s.mutex);
            finish(s, SessionState::Failed, "FAILOVER_EXHAUSTED(" + st.role + ")");
            return false;
        }
    }

    if (st.subscription) {
        std::lock_guard lock(s.mutex);
        if (s.state == SessionState::Running)
            s.subscriptions.insert({*st.subscription, s.plan.bindings.at(st.role).device_id, st.role});
    }
    return true;
}

std::size_t Engine::ingest_event(const std::string& device_id, const std::string& event_type,
                                 const std::map<std::string, std::string>& payload) {
    if (!registry_.contains(device_id)) throw Error(ErrorCode::UnknownDevice, device_id, "event from unknown device");
    std::vector<std::shared_ptr<Session>> targets;
    {
        std::lock_guard lock(sessions_mutex_);
        for (const auto& [_, s] : sessions_) targets.push_back(s);
    }
    std::size_t reached = 0;
    for (const auto& s : targets) {
        std::lock_guard lock(s->mutex);
        if (s->state != SessionState::Running || s->stop) continue;
        bool subscribed = std::any_of(s->subscriptions.begin(), s->subscriptions.end(), [&](const Subscription& sub) {
            return sub.event_type == event_type && sub.device_id == device_id;
        });
        if (!subscribed) continue;
        s->mailbox.push_back(Event{device_id, event_type, payload});
        s->mailbox_cv.notify_all();
        ++reached;
    }
    if (reached == 0) ++dropped_;
    return reached;
}

void Engine::worker(std::shared_ptr<Session> s) {
    auto idle = std::chrono::milliseconds(config_.idle_timeout_ms);
    std::unique_lock lock(s->mutex);
    while (true) {
        s->mailbox_cv.wait_until(lock, s->last_activity + idle,
                                 [&] { return s->stop || !s->mailbox.empty() || s->state != SessionState::Running; });
        if (s->stop || s->state != SessionState::Running) break;
        if (s->mailbox.empty()) {
            if (SteadyClock::now() >= s->last_activity + idle) {
                finish(*s, SessionState::Completed, "idle_timeout");
                break;
            }
            continue;
        }
        Event evt = std::move(s->mailbox.front());
        s->mailbox.pop_front();
        s->busy = true;
        ordered_json payload = ordered_json::object();
        for (const auto& [k, v] : evt.payload) payload[k] = v;
        append(*s, {{"kind", "event"},
                    {"device_id", evt.device_id},
                    {"event_type", evt.event_type},
                    {"payload", std::move(payload)}});
        lock.unlock();

        for (const auto& h : s->logic->handlers) {
            if (h.trigger.kind != dsl::Trigger::Kind::Event || h.trigger.event_type != evt.event_type) continue;
            Bindings bindings = s->params;
            for (const auto& p : h.trigger.params) {
                if (auto it = evt.payload.find(p); it != evt.payload.end()) {
                    bindings[p] = it->second;
                } else {
                    bindings.erase(p);
                }
            }
            run_handler(*s, h, std::move(bindings));
            std::lock_guard check(s->mutex);
            if (s->state != SessionState::Running) break;
        }

        lock.lock();
        s->busy = false;
        s->last_activity = SteadyClock::now();
        s->log_cv.notify_all();
    }
    s->busy = false;
    s->log_cv.notify_all();
}

std::optional<SessionState> Engine::state(const std::string& session_id) const {
    auto s = find(session_id);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mutex);
    return s->state;
}

std::optional<ordered_json> Engine::describe(const std::string& session_id) const {
    auto s = find(session_id);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mutex);
    ordered_json params = ordered_json::object();
    for (const auto& [k, v] : s->params) params[k] = ordered_json(to_json(v));
    ordered_json plan = ordered_json::object();
    for (const auto& [role, b] : s->plan.bindings) {
        plan[role] = {{"device_id", b.device_id}, {"route", planner::route_name(b.route)}, {"score", b.score}};
    }
    ordered_json subs = ordered_json::array();
    for (const auto& sub : s->subscriptions) {
        subs.push_back({{"event_type", sub.event_type}, {"device_id", sub.device_id}, {"role", sub.role}});
    }
    const auto& loc = s->ctx.user_location;
    ordered_json out;
    out["session_id"] = s->id;
    out["logic"] = s->logic_name;
    out["state"] = to_string(s->state);
    out["reason"] = s->reason.empty() ? ordered_json() : ordered_json(s->reason);
    out["params"] = std::move(params);
    out["user"] = {{"zone", loc.zone}, {"x", loc.x}, {"y", loc.y}};
    out["plan"] = std::move(plan);
    out["subscriptions"] = std::move(subs);
    out["log"] = s->log;
    return out;
}

std::optional<LogPage> Engine::read_log(const std::string& session_id, std::size_t from,
                                        std::chrono::milliseconds wait) const {
    auto s = find(session_id);
    if (!s) return std::nullopt;
    std::unique_lock lock(s->mutex);
    s->log_cv.wait_for(lock, wait, [&] { return s->log.size() > from || s->state != SessionState::Running; });
    LogPage page;
    for (std::size_t i = from; i < s->log.size(); ++i) page.entries.push_back(s->log[i]);
    page.terminal = s->state != SessionState::Running;
    return page;
}

bool Engine::wait_quiescent(const std::string& session_id, std::chrono::milliseconds limit) const {
    auto s = find(session_id);
    if (!s) return false;
    std::unique_lock lock(s->mutex);
    return s->log_cv.wait_for(lock, limit, [&] {
        return (s->mailbox.empty() && !s->busy) || s->state != SessionState::Running;
    });
}

void Engine::shutdown() {
    std::vector<std::shared_ptr<Session>> all;
    {
        std::lock_guard lock(sessions_mutex_);
        shut_down_ = true;
        for (const auto& [_, s] : sessions_) all.push_back(s);
    }
    for (const auto& s : all) {
        std::lock_guard lock(s->mutex);
        s->stop = true;
        s->mailbox_cv.notify_all();
    }
    for (const auto& s : all) {
        if (s->worker.joinable()) s->worker.join();
        std::lock_guard lock(s->mutex);
        finish(*s, SessionState::Completed, "shutdown");
    }
}

}  // namespace tc::runtime
