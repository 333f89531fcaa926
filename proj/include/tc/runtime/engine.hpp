#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tc/clock.hpp"
#include "tc/dsl/ast.hpp"
#include "tc/dsl/validator.hpp"
#include "tc/error.hpp"
#include "tc/planner/planner.hpp"
#include "tc/registry/registry.hpp"
#include "tc/runtime/dispatcher.hpp"
#include "tc/runtime/value.hpp"

namespace tc::runtime {

enum class SessionState { Running, Completed, Failed };

std::string_view to_string(SessionState s);

struct EngineConfig {
    DispatchOptions dispatch;
    DurationMs ttl_ms = registry::kDefaultTtlMs;
    DurationMs idle_timeout_ms = 10 * 60 * 1000;
    std::set<std::string> vocabulary;  // empty means the default vocabulary
};

struct Subscription {
    std::string event_type;
    std::string device_id;
    std::string role;
    auto operator<=>(const Subscription&) const = default;
};

using LogEntry = nlohmann::ordered_json;

struct LogPage {
    std::vector<LogEntry> entries;
    bool terminal = false;  // session is no longer running
};

/// Planning failed; the session exists and is recorded as failed.
class PlanFailed : public Error {
public:
    PlanFailed(std::string session_id, const Error& cause);
    const std::string& session_id() const noexcept { return session_id_; }

private:
    std::string session_id_;
};

/// Runs coordination sessions: plans, executes handlers, dispatches and
/// keeps one ordered log per session.
class Engine {
public:
    Engine(registry::Registry& registry, Dispatcher& dispatcher, const Clock& clock, EngineConfig config,
           Tables tables);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Parses and validates; stores under `name` (the service name when
    /// empty) only if the report has no errors. Throws dsl::ParseError.
    dsl::ValidationReport put_logic(std::string name, const std::string& source);
    std::optional<std::string> logic_source(const std::string& name) const;

    /// Throws Error(UnknownLogic) or PlanFailed.
    std::string start_session(const std::string& logic_name, Bindings params, registry::Location user);

    /// Delivers to every running session subscribed to (type, device).
    /// Returns the number of sessions reached; zero counts as a drop.
    /// Throws Error(UnknownDevice).
    std::size_t ingest_event(const std::string& device_id, const std::string& event_type,
                             const std::map<std::string, std::string>& payload);
    std::size_t dropped_events() const { return dropped_; }

    std::optional<SessionState> state(const std::string& session_id) const;
    std::optional<nlohmann::ordered_json> describe(const std::string& session_id) const;

    /// Entries from index `from`, waiting up to `wait` for at least one.
    std::optional<LogPage> read_log(const std::string& session_id, std::size_t from,
                                    std::chrono::milliseconds wait) const;

    /// Waits until the session's mailbox is drained. False on timeout.
    bool wait_quiescent(const std::string& session_id, std::chrono::milliseconds limit) const;

    /// Stops session workers; running sessions complete with "shutdown".
    void shutdown();

private:
    struct Session;
    struct Event {
        std::string device_id;
        std::string event_type;
        std::map<std::string, std::string> payload;
    };

    std::shared_ptr<Session> find(const std::string& session_id) const;
    void worker(std::shared_ptr<Session> s);
    void run_handler(Session& s, const dsl::Handler& h, Bindings bindings);
    bool run_statement(Session& s, const dsl::Handler& h, const dsl::Statement& st, const Bindings& bindings);
    DispatchResult send(Session& s, const std::string& role, const std::string& verb, const std::vector<Value>& args);
    void append(Session& s, LogEntry entry);
    void finish(Session& s, SessionState state, const std::string& reason);

    registry::Registry& registry_;
    Dispatcher& dispatcher_;
    const Clock& clock_;
    EngineConfig config_;
    Tables tables_;
    std::set<std::string> table_functions_;

    struct StoredLogic {
        std::string source;
        std::shared_ptr<const dsl::CoordinationLogic> logic;
    };
    mutable std::mutex logics_mutex_;
    std::map<std::string, StoredLogic> logics_;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_session_ = 0;
    bool shut_down_ = false;

    std::atomic<std::size_t> dropped_{0};
};

}  // namespace tc::runtime
