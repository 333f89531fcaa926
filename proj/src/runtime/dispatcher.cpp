#include "tc/runtime/dispatcher.hpp"

#include <httplib.h>

#include <chrono>

#include "tc/gateway/gateway.hpp"
#include "tc/net/url.hpp"
#include "tc/runtime/wire.hpp"

namespace tc::runtime {

void GatewayDirectory::set(const std::string& gateway_id, std::string base_url) {
    std::lock_guard lock(mutex_);
    urls_[gateway_id] = std::move(base_url);
}

std::optional<std::string> GatewayDirectory::find(const std::string& gateway_id) const {
    std::lock_guard lock(mutex_);
    auto it = urls_.find(gateway_id);
    if (it == urls_.end()) return std::nullopt;
    return it->second;
}

namespace {

struct HttpReply {
    std::optional<Outcome> failure;  // set when there is no usable reply
    int status = 0;
    std::string body;
};

HttpReply post(const net::Url& url, const std::string& path, const std::string& body, const char* content_type,
               int timeout_ms) {
    httplib::Client client(url.origin());
    auto timeout = std::chrono::milliseconds(timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_keep_alive(false);

    auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, body, content_type);
    if (res) return {std::nullopt, res->status, res->body};

    auto err = res.error();
    auto elapsed = std::chrono::steady_clock::now() - started;
    bool timed_out = err == httplib::Error::ConnectionTimeout ||
                     ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                      elapsed >= timeout - std::chrono::milliseconds(50));
    auto message = httplib::to_string(err);
    return {timed_out ? Outcome::timeout(message) : Outcome::transport_error(message), 0, {}};
}

Outcome parse_gateway_reply(int status, const std::string& body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (status == 400) {
        std::string code = "BAD_REQUEST";
        std::string message;
        if (!j.is_discarded() && j.contains("error") && j["error"].is_object()) {
            code = j["error"].value("code", code);
            message = j["error"].value("message", "");
        }
        return Outcome::device_error(code, message);
    }
    if (status != 200 || j.is_discarded() || !j.is_object() || !j.contains("outcome") || !j["outcome"].is_string())
        return Outcome::transport_error("gateway replied " + std::to_string(status));
    auto kind = parse_outcome_kind(j["outcome"].get<std::string>());
    if (!kind) return Outcome::transport_error("gateway reported unknown outcome");
    auto text = [&](const char* key) {
        return j.contains(key) && j[key].is_string() ? j[key].get<std::string>() : std::string();
    };
    return Outcome{*kind, *kind == OutcomeKind::DeviceError ? text("code") : "", text("message")};
}

}  // namespace

Outcome HttpDispatcher::attempt(const AbstractInstruction& instr, const std::string& device_id,
                                const planner::DispatchRoute& route, int timeout_ms) {
    auto args = name_args(instr.verb, instr.args);

    if (const auto* rest = std::get_if<planner::DirectRest>(&route)) {
        auto url = net::parse_url(rest->endpoint);
        if (!url) return Outcome::transport_error("bad endpoint " + rest->endpoint);
        auto reply = post(*url, net::join_path(url->path, "/actions/" + instr.verb),
                          rest_request_body(instr.session_id, instr.correlation_id, args), "application/json",
                          timeout_ms);
        if (reply.failure) return *reply.failure;
        return parse_rest_reply(reply.status, reply.body);
    }

    if (const auto* soap = std::get_if<planner::DirectSoap>(&route)) {
        auto url = net::parse_url(soap->endpoint);
        if (!url) return Outcome::transport_error("bad endpoint " + soap->endpoint);
        auto reply = post(*url, url->path, soap_request_body(instr.verb, instr.session_id, instr.correlation_id, args),
                          "text/xml", timeout_ms);
        if (reply.failure) return *reply.failure;
        return parse_soap_reply(reply.status, reply.body);
    }

    const auto& via = std::get<planner::ViaGateway>(route);
    auto base = gateways_.find(via.gateway_id);
    if (!base) return Outcome::transport_error("unknown gateway " + via.gateway_id);
    auto url = net::parse_url(*base);
    if (!url) return Outcome::transport_error("bad gateway url " + *base);

    gateway::DispatchEnvelope env{device_id, via.driver, via.native_address, instr.verb, {}, instr.correlation_id,
                                  instr.session_id};
    for (const auto& [name, v] : args) env.args[name] = canonical(v);
    // The gateway's own device timeout applies on its side; give the HTTP
    // leg a little headroom so its verdict arrives first.
    auto reply = post(*url, net::join_path(url->path, "/dispatch"), gateway::envelope_to_json(env).dump(),
                      "application/json", timeout_ms + 500);
    if (reply.failure) return *reply.failure;
    return parse_gateway_reply(reply.status, reply.body);
}

DispatchResult HttpDispatcher::dispatch(const AbstractInstruction& instr, const std::string& device_id,
                                        const planner::DispatchRoute& route, const DispatchOptions& options) {
    DispatchResult result{instr.correlation_id, Outcome::ok(), 0, route};
    int limit = std::max(1, options.max_attempts);
    while (result.attempts < limit) {
        ++result.attempts;
        result.outcome = attempt(instr, device_id, route, options.timeout_ms);
        if (!result.outcome.retryable()) break;
    }
    return result;
}

}  // namespace tc::runtime
