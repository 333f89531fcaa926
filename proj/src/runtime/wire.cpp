#include "tc/runtime/wire.hpp"

#include <map>

namespace tc::runtime {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> arg_names(std::string_view verb, std::size_t count) {
    static const std::map<std::string, std::vector<std::string>, std::less<>> catalogue{
        {"show", {"text"}},
        {"announce", {"text"}},
        {"monitor", {"target"}},
        {"clear", {}},
        {"ping", {}},
    };
    std::vector<std::string> names;
    auto it = catalogue.find(verb);
    for (std::size_t i = 0; i < count; ++i) {
        if (it != catalogue.end() && i < it->second.size()) {
            names.push_back(it->second[i]);
        } else {
            names.push_back("arg" + std::to_string(i));
        }
    }
    return names;
}

NamedArgs name_args(std::string_view verb, const std::vector<Value>& args) {
    auto names = arg_names(verb, args.size());
    NamedArgs out;
    for (std::size_t i = 0; i < args.size(); ++i) out.emplace_back(names[i], args[i]);
    return out;
}

std::string rest_request_body(const std::string& session, const std::string& correlation, const NamedArgs& args) {
    ordered_json a = ordered_json::object();
    for (const auto& [name, v] : args) {
        a[name] = ordered_json(to_json(v));
    }
    ordered_json body;
    body["session"] = session;
    body["correlation"] = correlation;
    body["args"] = std::move(a);
    return body.dump();
}

std::optional<RestRequest> parse_rest_request(const std::string& body) {
    auto j = ordered_json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    if (!j.contains("session") || !j["session"].is_string() || !j.contains("correlation") ||
        !j["correlation"].is_string() || !j.contains("args") || !j["args"].is_object())
        return std::nullopt;
    RestRequest out{j["session"].get<std::string>(), j["correlation"].get<std::string>(), {}};
    for (const auto& [k, v] : j["args"].items()) {
        if (v.is_string()) {
            out.args.emplace_back(k, v.get<std::string>());
        } else if (v.is_number()) {
            out.args.emplace_back(k, v.get<double>());
        } else {
            return std::nullopt;
        }
    }
    return out;
}

std::string rest_error_reply(const std::string& code, const std::string& message) {
    ordered_json err;
    err["code"] = code;
    err["message"] = message;
    ordered_json body;
    body["error"] = std::move(err);
    return body.dump();
}

Outcome parse_rest_reply(int status, const std::string& body) {
    if (status != 200) return Outcome::device_error("HTTP_" + std::to_string(status), body);
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return Outcome::device_error("BAD_REPLY", "reply is not a JSON object");
    if (auto it = j.find("result"); it != j.end() && *it == "ok") return Outcome::ok();
    if (auto it = j.find("error"); it != j.end() && it->is_object()) {
        std::string code = it->value("code", "UNKNOWN");
        std::string message = it->contains("message") && (*it)["message"].is_string() ? (*it)["message"].get<std::string>() : "";
        return Outcome::device_error(std::move(code), std::move(message));
    }
    return Outcome::device_error("BAD_REPLY", "reply has neither result nor error");
}

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::optional<std::string> xml_unescape(std::string_view s) {
    static const std::pair<std::string_view, char> entities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
    std::string out;
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] != '&') {
            out += s[i++];
            continue;
        }
        bool matched = false;
        for (const auto& [ent, ch] : entities) {
            if (s.substr(i, ent.size()) == ent) {
                out += ch;
                i += ent.size();
                matched = true;
                break;
            }
        }
        if (!matched) return std::nullopt;
    }
    return out;
}

std::string soap_request_body(const std::string& verb, const std::string& session, const std::string& correlation,
                              const NamedArgs& args) {
    std::string out = "<Envelope><Body><" + verb + " session=\"" + xml_escape(session) + "\" correlation=\"" +
                      xml_escape(correlation) + "\">";
    for (const auto& [name, v] : args) {
        out += "<arg name=\"" + xml_escape(name) + "\">" + xml_escape(canonical(v)) + "</arg>";
    }
    out += "</" + verb + "></Body></Envelope>";
    return out;
}

namespace {

/// Cursor over a fixed-shape XML document.
class XmlCursor {
public:
    explicit XmlCursor(std::string_view s) : s_(s) {}

    bool literal(std::string_view lit) {
        if (s_.substr(pos_, lit.size()) != lit) return false;
        pos_ += lit.size();
        return true;
    }

    std::optional<std::string> until(char stop) {
        auto end = s_.find(stop, pos_);
        if (end == std::string_view::npos) return std::nullopt;
        auto raw = s_.substr(pos_, end - pos_);
        pos_ = end;
        return xml_unescape(raw);
    }

    std::optional<std::string> attribute(std::string_view name) {
        if (!literal(" ") || !literal(name) || !literal("=\"")) return std::nullopt;
        auto v = until('"');
        if (!v || !literal("\"")) return std::nullopt;
        return v;
    }

    bool at_end() const { return pos_ == s_.size(); }
    std::size_t pos() const { return pos_; }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

std::optional<std::string> find_attribute(std::string_view tag, std::string_view name) {
    auto needle = std::string(" ") + std::string(name) + "=\"";
    auto at = tag.find(needle);
    if (at == std::string_view::npos) return std::nullopt;
    auto start = at + needle.size();
    auto end = tag.find('"', start);
    if (end == std::string_view::npos) return std::nullopt;
    return xml_unescape(tag.substr(start, end - start));
}

}  // namespace

std::optional<SoapRequest> parse_soap_request(const std::string& body) {
    XmlCursor c(body);
    SoapRequest out;
    if (!c.literal("<Envelope><Body><")) return std::nullopt;
    auto verb = c.until(' ');
    if (!verb || verb->empty()) return std::nullopt;
    out.verb = *verb;
    auto session = c.attribute("session");
    auto correlation = c.attribute("correlation");
    if (!session || !correlation || !c.literal(">")) return std::nullopt;
    out.session = *session;
    out.correlation = *correlation;
    while (c.literal("<arg name=\"")) {
        auto name = c.until('"');
        if (!name || !c.literal("\">")) return std::nullopt;
        auto value = c.until('<');
        if (!value || !c.literal("</arg>")) return std::nullopt;
        out.args.emplace_back(*name, *value);
    }
    if (!c.literal("</" + out.verb + "></Body></Envelope>") || !c.at_end()) return std::nullopt;
    return out;
}

std::string soap_fault_reply(const std::string& code, const std::string& message) {
    return "<Envelope><Body><fault code=\"" + xml_escape(code) + "\" message=\"" + xml_escape(message) +
           "\"/></Body></Envelope>";
}

Outcome parse_soap_reply(int status, const std::string& body) {
    if (body.find("<Body><ok/></Body>") != std::string::npos) return Outcome::ok();
    if (auto at = body.find("<fault"); at != std::string::npos) {
        auto end = body.find("/>", at);
        std::string_view tag = std::string_view(body).substr(at, end == std::string::npos ? std::string::npos : end - at);
        return Outcome::device_error(find_attribute(tag, "code").value_or("UNKNOWN"),
                                     find_attribute(tag, "message").value_or(""));
    }
    if (status != 200) return Outcome::device_error("HTTP_" + std::to_string(status), body);
    return Outcome::device_error("BAD_REPLY", "reply has neither ok nor fault");
}

}  // namespace tc::runtime
