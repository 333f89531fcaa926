#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tc/outcome.hpp"
#include "tc/runtime/value.hpp"

namespace tc::runtime {

using NamedArgs = std::vector<std::pair<std::string, Value>>;

/// Argument names for a verb's positional args. Known verbs use their
/// catalogue names; anything past the catalogue is `arg<i>`.
std::vector<std::string> arg_names(std::string_view verb, std::size_t count);

NamedArgs name_args(std::string_view verb, const std::vector<Value>& args);

// Direct REST: POST {endpoint}/actions/{verb}
std::string rest_request_body(const std::string& session, const std::string& correlation, const NamedArgs& args);
Outcome parse_rest_reply(int status, const std::string& body);

struct RestRequest {
    std::string session;
    std::string correlation;
    NamedArgs args;
};
std::optional<RestRequest> parse_rest_request(const std::string& body);

inline constexpr const char* kRestOkReply = R"({"result":"ok"})";
std::string rest_error_reply(const std::string& code, const std::string& message);

// Direct SOAP: simplified envelope POSTed to the endpoint.
std::string soap_request_body(const std::string& verb, const std::string& session, const std::string& correlation,
                              const NamedArgs& args);
Outcome parse_soap_reply(int status, const std::string& body);

struct SoapRequest {
    std::string verb;
    std::string session;
    std::string correlation;
    std::vector<std::pair<std::string, std::string>> args;
};
std::optional<SoapRequest> parse_soap_request(const std::string& body);

inline constexpr const char* kSoapOkReply = "<Envelope><Body><ok/></Body></Envelope>";
std::string soap_fault_reply(const std::string& code, const std::string& message);

std::string xml_escape(std::string_view s);
std::optional<std::string> xml_unescape(std::string_view s);

}  // namespace tc::runtime
