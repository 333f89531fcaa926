#include <doctest.h>

#include "tc/runtime/wire.hpp"

using namespace tc;
using namespace tc::runtime;

TEST_CASE("arg names come from the verb catalogue") {
    CHECK(arg_names("show", 1) == std::vector<std::string>{"text"});
    CHECK(arg_names("monitor", 1) == std::vector<std::string>{"target"});
    CHECK(arg_names("announce", 2) == std::vector<std::string>{"text", "arg1"});
    CHECK(arg_names("blink", 2) == std::vector<std::string>{"arg0", "arg1"});
    CHECK(arg_names("ping", 0).empty());
}

TEST_CASE("REST request body has exact key order") {
    auto body = rest_request_body("s-1", "s-1-1", name_args("show", {Value{"Platform 4 EAST"}}));
    CHECK(body == R"({"session":"s-1","correlation":"s-1-1","args":{"text":"Platform 4 EAST"}})");
    CHECK(rest_request_body("s", "c", {}) == R"({"session":"s","correlation":"c","args":{}})");
}

TEST_CASE("REST numbers keep their canonical spelling") {
    auto body = rest_request_body("s", "c", {{"n", Value{4.0}}, {"h", Value{0.5}}});
    CHECK(body == R"({"session":"s","correlation":"c","args":{"n":4,"h":0.5}})");
}

TEST_CASE("REST request parses back") {
    auto req = parse_rest_request(R"({"session":"s","correlation":"c","args":{"text":"x","n":2}})");
    REQUIRE(req);
    CHECK(req->session == "s");
    CHECK(req->args == NamedArgs{{"text", Value{"x"}}, {"n", Value{2.0}}});
    CHECK_FALSE(parse_rest_request(R"({"session":"s","args":{}})"));
    CHECK_FALSE(parse_rest_request(R"({"session":"s","correlation":"c","args":{"a":[1]}})"));
    CHECK_FALSE(parse_rest_request("nope"));
}

TEST_CASE("REST replies map to outcomes") {
    CHECK(parse_rest_reply(200, kRestOkReply) == Outcome::ok());
    CHECK(parse_rest_reply(200, R"({"error":{"code":"BUSY"}})") == Outcome::device_error("BUSY", ""));
    CHECK(parse_rest_reply(200, rest_error_reply("BUSY", "device busy")) == Outcome::device_error("BUSY", "device busy"));
    CHECK(parse_rest_reply(500, "boom").code == "HTTP_500");
    CHECK(parse_rest_reply(200, "[]").code == "BAD_REPLY");
}

TEST_CASE("SOAP request envelope is exact and parses back") {
    auto body = soap_request_body("show", "s-1", "s-1-2", name_args("show", {Value{"A & <B>"}}));
    CHECK(body ==
          R"(<Envelope><Body><show session="s-1" correlation="s-1-2"><arg name="text">A &amp; &lt;B&gt;</arg></show></Body></Envelope>)");
    auto req = parse_soap_request(body);
    REQUIRE(req);
    CHECK(req->verb == "show");
    CHECK(req->correlation == "s-1-2");
    REQUIRE(req->args.size() == 1);
    CHECK(req->args[0].second == "A & <B>");
    CHECK(soap_request_body("ping", "s", "c", {}) ==
          R"(<Envelope><Body><ping session="s" correlation="c"></ping></Body></Envelope>)");
    CHECK_FALSE(parse_soap_request("<Envelope><Body><show session=\"s\"></show></Body></Envelope>"));
    CHECK_FALSE(parse_soap_request(body + "x"));
}

TEST_CASE("SOAP replies map to outcomes") {
    CHECK(parse_soap_reply(200, kSoapOkReply) == Outcome::ok());
    CHECK(parse_soap_reply(200, R"(<Envelope><Body><fault code="BUSY"/></Body></Envelope>)") ==
          Outcome::device_error("BUSY", ""));
    CHECK(parse_soap_reply(500, soap_fault_reply("JAM", "paper & ink")) == Outcome::device_error("JAM", "paper & ink"));
    CHECK(parse_soap_reply(200, "<x/>").code == "BAD_REPLY");
}

TEST_CASE("xml escaping round-trips") {
    std::string raw = "<a href=\"x\">'&'</a>";
    CHECK(xml_unescape(xml_escape(raw)) == raw);
    CHECK_FALSE(xml_unescape("&bogus;"));
}
