#include "tc/names.hpp"

namespace tc {

namespace {

bool lower_start(char c) { return c >= 'a' && c <= 'z'; }
bool lower_body(char c) { return lower_start(c) || (c >= '0' && c <= '9') || c == '_'; }

}  // namespace

bool is_lower_identifier(std::string_view s) noexcept {
    if (s.empty() || !lower_start(s.front())) return false;
    for (char c : s.substr(1)) {
        if (!lower_body(c)) return false;
    }
    return true;
}

bool is_capability_name(std::string_view s) noexcept {
    if (s.empty()) return false;
    std::size_t start = 0;
    while (true) {
        auto dot = s.find('.', start);
        auto part = s.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
        if (!is_lower_identifier(part)) return false;
        if (dot == std::string_view::npos) return true;
        start = dot + 1;
    }
}

bool is_identifier(std::string_view s) noexcept {
    if (s.empty()) return false;
    auto start = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!start(s.front())) return false;
    for (char c : s.substr(1)) {
        if (!start(c) && !(c >= '0' && c <= '9')) return false;
    }
    return true;
}

}  // namespace tc
