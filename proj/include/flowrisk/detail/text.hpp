#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <flowrisk/errors.hpp>

namespace flowrisk::detail {

inline std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Glob match with '*' (any run) and '?' (any one char). Case-insensitive,
// since the patterns are matched against hostnames.
inline bool glob_match(std::string_view pattern, std::string_view text) {
    const std::string p = to_lower(pattern);
    const std::string t = to_lower(text);
    std::size_t pi = 0, ti = 0;
    std::size_t star = std::string::npos, star_ti = 0;
    while (ti < t.size()) {
        if (pi < p.size() && (p[pi] == '?' || p[pi] == t[ti])) {
            ++pi;
            ++ti;
        } else if (pi < p.size() && p[pi] == '*') {
            star = pi++;
            star_ti = ti;
        } else if (star != std::string::npos) {
            pi = star + 1;
            ti = ++star_ti;
        } else {
            return false;
        }
    }
    while (pi < p.size() && p[pi] == '*') ++pi;
    return pi == p.size();
}

// One "key = value" line of a plain-text config file; '#' starts a comment.
struct kv_entry {
    std::size_t line_no;
    std::string key;
    std::string value;
};

// Parses key-value text. Keys repeat freely; validation of allowed keys is
// the caller's job (each file format has its own set).
inline std::vector<kv_entry> parse_kv_text(std::string_view text) {
    std::vector<kv_entry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        ++line_no;
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

        auto hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        std::string stripped = trim(line);
        if (stripped.empty()) continue;

        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw parse_error("line " + std::to_string(line_no) + ": expected key=value, got \"" + stripped + "\"");
        }
        kv_entry e;
        e.line_no = line_no;
        e.key = trim(stripped.substr(0, eq));
        e.value = trim(stripped.substr(eq + 1));
        if (e.key.empty()) {
            throw parse_error("line " + std::to_string(line_no) + ": empty key");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace flowrisk::detail
