#pragma once

#include <cstdio>
#include <functional>
#include <istream>
#include <string>
#include <string_view>

#include <json.hpp>

#include <flowrisk/errors.hpp>

namespace flowrisk::ndjson {

using json = nlohmann::json;

// Fixed formatting for exported metric values: 12 significant digits,
// identical bytes for identical doubles on every run.
inline std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string quote(const std::string& s) {
    return json(s).dump();
}

// Calls fn(line_no, line) for every non-blank line; line numbers are
// 1-based and count blank lines too, so diagnostics match the file.
inline void for_each_line(std::istream& in, const std::function<void(std::size_t, const std::string&)>& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (blank) continue;
        fn(line_no, line);
    }
}

// Parses one NDJSON object, rethrowing nlohmann's error as parse_error
// with the byte offset within the line.
inline json parse_object(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw parse_error("byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!j.is_object()) throw schema_error("expected a JSON object");
    return j;
}

// Re-raises the in-flight error with a "<file>:<line>:" prefix, keeping
// its type so callers can still distinguish error classes.
[[noreturn]] inline void rethrow_with_location(const std::string& name, std::size_t line_no) {
    const std::string where = name + ":" + std::to_string(line_no) + ": ";
    try {
        throw;
    } catch (const parse_error& e) {
        throw parse_error(where + e.what());
    } catch (const schema_error& e) {
        throw schema_error(where + e.what());
    } catch (const validation_error& e) {
        throw validation_error(where + e.what());
    } catch (const not_found_error& e) {
        throw not_found_error(where + e.what());
    } catch (const config_error& e) {
        throw config_error(where + e.what());
    } catch (const integrity_error& e) {
        throw integrity_error(where + e.what());
    } catch (const error& e) {
        throw error(where + e.what());
    }
}

inline const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw schema_error(std::string("missing required field \"") + key + "\"");
    return *it;
}

template <typename T>
T require_as(const json& j, const char* key) {
    const json& v = require(j, key);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw schema_error(std::string("field \"") + key + "\" has the wrong type");
    }
}

template <typename T>
std::optional<T> optional_as(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw schema_error(std::string("field \"") + key + "\" has the wrong type");
    }
}

}  // namespace flowrisk::ndjson
