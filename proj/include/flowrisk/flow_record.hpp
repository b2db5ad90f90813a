#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <flowrisk/errors.hpp>
#include <flowrisk/ndjson.hpp>

namespace flowrisk {

enum class protocol { HTTP, HTTPS, DNS, DHCP, RTP, SRTP, OTHER };

inline const char* to_string(protocol p) {
    switch (p) {
        case protocol::HTTP: return "HTTP";
        case protocol::HTTPS: return "HTTPS";
        case protocol::DNS: return "DNS";
        case protocol::DHCP: return "DHCP";
        case protocol::RTP: return "RTP";
        case protocol::SRTP: return "SRTP";
        case protocol::OTHER: return "OTHER";
    }
    return "OTHER";
}

inline protocol protocol_from_string(const std::string& s) {
    if (s == "HTTP") return protocol::HTTP;
    if (s == "HTTPS") return protocol::HTTPS;
    if (s == "DNS") return protocol::DNS;
    if (s == "DHCP") return protocol::DHCP;
    if (s == "RTP") return protocol::RTP;
    if (s == "SRTP") return protocol::SRTP;
    if (s == "OTHER") return protocol::OTHER;
    throw validation_error("unknown protocol \"" + s + "\"");
}

/// One observed communication event: who talked to whom, when, how much,
/// and over what kind of channel. Produced upstream by flow collectors;
/// this library only consumes the parsed form.
struct flow_record {
    std::int64_t timestamp = 0;  // seconds since epoch
    std::string src_device;
    std::optional<std::string> src_app;
    std::string dst_host;
    int dst_port = 0;
    protocol proto = protocol::OTHER;
    std::int64_t bytes_sent = 0;
    std::int64_t bytes_received = 0;
    bool encrypted = false;
    bool authenticated = false;
    bool is_ad_fetch = false;
    std::optional<std::string> os_name;
    std::optional<std::string> app_version;
    double duration = 0.0;  // seconds

    void validate() const {
        if (timestamp < 0) throw validation_error("timestamp must be >= 0");
        if (src_device.empty()) throw validation_error("src_device must be non-empty");
        if (dst_host.empty()) throw validation_error("dst_host must be non-empty");
        if (dst_port < 0 || dst_port > 65535) throw validation_error("dst_port out of range 0-65535");
        if (bytes_sent < 0) throw validation_error("bytes_sent must be >= 0");
        if (bytes_received < 0) throw validation_error("bytes_received must be >= 0");
        if (duration < 0.0) throw validation_error("duration must be >= 0");
        if ((proto == protocol::HTTPS || proto == protocol::SRTP) && !encrypted) {
            throw validation_error(std::string(to_string(proto)) + " flows must have encrypted=true");
        }
    }

    std::int64_t total_bytes() const { return bytes_sent + bytes_received; }
};

/// Parses one NDJSON flow-log line. Unknown keys are ignored, absent
/// optional fields stay unset. Throws parse_error on malformed JSON,
/// schema_error on a missing/mistyped required field, validation_error
/// when a field violates an invariant.
inline flow_record parse_flow_record(const std::string& line) {
    ndjson::json j = ndjson::parse_object(line);
    flow_record r;
    r.timestamp = ndjson::require_as<std::int64_t>(j, "timestamp");
    r.src_device = ndjson::require_as<std::string>(j, "src_device");
    r.src_app = ndjson::optional_as<std::string>(j, "src_app");
    r.dst_host = ndjson::require_as<std::string>(j, "dst_host");
    r.dst_port = ndjson::require_as<int>(j, "dst_port");
    r.proto = protocol_from_string(ndjson::require_as<std::string>(j, "protocol"));
    r.bytes_sent = ndjson::require_as<std::int64_t>(j, "bytes_sent");
    r.bytes_received = ndjson::require_as<std::int64_t>(j, "bytes_received");
    r.encrypted = ndjson::require_as<bool>(j, "encrypted");
    r.authenticated = ndjson::require_as<bool>(j, "authenticated");
    r.is_ad_fetch = ndjson::require_as<bool>(j, "is_ad_fetch");
    r.os_name = ndjson::optional_as<std::string>(j, "os_name");
    r.app_version = ndjson::optional_as<std::string>(j, "app_version");
    r.duration = ndjson::require_as<double>(j, "duration");
    r.validate();
    return r;
}

inline ndjson::json to_json(const flow_record& r) {
    ndjson::json j;
    j["timestamp"] = r.timestamp;
    j["src_device"] = r.src_device;
    if (r.src_app) j["src_app"] = *r.src_app;
    j["dst_host"] = r.dst_host;
    j["dst_port"] = r.dst_port;
    j["protocol"] = to_string(r.proto);
    j["bytes_sent"] = r.bytes_sent;
    j["bytes_received"] = r.bytes_received;
    j["encrypted"] = r.encrypted;
    j["authenticated"] = r.authenticated;
    j["is_ad_fetch"] = r.is_ad_fetch;
    if (r.os_name) j["os_name"] = *r.os_name;
    if (r.app_version) j["app_version"] = *r.app_version;
    j["duration"] = r.duration;
    return j;
}

/// Reads a whole flow log. Diagnostics are prefixed "<name>:<line>:" so a
/// CLI can print them as-is.
inline std::vector<flow_record> read_flow_log(std::istream& in, const std::string& name = "<flows>") {
    std::vector<flow_record> records;
    ndjson::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
        try {
            records.push_back(parse_flow_record(line));
        } catch (const error&) {
            ndjson::rethrow_with_location(name, line_no);
        }
    });
    return records;
}

inline void write_flow_log(std::ostream& out, const std::vector<flow_record>& records) {
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

}  // namespace flowrisk
