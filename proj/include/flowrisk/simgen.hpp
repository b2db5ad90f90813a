#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <flowrisk/compromise.hpp>
#include <flowrisk/entity_graph.hpp>
#include <flowrisk/errors.hpp>
#include <flowrisk/flow_record.hpp>
#include <flowrisk/vulnerability.hpp>

namespace flowrisk {

/// Pinned generator so traces are byte-reproducible across builds: the
/// MMIX linear congruential generator,
///   state = state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
/// with doubles taken from the top 53 bits. Do not swap this for a
/// standard-library engine; their streams are not pinned by this repo.
class trace_rng {
public:
    explicit trace_rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
        return state_;
    }

    // Uniform in [0,1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi].
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(next_double() * static_cast<double>(hi - lo + 1));
    }

private:
    std::uint64_t state_;
};

enum class scenario_kind { Benign, BeaconingApp, AdMalwarePropagation, Botnet };

inline const char* to_string(scenario_kind s) {
    switch (s) {
        case scenario_kind::Benign: return "Benign";
        case scenario_kind::BeaconingApp: return "BeaconingApp";
        case scenario_kind::AdMalwarePropagation: return "AdMalwarePropagation";
        case scenario_kind::Botnet: return "Botnet";
    }
    return "Benign";
}

inline scenario_kind scenario_kind_from_string(const std::string& s) {
    if (s == "Benign") return scenario_kind::Benign;
    if (s == "BeaconingApp") return scenario_kind::BeaconingApp;
    if (s == "AdMalwarePropagation") return scenario_kind::AdMalwarePropagation;
    if (s == "Botnet") return scenario_kind::Botnet;
    throw config_error("unknown scenario \"" + s + "\"");
}

struct scenario_config {
    std::uint64_t seed = 42;
    std::int64_t duration = 3600;  // seconds of simulated time
    int devices = 1;
    int apps_per_device = 1;
    scenario_kind scenario = scenario_kind::Benign;
    // Ground-truth override; when empty the generator labels the default
    // compromised entities of the scenario.
    std::set<std::string> labeled_compromised;

    void validate() const {
        if (devices < 1) throw config_error("devices must be >= 1");
        if (apps_per_device < 0) throw config_error("apps_per_device must be >= 0");
        if (duration <= 0) throw config_error("duration must be > 0");
    }
};

/// A generated scenario: the flow trace, its ground-truth labels, and the
/// vulnerability/evidence sidecars the scenario implies.
struct scenario_output {
    std::vector<flow_record> records;  // sorted by time
    std::set<std::string> labeled_compromised;
    std::vector<vuln_node> annotated_nodes;
    std::vector<exploit_edge> exploit_edges;
    std::vector<compromise_evidence> evidence;
};

namespace detail {

inline std::string sim_device_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "dev%02d", i);
    return buf;
}

inline std::string sim_app_name(int i) { return "app" + std::to_string(i); }

constexpr std::int64_t sim_epoch_base = 1700000000;

}  // namespace detail

/// Generates a labeled synthetic trace. All randomness comes from one
/// trace_rng stream, drawn in a fixed documented order (benign traffic
/// first, device by device and app by app; scenario extras afterwards),
/// so equal configs give byte-identical traces.
inline scenario_output generate_trace(const scenario_config& config) {
    config.validate();
    trace_rng rng(config.seed);
    scenario_output out;

    const std::int64_t t0 = detail::sim_epoch_base;
    const std::int64_t t_end = t0 + config.duration;
    const std::vector<std::string> benign_hosts = {"svc0.benign.example", "svc1.benign.example",
                                                   "svc2.benign.example"};

    // Benign baseline: every app polls the shared service hosts on its own
    // period. Draw order per app: period, then per flow (host, bytes_sent,
    // bytes_received, duration).
    for (int d = 0; d < config.devices; ++d) {
        const std::string device = detail::sim_device_name(d);
        const std::string os = (d % 2 == 0) ? "ios" : "android";
        for (int a = 0; a < config.apps_per_device; ++a) {
            const std::string app = detail::sim_app_name(a);
            const std::int64_t period = rng.next_int(180, 360);
            for (std::int64_t t = t0 + period; t < t_end; t += period) {
                flow_record r;
                r.timestamp = t;
                r.src_device = device;
                r.src_app = app;
                r.dst_host = benign_hosts[static_cast<std::size_t>(rng.next_int(0, 2))];
                r.dst_port = 443;
                r.proto = protocol::HTTPS;
                r.bytes_sent = rng.next_int(200, 2000);
                r.bytes_received = rng.next_int(500, 5000);
                r.encrypted = true;
                r.authenticated = true;
                r.is_ad_fetch = false;
                r.os_name = os;
                r.app_version = "1.0";
                r.duration = 0.1 + rng.next_double() * 1.9;
                out.records.push_back(std::move(r));
            }
        }
    }

    switch (config.scenario) {
        case scenario_kind::Benign:
            break;

        case scenario_kind::BeaconingApp: {
            // One implanted app beacons to a single host absent from the
            // benign set, every 60 s with < 5% jitter. Draw order per
            // beacon: jitter, bytes_sent, bytes_received.
            const std::string device = detail::sim_device_name(0);
            const std::string app = detail::sim_app_name(0);
            const std::string app_id = app_entity_id(device, app);
            const std::string beacon_host = "c2.beacon.example";
            for (std::int64_t k = 1; t0 + k * 60 < t_end; ++k) {
                flow_record r;
                r.timestamp = t0 + k * 60 + rng.next_int(0, 2);
                r.src_device = device;
                r.src_app = app;
                r.dst_host = beacon_host;
                r.dst_port = 8080;
                r.proto = protocol::HTTP;
                r.bytes_sent = 64 + rng.next_int(0, 64);
                r.bytes_received = 32 + rng.next_int(0, 32);
                r.encrypted = false;
                r.authenticated = false;
                r.is_ad_fetch = false;
                r.os_name = "ios";
                r.app_version = "1.0";
                r.duration = 0.05;
                out.records.push_back(std::move(r));
            }
            out.labeled_compromised = {device, app_id};
            out.annotated_nodes.push_back({app_id, 0.10, 0.02, {"SIM-BEACON-IMPLANT"}});
            out.annotated_nodes.push_back({beacon_host, 0.12, 0.0, {}});
            out.exploit_edges.push_back({beacon_host, app_id, 0.8});
            out.exploit_edges.push_back({app_id, device, 0.6});
            out.evidence.push_back({app_id, anomaly_score_from_flags(true, true, false), false});
            out.evidence.push_back({device, anomaly_score_from_flags(true, false, false), false});
            break;
        }

        case scenario_kind::AdMalwarePropagation: {
            // A malicious ad network served to every app. Draw order per
            // app: fetch count, then per fetch (time, bytes_sent,
            // bytes_received).
            const std::string ad_host = "ads.malvert.example";
            std::vector<std::string> fetching_apps;
            for (int d = 0; d < config.devices; ++d) {
                const std::string device = detail::sim_device_name(d);
                const std::string os = (d % 2 == 0) ? "ios" : "android";
                for (int a = 0; a < config.apps_per_device; ++a) {
                    const std::string app = detail::sim_app_name(a);
                    const std::int64_t fetches = 3 + rng.next_int(0, 3);
                    for (std::int64_t k = 0; k < fetches; ++k) {
                        flow_record r;
                        r.timestamp = t0 + rng.next_int(1, std::max<std::int64_t>(1, config.duration - 1));
                        r.src_device = device;
                        r.src_app = app;
                        r.dst_host = ad_host;
                        r.dst_port = 80;
                        r.proto = protocol::HTTP;
                        r.bytes_sent = 100 + rng.next_int(0, 100);
                        r.bytes_received = 2000 + rng.next_int(0, 8000);
                        r.encrypted = false;
                        r.authenticated = false;
                        r.is_ad_fetch = true;
                        r.os_name = os;
                        r.app_version = "1.0";
                        r.duration = 0.2;
                        out.records.push_back(std::move(r));
                    }
                    fetching_apps.push_back(app_entity_id(device, app));
                }
            }
            out.labeled_compromised.insert(ad_host);
            out.annotated_nodes.push_back({ad_host, 0.12, 0.0, {"SIM-MALVERTISING"}});
            for (const auto& app_id : fetching_apps) {
                out.labeled_compromised.insert(app_id);
                out.exploit_edges.push_back({ad_host, app_id, 0.5});
                std::string device = app_id.substr(0, app_id.find('/'));
                out.exploit_edges.push_back({app_id, device, 0.4});
                out.evidence.push_back({app_id, anomaly_score_from_flags(false, false, true), false});
            }
            break;
        }

        case scenario_kind::Botnet: {
            // Every device reports to one command host on a shared 90 s
            // grid (synchronized timing). Draw order per flow: bytes_sent,
            // bytes_received.
            const std::string cmd_host = "cmd.botnet.example";
            for (std::int64_t k = 1; t0 + k * 90 < t_end; ++k) {
                for (int d = 0; d < config.devices; ++d) {
                    flow_record r;
                    r.timestamp = t0 + k * 90;
                    r.src_device = detail::sim_device_name(d);
                    r.dst_host = cmd_host;
                    r.dst_port = 6667;
                    r.proto = protocol::OTHER;
                    r.bytes_sent = 128 + rng.next_int(0, 128);
                    r.bytes_received = 64 + rng.next_int(0, 64);
                    r.encrypted = false;
                    r.authenticated = false;
                    r.is_ad_fetch = false;
                    r.os_name = (d % 2 == 0) ? "ios" : "android";
                    r.duration = 0.02;
                    out.records.push_back(std::move(r));
                }
            }
            out.labeled_compromised.insert(cmd_host);
            out.annotated_nodes.push_back({cmd_host, 0.12, 0.0, {"SIM-BOTNET-C2"}});
            for (int d = 0; d < config.devices; ++d) {
                const std::string device = detail::sim_device_name(d);
                out.labeled_compromised.insert(device);
                out.exploit_edges.push_back({cmd_host, device, 0.7});
                out.evidence.push_back({device, anomaly_score_from_flags(true, false, false), false});
            }
            break;
        }
    }

    if (!config.labeled_compromised.empty()) out.labeled_compromised = config.labeled_compromised;

    std::stable_sort(out.records.begin(), out.records.end(), detail::canonical_record_order);
    for (const auto& r : out.records) r.validate();
    return out;
}

}  // namespace flowrisk
