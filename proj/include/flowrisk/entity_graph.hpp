#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <flowrisk/detail/text.hpp>
#include <flowrisk/errors.hpp>
#include <flowrisk/flow_record.hpp>

namespace flowrisk {

enum class entity_kind { Device, App, OperatingSystem, Server, AdNetwork, Website, User };

inline const char* to_string(entity_kind k) {
    switch (k) {
        case entity_kind::Device: return "Device";
        case entity_kind::App: return "App";
        case entity_kind::OperatingSystem: return "OperatingSystem";
        case entity_kind::Server: return "Server";
        case entity_kind::AdNetwork: return "AdNetwork";
        case entity_kind::Website: return "Website";
        case entity_kind::User: return "User";
    }
    return "Server";
}

inline entity_kind entity_kind_from_string(const std::string& s) {
    if (s == "Device") return entity_kind::Device;
    if (s == "App") return entity_kind::App;
    if (s == "OperatingSystem") return entity_kind::OperatingSystem;
    if (s == "Server") return entity_kind::Server;
    if (s == "AdNetwork") return entity_kind::AdNetwork;
    if (s == "Website") return entity_kind::Website;
    if (s == "User") return entity_kind::User;
    throw validation_error("unknown entity kind \"" + s + "\"");
}

/// A ranked node: device, app, OS, or remote endpoint. Kind is fixed at
/// creation; attributes carry informational strings (os_name, app_version).
struct entity {
    std::string id;
    entity_kind kind = entity_kind::Server;
    std::map<std::string, std::string> attributes;
    std::int64_t first_seen = 0;
    std::int64_t last_seen = 0;
};

/// Aggregated communication statistics for one directed src->dst pair.
/// An edge exists only if at least one flow was observed.
struct edge_stats {
    std::string src;
    std::string dst;
    std::int64_t flow_count = 0;
    std::int64_t total_bytes = 0;
    std::int64_t last_seen = 0;
    double auth_fraction = 0.0;  // in [0,1]
    double ad_fraction = 0.0;    // in [0,1]
    double mean_duration = 0.0;
};

using edge_key = std::pair<std::string, std::string>;

/// Hostname classification rules for resolve_entities. Patterns are
/// globs; ad_host_patterns force AdNetwork, website_patterns force
/// Website. With no pattern match the is_ad_fetch majority decides
/// (strict majority -> AdNetwork, otherwise Server).
struct resolution_rules {
    std::vector<std::string> ad_host_patterns;
    std::vector<std::string> website_patterns;

    static resolution_rules parse(std::string_view text) {
        resolution_rules rules;
        for (const auto& e : detail::parse_kv_text(text)) {
            if (e.key == "ad_host_pattern") {
                rules.ad_host_patterns.push_back(e.value);
            } else if (e.key == "website_pattern") {
                rules.website_patterns.push_back(e.value);
            } else {
                throw config_error("line " + std::to_string(e.line_no) + ": unknown rules key \"" + e.key + "\"");
            }
        }
        return rules;
    }
};

// Entity id scheme. Ids are derived from record fields only, so graphs
// built from the same records are identical regardless of record order.
inline std::string device_entity_id(const std::string& device) { return device; }
inline std::string app_entity_id(const std::string& device, const std::string& app) {
    return device + "/app/" + app;
}
inline std::string os_entity_id(const std::string& device, const std::string& os) {
    return device + "/os/" + os;
}

/// Typed entity graph with aggregated edges and a containment forest
/// (device contains its OS and apps). Built single-writer, then frozen;
/// a frozen graph is immutable and safe to share across threads.
class entity_graph {
public:
    void add_entity(const entity& e) {
        ensure_mutable();
        if (e.id.empty()) throw validation_error("entity id must be non-empty");
        auto [it, inserted] = entities_.emplace(e.id, e);
        if (!inserted) {
            if (it->second.kind != e.kind) {
                throw validation_error("entity \"" + e.id + "\" already exists with a different kind");
            }
            it->second.first_seen = std::min(it->second.first_seen, e.first_seen);
            it->second.last_seen = std::max(it->second.last_seen, e.last_seen);
            for (const auto& [k, v] : e.attributes) it->second.attributes[k] = v;
        }
    }

    void add_edge(const edge_stats& e) {
        ensure_mutable();
        require_entity(e.src);
        require_entity(e.dst);
        if (e.flow_count < 1) throw validation_error("edge flow_count must be >= 1");
        if (e.auth_fraction < 0.0 || e.auth_fraction > 1.0) throw validation_error("auth_fraction out of [0,1]");
        if (e.ad_fraction < 0.0 || e.ad_fraction > 1.0) throw validation_error("ad_fraction out of [0,1]");
        edges_[{e.src, e.dst}] = e;
    }

    // Containment stays a forest: one parent per child, no cycles.
    void set_parent(const std::string& child, const std::string& parent) {
        ensure_mutable();
        require_entity(child);
        require_entity(parent);
        auto it = parent_.find(child);
        if (it != parent_.end() && it->second != parent) {
            throw validation_error("entity \"" + child + "\" already has a parent");
        }
        for (std::string cur = parent;;) {
            if (cur == child) throw validation_error("containment cycle through \"" + child + "\"");
            auto up = parent_.find(cur);
            if (up == parent_.end()) break;
            cur = up->second;
        }
        parent_[child] = parent;
    }

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    const std::map<std::string, entity>& entities() const { return entities_; }
    const std::map<edge_key, edge_stats>& edges() const { return edges_; }

    bool contains(const std::string& id) const { return entities_.count(id) != 0; }

    const entity& at(const std::string& id) const {
        auto it = entities_.find(id);
        if (it == entities_.end()) throw not_found_error("unknown entity \"" + id + "\"");
        return it->second;
    }

    std::optional<std::string> parent_of(const std::string& id) const {
        require_entity(id);
        auto it = parent_.find(id);
        if (it == parent_.end()) return std::nullopt;
        return it->second;
    }

    // Direct containment children, sorted by id. Empty for leaves.
    std::set<std::string> children_of(const std::string& id) const {
        require_entity(id);
        std::set<std::string> out;
        for (const auto& [child, parent] : parent_) {
            if (parent == id) out.insert(child);
        }
        return out;
    }

    // Most recent edge activity; the reference time for recency decay.
    std::int64_t latest_timestamp() const {
        std::int64_t t = 0;
        for (const auto& [key, e] : edges_) t = std::max(t, e.last_seen);
        for (const auto& [id, ent] : entities_) t = std::max(t, ent.last_seen);
        return t;
    }

private:
    void ensure_mutable() const {
        if (frozen_) throw state_error("entity graph is frozen");
    }
    void require_entity(const std::string& id) const {
        if (!entities_.count(id)) throw not_found_error("unknown entity \"" + id + "\"");
    }

    std::map<std::string, entity> entities_;
    std::map<edge_key, edge_stats> edges_;
    std::map<std::string, std::string> parent_;  // child -> parent
    bool frozen_ = false;
};

inline std::set<std::string> containment_children(const entity_graph& g, const std::string& id) {
    return g.children_of(id);
}

namespace detail {

inline entity_kind classify_host(const std::string& host, std::int64_t ad_flows, std::int64_t total_flows,
                                 const resolution_rules& rules) {
    for (const auto& p : rules.ad_host_patterns) {
        if (glob_match(p, host)) return entity_kind::AdNetwork;
    }
    for (const auto& p : rules.website_patterns) {
        if (glob_match(p, host)) return entity_kind::Website;
    }
    if (ad_flows * 2 > total_flows) return entity_kind::AdNetwork;
    return entity_kind::Server;
}

}  // namespace detail

namespace detail {

// Integer accumulators; fractions and means are divided out once at the
// end so the result does not depend on accumulation order.
struct edge_accumulator {
    std::int64_t flow_count = 0;
    std::int64_t total_bytes = 0;
    std::int64_t last_seen = 0;
    std::int64_t auth_count = 0;
    std::int64_t ad_count = 0;
    double duration_sum = 0.0;

    edge_stats finalize(const edge_key& key) const {
        edge_stats s;
        s.src = key.first;
        s.dst = key.second;
        s.flow_count = flow_count;
        s.total_bytes = total_bytes;
        s.last_seen = last_seen;
        s.auth_fraction = static_cast<double>(auth_count) / static_cast<double>(flow_count);
        s.ad_fraction = static_cast<double>(ad_count) / static_cast<double>(flow_count);
        s.mean_duration = duration_sum / static_cast<double>(flow_count);
        return s;
    }
};

inline bool canonical_record_order(const flow_record& a, const flow_record& b) {
    auto key = [](const flow_record& r) {
        return std::tie(r.timestamp, r.src_device, r.src_app, r.dst_host, r.dst_port, r.bytes_sent,
                        r.bytes_received, r.duration);
    };
    return key(a) < key(b);
}

}  // namespace detail

/// Resolves flow records into a frozen entity graph: one Device per
/// src_device, one App per (device, app) under it, one OperatingSystem per
/// (device, os_name) under it, one endpoint entity per dst_host. Each
/// record contributes one device->host edge and, when src_app is present,
/// one app->host edge. Records are aggregated in a canonical sort order,
/// so any permutation of the same records yields an identical graph.
inline entity_graph resolve_entities(const std::vector<flow_record>& records, const resolution_rules& rules = {}) {
    if (records.empty()) throw empty_input_error("no flow records to resolve");

    std::vector<flow_record> sorted = records;
    std::stable_sort(sorted.begin(), sorted.end(), detail::canonical_record_order);

    struct host_tally {
        std::int64_t ad = 0;
        std::int64_t total = 0;
        std::int64_t first_ts = std::numeric_limits<std::int64_t>::max();
        std::int64_t last_ts = 0;
    };
    std::map<std::string, host_tally> hosts;
    for (const auto& r : sorted) {
        r.validate();
        auto& t = hosts[r.dst_host];
        t.total += 1;
        if (r.is_ad_fetch) t.ad += 1;
        t.first_ts = std::min(t.first_ts, r.timestamp);
        t.last_ts = std::max(t.last_ts, r.timestamp);
    }

    entity_graph g;
    for (const auto& [host, tally] : hosts) {
        entity e;
        e.id = host;
        e.kind = detail::classify_host(host, tally.ad, tally.total, rules);
        e.first_seen = tally.first_ts;
        e.last_seen = tally.last_ts;
        g.add_entity(e);
    }

    // app_version attribute: keep the (timestamp, version) maximum.
    std::map<std::string, std::pair<std::int64_t, std::string>> app_version;
    std::map<edge_key, detail::edge_accumulator> edges;

    for (const auto& r : sorted) {
        const std::string dev_id = device_entity_id(r.src_device);

        entity dev;
        dev.id = dev_id;
        dev.kind = entity_kind::Device;
        dev.first_seen = dev.last_seen = r.timestamp;
        g.add_entity(dev);

        if (r.os_name) {
            entity os;
            os.id = os_entity_id(r.src_device, *r.os_name);
            os.kind = entity_kind::OperatingSystem;
            os.attributes["os_name"] = *r.os_name;
            os.first_seen = os.last_seen = r.timestamp;
            g.add_entity(os);
            if (!g.parent_of(os.id)) g.set_parent(os.id, dev_id);
        }

        std::optional<std::string> app_id;
        if (r.src_app) {
            entity app;
            app.id = app_entity_id(r.src_device, *r.src_app);
            app.kind = entity_kind::App;
            app.attributes["app"] = *r.src_app;
            app.first_seen = app.last_seen = r.timestamp;
            g.add_entity(app);
            if (!g.parent_of(app.id)) g.set_parent(app.id, dev_id);
            if (r.app_version) {
                auto& best = app_version[app.id];
                std::pair<std::int64_t, std::string> cand{r.timestamp, *r.app_version};
                if (best.second.empty() || cand > best) best = cand;
            }
            app_id = app.id;
        }

        auto tally = [&](const edge_key& key) {
            auto& acc = edges[key];
            acc.flow_count += 1;
            acc.total_bytes += r.total_bytes();
            acc.last_seen = std::max(acc.last_seen, r.timestamp);
            if (r.authenticated) acc.auth_count += 1;
            if (r.is_ad_fetch) acc.ad_count += 1;
            acc.duration_sum += r.duration;
        };
        tally({dev_id, r.dst_host});
        if (app_id) tally({*app_id, r.dst_host});
    }

    for (const auto& [id, tv] : app_version) {
        entity patch = g.at(id);
        patch.attributes["app_version"] = tv.second;
        g.add_entity(patch);
    }
    for (const auto& [key, acc] : edges) g.add_edge(acc.finalize(key));

    g.freeze();
    return g;
}

/// Writes the graph as NDJSON: all {"node":...} lines sorted by id, then
/// all {"edge":...} lines sorted by (src,dst). Byte-reproducible.
inline void write_graph(std::ostream& out, const entity_graph& g) {
    using ndjson::json;
    for (const auto& [id, e] : g.entities()) {
        json n;
        n["id"] = e.id;
        n["kind"] = to_string(e.kind);
        n["first_seen"] = e.first_seen;
        n["last_seen"] = e.last_seen;
        if (!e.attributes.empty()) n["attributes"] = e.attributes;
        if (auto p = g.parent_of(id)) n["parent"] = *p;
        out << json{{"node", n}}.dump() << '\n';
    }
    for (const auto& [key, e] : g.edges()) {
        json ed;
        ed["src"] = e.src;
        ed["dst"] = e.dst;
        ed["flow_count"] = e.flow_count;
        ed["total_bytes"] = e.total_bytes;
        ed["last_seen"] = e.last_seen;
        ed["auth_fraction"] = e.auth_fraction;
        ed["ad_fraction"] = e.ad_fraction;
        ed["mean_duration"] = e.mean_duration;
        out << json{{"edge", ed}}.dump() << '\n';
    }
}

/// Reads a graph export back into a frozen graph.
inline entity_graph read_graph(std::istream& in, const std::string& name = "<graph>") {
    entity_graph g;
    std::vector<std::pair<std::string, std::string>> parents;
    std::vector<edge_stats> edges;
    ndjson::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
        try {
            ndjson::json j = ndjson::parse_object(line);
            if (j.contains("node")) {
                const auto& n = j["node"];
                entity e;
                e.id = ndjson::require_as<std::string>(n, "id");
                e.kind = entity_kind_from_string(ndjson::require_as<std::string>(n, "kind"));
                e.first_seen = ndjson::require_as<std::int64_t>(n, "first_seen");
                e.last_seen = ndjson::require_as<std::int64_t>(n, "last_seen");
                if (n.contains("attributes")) {
                    e.attributes = n["attributes"].get<std::map<std::string, std::string>>();
                }
                g.add_entity(e);
                if (auto p = ndjson::optional_as<std::string>(n, "parent")) {
                    parents.emplace_back(e.id, *p);
                }
            } else if (j.contains("edge")) {
                const auto& n = j["edge"];
                edge_stats e;
                e.src = ndjson::require_as<std::string>(n, "src");
                e.dst = ndjson::require_as<std::string>(n, "dst");
                e.flow_count = ndjson::require_as<std::int64_t>(n, "flow_count");
                e.total_bytes = ndjson::require_as<std::int64_t>(n, "total_bytes");
                e.last_seen = ndjson::require_as<std::int64_t>(n, "last_seen");
                e.auth_fraction = ndjson::require_as<double>(n, "auth_fraction");
                e.ad_fraction = ndjson::require_as<double>(n, "ad_fraction");
                e.mean_duration = ndjson::require_as<double>(n, "mean_duration");
                edges.push_back(std::move(e));
            } else {
                throw schema_error("expected a \"node\" or \"edge\" object");
            }
        } catch (const error&) {
            ndjson::rethrow_with_location(name, line_no);
        }
    });
    for (const auto& [child, parent] : parents) g.set_parent(child, parent);
    for (const auto& e : edges) g.add_edge(e);
    g.freeze();
    return g;
}

}  // namespace flowrisk
