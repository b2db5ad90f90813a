#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <flowrisk/entity_graph.hpp>
#include <flowrisk/errors.hpp>
#include <flowrisk/ndjson.hpp>
#include <flowrisk/rank.hpp>
#include <flowrisk/sensitivity.hpp>

namespace flowrisk {

/// Per-entity vulnerability annotation. LV is exploitable surface local
/// to the entity, IV the insider contribution; their sum is capped at
/// 1 - damping so vulnerability ranks stay below 1.
struct vuln_node {
    std::string id;
    double local_vulnerability = 0.0;    // LV
    double insider_vulnerability = 0.0;  // IV
    std::vector<std::string> known_cves;

    double base() const { return insider_vulnerability + local_vulnerability; }

    void validate(const rank_params& params) const {
        if (local_vulnerability < 0.0 || local_vulnerability >= 1.0)
            throw validation_error("node \"" + id + "\": lv must be in [0,1)");
        if (insider_vulnerability < 0.0 || insider_vulnerability >= 1.0)
            throw validation_error("node \"" + id + "\": iv must be in [0,1)");
        if (base() > params.base_cap() + 1e-15)
            throw validation_error("node \"" + id + "\": iv + lv exceeds " +
                                   ndjson::format_value(params.base_cap()));
    }
};

/// Directed exploitability: compromise of src can be extended to dst with
/// probability p.
struct exploit_edge {
    std::string src;
    std::string dst;
    double probability = 0.0;  // in (0,1]

    void validate() const {
        if (!(probability > 0.0 && probability <= 1.0))
            throw validation_error("exploit edge " + src + "->" + dst + ": p must be in (0,1]");
    }
};

/// Vulnerability graph over the entities of a frozen entity graph:
/// annotated nodes, explicit exploit edges, and the same normalized
/// interaction weights the sensitivity rank uses.
struct vuln_graph {
    std::map<std::string, vuln_node> nodes;
    std::vector<exploit_edge> exploit_edges;
    std::map<edge_key, double> interaction_weights;
};

/// Parsed annotation file, not yet bound to a graph.
struct vuln_annotations {
    std::vector<vuln_node> nodes;
    std::vector<exploit_edge> edges;
};

/// Parses NDJSON annotations ({"node":...} and {"exploit_edge":...}
/// lines), validating values but not entity ids.
inline vuln_annotations parse_vuln_annotations(std::istream& in, const rank_params& params,
                                               const std::string& name = "<annotations>") {
    params.validate();
    vuln_annotations ann;
    ndjson::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
        try {
            ndjson::json j = ndjson::parse_object(line);
            if (j.contains("node")) {
                const auto& n = j["node"];
                vuln_node node;
                node.id = ndjson::require_as<std::string>(n, "id");
                node.local_vulnerability = ndjson::optional_as<double>(n, "lv").value_or(0.0);
                node.insider_vulnerability = ndjson::optional_as<double>(n, "iv").value_or(0.0);
                if (auto cves = ndjson::optional_as<std::vector<std::string>>(n, "cves")) {
                    node.known_cves = *cves;
                }
                node.validate(params);
                ann.nodes.push_back(std::move(node));
            } else if (j.contains("exploit_edge")) {
                const auto& n = j["exploit_edge"];
                exploit_edge e;
                e.src = ndjson::require_as<std::string>(n, "src");
                e.dst = ndjson::require_as<std::string>(n, "dst");
                e.probability = ndjson::require_as<double>(n, "p");
                e.validate();
                ann.edges.push_back(std::move(e));
            } else {
                throw schema_error("expected a \"node\" or \"exploit_edge\" object");
            }
        } catch (const error&) {
            ndjson::rethrow_with_location(name, line_no);
        }
    });
    return ann;
}

enum class id_policy {
    require,        // unknown entity ids are an error
    ignore_unknown  // annotations for entities not (yet) in the graph are dropped
};

/// Binds annotations to a frozen entity graph. Unannotated entities get
/// LV=IV=0; interaction weights are recomputed with the same pipeline the
/// sensitivity rank uses, aged relative to `now` (graph's latest
/// timestamp when unset).
inline vuln_graph build_vuln_graph(const entity_graph& graph, const vuln_annotations& ann,
                                   const rank_params& params, id_policy policy = id_policy::require,
                                   std::optional<std::int64_t> now = std::nullopt) {
    if (!graph.frozen()) throw state_error("graph must be frozen before annotation");
    params.validate();

    vuln_graph vg;
    for (const auto& [id, e] : graph.entities()) {
        vuln_node n;
        n.id = id;
        vg.nodes.emplace(id, n);
    }
    for (const auto& node : ann.nodes) {
        if (!graph.contains(node.id)) {
            if (policy == id_policy::require) throw not_found_error("unknown entity \"" + node.id + "\"");
            continue;
        }
        node.validate(params);
        vg.nodes[node.id] = node;
    }
    for (const auto& e : ann.edges) {
        if (!graph.contains(e.src) || !graph.contains(e.dst)) {
            if (policy == id_policy::require) {
                throw not_found_error("unknown entity \"" + (graph.contains(e.src) ? e.dst : e.src) + "\"");
            }
            continue;
        }
        vg.exploit_edges.push_back(e);
    }
    vg.interaction_weights =
        normalize_weights(raw_edge_weights(graph, now.value_or(graph.latest_timestamp()), params), params);
    return vg;
}

inline vuln_graph load_vuln_annotations(const entity_graph& graph, std::istream& in, const rank_params& params,
                                        const std::string& name = "<annotations>") {
    return build_vuln_graph(graph, parse_vuln_annotations(in, params, name), params, id_policy::require);
}

inline void write_vuln_annotations(std::ostream& out, const std::vector<vuln_node>& nodes,
                                   const std::vector<exploit_edge>& edges) {
    using ndjson::json;
    for (const auto& n : nodes) {
        json v{{"id", n.id}, {"lv", n.local_vulnerability}, {"iv", n.insider_vulnerability},
               {"cves", n.known_cves}};
        out << json{{"node", v}}.dump() << '\n';
    }
    for (const auto& e : edges) {
        json v{{"src", e.src}, {"dst", e.dst}, {"p", e.probability}};
        out << json{{"exploit_edge", v}}.dump() << '\n';
    }
}

/// Vulnerability rank: unique fixed point of
///   V(i) = sum_j W(i,j) V(j) + IV(i) + LV(i)
/// with the same iteration and convergence contract as the sensitivity
/// rank. The base terms enter only at their own node.
inline rank_vector compute_vulnerability_rank(const vuln_graph& vg, const rank_params& params) {
    params.validate();
    std::map<std::string, double> base;
    for (const auto& [id, n] : vg.nodes) {
        n.validate(params);
        base.emplace(id, n.base());
    }
    return solve_rank(link_system::build(base, vg.interaction_weights), params);
}

struct attack_path_result {
    std::vector<std::string> path;  // source first, target last
    double probability = 0.0;       // product of edge probabilities
};

/// Maximum-product attack path from source to target over the exploit
/// edges, assuming independent exploits. Ties broken by fewer hops, then
/// by lexicographically smaller node sequence. Probabilities are compared
/// as products directly, so the result matches exhaustive enumeration
/// bit for bit. Returns nullopt when no path exists.
inline std::optional<attack_path_result> attack_path(const vuln_graph& vg, const std::string& source,
                                                     const std::string& target) {
    if (!vg.nodes.count(source)) throw not_found_error("unknown entity \"" + source + "\"");
    if (!vg.nodes.count(target)) throw not_found_error("unknown entity \"" + target + "\"");

    if (source == target) return attack_path_result{{source}, 1.0};

    std::map<std::string, std::vector<std::pair<std::string, double>>> adj;
    for (const auto& e : vg.exploit_edges) adj[e.src].emplace_back(e.dst, e.probability);
    for (auto& [id, out] : adj) std::sort(out.begin(), out.end());

    struct frontier_entry {
        double probability;
        std::vector<std::string> path;

        // Max-heap on probability; ties prefer fewer hops, then the
        // lexicographically smaller path.
        bool operator<(const frontier_entry& other) const {
            if (probability != other.probability) return probability < other.probability;
            if (path.size() != other.path.size()) return path.size() > other.path.size();
            return path > other.path;
        }
    };

    std::priority_queue<frontier_entry> frontier;
    std::set<std::string> settled;
    frontier.push({1.0, {source}});

    while (!frontier.empty()) {
        frontier_entry cur = frontier.top();
        frontier.pop();
        const std::string& node = cur.path.back();
        if (settled.count(node)) continue;
        settled.insert(node);
        if (node == target) return attack_path_result{cur.path, cur.probability};
        auto it = adj.find(node);
        if (it == adj.end()) continue;
        for (const auto& [next, p] : it->second) {
            if (settled.count(next)) continue;
            frontier_entry e;
            e.probability = cur.probability * p;
            e.path = cur.path;
            e.path.push_back(next);
            frontier.push(std::move(e));
        }
    }
    return std::nullopt;
}

}  // namespace flowrisk
