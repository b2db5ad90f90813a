#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <flowrisk/entity_graph.hpp>
#include <flowrisk/errors.hpp>
#include <flowrisk/ndjson.hpp>
#include <flowrisk/rank.hpp>

namespace flowrisk {

/// Anomaly flag weights. Flags combine additively and clamp at 1.
struct anomaly_weights {
    double beaconing = 0.6;
    double new_endpoint_burst = 0.3;
    double ad_click_spike = 0.3;
};

inline double anomaly_score_from_flags(bool beaconing, bool new_endpoint_burst, bool ad_click_spike,
                                       const anomaly_weights& w = {}) {
    double score = 0.0;
    if (beaconing) score += w.beaconing;
    if (new_endpoint_burst) score += w.new_endpoint_burst;
    if (ad_click_spike) score += w.ad_click_spike;
    return std::min(1.0, score);
}

/// Behavioral evidence of compromise for one entity.
struct compromise_evidence {
    std::string id;
    double anomaly_score = 0.0;  // in [0,1]
    bool directly_observed = false;

    void validate() const {
        if (anomaly_score < 0.0 || anomaly_score > 1.0)
            throw validation_error("evidence \"" + id + "\": anomaly_score out of [0,1]");
    }
};

using evidence_map = std::map<std::string, compromise_evidence>;

/// Parses an evidence file without binding ids to a graph.
inline std::vector<compromise_evidence> parse_evidence(std::istream& in, const std::string& name = "<evidence>") {
    std::vector<compromise_evidence> out;
    ndjson::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
        try {
            ndjson::json j = ndjson::parse_object(line);
            const auto& n = ndjson::require(j, "evidence");
            compromise_evidence ev;
            ev.id = ndjson::require_as<std::string>(n, "id");
            ev.anomaly_score = ndjson::optional_as<double>(n, "anomaly_score").value_or(0.0);
            ev.directly_observed = ndjson::optional_as<bool>(n, "directly_observed").value_or(false);
            ev.validate();
            out.push_back(std::move(ev));
        } catch (const error&) {
            ndjson::rethrow_with_location(name, line_no);
        }
    });
    return out;
}

inline evidence_map read_evidence(std::istream& in, const entity_graph& graph,
                                  const std::string& name = "<evidence>") {
    evidence_map out;
    for (auto& ev : parse_evidence(in, name)) {
        if (!graph.contains(ev.id)) throw not_found_error(name + ": unknown entity \"" + ev.id + "\"");
        out[ev.id] = std::move(ev);
    }
    return out;
}

inline void write_evidence(std::ostream& out, const std::vector<compromise_evidence>& evidence) {
    using ndjson::json;
    for (const auto& ev : evidence) {
        json v{{"id", ev.id}, {"anomaly_score", ev.anomaly_score}, {"directly_observed", ev.directly_observed}};
        out << json{{"evidence", v}}.dump() << '\n';
    }
}

/// Probability that the entity is compromised: certain when directly
/// observed, otherwise a noisy-OR of "exploited via its ranked
/// vulnerability" and "behaviorally anomalous".
inline double compromise_probability(double vulnerability_rank, const compromise_evidence& evidence) {
    evidence.validate();
    if (evidence.directly_observed) return 1.0;
    if (vulnerability_rank < 0.0 || vulnerability_rank >= 1.0)
        throw validation_error("vulnerability rank out of [0,1)");
    return 1.0 - (1.0 - vulnerability_rank) * (1.0 - evidence.anomaly_score);
}

/// Compromise probability and severity for one entity.
struct compromise_assessment {
    std::string id;
    double probability = 0.0;  // p(i)
    double degree = 0.0;       // DC(i), unbounded above
    std::vector<std::string> contributing_children;
};

using assessment_map = std::map<std::string, compromise_assessment>;

/// Degree of compromise, bottom-up over the containment forest:
///   leaf:          DC(i) = p(i) * S(i)
///   internal node: DC(i) = p(i) * S(i) * sum of DC(j) over children j
///                  with V(j) > 0; falls back to the leaf rule when no
///                  child qualifies.
/// Requires both ranks converged on the same graph.
inline assessment_map compute_degree_of_compromise(const entity_graph& graph, const rank_vector& sensitivity,
                                                   const rank_vector& vulnerability, const evidence_map& evidence) {
    if (!graph.frozen()) throw state_error("graph must be frozen");
    if (!sensitivity.converged || !vulnerability.converged)
        throw state_error("ranks must be converged before assessing compromise");

    assessment_map out;
    // children sorted by id; std::map iteration already visits parents in
    // no particular order relative to children, so recurse explicitly.
    auto assess = [&](auto&& self, const std::string& id) -> const compromise_assessment& {
        auto done = out.find(id);
        if (done != out.end()) return done->second;

        compromise_assessment a;
        a.id = id;
        compromise_evidence ev;
        auto ev_it = evidence.find(id);
        if (ev_it != evidence.end()) ev = ev_it->second;
        a.probability = compromise_probability(vulnerability.at_or_zero(id), ev);

        double child_sum = 0.0;
        for (const auto& child : graph.children_of(id)) {
            const auto& ca = self(self, child);
            if (vulnerability.at_or_zero(child) > 0.0) {
                child_sum += ca.degree;
                a.contributing_children.push_back(child);
            }
        }
        const double s = sensitivity.at_or_zero(id);
        a.degree = a.contributing_children.empty() ? a.probability * s : a.probability * s * child_sum;
        return out.emplace(id, std::move(a)).first->second;
    };

    for (const auto& [id, e] : graph.entities()) assess(assess, id);
    return out;
}

/// Assessment export mirrors the rank export: one line per entity with
/// p and dc at 12 significant digits.
inline void write_assessments(std::ostream& out, const assessment_map& assessments) {
    for (const auto& [id, a] : assessments) {
        out << "{\"entity\":" << ndjson::quote(id) << ",\"p\":" << ndjson::format_value(a.probability)
            << ",\"dc\":" << ndjson::format_value(a.degree) << "}\n";
    }
}

inline assessment_map read_assessments(std::istream& in, const std::string& name = "<assessments>") {
    assessment_map out;
    ndjson::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
        try {
            ndjson::json j = ndjson::parse_object(line);
            compromise_assessment a;
            a.id = ndjson::require_as<std::string>(j, "entity");
            a.probability = ndjson::require_as<double>(j, "p");
            a.degree = ndjson::require_as<double>(j, "dc");
            out[a.id] = a;
        } catch (const error&) {
            ndjson::rethrow_with_location(name, line_no);
        }
    });
    return out;
}

}  // namespace flowrisk
