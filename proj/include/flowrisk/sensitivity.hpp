#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>

#include <flowrisk/entity_graph.hpp>
#include <flowrisk/errors.hpp>
#include <flowrisk/ndjson.hpp>
#include <flowrisk/rank.hpp>

namespace flowrisk {

/// How much data an entity generates and stores: its historical and
/// current components add up to the base term driving sensitivity.
struct data_profile {
    std::string id;
    double historical_score = 0.0;  // HD, >= 0
    double current_score = 0.0;     // CD, >= 0

    void validate() const {
        if (historical_score < 0.0) throw validation_error("historical_score must be >= 0");
        if (current_score < 0.0) throw validation_error("current_score must be >= 0");
    }
};

using data_profiles = std::map<std::string, data_profile>;

/// Raw interaction weight of one edge: grows logarithmically with flow
/// count and volume, halves per recency_half_life of inactivity, and is
/// discounted down to 0.5x for fully unauthenticated traffic. Zero-byte
/// edges weigh zero.
inline double edge_weight(const edge_stats& stats, std::int64_t now, const rank_params& params) {
    const double age = std::max<double>(0.0, static_cast<double>(now - stats.last_seen));
    const double volume = std::log2(1.0 + static_cast<double>(stats.flow_count)) *
                          std::log2(1.0 + static_cast<double>(stats.total_bytes));
    const double recency = std::exp2(-age / params.recency_half_life);
    const double auth = 0.5 + 0.5 * stats.auth_fraction;
    return volume * recency * auth;
}

inline std::map<edge_key, double> raw_edge_weights(const entity_graph& graph, std::int64_t now,
                                                   const rank_params& params) {
    std::map<edge_key, double> raw;
    for (const auto& [key, stats] : graph.edges()) raw.emplace(key, edge_weight(stats, now, params));
    return raw;
}

/// Scales each entity's outgoing raw weights to sum to `damping` (or all
/// zero when the raw sum is zero), which keeps every row of W strictly
/// inside the unit ball and the rank recurrences contractive.
inline std::map<edge_key, double> normalize_weights(const std::map<edge_key, double>& raw,
                                                    const rank_params& params) {
    params.validate();
    std::map<std::string, double> row_sum;
    for (const auto& [key, w] : raw) {
        if (w < 0.0) throw validation_error("raw weight must be >= 0");
        row_sum[key.first] += w;
    }
    std::map<edge_key, double> normalized;
    for (const auto& [key, w] : raw) {
        double sum = row_sum[key.first];
        normalized.emplace(key, sum > 0.0 ? params.damping * (w / sum) : 0.0);
    }
    return normalized;
}

/// Base sensitivity from stored data: (1 - damping) * (1 - 2^-(HD+CD)).
/// Zero for no data, strictly increasing, capped below 1 - damping.
inline double data_sensitivity(const data_profile& profile, const rank_params& params) {
    profile.validate();
    const double d = profile.historical_score + profile.current_score;
    return (1.0 - params.damping) * (1.0 - std::exp2(-d));
}

/// Rolls a profile forward: history decays exponentially per day and the
/// current period's data moves into history.
inline void advance_profile(data_profile& profile, double days, const rank_params& params) {
    profile.validate();
    if (days < 0.0) throw validation_error("days must be >= 0");
    profile.historical_score =
        profile.historical_score * std::pow(params.history_decay, days) + profile.current_score;
    profile.current_score = 0.0;
}

/// Sensitivity rank: the unique fixed point of
///   S(i) = sum_j W(i,j) S(j) + data_sensitivity(i)
/// over the entity graph's weighted communication edges. Entities without
/// a profile get a zero base term. Requires a frozen graph.
inline rank_vector compute_sensitivity_rank(const entity_graph& graph, const data_profiles& profiles,
                                            const rank_params& params, std::int64_t now) {
    if (!graph.frozen()) throw state_error("graph must be frozen before ranking");
    params.validate();

    std::map<std::string, double> base;
    for (const auto& [id, e] : graph.entities()) {
        auto it = profiles.find(id);
        base.emplace(id, it == profiles.end() ? 0.0 : data_sensitivity(it->second, params));
    }
    auto weights = normalize_weights(raw_edge_weights(graph, now, params), params);
    return solve_rank(link_system::build(base, weights), params);
}

inline rank_vector compute_sensitivity_rank(const entity_graph& graph, const data_profiles& profiles,
                                            const rank_params& params) {
    return compute_sensitivity_rank(graph, profiles, params, graph.latest_timestamp());
}

/// Default profiles when no explicit data inventory exists: CD(i) is the
/// log of the bytes flowing out of i (for devices and apps) or into i
/// from devices (for endpoints), as a proxy for the data the entity
/// handles. HD starts at zero.
inline data_profiles default_data_profiles(const entity_graph& graph) {
    std::map<std::string, std::int64_t> bytes;
    for (const auto& [key, e] : graph.edges()) {
        bytes[e.src] += e.total_bytes;
        if (graph.at(e.src).kind == entity_kind::Device) bytes[e.dst] += e.total_bytes;
    }
    data_profiles profiles;
    for (const auto& [id, total] : bytes) {
        if (total <= 0) continue;
        data_profile p;
        p.id = id;
        p.current_score = std::log2(1.0 + static_cast<double>(total));
        profiles.emplace(id, p);
    }
    return profiles;
}

/// Rank export: one `{"entity":...,"sensitivity":...}` line per entity,
/// sorted by id, values at 12 significant digits.
inline void write_rank(std::ostream& out, const rank_vector& ranks, const std::string& field) {
    for (const auto& [id, v] : ranks.values) {
        out << "{\"entity\":" << ndjson::quote(id) << ",\"" << field << "\":" << ndjson::format_value(v) << "}\n";
    }
}

inline std::map<std::string, double> read_rank(std::istream& in, const std::string& field,
                                               const std::string& name = "<ranks>") {
    std::map<std::string, double> values;
    ndjson::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
        try {
            ndjson::json j = ndjson::parse_object(line);
            values[ndjson::require_as<std::string>(j, "entity")] = ndjson::require_as<double>(j, field.c_str());
        } catch (const error&) {
            ndjson::rethrow_with_location(name, line_no);
        }
    });
    return values;
}

}  // namespace flowrisk
