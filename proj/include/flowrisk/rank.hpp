#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <flowrisk/errors.hpp>

namespace flowrisk {

/// Knobs shared by the sensitivity and vulnerability iterations. Row
/// normalization to `damping` makes the update a max-norm contraction, so
/// the fixed point exists, is unique, and the iteration count is bounded
/// by log(tolerance)/log(damping).
struct rank_params {
    double damping = 0.85;
    double tolerance = 1e-9;
    int max_iterations = 1000;
    double recency_half_life = 7.0 * 86400.0;  // seconds
    double history_decay = 0.99;               // per day

    void validate() const {
        if (!(damping > 0.0 && damping < 1.0)) throw config_error("damping must be in (0,1)");
        if (!(tolerance > 0.0)) throw config_error("tolerance must be > 0");
        if (max_iterations < 1) throw config_error("max_iterations must be >= 1");
        if (!(recency_half_life > 0.0)) throw config_error("recency_half_life must be > 0");
        if (!(history_decay > 0.0 && history_decay < 1.0)) throw config_error("history_decay must be in (0,1)");
    }

    // Largest base term compatible with values staying below 1.
    double base_cap() const { return 1.0 - damping; }
};

/// Converged per-entity rank values with convergence metadata.
struct rank_vector {
    std::map<std::string, double> values;
    int iterations_used = 0;
    bool converged = false;
    double residual = 0.0;

    double at_or_zero(const std::string& id) const {
        auto it = values.find(id);
        return it == values.end() ? 0.0 : it->second;
    }
};

/// x_i = sum_j w_ij * x_j + base_i in index-compressed form. Ids are
/// sorted; adjacency is sorted by target index, so summation order is
/// fixed and results are reproducible.
struct link_system {
    std::vector<std::string> ids;
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<std::pair<std::size_t, double>>> out;
    std::vector<double> base;

    static link_system build(const std::map<std::string, double>& base_terms,
                             const std::map<std::pair<std::string, std::string>, double>& weights) {
        link_system sys;
        for (const auto& [id, b] : base_terms) {
            sys.index.emplace(id, sys.ids.size());
            sys.ids.push_back(id);
            sys.base.push_back(b);
        }
        sys.out.resize(sys.ids.size());
        for (const auto& [key, w] : weights) {
            if (w == 0.0) continue;
            auto si = sys.index.find(key.first);
            auto di = sys.index.find(key.second);
            if (si == sys.index.end() || di == sys.index.end()) {
                throw not_found_error("weight references unknown entity \"" +
                                      (si == sys.index.end() ? key.first : key.second) + "\"");
            }
            sys.out[si->second].emplace_back(di->second, w);
        }
        return sys;
    }
};

/// Synchronous (Jacobi) iteration from the all-zero vector, stopping when
/// the max-norm step falls below tolerance. With row sums <= damping < 1
/// this contracts, so `converged` is false only when max_iterations was
/// genuinely too small.
inline rank_vector solve_rank(const link_system& sys, const rank_params& params) {
    params.validate();
    const std::size_t n = sys.ids.size();
    std::vector<double> cur(n, 0.0), next(n, 0.0);

    rank_vector result;
    for (int iter = 1; iter <= params.max_iterations; ++iter) {
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = sys.base[i];
            for (const auto& [j, w] : sys.out[i]) acc += w * cur[j];
            next[i] = acc;
            residual = std::max(residual, std::abs(acc - cur[i]));
        }
        cur.swap(next);
        result.iterations_used = iter;
        result.residual = residual;
        if (residual < params.tolerance) {
            result.converged = true;
            break;
        }
    }
    if (n == 0) {
        result.converged = true;
        result.iterations_used = 0;
        result.residual = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) result.values.emplace(sys.ids[i], cur[i]);
    return result;
}

}  // namespace flowrisk
