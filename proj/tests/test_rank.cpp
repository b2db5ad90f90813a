#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <flowrisk/rank.hpp>

#include "support/oracles.hpp"

using namespace flowrisk;

TEST_CASE("rank_params validation") {
    rank_params p;
    CHECK_NOTHROW(p.validate());
    p.damping = 1.0;
    CHECK_THROWS_AS(p.validate(), config_error);
    p = {};
    p.tolerance = 0.0;
    CHECK_THROWS_AS(p.validate(), config_error);
    p = {};
    p.max_iterations = 0;
    CHECK_THROWS_AS(p.validate(), config_error);
}

TEST_CASE("solve_rank on an empty system") {
    auto rv = solve_rank(link_system::build({}, {}), rank_params{});
    CHECK(rv.converged);
    CHECK(rv.values.empty());
    CHECK(rv.iterations_used == 0);
}

TEST_CASE("link_system rejects weights for unknown ids") {
    CHECK_THROWS_AS(link_system::build({{"a", 0.1}}, {{{"a", "ghost"}, 0.5}}), not_found_error);
}

TEST_CASE("solve_rank matches the dense oracle on random problems") {
    std::mt19937_64 rng(1234);
    rank_params params;
    for (int trial = 0; trial < 25; ++trial) {
        auto prob = oracles::random_rank_problem(rng, 12, params.damping);
        auto iterated = solve_rank(link_system::build(prob.base, prob.weights), params);
        REQUIRE(iterated.converged);
        auto direct = oracles::dense_fixed_point(prob.ids, prob.weights, prob.base);
        for (const auto& [id, v] : iterated.values) {
            CHECK(std::abs(v - direct.at(id)) < 1e-6);
        }
    }
}

TEST_CASE("iteration count respects the contraction bound") {
    std::mt19937_64 rng(99);
    rank_params params;
    const int bound =
        static_cast<int>(std::ceil(std::log(params.tolerance) / std::log(params.damping))) + 1;
    for (int trial = 0; trial < 50; ++trial) {
        auto prob = oracles::random_rank_problem(rng, 10, params.damping);
        auto rv = solve_rank(link_system::build(prob.base, prob.weights), params);
        CHECK(rv.converged);
        CHECK(rv.iterations_used <= bound);
        CHECK(rv.residual < params.tolerance);
    }
}

TEST_CASE("values stay in [0,1) for valid inputs") {
    std::mt19937_64 rng(31337);
    rank_params params;
    for (int trial = 0; trial < 30; ++trial) {
        auto prob = oracles::random_rank_problem(rng, 12, params.damping);
        auto rv = solve_rank(link_system::build(prob.base, prob.weights), params);
        for (const auto& [id, v] : rv.values) {
            CHECK(v >= 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("non-convergence is reported, not hidden") {
    rank_params params;
    params.max_iterations = 2;
    // two nodes feeding each other keep moving for more than two sweeps
    auto rv = solve_rank(
        link_system::build({{"a", 0.15}, {"b", 0.15}}, {{{"a", "b"}, 0.85}, {{"b", "a"}, 0.85}}), params);
    CHECK_FALSE(rv.converged);
    CHECK(rv.iterations_used == 2);
    CHECK(rv.residual >= params.tolerance);
}
