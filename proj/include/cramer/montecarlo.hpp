#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cramer/ruin.hpp"

namespace cramer {

struct EstimateWithError {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

struct SimulationPlan {
    explicit SimulationPlan(RiskSystem sys) : system(std::move(sys)) {}

    RiskSystem system;
    double horizon = 1.0;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;

    std::optional<double> tail_time;   // P(S(t) >= t x) and N(t) moments
    double tail_level = 0.0;           // x
    bool ruin = true;                  // T(u) = first jump epoch with S - c t > u
    bool hitting_below = false;        // T(-u) = first time with S - c t = -u
    std::vector<double> ruin_by;       // P(T(u) <= s) for each s <= horizon
    std::optional<double> conditional_time;  // E[S(t) | T(u) <= horizon]
    bool keep_ruin_times = false;

    unsigned workers = 1;              // 0 = hardware concurrency
    double event_budget = 1e10;        // cap on lambda * horizon * n_paths
};

struct SimulationResult {
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::optional<EstimateWithError> tail;
    std::optional<EstimateWithError> claim_count_mean;
    std::optional<EstimateWithError> claim_count_variance;  // std_error is a rough normal-theory value
    std::optional<EstimateWithError> ruin;                  // by the horizon
    std::optional<double> horizon_remainder_bound;          // P(horizon < T(u) < inf) bound, when informative
    std::optional<EstimateWithError> hitting_below;
    std::vector<std::pair<double, EstimateWithError>> ruin_by;
    std::optional<EstimateWithError> conditional_mean;
    std::optional<EstimateWithError> ruin_time_mean;
    std::optional<double> ruin_time_variance;
    std::vector<double> ruin_times;  // ruined paths in path order, when kept
};

SimulationResult simulate(const SimulationPlan& plan);

struct RuinTimeSummary {
    std::vector<double> samples;
    EstimateWithError frequency;
    EstimateWithError mean;
    double variance = 0.0;
    bool pre_asymptotic = false;  // R u < 1
};

// Requires positive loading, horizon >= 5 u tbar and at least 100 ruined paths.
RuinTimeSummary ruin_time_samples(const SimulationPlan& plan);

struct PathTrace {
    std::vector<double> jump_times;
    std::vector<double> totals;  // S just after each jump
    std::optional<double> ruin_time;
    std::optional<double> hitting_time;
};

// Replays a single path of the plan (same draws as simulate).
PathTrace trace_path(const SimulationPlan& plan, std::size_t path);

// Fixed-tree pairwise sum, independent of how the values were produced.
double pairwise_sum(const double* x, std::size_t n);

}  // namespace cramer
