#pragma once

#include "rareis/control.hpp"
#include "rareis/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rareis {

struct BatchStats {
    std::vector<double> batch_means;
    int samples_per_batch = 0;
    double estimate = 0.0;             // mean of the batch means
    std::optional<double> rel_error;   // sd of batch means (B - 1) / estimate; none without hits
    double second_moment = 0.0;        // mean squared weight over all samples
    std::optional<double> emp_rate;    // -(1/n) log second_moment
    std::optional<double> bound_rate;  // W(0,0)/2 + U(0,0), equal-rate models only
    std::int64_t hits = 0;
    double wall_time = 0.0;            // seconds

    [[nodiscard]] bool no_hits() const { return hits == 0; }
    [[nodiscard]] int batches() const { return static_cast<int>(batch_means.size()); }
    /// Standard error of the grand mean, sd(batch means) / sqrt(B).
    [[nodiscard]] double standard_error() const;
};

/// Runs batches * samples independent trajectories, sample s of batch b
/// drawing from stream (seed, b, s). Results do not depend on `workers`
/// (0 means hardware concurrency).
[[nodiscard]] BatchStats run_batches(const ModelSpec& spec, const ControlPolicy& policy,
                                     int batches, int samples, std::uint64_t seed,
                                     int workers = 1);

/// Batch statistics from already computed weights, weights[b][s].
[[nodiscard]] BatchStats summarize(const std::vector<std::vector<double>>& weights,
                                   int population);

struct OptimalityReport {
    bool sufficient_data = false;
    double emp_rate = 0.0;                     // -(1/n) log E[w^2]
    std::optional<double> bound_rate;          // W(0,0)/2 + U(0,0)
    std::optional<double> optimal_rate;        // 2 U(0,0)
    double doubled_probability_rate = 0.0;     // -(2/n) log estimate
    std::optional<double> gap_to_bound;        // emp_rate - bound_rate
    std::optional<double> gap_to_optimal;      // emp_rate - 2 U(0,0)
    bool consistent_with_bound = false;        // emp_rate >= bound_rate - 5/n
};

[[nodiscard]] OptimalityReport optimality_report(const BatchStats& stats,
                                                 const ControlPolicy& policy,
                                                 const ModelSpec& spec);

}  // namespace rareis
