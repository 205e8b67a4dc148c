#include "rareis/estimate.hpp"

#include "rareis/error.hpp"
#include "rareis/simulate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace rareis {

namespace {

struct BatchSums {
    double sum = 0.0;
    double sum_squares = 0.0;
    std::int64_t hits = 0;
};

BatchSums run_batch(const ModelSpec& spec, const ControlPolicy& policy, int batch, int samples,
                    std::uint64_t seed) {
    BatchSums sums;
    for (int s = 0; s < samples; ++s) {
        const auto result =
            sample_path(spec, policy,
                        RngStreamSpec{seed, static_cast<std::uint64_t>(batch),
                                      static_cast<std::uint64_t>(s)});
        if (!result.hit) continue;
        const double w = result.weight();
        sums.sum += w;
        sums.sum_squares += w * w;
        ++sums.hits;
    }
    return sums;
}

// Combines per-batch sums in batch order so the result is independent of
// scheduling.
BatchStats combine(const std::vector<BatchSums>& sums, int samples, int population) {
    BatchStats stats;
    stats.samples_per_batch = samples;
    const auto B = static_cast<double>(sums.size());
    double total = 0.0;
    double squares = 0.0;
    for (const auto& b : sums) {
        stats.batch_means.push_back(b.sum / samples);
        total += b.sum / samples;
        squares += b.sum_squares;
        stats.hits += b.hits;
    }
    stats.estimate = total / B;
    stats.second_moment = squares / (B * samples);
    if (stats.estimate > 0.0 && sums.size() > 1) {
        double ss = 0.0;
        for (double m : stats.batch_means) ss += (m - stats.estimate) * (m - stats.estimate);
        stats.rel_error = std::sqrt(ss / (B - 1.0)) / stats.estimate;
    }
    if (stats.second_moment > 0.0) {
        stats.emp_rate = -std::log(stats.second_moment) / population;
    }
    return stats;
}

}  // namespace

double BatchStats::standard_error() const {
    if (!rel_error) return 0.0;
    return *rel_error * estimate / std::sqrt(static_cast<double>(batch_means.size()));
}

BatchStats run_batches(const ModelSpec& spec, const ControlPolicy& policy, int batches,
                       int samples, std::uint64_t seed, int workers) {
    if (batches < 2) throw ConfigError("at least two batches are required");
    if (samples < 1) throw ConfigError("at least one sample per batch is required");
    const auto start = std::chrono::steady_clock::now();

    std::vector<BatchSums> sums(batches);
    if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, batches);
    if (workers == 1) {
        for (int b = 0; b < batches; ++b) sums[b] = run_batch(spec, policy, b, samples, seed);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        {
            std::vector<std::jthread> pool;
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (int b = next++; b < batches && !failed; b = next++) {
                        try {
                            sums[b] = run_batch(spec, policy, b, samples, seed);
                        } catch (...) {
                            if (!failed.exchange(true)) failure = std::current_exception();
                        }
                    }
                });
            }
        }
        if (failure) std::rethrow_exception(failure);
    }

    auto stats = combine(sums, samples, spec.population);
    if (spec.homogeneous() && stats.second_moment > 0.0) {
        try {
            stats.bound_rate = 0.5 * policy.initial_value() + rate_U0(spec);
        } catch (const NumericalError&) {
        }
    }
    stats.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
}

BatchStats summarize(const std::vector<std::vector<double>>& weights, int population) {
    if (weights.size() < 2) throw ConfigError("at least two batches are required");
    std::vector<BatchSums> sums;
    const auto samples = static_cast<int>(weights.front().size());
    for (const auto& batch : weights) {
        if (static_cast<int>(batch.size()) != samples) {
            throw ConfigError("batches must have equal sizes");
        }
        BatchSums s;
        for (double w : batch) {
            s.sum += w;
            s.sum_squares += w * w;
            s.hits += w > 0.0 ? 1 : 0;
        }
        sums.push_back(s);
    }
    return combine(sums, samples, population);
}

OptimalityReport optimality_report(const BatchStats& stats, const ControlPolicy& policy,
                                   const ModelSpec& spec) {
    OptimalityReport report;
    if (!(stats.second_moment > 0.0) || !(stats.estimate > 0.0)) return report;
    const double n = spec.population;
    report.sufficient_data = true;
    report.emp_rate = -std::log(stats.second_moment) / n;
    report.doubled_probability_rate = -2.0 * std::log(stats.estimate) / n;
    if (spec.homogeneous()) {
        const double u0 = rate_U0(spec);
        report.optimal_rate = 2.0 * u0;
        report.bound_rate = 0.5 * policy.initial_value() + u0;
        report.gap_to_bound = report.emp_rate - *report.bound_rate;
        report.gap_to_optimal = report.emp_rate - *report.optimal_rate;
        report.consistent_with_bound = report.emp_rate >= *report.bound_rate - 5.0 / n;
    }
    return report;
}

}  // namespace rareis
