#pragma once

#include "rareis/control.hpp"
#include "rareis/model.hpp"

#include <cstdint>
#include <random>

namespace rareis {

/// Outcome of one trajectory of the embedded jump chain.
struct SampleResult {
    bool hit = false;     // target reached before the horizon
    double log_lr = 0.0;  // log dP/dQ accumulated over the completed jumps
    int jumps = 0;
    double stop_time = 0.0;

    /// Importance sampling weight: hit * exp(log_lr).
    [[nodiscard]] double weight() const;
};

struct RngStreamSpec {
    std::uint64_t master_seed = 1;
    std::uint64_t batch_index = 0;
    std::uint64_t sample_index = 0;
};

using RandomSource = std::mt19937_64;

/// Seed of the stream for (seed, batch, sample); a pure function of the triple.
[[nodiscard]] std::uint64_t stream_seed(const RngStreamSpec& s);
[[nodiscard]] RandomSource derive_stream(const RngStreamSpec& s);

/// Simulates the embedded chain under the policy's tilted intensities until
/// the target is hit, the next jump falls after the horizon, or every group is
/// exhausted.
[[nodiscard]] SampleResult sample_path(const ModelSpec& spec, const ControlPolicy& policy,
                                       const RngStreamSpec& rng);

}  // namespace rareis
