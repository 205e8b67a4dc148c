#include "rareis/simulate.hpp"

#include "rareis/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rareis {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform on (0, 1]: never zero, so -log(u) is finite.
double open_uniform(RandomSource& rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

bool same_model(const ModelSpec& a, const ModelSpec& b) {
    return a.weights == b.weights && a.rates == b.rates && a.contagion == b.contagion &&
           a.population == b.population && a.horizon == b.horizon && a.threshold == b.threshold;
}

}  // namespace

double SampleResult::weight() const { return hit ? std::exp(log_lr) : 0.0; }

std::uint64_t stream_seed(const RngStreamSpec& s) {
    std::uint64_t h = splitmix64(s.master_seed);
    h = splitmix64(h ^ s.batch_index);
    h = splitmix64(h ^ s.sample_index);
    return h;
}

RandomSource derive_stream(const RngStreamSpec& s) { return RandomSource(stream_seed(s)); }

SampleResult sample_path(const ModelSpec& spec, const ControlPolicy& policy,
                         const RngStreamSpec& stream) {
    if (!same_model(spec, policy.spec())) {
        throw ConfigError("policy was built for a different model");
    }
    auto rng = derive_stream(stream);
    const std::size_t d = spec.groups();
    const double n = spec.population;
    const int target = spec.hitting_count();
    const bool tilted = policy.variant() != PolicyVariant::none;

    std::vector<int> counts(d, 0);
    std::vector<double> x(d, 0.0);
    std::vector<double> base(d, 0.0);
    std::vector<double> tilted_rates(d, 0.0);

    SampleResult result;
    int total = 0;
    double clock = 0.0;
    double log_lr = 0.0;
    while (true) {
        lattice_intensity(spec, counts, base);
        // Every direction shares the same tilt, so lbar_j = lambda_j e^{alpha}.
        const double alpha = tilted ? policy.scalar_tilt(x) : 0.0;
        const double factor = std::exp(alpha);
        double base_total = 0.0;
        double tilted_total = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            tilted_rates[j] = base[j] * factor;
            base_total += base[j];
            tilted_total += tilted_rates[j];
        }
        if (!(tilted_total > 0.0)) break;

        const double tau = -std::log(open_uniform(rng)) / (n * tilted_total);
        if (clock + tau > spec.horizon) break;

        double pick = open_uniform(rng) * tilted_total;
        std::size_t j = 0;
        for (; j + 1 < d; ++j) {
            if (tilted_rates[j] > 0.0 && pick <= tilted_rates[j]) break;
            pick -= tilted_rates[j];
        }
        while (tilted_rates[j] == 0.0) --j;  // rounding pushed past the last live group

        clock += tau;
        const double increment =
            n * (tilted_total - base_total) * tau + std::log(base[j]) - std::log(tilted_rates[j]);
        if (!std::isfinite(increment)) {
            throw NumericalError("non-finite likelihood ratio increment");
        }
        log_lr += increment;
        ++counts[j];
        ++total;
        // Group sizes are rounded, so the last default of a group may overshoot w_j.
        x[j] = std::min(counts[j] / n, spec.weights[j]);
        ++result.jumps;
        if (total >= target) {
            result.hit = true;
            break;
        }
    }
    result.log_lr = log_lr;
    result.stop_time = clock;
    return result;
}

}  // namespace rareis
