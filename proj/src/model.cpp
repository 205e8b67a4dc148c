#include "rareis/model.hpp"

#include "rareis/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace rareis {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid model: " + what);
}

void check_dimension(const ModelSpec& spec, std::size_t size, const char* what) {
    if (size != spec.groups()) {
        throw DomainError(std::string(what) + " has " + std::to_string(size) +
                          " components, model has " + std::to_string(spec.groups()) + " groups");
    }
}

// Clamps x_j into [0, w_j] when it lies within the lattice tolerance of the
// box, otherwise throws naming the offending component.
double clamp_component(const ModelSpec& spec, std::span<const double> x, std::size_t j) {
    const double w = spec.weights[j];
    const double v = x[j];
    if (!std::isfinite(v) || v < -kStateTolerance || v > w + kStateTolerance) {
        throw DomainError("state component x[" + std::to_string(j) + "] = " + std::to_string(v) +
                          " outside [0, " + std::to_string(w) + "]");
    }
    return std::clamp(v, 0.0, w);
}

}  // namespace

void ModelSpec::validate() const {
    require(!weights.empty(), "at least one group is required");
    require(rates.size() == weights.size(), "rates and weights must have the same length");
    double sum = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        require(std::isfinite(weights[j]) && weights[j] > 0.0,
                "weight w[" + std::to_string(j) + "] must be positive");
        sum += weights[j];
    }
    require(std::abs(sum - 1.0) <= 1e-12, "weights must sum to 1");
    bool any_positive = false;
    for (std::size_t j = 0; j < rates.size(); ++j) {
        require(std::isfinite(rates[j]) && rates[j] >= 0.0,
                "rate a[" + std::to_string(j) + "] must be nonnegative");
        any_positive = any_positive || rates[j] > 0.0;
    }
    require(any_positive, "at least one rate must be positive");
    require(std::isfinite(contagion) && contagion >= 0.0, "contagion b must be nonnegative");
    require(population >= 1, "population n must be at least 1");
    require(std::isfinite(horizon) && horizon > 0.0, "horizon T must be positive");
    require(threshold > 0.0 && threshold < 1.0, "threshold z must lie in (0, 1)");
}

bool ModelSpec::homogeneous() const {
    return std::all_of(rates.begin(), rates.end(), [&](double a) { return a == rates.front(); });
}

double ModelSpec::max_rate() const { return *std::max_element(rates.begin(), rates.end()); }

std::vector<int> ModelSpec::group_sizes() const {
    std::vector<int> sizes(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j) {
        sizes[j] = static_cast<int>(std::lround(weights[j] * population));
    }
    return sizes;
}

int ModelSpec::hitting_count() const {
    // n z is compared with a relative slack so that e.g. 10 * 0.3 counts as 3.
    const double target = population * threshold;
    return static_cast<int>(std::ceil(target - 1e-9 * std::max(1.0, target)));
}

ModelSpec one_group_model(double rate, double contagion, int population, double horizon,
                          double threshold) {
    ModelSpec spec{{1.0}, {rate}, contagion, population, horizon, threshold};
    spec.validate();
    return spec;
}

int LatticeState::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

void intensity_into(const ModelSpec& spec, std::span<const double> x, std::span<double> out) {
    check_dimension(spec, x.size(), "state");
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += clamp_component(spec, x, j);
    const double growth = std::exp(spec.contagion * s);
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double remaining = spec.weights[j] - clamp_component(spec, x, j);
        out[j] = spec.rates[j] * remaining * growth;
    }
}

IntensityVector intensity(const ModelSpec& spec, std::span<const double> x) {
    IntensityVector out(spec.groups());
    intensity_into(spec, x, out);
    return out;
}

void lattice_intensity(const ModelSpec& spec, std::span<const int> counts, std::span<double> out) {
    const auto n = static_cast<double>(spec.population);
    int total = 0;
    for (int k : counts) total += k;
    const double growth = std::exp(spec.contagion * (total / n));
    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] >= std::lround(spec.weights[j] * n)) {
            out[j] = 0.0;
            continue;
        }
        const double remaining = std::max(spec.weights[j] - counts[j] / n, 0.0);
        out[j] = spec.rates[j] * remaining * growth;
    }
}

double total_intensity(const ModelSpec& spec, std::span<const double> x) {
    const auto rates = intensity(spec, x);
    return std::accumulate(rates.begin(), rates.end(), 0.0);
}

double hamiltonian(const ModelSpec& spec, std::span<const double> x, std::span<const double> alpha) {
    check_dimension(spec, alpha.size(), "alpha");
    const auto rates = intensity(spec, x);
    double h = 0.0;
    for (std::size_t j = 0; j < rates.size(); ++j) {
        if (!std::isfinite(alpha[j])) {
            throw DomainError("alpha[" + std::to_string(j) + "] is not finite");
        }
        h += rates[j] * std::expm1(alpha[j]);
    }
    return h;
}

double local_rate(const ModelSpec& spec, std::span<const double> x, std::span<const double> beta) {
    check_dimension(spec, beta.size(), "beta");
    const auto rates = intensity(spec, x);
    double l = 0.0;
    for (std::size_t j = 0; j < rates.size(); ++j) {
        const double b = beta[j];
        if (!(b >= 0.0)) throw DomainError("beta[" + std::to_string(j) + "] must be nonnegative");
        if (b == 0.0) {
            l += rates[j];
        } else if (rates[j] == 0.0) {
            return std::numeric_limits<double>::infinity();
        } else {
            l += b * std::log(b / rates[j]) - b + rates[j];
        }
    }
    // Rounding may leave a tiny negative value near beta = lambda.
    return std::max(l, 0.0);
}

double collapsed_intensity(double rate, double contagion, double s) {
    return rate * (1.0 - s) * std::exp(contagion * s);
}

double mane_critical_value(const ModelSpec& spec) {
    spec.validate();
    const double z = spec.threshold;
    const double b = spec.contagion;
    if (spec.homogeneous()) {
        // a (1 - s) e^{bs} has no interior minimum, so the infimum over [0, z)
        // is attained (in the closure) at an endpoint.
        const double a = spec.rates.front();
        return -std::min(collapsed_intensity(a, b, 0.0), collapsed_intensity(a, b, z));
    }

    // On the slice sum_j x_j = s the total intensity is
    //     e^{bs} (sum_j a_j w_j - max { sum_j a_j x_j }),
    // and the inner maximum fills groups in decreasing order of a_j. Between
    // consecutive fill breakpoints the slice minimum is e^{bs}(K - a s), which
    // is concave wherever positive, so the infimum over [0, z] is attained at
    // 0, z or a breakpoint.
    std::vector<std::size_t> order(spec.groups());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return spec.rates[i] > spec.rates[j]; });
    double base = 0.0;
    for (std::size_t j = 0; j < spec.groups(); ++j) base += spec.rates[j] * spec.weights[j];

    auto slice_minimum = [&](double s) {
        double left = s;
        double filled = 0.0;
        for (std::size_t j : order) {
            const double take = std::min(left, spec.weights[j]);
            filled += spec.rates[j] * take;
            left -= take;
            if (left <= 0.0) break;
        }
        return std::exp(b * s) * std::max(base - filled, 0.0);
    };

    double best = std::min(slice_minimum(0.0), slice_minimum(z));
    double cumulative = 0.0;
    for (std::size_t j : order) {
        cumulative += spec.weights[j];
        if (cumulative >= z) break;
        best = std::min(best, slice_minimum(cumulative));
    }
    return -best;
}

bool target_hit(const ModelSpec& spec, const LatticeState& state) {
    return state.total() >= spec.hitting_count();
}

std::vector<double> scaled_state(const ModelSpec& spec, const LatticeState& state) {
    std::vector<double> x(state.counts.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] = static_cast<double>(state.counts[j]) / spec.population;
    }
    return x;
}

}  // namespace rareis
