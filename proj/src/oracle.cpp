#include "rareis/oracle.hpp"

#include "rareis/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rareis {

TruncatedChain::TruncatedChain(const ModelSpec& spec) : groups_(spec.groups()) {
    spec.validate();
    const auto sizes = spec.group_sizes();
    const int target = spec.hitting_count();

    // Enumerate the box in mixed radix, keeping totals below the target.
    double box = 1.0;
    for (int s : sizes) box *= s + 1;
    std::vector<std::size_t> radix(groups_, 1);
    for (std::size_t j = 1; j < groups_; ++j) radix[j] = radix[j - 1] * (sizes[j - 1] + 1);
    constexpr auto kUnused = std::numeric_limits<std::size_t>::max();
    if (box > 1e8) {
        throw NumericalError("instance too large for oracle: " + std::to_string(box) +
                             " lattice points");
    }
    std::vector<std::size_t> index(static_cast<std::size_t>(box), kUnused);

    std::vector<int> k(groups_, 0);
    for (std::size_t flat = 0; flat < index.size(); ++flat) {
        std::size_t rem = flat;
        int total = 0;
        for (std::size_t j = groups_; j-- > 0;) {
            k[j] = static_cast<int>(rem / radix[j]);
            rem %= radix[j];
            total += k[j];
        }
        if (total >= target) continue;
        if (states_.size() == kOracleStateCap) {
            throw NumericalError("instance too large for oracle: more than " +
                                 std::to_string(kOracleStateCap) + " states");
        }
        index[flat] = states_.size();
        states_.push_back(k);
    }

    rates_.assign(states_.size() * groups_, 0.0);
    successors_.assign(states_.size() * groups_, hit_state());
    std::vector<double> lambda(groups_);
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const auto& state = states_[i];
        lattice_intensity(spec, state, lambda);
        int total = 0;
        std::size_t flat = 0;
        for (std::size_t j = 0; j < groups_; ++j) {
            total += state[j];
            flat += state[j] * radix[j];
        }
        for (std::size_t j = 0; j < groups_; ++j) {
            rates_[i * groups_ + j] = spec.population * lambda[j];
            if (lambda[j] > 0.0 && total + 1 < target) {
                successors_[i * groups_ + j] = index[flat + radix[j]];
            }
        }
    }
}

double TruncatedChain::exit_rate(std::size_t state) const {
    if (state == hit_state()) return 0.0;
    double r = 0.0;
    for (std::size_t j = 0; j < groups_; ++j) r += rate(state, j);
    return r;
}

double TruncatedChain::max_exit_rate() const {
    double r = 0.0;
    for (std::size_t i = 0; i < states_.size(); ++i) r = std::max(r, exit_rate(i));
    return r;
}

std::vector<double> TruncatedChain::generator_row(std::size_t state) const {
    std::vector<double> row(states_.size() + 1, 0.0);
    if (state == hit_state()) return row;
    for (std::size_t j = 0; j < groups_; ++j) {
        if (rate(state, j) > 0.0) row[successor(state, j)] += rate(state, j);
    }
    row[state] -= exit_rate(state);
    return row;
}

double exact_hit_probability(const ModelSpec& spec) {
    const TruncatedChain chain(spec);
    const std::size_t m = chain.transient_states();
    const double uniform_rate = chain.max_exit_rate();
    if (m == 0) return 1.0;
    if (uniform_rate == 0.0) return 0.0;

    // Distribution after k steps of P = I + Q / uniform_rate. States are
    // ordered so that every successor has a larger index, which lets the step
    // run in place from the back.
    std::vector<double> mass(m + 1, 0.0);
    mass[0] = 1.0;
    const double mean = uniform_rate * spec.horizon;
    double result = 0.0;
    for (std::size_t step = 0;; ++step) {
        const double log_weight = -mean + static_cast<double>(step) * std::log(mean) -
                                  std::lgamma(static_cast<double>(step) + 1.0);
        result += std::exp(log_weight) * mass[m];
        const double tail = boost::math::gamma_p(static_cast<double>(step) + 1.0, mean);
        if (tail <= 1e-12) break;

        for (std::size_t i = m; i-- > 0;) {
            const double p = mass[i];
            if (p == 0.0) continue;
            for (std::size_t j = 0; j < chain.groups(); ++j) {
                const double r = chain.rate(i, j);
                if (r > 0.0) mass[chain.successor(i, j)] += p * (r / uniform_rate);
            }
            mass[i] = p * (1.0 - chain.exit_rate(i) / uniform_rate);
        }
    }
    return std::clamp(result, 0.0, 1.0);
}

double binomial_tail_reference(const ModelSpec& spec) {
    spec.validate();
    if (spec.contagion != 0.0 || !spec.homogeneous()) {
        throw ConfigError("binomial reference requires b = 0 and equal group rates");
    }
    const int n = spec.population;
    const int k = spec.hitting_count();
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    const double p = -std::expm1(-spec.rates.front() * spec.horizon);
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    std::vector<double> terms;
    for (int i = k; i <= n; ++i) {
        terms.push_back(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                        i * log_p + (n - i) * log_q);
    }
    const double top = *std::max_element(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - top);
    return std::exp(top + std::log(sum));
}

}  // namespace rareis
