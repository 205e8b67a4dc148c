#pragma once

// Exact transient analysis of the default-count chain for small populations.

#include "rareis/model.hpp"

#include <cstddef>
#include <vector>

namespace rareis {

inline constexpr std::size_t kOracleStateCap = 100000;

/// Count vectors with total below the hitting count, plus one absorbing
/// super-state collecting everything at or above it.
class TruncatedChain {
public:
    explicit TruncatedChain(const ModelSpec& spec);

    [[nodiscard]] std::size_t transient_states() const { return states_.size(); }
    /// Index of the absorbing hit state (== transient_states()).
    [[nodiscard]] std::size_t hit_state() const { return states_.size(); }
    [[nodiscard]] const std::vector<int>& counts(std::size_t state) const { return states_[state]; }
    [[nodiscard]] std::size_t groups() const { return groups_; }

    /// Unscaled rate n lambda_j out of `state` in direction j.
    [[nodiscard]] double rate(std::size_t state, std::size_t j) const {
        return rates_[state * groups_ + j];
    }
    /// Destination of the jump in direction j (hit_state() when it reaches the
    /// target); meaningless when rate(state, j) == 0.
    [[nodiscard]] std::size_t successor(std::size_t state, std::size_t j) const {
        return successors_[state * groups_ + j];
    }
    [[nodiscard]] double exit_rate(std::size_t state) const;
    [[nodiscard]] double max_exit_rate() const;

    /// Dense generator row over all transient_states() + 1 states.
    [[nodiscard]] std::vector<double> generator_row(std::size_t state) const;

private:
    std::size_t groups_ = 0;
    std::vector<std::vector<int>> states_;
    std::vector<double> rates_;
    std::vector<std::size_t> successors_;
};

/// P(total defaults reach n z by time T), by uniformization with the Poisson
/// tail truncated below 1e-12. Throws NumericalError when the chain has more
/// than kOracleStateCap transient states.
[[nodiscard]] double exact_hit_probability(const ModelSpec& spec);

/// Independent-obligor closed form P(Bin(n, 1 - e^{-aT}) >= hitting count),
/// summed in log space. Requires b = 0 and equal rates.
[[nodiscard]] double binomial_tail_reference(const ModelSpec& spec);

}  // namespace rareis
