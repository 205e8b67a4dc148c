#pragma once

// Markovian birth model with contagion: d groups of obligors, group j holding
// a fraction w_j of the population, defaulting with scaled intensity
//
//     lambda_j(x) = a_j (w_j - x_j) exp(b * sum_i x_i),   x in prod_j [0, w_j].
//
// Everything here works with scaled quantities; the factor n is applied only
// by the sampler and the exact oracle.

#include <cstddef>
#include <span>
#include <vector>

namespace rareis {

struct ModelSpec {
    std::vector<double> weights;  // w_j > 0, summing to one
    std::vector<double> rates;    // a_j >= 0, at least one positive
    double contagion = 0.0;       // b >= 0
    int population = 1;           // n
    double horizon = 1.0;         // T
    double threshold = 0.5;       // z in (0, 1)

    [[nodiscard]] std::size_t groups() const { return weights.size(); }

    /// Throws ConfigError describing the first violated invariant.
    void validate() const;

    /// All a_j equal (always true for d = 1).
    [[nodiscard]] bool homogeneous() const;
    [[nodiscard]] double max_rate() const;

    /// Obligors per group, round(n w_j). When n w_j is not integral the
    /// nearest integer is used.
    [[nodiscard]] std::vector<int> group_sizes() const;

    /// Smallest integer k with k >= n z; the target is hit once the total
    /// default count reaches it.
    [[nodiscard]] int hitting_count() const;
};

/// Convenience constructor for the one-group model (w = 1).
[[nodiscard]] ModelSpec one_group_model(double rate, double contagion, int population,
                                        double horizon, double threshold);

struct LatticeState {
    std::vector<int> counts;  // defaults per group
    double clock = 0.0;

    [[nodiscard]] int total() const;
};

using IntensityVector = std::vector<double>;

/// Relative slack allowed when checking x against the box, absorbing lattice
/// rounding of k / n.
inline constexpr double kStateTolerance = 1e-12;

[[nodiscard]] IntensityVector intensity(const ModelSpec& spec, std::span<const double> x);
void intensity_into(const ModelSpec& spec, std::span<const double> x, std::span<double> out);

/// Intensities at lattice point counts / n. Exhausted groups (k_j at the
/// group size) emit nothing even if round(n w_j) differs from n w_j.
void lattice_intensity(const ModelSpec& spec, std::span<const int> counts, std::span<double> out);

[[nodiscard]] double total_intensity(const ModelSpec& spec, std::span<const double> x);

/// H(x, alpha) = sum_j lambda_j(x) (exp(alpha_j) - 1).
[[nodiscard]] double hamiltonian(const ModelSpec& spec, std::span<const double> x,
                                 std::span<const double> alpha);

/// Convex conjugate of H in alpha:
///     L(x, beta) = sum_j beta_j log(beta_j / lambda_j) - beta_j + lambda_j
/// with 0 log 0 = 0. Returns +infinity when beta_j > 0 on an extinct group.
[[nodiscard]] double local_rate(const ModelSpec& spec, std::span<const double> x,
                                std::span<const double> beta);

/// Intensity of the collapsed one-dimensional model, a (1 - s) exp(b s),
/// where s is the total default fraction.
[[nodiscard]] double collapsed_intensity(double rate, double contagion, double s);

/// Mane critical value c_H = -inf { sum_j lambda_j(x) : x in box, sum_j x_j < z }.
[[nodiscard]] double mane_critical_value(const ModelSpec& spec);

[[nodiscard]] bool target_hit(const ModelSpec& spec, const LatticeState& state);

[[nodiscard]] std::vector<double> scaled_state(const ModelSpec& spec, const LatticeState& state);

}  // namespace rareis
