#pragma once

// Sampling controls built from subsolutions of the Hamilton-Jacobi equation
//
//     W_t - 2 H(x, -DW / 2) = 0  on [0, T) x (box \ D_z),   W(T, x) = 0 on D_z.
//
// Every importance sampling variant here uses a tilt that is the same in all
// directions and depends on x only through the collapsed intensity
//
//     alpha_j(x; c) = log(1 + c / D(x)),
//
// with D(x) = lambda(x) for one group, D(x) = sum_i lambda_i(x) for equal
// rates and D(x) = a* sum_i (w_i - x_i) e^{b sum x} with a* = max_j a_j for the
// majorant policy. The matching subsolution is
//
//     W(t, x) = 2 A(z; c) - 2 A(sum_i x_i; c) - 2 c (T - t),
//     A(s; c) = int_0^s log(1 + c / lambda*(y)) dy,  lambda*(y) = a*(1 - y) e^{by}.

#include "rareis/model.hpp"
#include "rareis/numerics.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rareis {

enum class PolicyVariant { none, optimal_1d, homogeneous, a_star_majorant };

[[nodiscard]] std::string_view variant_name(PolicyVariant variant);

/// Rate a* of the collapsed one-dimensional intensity (max_j a_j, which is the
/// common rate whenever the groups are homogeneous).
[[nodiscard]] double collapsed_rate(const ModelSpec& spec);

/// -min_{y in [0, z]} lambda*(y): energy levels must lie strictly above this.
[[nodiscard]] double energy_floor(const ModelSpec& spec);

/// Time for the tilted mean path to reach sum(x) = z. With equal rates this is
/// int_0^z dy / (lambda*(y) + c). Otherwise the path x_j = w_j (1 - e^{-a_j u})
/// is followed in its own clock u, giving
/// int_0^{u_z} a* (1 - s(u)) / (lambda*(s(u)) + c) du.
[[nodiscard]] double travel_time(const ModelSpec& spec, double c,
                                 const QuadratureSettings& quad = {});

/// Energy level c* solving travel_time(c*) = T. The travel time decreases
/// strictly in c, from +infinity at the floor to 0, so the root is unique.
/// Throws NumericalError if no bracket can be established.
[[nodiscard]] double solve_energy_level(const ModelSpec& spec, const QuadratureSettings& quad = {});

/// Mane potential from the origin, A(s; c) = int_0^s log(1 + c / lambda*(y)) dy,
/// for s in [0, 1). Throws DomainError when 1 + c / lambda* is not positive on
/// [0, s].
[[nodiscard]] double mane_potential_1d(const ModelSpec& spec, double s, double c,
                                       const QuadratureSettings& quad = {});

/// Initial value 2 A(z; c) - 2 c T of the subsolution at energy level c.
[[nodiscard]] double subsolution_initial_value(const ModelSpec& spec, double c,
                                               const QuadratureSettings& quad = {});

/// Large-deviation rate U(0, 0) = A(z; c*) - c* T, or 0 when c* <= 0.
/// Requires equal rates.
[[nodiscard]] double rate_U0(const ModelSpec& spec, const QuadratureSettings& quad = {});

class ControlPolicy {
public:
    [[nodiscard]] PolicyVariant variant() const { return variant_; }
    [[nodiscard]] const ModelSpec& spec() const { return spec_; }
    [[nodiscard]] double energy_level() const { return energy_; }
    /// W(0, 0).
    [[nodiscard]] double initial_value() const { return initial_value_; }
    /// Whether the construction is a classical subsolution. False only for a
    /// supplied negative energy level.
    [[nodiscard]] bool is_subsolution() const { return subsolution_; }

    /// Common tilt alpha(x; c), identical in every direction (0 for plain MC).
    [[nodiscard]] double scalar_tilt(std::span<const double> x) const;
    [[nodiscard]] std::vector<double> tilt(std::span<const double> x) const;
    /// lambda_j(x) exp(alpha_j(x; c)).
    [[nodiscard]] std::vector<double> tilted_intensity(std::span<const double> x) const;
    /// A(sum_i x_i; c).
    [[nodiscard]] double potential(std::span<const double> x) const;
    /// W(t, x).
    [[nodiscard]] double subsolution(double t, std::span<const double> x) const;

private:
    friend ControlPolicy build_policy(const ModelSpec&, PolicyVariant, std::optional<double>,
                                      const QuadratureSettings&);

    [[nodiscard]] double tilt_denominator(std::span<const double> x) const;

    ModelSpec spec_;
    PolicyVariant variant_ = PolicyVariant::none;
    double energy_ = 0.0;
    double initial_value_ = 0.0;
    double target_potential_ = 0.0;  // A(z; c)
    double star_rate_ = 0.0;
    bool subsolution_ = true;
    QuadratureSettings quad_;
};

/// Builds the policy for a variant. When c is absent the energy level is
/// solved from the travel-time equation and clamped at 0. Throws ConfigError when the variant
/// does not fit the model (one-group policy with d > 1, equal-rate policy with
/// unequal rates) or c is not admissible.
[[nodiscard]] ControlPolicy build_policy(const ModelSpec& spec, PolicyVariant variant,
                                         std::optional<double> c = std::nullopt,
                                         const QuadratureSettings& quad = {});

struct SubsolutionReport {
    double min_residual = 0.0;   // min of 2c - 2H(x, alpha(x; c)) off the target
    double max_terminal = 0.0;   // max of W(T, x) on the target
    double max_energy_gap = 0.0; // max |H(x, alpha(x; c)) - c| off the target
    int interior_points = 0;
    int terminal_points = 0;
    bool passed = false;
};

/// Evaluates both subsolution conditions on a tensor grid of the box with
/// grid_per_axis points per axis. Points with sum x >= 1 are skipped in the
/// terminal check (the collapsed potential is defined on [0, 1)).
[[nodiscard]] SubsolutionReport verify_subsolution(const ControlPolicy& policy,
                                                   const ModelSpec& spec, int grid_per_axis);

enum class TiltField {
    equal_split,  // alpha_j = log(1 + c / sum_i lambda_i(x))
    a_star,       // alpha_j = log(1 + c / (a* sum_i (w_i - x_i) e^{b sum x}))
};

struct CurlReport {
    double max_abs_curl = 0.0;
    int points = 0;
    bool conservative = false;  // max |curl| <= 1e-6
};

/// Scalar curl d alpha_1 / d x_2 - d alpha_2 / d x_1 of a two-group tilt field,
/// by central differences with step 1e-5 times the axis length, over the
/// interior points of a grid_per_axis^2 grid.
[[nodiscard]] CurlReport conservativity_check(const ModelSpec& spec, double c, int grid_per_axis,
                                              TiltField field = TiltField::equal_split);

struct SaddleReport {
    double saddle_value = 0.0;      // inner objective at the claimed saddle
    double target = 0.0;            // -2 H(x, -alpha / 2)
    double min_inner_change = 0.0;  // min over perturbations of the minimizing argument
    double max_outer_change = 0.0;  // max over perturbations of the maximizing argument
    bool passed = false;
};

/// Checks the saddle point of the Isaacs Hamiltonian
///     sup_{lbar} inf_{lhat} sum_j 2 l_j l(lhat_j / l_j) - lbar_j l(lhat_j / lbar_j) + lhat_j alpha_j,
/// with l(u) = u log u - u + 1, at lbar = lhat = lambda e^{-alpha / 2}.
[[nodiscard]] SaddleReport saddle_identity_check(const ModelSpec& spec, std::span<const double> x,
                                                 std::span<const double> alpha);

}  // namespace rareis
