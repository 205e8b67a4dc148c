#include "rareis/control.hpp"

#include "rareis/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace rareis {

namespace {

// a* e^{b s} sum_j (w_j - x_j), without allocating.
double collapsed_total(const ModelSpec& spec, double star_rate, std::span<const double> x) {
    double s = 0.0;
    double remaining = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double w = spec.weights[j];
        if (!(x[j] >= -kStateTolerance && x[j] <= w + kStateTolerance)) {
            throw DomainError("state component x[" + std::to_string(j) + "] = " +
                              std::to_string(x[j]) + " outside [0, " + std::to_string(w) + "]");
        }
        const double v = std::clamp(x[j], 0.0, w);
        s += v;
        remaining += w - v;
    }
    return star_rate * remaining * std::exp(spec.contagion * s);
}

double tilt_from(double c, double denominator) {
    if (c == 0.0 || denominator <= 0.0) return 0.0;
    const double ratio = c / denominator;
    if (!(ratio > -1.0)) {
        throw DomainError("energy level " + std::to_string(c) +
                          " is below the admissible range at this state");
    }
    return std::log1p(ratio);
}

// l(u) = u log u - u + 1 with l(0) = 1.
double relative_entropy_kernel(double u) {
    if (u == 0.0) return 1.0;
    return u * std::log(u) - u + 1.0;
}

template <typename Visit>
void for_each_grid_point(const ModelSpec& spec, int per_axis, Visit&& visit) {
    const std::size_t d = spec.groups();
    std::vector<int> index(d, 0);
    std::vector<double> x(d, 0.0);
    while (true) {
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = spec.weights[j] * index[j] / (per_axis - 1);
        }
        visit(std::span<const double>(x));
        std::size_t j = 0;
        while (j < d && ++index[j] == per_axis) {
            index[j] = 0;
            ++j;
        }
        if (j == d) break;
    }
}

}  // namespace

std::string_view variant_name(PolicyVariant variant) {
    switch (variant) {
        case PolicyVariant::none: return "none";
        case PolicyVariant::optimal_1d: return "optimal-1d";
        case PolicyVariant::homogeneous: return "homogeneous";
        case PolicyVariant::a_star_majorant: return "a-star-majorant";
    }
    return "unknown";
}

double collapsed_rate(const ModelSpec& spec) { return spec.max_rate(); }

double energy_floor(const ModelSpec& spec) {
    const double a = collapsed_rate(spec);
    return -std::min(collapsed_intensity(a, spec.contagion, 0.0),
                     collapsed_intensity(a, spec.contagion, spec.threshold));
}

namespace {

// Fraction defaulted along the tilted mean path, as a function of the
// intrinsic clock sigma: x_j = w_j (1 - e^{-a_j sigma}).
double path_fraction(const ModelSpec& spec, double sigma) {
    double s = 0.0;
    for (std::size_t j = 0; j < spec.groups(); ++j) {
        s -= spec.weights[j] * std::expm1(-spec.rates[j] * sigma);
    }
    return s;
}

double path_clock_at_threshold(const ModelSpec& spec) {
    double reachable = 0.0;
    for (std::size_t j = 0; j < spec.groups(); ++j) {
        if (spec.rates[j] > 0.0) reachable += spec.weights[j];
    }
    const double z = spec.threshold;
    if (!(z < reachable)) {
        throw DomainError("threshold " + std::to_string(z) +
                          " is not reachable by groups with positive rate");
    }
    auto gap = [&](double sigma) { return path_fraction(spec, sigma) - z; };
    double hi = 1.0;
    while (gap(hi) < 0.0) hi *= 2.0;
    return bracketed_root(gap, 0.0, hi);
}

}  // namespace

double travel_time(const ModelSpec& spec, double c, const QuadratureSettings& quad) {
    if (!(c > energy_floor(spec))) {
        throw DomainError("energy level " + std::to_string(c) + " is not above the floor " +
                          std::to_string(energy_floor(spec)));
    }
    const double a = collapsed_rate(spec);
    const double b = spec.contagion;
    if (spec.homogeneous()) {
        return integrate([&](double y) { return 1.0 / (collapsed_intensity(a, b, y) + c); }, 0.0,
                         spec.threshold, quad)
            .value;
    }
    // Unequal rates: the tilted mean path moves in direction lambda / sum(lambda)
    // whatever c is, and advances sum(x) at speed sum(lambda) (1 + c / lambda*).
    const double sigma_z = path_clock_at_threshold(spec);
    return integrate(
               [&](double sigma) {
                   const double s = path_fraction(spec, sigma);
                   return a * (1.0 - s) / (collapsed_intensity(a, b, s) + c);
               },
               0.0, sigma_z, quad)
        .value;
}

double solve_energy_level(const ModelSpec& spec, const QuadratureSettings& quad) {
    spec.validate();
    const double T = spec.horizon;
    auto excess = [&](double c) { return travel_time(spec, c, quad) - T; };

    constexpr int kMaxExpansions = 200;
    double lo = 0.0;
    double hi = 0.0;
    const double at_zero = excess(0.0);
    if (at_zero == 0.0) return 0.0;
    if (at_zero > 0.0) {
        hi = 1.0;
        int i = 0;
        for (; i < kMaxExpansions && excess(hi) > 0.0; ++i) {
            lo = hi;
            hi *= 2.0;
        }
        if (i == kMaxExpansions) {
            throw NumericalError("no admissible energy level: travel time exceeds T on [" +
                                 std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
    } else {
        // Travel time diverges at the floor, so halving the gap eventually
        // overshoots T.
        const double floor = energy_floor(spec);
        double gap = -floor;
        hi = 0.0;
        lo = floor + gap;
        int i = 0;
        for (; i < kMaxExpansions && excess(lo) < 0.0; ++i) {
            hi = lo;
            gap *= 0.5;
            lo = floor + gap;
            if (!(lo > floor)) break;
        }
        if (i == kMaxExpansions || !(lo > floor)) {
            throw NumericalError("no admissible energy level: travel time below T on [" +
                                 std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
    }
    return bracketed_root(excess, lo, hi);
}

double mane_potential_1d(const ModelSpec& spec, double s, double c, const QuadratureSettings& quad) {
    if (!(s >= 0.0 && s < 1.0)) {
        throw DomainError("potential argument " + std::to_string(s) + " outside [0, 1)");
    }
    if (s == 0.0 || c == 0.0) return 0.0;
    const double a = collapsed_rate(spec);
    const double b = spec.contagion;
    const double lowest = std::min(collapsed_intensity(a, b, 0.0), collapsed_intensity(a, b, s));
    if (!(c + lowest > 0.0)) {
        throw DomainError("energy level " + std::to_string(c) +
                          " makes log(1 + c / lambda) singular on [0, " + std::to_string(s) + "]");
    }
    return integrate([&](double y) { return std::log1p(c / collapsed_intensity(a, b, y)); }, 0.0, s,
                     quad)
        .value;
}

double subsolution_initial_value(const ModelSpec& spec, double c, const QuadratureSettings& quad) {
    return 2.0 * mane_potential_1d(spec, spec.threshold, c, quad) - 2.0 * c * spec.horizon;
}

double rate_U0(const ModelSpec& spec, const QuadratureSettings& quad) {
    spec.validate();
    if (!spec.homogeneous()) {
        throw ConfigError("the large-deviation rate is only available for equal group rates");
    }
    const double c = solve_energy_level(spec, quad);
    // The cost of reaching z by time t falls while the matching energy level is
    // positive. A nonpositive c* means z is reached faster than T typically.
    if (c <= 0.0) return 0.0;
    return mane_potential_1d(spec, spec.threshold, c, quad) - c * spec.horizon;
}

double ControlPolicy::tilt_denominator(std::span<const double> x) const {
    return collapsed_total(spec_, star_rate_, x);
}

double ControlPolicy::scalar_tilt(std::span<const double> x) const {
    if (variant_ == PolicyVariant::none) return 0.0;
    if (x.size() != spec_.groups()) throw DomainError("state dimension does not match the model");
    return tilt_from(energy_, tilt_denominator(x));
}

std::vector<double> ControlPolicy::tilt(std::span<const double> x) const {
    return std::vector<double>(spec_.groups(), scalar_tilt(x));
}

std::vector<double> ControlPolicy::tilted_intensity(std::span<const double> x) const {
    auto rates = intensity(spec_, x);
    const double factor = std::exp(scalar_tilt(x));
    for (double& r : rates) r *= factor;
    return rates;
}

double ControlPolicy::potential(std::span<const double> x) const {
    if (variant_ == PolicyVariant::none) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return mane_potential_1d(spec_, std::max(s, 0.0), energy_, quad_);
}

double ControlPolicy::subsolution(double t, std::span<const double> x) const {
    if (variant_ == PolicyVariant::none) return 0.0;
    return 2.0 * target_potential_ - 2.0 * potential(x) - 2.0 * energy_ * (spec_.horizon - t);
}

ControlPolicy build_policy(const ModelSpec& spec, PolicyVariant variant, std::optional<double> c,
                           const QuadratureSettings& quad) {
    spec.validate();
    ControlPolicy policy;
    policy.spec_ = spec;
    policy.variant_ = variant;
    policy.quad_ = quad;
    policy.star_rate_ = collapsed_rate(spec);
    if (variant == PolicyVariant::none) return policy;

    if (variant == PolicyVariant::optimal_1d && spec.groups() != 1) {
        throw ConfigError("optimal-1d policy requires a single group, model has " +
                          std::to_string(spec.groups()));
    }
    if (variant == PolicyVariant::homogeneous && !spec.homogeneous()) {
        throw ConfigError("homogeneous policy requires equal group rates a_j");
    }
    if (c) {
        if (variant == PolicyVariant::a_star_majorant && !(*c > 0.0)) {
            throw ConfigError("a-star-majorant policy requires a positive energy level, got " +
                              std::to_string(*c));
        }
        if (!(*c > energy_floor(spec))) {
            throw ConfigError("energy level " + std::to_string(*c) +
                              " is not above the critical value " +
                              std::to_string(energy_floor(spec)));
        }
        policy.energy_ = *c;
    } else {
        // A threshold reached faster than T needs no tilt.
        policy.energy_ = std::max(solve_energy_level(spec, quad), 0.0);
    }
    // Below zero the terminal values -2c(T - t) are positive.
    policy.subsolution_ = policy.energy_ >= 0.0;
    policy.target_potential_ = mane_potential_1d(spec, spec.threshold, policy.energy_, quad);
    policy.initial_value_ = 2.0 * policy.target_potential_ - 2.0 * policy.energy_ * spec.horizon;
    return policy;
}

SubsolutionReport verify_subsolution(const ControlPolicy& policy, const ModelSpec& spec,
                                     int grid_per_axis) {
    if (grid_per_axis < 2) throw ConfigError("grid_per_axis must be at least 2");
    SubsolutionReport report;
    report.min_residual = std::numeric_limits<double>::infinity();
    report.max_terminal = -std::numeric_limits<double>::infinity();
    const double c = policy.energy_level();
    const double T = spec.horizon;

    for_each_grid_point(spec, grid_per_axis, [&](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v;
        if (s < spec.threshold) {
            const auto alpha = policy.tilt(x);
            const double h = hamiltonian(spec, x, alpha);
            report.min_residual = std::min(report.min_residual, 2.0 * c - 2.0 * h);
            report.max_energy_gap = std::max(report.max_energy_gap, std::abs(h - c));
            ++report.interior_points;
        } else if (s < 1.0 - 1e-12) {
            double terminal = std::numeric_limits<double>::infinity();
            try {
                terminal = policy.subsolution(T, x);
            } catch (const DomainError&) {
                // potential undefined at this level: the terminal condition fails
            }
            report.max_terminal = std::max(report.max_terminal, terminal);
            ++report.terminal_points;
        }
    });
    if (report.terminal_points == 0) report.max_terminal = 0.0;
    report.passed = report.min_residual >= -1e-9 && report.max_terminal <= 1e-9;
    return report;
}

CurlReport conservativity_check(const ModelSpec& spec, double c, int grid_per_axis,
                                TiltField field) {
    spec.validate();
    if (spec.groups() != 2) throw ConfigError("conservativity check needs exactly two groups");
    if (grid_per_axis < 3) throw ConfigError("grid_per_axis must be at least 3");

    const double star = collapsed_rate(spec);
    auto alpha = [&](double x1, double x2) {
        const std::array<double, 2> x{x1, x2};
        const double denominator = field == TiltField::equal_split
                                       ? total_intensity(spec, x)
                                       : collapsed_total(spec, star, x);
        return tilt_from(c, denominator);
    };

    CurlReport report;
    // One step for both axes, so a field depending on x1 + x2 only is sampled
    // at matching offsets.
    const double h = 1e-5 * std::min(spec.weights[0], spec.weights[1]);
    for (int i = 1; i + 1 < grid_per_axis; ++i) {
        for (int k = 1; k + 1 < grid_per_axis; ++k) {
            const double x1 = spec.weights[0] * i / (grid_per_axis - 1);
            const double x2 = spec.weights[1] * k / (grid_per_axis - 1);
            double curl = 0.0;
            try {
                // Both components of the field coincide, so d alpha_1/d x_2 and
                // d alpha_2/d x_1 are derivatives of the same function.
                const double d1_dx2 = (alpha(x1, x2 + h) - alpha(x1, x2 - h)) / (2.0 * h);
                const double d2_dx1 = (alpha(x1 + h, x2) - alpha(x1 - h, x2)) / (2.0 * h);
                curl = d1_dx2 - d2_dx1;
            } catch (const DomainError&) {
                continue;
            }
            report.max_abs_curl = std::max(report.max_abs_curl, std::abs(curl));
            ++report.points;
        }
    }
    report.conservative = report.max_abs_curl <= 1e-6;
    return report;
}

SaddleReport saddle_identity_check(const ModelSpec& spec, std::span<const double> x,
                                   std::span<const double> alpha) {
    const auto lambda = intensity(spec, x);
    const std::size_t d = lambda.size();
    if (alpha.size() != d) throw DomainError("alpha dimension does not match the model");
    for (std::size_t j = 0; j < d; ++j) {
        if (!(lambda[j] > 0.0)) throw DomainError("saddle check needs an interior state");
        if (!std::isfinite(alpha[j])) throw DomainError("alpha must be finite");
    }

    auto objective = [&](std::span<const double> lbar, std::span<const double> lhat) {
        double v = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            v += 2.0 * lambda[j] * relative_entropy_kernel(lhat[j] / lambda[j]) -
                 lbar[j] * relative_entropy_kernel(lhat[j] / lbar[j]) + lhat[j] * alpha[j];
        }
        return v;
    };

    std::vector<double> saddle(d);
    std::vector<double> half(d);
    for (std::size_t j = 0; j < d; ++j) {
        saddle[j] = lambda[j] * std::exp(-0.5 * alpha[j]);
        half[j] = -0.5 * alpha[j];
    }

    SaddleReport report;
    report.saddle_value = objective(saddle, saddle);
    report.target = -2.0 * hamiltonian(spec, x, half);
    report.min_inner_change = std::numeric_limits<double>::infinity();
    report.max_outer_change = -std::numeric_limits<double>::infinity();

    constexpr std::array<double, 6> kFactors{0.9, 0.99, 0.999, 1.001, 1.01, 1.1};
    std::vector<double> moved = saddle;
    for (std::size_t j = 0; j < d; ++j) {
        for (double f : kFactors) {
            moved[j] = saddle[j] * f;
            report.min_inner_change =
                std::min(report.min_inner_change, objective(saddle, moved) - report.saddle_value);
            report.max_outer_change =
                std::max(report.max_outer_change, objective(moved, saddle) - report.saddle_value);
            moved[j] = saddle[j];
        }
    }
    const double scale = 1e-14 * (1.0 + std::abs(report.saddle_value));
    report.passed = std::abs(report.saddle_value - report.target) <= 1e-8 &&
                    report.min_inner_change >= -scale && report.max_outer_change <= scale;
    return report;
}

}  // namespace rareis
