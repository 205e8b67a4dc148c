#include "rareis/control.hpp"
#include "rareis/error.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

using namespace rareis;

namespace {

// Closed forms for b = 0, lambda(y) = a (1 - y):
//   int_0^z dy / (a(1-y) + c) = log((a + c) / (a(1-z) + c)) / a
//   int_0^x log(1 + c / (a(1-y))) dy = (F(a+c) - F(a(1-x)+c) - F(a) + F(a(1-x))) / a,
// with F(v) = v log v - v.
double closed_energy_level(double a, double T, double z) {
    const double g = std::exp(a * T);
    return a * (1.0 - (1.0 - z) * g) / (g - 1.0);
}

double closed_potential(double a, double x, double c) {
    auto F = [](double v) { return v * std::log(v) - v; };
    return (F(a + c) - F(a * (1.0 - x) + c) - F(a) + F(a * (1.0 - x))) / a;
}

double grid_max(const ModelSpec& spec, double c, int points) {
    // Analytic curl of alpha = log(1 + c / S), S = sum lambda:
    //   -c e^{bs} (a_1 - a_2) / (S^2 + c S).
    double best = 0.0;
    for (int i = 1; i + 1 < points; ++i) {
        for (int k = 1; k + 1 < points; ++k) {
            const std::array<double, 2> x{spec.weights[0] * i / (points - 1),
                                          spec.weights[1] * k / (points - 1)};
            const double S = total_intensity(spec, x);
            const double curl = -c * std::exp(spec.contagion * (x[0] + x[1])) *
                                (spec.rates[0] - spec.rates[1]) / (S * S + c * S);
            best = std::max(best, std::abs(curl));
        }
    }
    return best;
}

}  // namespace

TEST_CASE("energy level matches the closed form when b = 0") {
    const auto spec = one_group_model(0.01, 0.0, 125, 5.0, 0.1);
    const double c = solve_energy_level(spec);
    CHECK(c == doctest::Approx(1.0504e-2).epsilon(1e-4));
    CHECK(std::abs(c - closed_energy_level(0.01, 5.0, 0.1)) <= 1e-12);
    for (double z : {0.02, 0.25, 0.4, 0.7}) {
        const auto s = one_group_model(0.01, 0.0, 125, 5.0, z);
        CHECK(std::abs(solve_energy_level(s) - closed_energy_level(0.01, 5.0, z)) <= 1e-12);
    }
}

TEST_CASE("energy level root residual") {
    for (double b : {0.0, 2.0, 5.0, 13.0}) {
        for (double z : {0.005, 0.05, 0.1, 0.2, 0.4, 0.6}) {
            const auto spec = one_group_model(0.01, b, 125, 5.0, z);
            const double c = solve_energy_level(spec);
            CHECK(c > energy_floor(spec));
            CHECK(std::abs(travel_time(spec, c) - spec.horizon) <= 1e-10);
        }
    }
    for (double z : {0.1, 0.2, 0.4}) {
        const ModelSpec inhom{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, z};
        const double c = solve_energy_level(inhom);
        CHECK(std::abs(travel_time(inhom, c) - 5.0) <= 1e-10);
    }
}

TEST_CASE("travel time decreases strictly in the energy level") {
    const auto spec = one_group_model(0.01, 5.0, 125, 5.0, 0.3);
    double previous = std::numeric_limits<double>::infinity();
    for (double c = energy_floor(spec) + 1e-4; c < 0.2; c += 0.005) {
        const double t = travel_time(spec, c);
        CHECK(t < previous);
        previous = t;
    }
}

TEST_CASE("mane potential") {
    const auto spec = one_group_model(0.01, 0.0, 125, 5.0, 0.4);
    CHECK(mane_potential_1d(spec, 0.0, 0.03) == 0.0);
    CHECK(mane_potential_1d(spec, 0.3, 0.0) == 0.0);
    for (double c : {-0.005, 0.001, 0.0105, 0.07, 1.0}) {
        for (double x : {0.05, 0.1, 0.25, 0.4, 0.9}) {
            if (c + 0.01 * (1.0 - x) <= 0.0) continue;
            CHECK(std::abs(mane_potential_1d(spec, x, c) - closed_potential(0.01, x, c)) <= 1e-10);
        }
    }
    double previous = 0.0;
    for (double x = 0.05; x < 0.95; x += 0.05) {
        const double a = mane_potential_1d(spec, x, 0.02);
        CHECK(a > previous);
        previous = a;
    }
    CHECK_THROWS_AS((void)mane_potential_1d(spec, 0.5, -0.006), DomainError);
    CHECK_THROWS_AS((void)mane_potential_1d(spec, 1.0, 0.01), DomainError);
}

TEST_CASE("large deviation rate") {
    const auto t1 = one_group_model(0.01, 0.0, 125, 5.0, 0.1);
    const double u0 = rate_U0(t1);
    const double c = closed_energy_level(0.01, 5.0, 0.1);
    const double independent = closed_potential(0.01, 0.1, c) - c * 5.0;
    CHECK(std::abs(u0 - independent) <= 1e-12);
    CHECK(u0 >= 0.0);
    const double ratio = std::exp(-125.0 * u0) / 8.238e-3;
    CHECK(ratio < 10.0);
    CHECK(ratio > 0.1);

    CHECK(rate_U0(one_group_model(0.01, 0.0, 125, 5.0, 1e-4)) == 0.0);
    CHECK(rate_U0(one_group_model(0.01, 0.0, 125, 5.0, 0.049)) < 1e-6);
    CHECK(rate_U0(one_group_model(0.01, 0.0, 125, 5.0, 0.048)) == 0.0);
    for (double z : {0.05, 0.1, 0.2, 0.3}) {
        CHECK(rate_U0(one_group_model(0.01, 5.0, 125, 5.0, z)) >= 0.0);
    }
    CHECK_THROWS_AS((void)rate_U0(ModelSpec{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.2}),
                    ConfigError);
}

TEST_CASE("policy construction") {
    const ModelSpec hom{{0.5, 0.5}, {0.02, 0.02}, 3.0, 50, 5.0, 0.3};
    const auto policy = build_policy(hom, PolicyVariant::homogeneous);
    const double c = policy.energy_level();
    CHECK(c == doctest::Approx(solve_energy_level(hom)).epsilon(1e-15));
    const std::array<double, 2> x{0.1, 0.05};
    const auto lambda = intensity(hom, x);
    const auto tilted = policy.tilted_intensity(x);
    const double sum = lambda[0] + lambda[1];
    for (int j = 0; j < 2; ++j) {
        CHECK(tilted[j] == doctest::Approx(lambda[j] * (1.0 + c / sum)).epsilon(1e-13));
    }

    const auto plain = build_policy(hom, PolicyVariant::none);
    CHECK(plain.tilted_intensity(x) == lambda);
    CHECK(plain.initial_value() == 0.0);
    CHECK(plain.tilt(x) == std::vector<double>{0.0, 0.0});

    // W(0,0) = 2 U(0,0) for the optimal one-group policy, against closed forms.
    for (double z : {0.1, 0.2, 0.4}) {
        const auto t1 = one_group_model(0.01, 0.0, 125, 5.0, z);
        const double cz = closed_energy_level(0.01, 5.0, z);
        const double u0 = closed_potential(0.01, z, cz) - cz * 5.0;
        CHECK(std::abs(build_policy(t1, PolicyVariant::optimal_1d).initial_value() - 2.0 * u0) <=
              1e-9);
    }

    const ModelSpec inhom{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.2};
    CHECK_THROWS_AS((void)build_policy(inhom, PolicyVariant::optimal_1d), ConfigError);
    CHECK_THROWS_AS((void)build_policy(inhom, PolicyVariant::homogeneous), ConfigError);
    CHECK_THROWS_AS((void)build_policy(inhom, PolicyVariant::a_star_majorant, -0.01), ConfigError);
    CHECK_THROWS_AS((void)build_policy(inhom, PolicyVariant::a_star_majorant, 0.0), ConfigError);
    CHECK_THROWS_AS(
        (void)build_policy(one_group_model(0.01, 0.0, 125, 5.0, 0.1), PolicyVariant::optimal_1d, -0.5),
        ConfigError);
    CHECK(build_policy(inhom, PolicyVariant::a_star_majorant, 0.02).energy_level() == 0.02);
}

TEST_CASE("solved energy levels below zero fall back to the untilted policy") {
    const ModelSpec typical{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.1};
    CHECK(solve_energy_level(typical) < 0.0);
    const auto policy = build_policy(typical, PolicyVariant::a_star_majorant);
    CHECK(policy.energy_level() == 0.0);
    CHECK(policy.is_subsolution());
    CHECK(policy.initial_value() == 0.0);
    CHECK(verify_subsolution(policy, typical, 21).passed);

    const auto one = one_group_model(0.01, 0.0, 125, 5.0, 0.1);
    const auto slowed = build_policy(one, PolicyVariant::optimal_1d, -0.002);
    CHECK_FALSE(slowed.is_subsolution());
    CHECK_FALSE(verify_subsolution(slowed, one, 101).passed);
}

TEST_CASE("unequal rates: travel time follows the tilted mean path") {
    // Reference values from an ODE integration of dx/dt = lambda(x)(1 + c / lambda*(sum x)).
    const ModelSpec spec{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.2};
    CHECK(travel_time(spec, 0.0) == doctest::Approx(8.297118959278693).epsilon(1e-7));
    CHECK(solve_energy_level(spec) == doctest::Approx(0.046722203846383106).epsilon(1e-6));
    const ModelSpec far{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.4};
    CHECK(solve_energy_level(far) == doctest::Approx(0.15361684939597023).epsilon(1e-6));
    const ModelSpec stuck{{0.8, 0.2}, {0.0, 0.05}, 5.0, 125, 5.0, 0.3};
    CHECK_THROWS_AS((void)travel_time(stuck, 0.1), DomainError);
}

TEST_CASE("energy identity and subsolution conditions on grids") {
    const auto one = one_group_model(0.01, 5.0, 125, 5.0, 0.3);
    const auto p1 = build_policy(one, PolicyVariant::optimal_1d);
    const auto r1 = verify_subsolution(p1, one, 1000);
    CHECK(r1.interior_points > 0);
    CHECK(r1.terminal_points > 0);
    CHECK(r1.max_energy_gap <= 1e-10);
    CHECK(r1.min_residual >= -1e-10);
    CHECK(r1.max_terminal <= 1e-9);
    CHECK(r1.passed);

    const ModelSpec hom{{0.3, 0.7}, {0.01, 0.01}, 5.0, 125, 5.0, 0.25};
    const auto ph = build_policy(hom, PolicyVariant::homogeneous);
    const auto rh = verify_subsolution(ph, hom, 32);
    CHECK(rh.interior_points + rh.terminal_points >= 1000 - 40);
    CHECK(rh.max_energy_gap <= 1e-10);
    CHECK(rh.passed);

    const ModelSpec inhom{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.3};
    const auto pa = build_policy(inhom, PolicyVariant::a_star_majorant);
    const auto ra = verify_subsolution(pa, inhom, 41);
    CHECK(ra.passed);
    const double c = pa.energy_level();
    for (int i = 0; i <= 20; ++i) {
        for (int k = 0; k <= 20; ++k) {
            const std::array<double, 2> x{0.8 * i / 20, 0.2 * k / 20};
            if (x[0] + x[1] >= 0.3) continue;
            const double h = hamiltonian(inhom, x, pa.tilt(x));
            CHECK(h <= c + 1e-15);
            const double ratio = (0.01 * (0.8 - x[0]) + 0.05 * (0.2 - x[1])) /
                                 (0.05 * (0.8 - x[0]) + 0.05 * (0.2 - x[1]));
            CHECK(2.0 * c - 2.0 * h == doctest::Approx(2.0 * c * (1.0 - ratio)).epsilon(1e-9));
        }
    }

    const auto plain = build_policy(inhom, PolicyVariant::none);
    CHECK(verify_subsolution(plain, inhom, 11).passed);
    CHECK_THROWS_AS((void)verify_subsolution(plain, inhom, 1), ConfigError);
}

TEST_CASE("tilted intensities stay positive where the model is live") {
    const ModelSpec inhom{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.3};
    const ModelSpec hom{{0.8, 0.2}, {0.03, 0.03}, 5.0, 125, 5.0, 0.3};
    const std::vector<std::pair<ModelSpec, PolicyVariant>> cases{
        {inhom, PolicyVariant::a_star_majorant},
        {inhom, PolicyVariant::none},
        {hom, PolicyVariant::homogeneous},
        {hom, PolicyVariant::a_star_majorant}};
    for (const auto& [spec, variant] : cases) {
        const auto policy = build_policy(spec, variant);
        for (int i = 0; i <= 16; ++i) {
            for (int k = 0; k <= 16; ++k) {
                const std::array<double, 2> x{0.8 * i / 16, 0.2 * k / 16};
                if (x[0] + x[1] >= spec.threshold) continue;
                const auto lambda = intensity(spec, x);
                const auto tilted = policy.tilted_intensity(x);
                for (int j = 0; j < 2; ++j) CHECK((tilted[j] > 0.0) == (lambda[j] > 0.0));
            }
        }
    }
}

TEST_CASE("majorant and homogeneous policies agree for equal rates") {
    const ModelSpec hom{{0.8, 0.2}, {0.03, 0.03}, 5.0, 125, 5.0, 0.3};
    const auto a = build_policy(hom, PolicyVariant::a_star_majorant);
    const auto h = build_policy(hom, PolicyVariant::homogeneous);
    CHECK(a.energy_level() == h.energy_level());
    for (int i = 0; i <= 20; ++i) {
        for (int k = 0; k <= 20; ++k) {
            const std::array<double, 2> x{0.8 * i / 20, 0.2 * k / 20};
            const auto ta = a.tilted_intensity(x);
            const auto th = h.tilted_intensity(x);
            CHECK(std::abs(ta[0] - th[0]) <= 1e-12);
            CHECK(std::abs(ta[1] - th[1]) <= 1e-12);
        }
    }
}

TEST_CASE("the solved energy level maximizes the initial value") {
    for (double b : {0.0, 5.0}) {
        const auto spec = one_group_model(0.01, b, 125, 5.0, 0.2);
        const double star = solve_energy_level(spec);
        const double step = 0.02 * star;
        double best_c = 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (int i = -25; i <= 25; ++i) {
            const double c = star + i * step;
            const double w = subsolution_initial_value(spec, c);
            if (w > best) {
                best = w;
                best_c = c;
            }
        }
        CHECK(std::abs(best_c - star) <= step);
    }
}

TEST_CASE("conservativity of tilt fields") {
    const ModelSpec equal{{0.8, 0.2}, {0.01, 0.01}, 5.0, 125, 5.0, 0.2};
    const ModelSpec unequal{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.2};
    const double c = 0.03;
    CHECK(conservativity_check(equal, c, 41).max_abs_curl <= 1e-6);
    const auto naive = conservativity_check(unequal, c, 41);
    CHECK(naive.max_abs_curl > 1e-3);
    CHECK_FALSE(naive.conservative);
    CHECK(naive.max_abs_curl == doctest::Approx(grid_max(unequal, c, 41)).epsilon(1e-6));
    CHECK(conservativity_check(unequal, c, 41, TiltField::a_star).max_abs_curl <= 1e-6);
    const ModelSpec other{{0.4, 0.6}, {0.2, 0.03}, 1.0, 125, 5.0, 0.2};
    CHECK(conservativity_check(other, 0.1, 41, TiltField::a_star).conservative);
    CHECK_THROWS_AS((void)conservativity_check(one_group_model(0.01, 0.0, 10, 5.0, 0.2), c, 41),
                    ConfigError);
}

TEST_CASE("saddle point of the Isaacs hamiltonian") {
    const ModelSpec spec{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.2};
    const std::array<double, 2> x{0.1, 0.05};
    const std::array<double, 2> zero{0.0, 0.0};
    const auto at_zero = saddle_identity_check(spec, x, zero);
    CHECK(at_zero.saddle_value == doctest::Approx(0.0));
    CHECK(at_zero.passed);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    std::uniform_real_distribution<double> a(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::array<double, 2> y{0.8 * u(rng), 0.2 * u(rng)};
        const std::array<double, 2> alpha{a(rng), a(rng)};
        const auto r = saddle_identity_check(spec, y, alpha);
        CHECK(std::abs(r.saddle_value - r.target) <= 1e-8);
        CHECK(r.min_inner_change > 0.0);
        CHECK(r.max_outer_change < 0.0);
        CHECK(r.passed);
    }
    const std::array<double, 2> extinct{0.8, 0.05};
    CHECK_THROWS_AS((void)saddle_identity_check(spec, extinct, zero), DomainError);
}
