#include "rareis/numerics.hpp"

#include "rareis/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>

namespace rareis {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;

struct Panel {
    double a;
    double b;
    double value;
    double err;
    bool operator<(const Panel& other) const { return err < other.err; }
};

Panel evaluate(const std::function<double(double)>& f, double a, double b) {
    double err = 0.0;
    const double value = Rule::integrate(f, a, b, 0, 0.0, &err);
    if (!std::isfinite(value)) {
        throw DomainError("quadrature: integrand is not finite on [" + std::to_string(a) + ", " +
                          std::to_string(b) + "]");
    }
    return {a, b, value, err};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureSettings& settings) {
    if (!(settings.abs_tol > 0.0)) throw DomainError("quadrature tolerance must be positive");
    QuadratureResult acc;
    if (a == b) return acc;
    std::priority_queue<Panel> panels;
    panels.push(evaluate(f, a, b));
    double value = panels.top().value;
    double err = panels.top().err;
    constexpr double kRoundoff = 50 * std::numeric_limits<double>::epsilon();
    while (err > settings.abs_tol && err > kRoundoff * std::abs(value) &&
           static_cast<int>(panels.size()) < settings.max_panels) {
        const Panel worst = panels.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;
        panels.pop();
        const Panel left = evaluate(f, worst.a, mid);
        const Panel right = evaluate(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        panels.push(left);
        panels.push(right);
    }
    // Re-sum from the panels so the running updates leave no drift.
    acc.panels = static_cast<int>(panels.size());
    while (!panels.empty()) {
        acc.value += panels.top().value;
        acc.error_estimate += panels.top().err;
        panels.pop();
    }
    return acc;
}

double bracketed_root(const std::function<double(double)>& f, double lo, double hi) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw NumericalError("no sign change on [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
    }
    std::uintmax_t iterations = 500;
    const auto [left, right] = boost::math::tools::toms748_solve(
        f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(), iterations);
    return 0.5 * (left + right);
}

}  // namespace rareis
