#pragma once

#include <functional>

namespace rareis {

struct QuadratureSettings {
    double abs_tol = 1e-12;
    int max_panels = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int panels = 0;
};

/// Globally adaptive 15-point Gauss-Kronrod quadrature. The panel with the
/// largest Kronrod/Gauss difference is bisected until the summed difference
/// drops below abs_tol, reaches the roundoff level of the result, or the panel
/// budget runs out.
[[nodiscard]] QuadratureResult integrate(const std::function<double(double)>& f, double a,
                                         double b, const QuadratureSettings& settings = {});

/// Root of a function with f(lo), f(hi) of opposite sign, refined until the
/// bracket is at machine resolution.
[[nodiscard]] double bracketed_root(const std::function<double(double)>& f, double lo, double hi);

}  // namespace rareis
