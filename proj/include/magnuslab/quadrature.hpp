#pragma once

#include <functional>
#include <vector>

namespace magnuslab {

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussLegendreRule& gauss_legendre(int order);

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;  // achieved error estimate
    bool converged = true;
};

/// Adaptive Gauss-Kronrod (G7/K15) on [a, b] with absolute tolerance.
/// Bisects the worst subinterval until the summed error estimate is
/// below abs_tol or the interval budget is exhausted.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, int max_intervals = 4096);

}  // namespace magnuslab
