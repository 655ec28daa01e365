#pragma once

#include <optional>
#include <vector>

#include "magnuslab/complex_matrix.hpp"
#include "magnuslab/problem.hpp"

namespace magnuslab {

struct PropagationResult {
    ComplexMatrix y;
    std::optional<ComplexMatrix> dy_deps;  // dY/deps when requested
    double t = 0.0;
    Complex eps{};
    double est_error = 0.0;  // accumulated local error estimates
};

/// Reference solution of Y' = eps A(t) Y, Y(0) = I at time t: adaptive
/// Dormand-Prince 5(4) with piece breakpoints as mandatory step endpoints;
/// pieces with t-independent A advance by the exact propagator
/// expm(eps A dt) instead.
PropagationResult propagate(const TimeDependentOperator& op, double t, Complex eps,
                            double tol = 1e-11);

/// Jointly integrates the variational system Z' = eps A Z + A Y, Z(0) = 0,
/// so dy_deps = dY/deps is available for Newton refinement of
/// discriminant roots.
PropagationResult propagate_variational(const TimeDependentOperator& op, double t, Complex eps,
                                        double tol = 1e-11);

/// Power-series representation of the fundamental solution at fixed t,
///   Y_t(eps) = sum_k eps^k N_k(t),
/// stored with coefficients scaled by radius powers so that evaluation
/// anywhere in |eps| <= radius is a short Horner loop. The series is
/// entire in eps; the truncation order is chosen from the tail bound
/// (kappa R)^k / k!. Used by the convergence analyzer for cheap sampling;
/// final residuals are always re-checked with propagate().
class EpsilonSeries {
public:
    static EpsilonSeries build(const TimeDependentOperator& op, double t, double max_abs_eps,
                               double tol = 1e-13);

    ComplexMatrix eval(Complex eps) const;
    ComplexMatrix eval_derivative(Complex eps) const;

    double radius() const { return radius_; }
    int order() const { return static_cast<int>(coeff_.size()) - 1; }

private:
    double radius_ = 0.0;
    std::vector<ComplexMatrix> coeff_;  // coeff_[k] = N_k(t) * radius^k
};

}  // namespace magnuslab
