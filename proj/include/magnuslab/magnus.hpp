#pragma once

#include <gmpxx.h>

#include <vector>

#include "magnuslab/complex_matrix.hpp"
#include "magnuslab/problem.hpp"

namespace magnuslab {

using Rational = mpq_class;

/// Exact Bernoulli number B_k (convention B_1 = -1/2) via the recurrence
/// sum_{j=0}^{k} C(k+1, j) B_j = 0. Accepts k <= 64.
Rational bernoulli(int k);

/// B_k / k! as a double, cached.
double bernoulli_over_factorial(int k);

/// All ordered compositions of `total` into `parts` positive integers,
/// lexicographic order.
std::vector<std::vector<int>> compositions(int total, int parts);

/// Truncated dexpinv series sum_{k<=order} (B_k/k!) ad_Omega^k (A).
ComplexMatrix dexpinv_apply(const ComplexMatrix& omega, const ComplexMatrix& a, int order);

/// Shared quadrature grid with the Magnus terms stored at every node.
/// Nodes are the per-subinterval Gauss-Legendre points plus all
/// subinterval endpoints; every piece breakpoint is a node.
struct SeriesGrid {
    double t_final = 0.0;
    std::vector<double> nodes;
    // omega[k-1][i] = Omega_k at nodes[i]
    std::vector<std::vector<ComplexMatrix>> omega;
};

struct RadiusFit {
    double value = 0.0;
    bool is_infinite = false;
    double slope = 0.0;
    double fit_residual = 0.0;  // rms residual of the log-linear fit
    int points_used = 0;
};

struct MagnusSeriesResult {
    std::vector<ComplexMatrix> terms;         // Omega_1(t) ... Omega_K(t)
    std::vector<double> term_norms;           // spectral norms of the terms
    std::vector<ComplexMatrix> partial_sums;  // cumulative sums
    RadiusFit empirical_radius;               // root-test estimate (when enough terms)
    bool radius_available = false;
    int refinement_levels = 0;
    double last_delta = 0.0;  // max relative term change at the final doubling
    int subintervals_per_piece = 0;
};

struct MagnusOptions {
    int max_terms = 30;
    int min_subintervals = 8;      // per piece
    int max_subintervals = 16384;  // per piece (refinement cap)
    double rtol = 1e-8;            // relative change per term between refinements
    double atol_factor = 1e-12;    // absolute floor, scaled by the largest term norm
};

/// Magnus terms Omega_1..Omega_K at time t by the nested-commutator
/// recursion on a refining quadrature grid. Starts at `n_subintervals`
/// (>= 8) per piece and doubles until every term settles.
MagnusSeriesResult magnus_terms(const TimeDependentOperator& op, double t, int terms,
                                int n_subintervals = 8, const MagnusOptions& options = {});

/// Single-level grid builder (no refinement); exposed for tests.
SeriesGrid magnus_series_grid(const TimeDependentOperator& op, double t, int terms,
                              int n_subintervals);

/// Root-test radius estimate from term norms: least-squares slope of
/// log ||Omega_k|| against k over the upper half of the nonzero terms.
/// Requires at least 8 nonzero terms.
RadiusFit empirical_radius(const std::vector<double>& term_norms);

struct ReconstructionResult {
    ComplexMatrix y_magnus;              // exp of the deepest partial sum
    std::vector<double> errors_by_order; // ||exp(sum_{k<=M} eps^k Omega_k) - Y_ref||_2
};

/// Compares exponentials of the eps-scaled partial sums against the
/// propagated reference solution.
ReconstructionResult reconstruct(const TimeDependentOperator& op, double t, int terms, Complex eps,
                                 const MagnusOptions& options = {});

}  // namespace magnuslab
