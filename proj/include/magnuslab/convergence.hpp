#pragma once

#include <optional>
#include <string>
#include <vector>

#include "magnuslab/complex_matrix.hpp"
#include "magnuslab/linalg.hpp"
#include "magnuslab/magnus.hpp"
#include "magnuslab/problem.hpp"
#include "magnuslab/propagator.hpp"

namespace magnuslab {

/// The sharpened norm-certificate constant
///   xi = 1/2 * integral_0^{2pi} dx / (2 + (x/2)(1 - cot(x/2))),
/// evaluated by adaptive quadrature with a series expansion across the
/// removable point at x = 0.
double compute_xi(double abs_tol = 1e-10);

struct NormConstant {
    std::string name;
    double value;
};

/// The four certificate radii in ascending order:
/// 0.57745, log 2, xi, pi.
std::vector<NormConstant> norm_certificate_constants();

struct NormBoundTime {
    double t = 0.0;
    bool is_infinite = false;
};

/// T = max{t >= 0 : integral_0^t ||A(s)||_2 ds < r_c}, by bracketing plus
/// bisection/Newton on the monotone norm integral; infinite flag when the
/// integral never reaches r_c.
NormBoundTime norm_bound_time(const TimeDependentOperator& op, double r_c, double t_tol = 1e-8);

struct EigenvalueGapOffense {
    int j = 0, k = 0;
    long m = 0;          // lambda_j - lambda_k is within gap_tol of 2 pi i m
    Complex difference;
};

struct EigenvalueGapCheck {
    bool pass = true;
    std::vector<EigenvalueGapOffense> offenders;
};

/// Fails iff some eigenvalue pair of Omega differs by 2 pi i m with
/// integer m != 0, to within gap_tol.
EigenvalueGapCheck eigenvalue_gap_check(const ComplexMatrix& omega, double gap_tol = 1e-6);

struct ConvergenceConfig {
    double root_tol = 1e-9;        // |Delta| threshold, relative to the scan scale
    double cluster_tol = 1e-6;     // terminal eigenvalue clustering, x max(1, ||Y||)
    double branch_tol = 1e-6;      // log-sheet equality, as a fraction of 2 pi
    double rank_tol = 1e-8;        // Jordan rank threshold, x ||Y||
    double gap_tol = 1e-6;
    double dedup_tol = 1e-6;       // root deduplication distance
    double propagate_tol = 1e-11;
    int jobs = 1;                  // parallel boundary sampling when > 1
};

/// Delta(eps) = discriminant of the characteristic polynomial of the
/// propagated Y_t(eps), with d Delta / d eps assembled from the
/// variational dY/deps through the characteristic-polynomial
/// coefficients.
DiscriminantValue discriminant_of_eps(const TimeDependentOperator& op, double t, Complex eps,
                                      double tol = 1e-11);

enum class RootClassification { extraneous, non_extraneous, inconclusive };

std::string to_string(RootClassification c);

struct DiscRoot {
    Complex eps0{};
    double residual = 0.0;  // |Delta(eps0)| / scan scale
    int multiplicity_l = 0; // size of the coalescing eigenvalue cluster
    Complex rho0{};         // the multiple eigenvalue
    int p = 0;              // greatest number of equal continued logarithms
    int q = 0;              // largest Jordan block at rho0
    RootClassification classification = RootClassification::inconclusive;
    std::string note;
};

struct DiscRootScan {
    bool identically_zero = false;  // Delta vanishes for every eps sampled
    std::vector<Complex> roots;     // ordered by (|eps|, arg); the trivial root 0 first
    double scale = 0.0;             // normalization for residuals
    int trivial_multiplicity = 0;   // winding of Delta around eps = 0
};

/// Roots of Delta(eps) = 0 in |eps| <= search_radius by recursive
/// rectangle subdivision with argument-principle winding counts on the
/// boundary, each candidate polished by Newton iteration (multiplicity
/// aware; the final iterations use the variational propagator).
DiscRootScan find_disc_roots(const TimeDependentOperator& op, double t, double search_radius,
                             double root_tol = 1e-9, const ConvergenceConfig& cfg = {});

/// Piecewise-linear curve in the eps plane from 0 to eps0.
struct CurveSpec {
    std::vector<Complex> waypoints;
    static CurveSpec segment(Complex eps0) { return CurveSpec{{Complex(0.0), eps0}}; }
    static CurveSpec detour(Complex eps0, double side);  // one perpendicular bulge
};

struct EigenPath {
    std::vector<Complex> curve;                // sampled eps along the curve
    std::vector<std::vector<Complex>> rho;     // [sample][j], continuously paired
    std::vector<std::vector<Complex>> logrho;  // continued logs, log rho_j(0) = 0
};

/// Tracks the eigenvalues of Y_t(eps) and their continued logarithms
/// along the curve with adaptive stepping: a step is accepted only when
/// each eigenvalue lands unambiguously closer to its own predecessor
/// than to any other, except inside declared cluster windows. An
/// eigenvalue collision strictly inside the curve is reported as an
/// error (such a point is itself a discriminant root).
EigenPath continue_eigenvalues(const TimeDependentOperator& op, double t, Complex eps0,
                               const CurveSpec& curve = {}, const ConvergenceConfig& cfg = {},
                               const EpsilonSeries* series = nullptr);

/// Full classification of a discriminant root: terminal eigenvalue
/// clusters, p from the continued logarithms, q from the Jordan
/// structure. eps0 = 0 is extraneous by definition. A root whose
/// discriminant vanishes along the whole curve (the identically
/// degenerate case) is classified inconclusive.
DiscRoot classify_root(const TimeDependentOperator& op, double t, Complex eps0,
                       const ConvergenceConfig& cfg = {}, const EpsilonSeries* series = nullptr,
                       double scale_hint = 0.0);

struct SpectralRadiusResult {
    double value = 0.0;
    bool is_exact = false;  // false: value is only a certified lower bound
    bool identically_degenerate = false;
    std::string note;
    std::vector<DiscRoot> roots;  // classified roots, in scan order
    double search_radius = 0.0;
};

/// Walks the ordered discriminant roots, skipping extraneous ones. The
/// first non-extraneous root with p < q fixes the radius exactly; a
/// non-extraneous root with p >= q only yields a lower bound (the series
/// may still converge there), as does an empty scan.
SpectralRadiusResult spectral_radius(const TimeDependentOperator& op, double t,
                                     double search_radius = 0.0,
                                     const ConvergenceConfig& cfg = {});

struct TDomainResult {
    double t = 0.0;
    bool is_infinite = false;
    std::string note;
};

/// Smallest t with F(t) = 1, where F(t) is the eps-plane convergence
/// radius at time t: bisection over (0, t_max] using the monotone
/// decrease of F, with a dense-scan fallback when non-monotone behavior
/// is detected. Infinite flag when F > 1 throughout.
TDomainResult magnus_t_domain(const TimeDependentOperator& op, double t_max,
                              const ConvergenceConfig& cfg = {}, double t_tol = 1e-4);

struct ConvergenceReport {
    double t = 0.0;
    std::vector<std::pair<NormConstant, NormBoundTime>> norm_times;
    SpectralRadiusResult radius;
    bool empirical_available = false;
    RadiusFit empirical;
    std::optional<TDomainResult> t_domain;
};

struct AnalyzeOptions {
    double search_radius = 0.0;  // 0: default 3 pi / integral ||A||
    int empirical_terms = 14;
    std::optional<double> t_domain_max;  // engages the t-domain solve
    ConvergenceConfig cfg;
};

/// One-stop analysis: norm-bound times for the four constants, the
/// spectral radius with classified roots, the empirical radius from term
/// norms (when enough terms are nonzero), and optionally the Magnus
/// t-domain.
ConvergenceReport analyze(const TimeDependentOperator& op, double t,
                          const AnalyzeOptions& options = {});

/// Fixed-precision (17 significant digits) serializations.
std::string to_json(const ConvergenceReport& report);
std::string to_csv(const EigenPath& path);
std::string format_g17(double v);

}  // namespace magnuslab
