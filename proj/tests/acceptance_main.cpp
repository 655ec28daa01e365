// Acceptance suite: exercises the catalog problems end to end and prints
// one PASS/FAIL line per criterion. Exit status is the number of failed
// criteria.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "magnuslab/convergence.hpp"
#include "magnuslab/errors.hpp"
#include "magnuslab/linalg.hpp"
#include "magnuslab/magnus.hpp"
#include "magnuslab/problem.hpp"
#include "magnuslab/propagator.hpp"
#include "magnuslab/quadrature.hpp"

using namespace magnuslab;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
    double seconds = 0.0;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

double uniform(std::mt19937& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Complex rnd_complex(std::mt19937& rng, double s) {
    return {uniform(rng, -s, s), uniform(rng, -s, s)};
}

std::string coeff(std::mt19937& rng, double s) {
    char buf[64];
    const Complex c = rnd_complex(rng, s);
    std::snprintf(buf, sizeof(buf), "(%.6f%+.6fi)", c.real(), c.imag());
    return buf;
}

// Random smooth operator with entries c0 + c1 t + c2 sin t.
TimeDependentOperator random_operator(std::mt19937& rng, int n) {
    OperatorPiece piece;
    piece.t_start = 0.0;
    piece.t_end = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n * n; ++i) {
        const std::string src =
            coeff(rng, 0.6) + "+" + coeff(rng, 0.4) + "*t+" + coeff(rng, 0.4) + "*sin(t)";
        piece.entries.push_back(parse_expression(src));
        piece.time_independent = false;
    }
    return TimeDependentOperator(n, {piece}, {});
}

TimeDependentOperator random_diagonal_operator(std::mt19937& rng) {
    OperatorPiece piece;
    piece.t_start = 0.0;
    piece.t_end = std::numeric_limits<double>::infinity();
    const std::string zero = "0";
    const std::string a1 = coeff(rng, 0.8) + "+" + coeff(rng, 0.5) + "*t";
    const std::string a2 = coeff(rng, 0.8) + "+" + coeff(rng, 0.5) + "*cos(t)";
    for (const std::string& s : {a1, zero, zero, a2}) piece.entries.push_back(parse_expression(s));
    piece.time_independent = false;
    return TimeDependentOperator(2, {piece}, {});
}

Complex trace_integral(const TimeDependentOperator& op, double t) {
    auto part = [&](bool imag_part) {
        auto f = [&](double s) {
            const Complex tr = op.evaluate(s).trace();
            return imag_part ? tr.imag() : tr.real();
        };
        std::vector<double> cuts = op.breakpoints_below(t);
        cuts.insert(cuts.begin(), 0.0);
        cuts.push_back(t);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += integrate_adaptive(f, cuts[i], cuts[i + 1], 1e-12).value;
        return total;
    };
    return {part(false), part(true)};
}

std::string g(double v) { return format_g17(v); }

// --- criteria -------------------------------------------------------------

Outcome criterion1() {
    Outcome out;
    const double xi = compute_xi();
    out.detail = "xi = " + g(xi);
    out.require(std::abs(xi - 1.08686869) <= 1e-7, "|xi - 1.08686869| > 1e-7");
    return out;
}

Outcome criterion2() {
    Outcome out;
    auto op = make_catalog_operator(CatalogId::example1);
    auto nb = norm_bound_time(op, M_PI);
    out.detail = "T(pi) = " + g(nb.t);
    out.require(!nb.is_infinite, "norm-bound time reported infinite");
    out.require(std::abs(nb.t - 1.43205) <= 1e-3, "|T - 1.43205| > 1e-3");
    return out;
}

Outcome criterion3() {
    Outcome out;
    auto op = make_catalog_operator(CatalogId::example1);
    auto sr = spectral_radius(op, 1.0);
    out.detail = "radius = " + g(sr.value);
    out.require(sr.is_exact, "radius not exact");
    out.require(std::abs(sr.value - 2.0 * M_PI / 3.0) <= 1e-3, "radius not 2pi/3 +- 1e-3");
    bool found_root = false;
    for (const auto& r : sr.roots) {
        if (std::abs(r.eps0 - Complex(0.0, 2.0 * M_PI / 3.0)) < 1e-3) {
            found_root = true;
            out.require(r.classification == RootClassification::non_extraneous,
                        "2pi i/3 not classified non-extraneous");
            out.require(r.multiplicity_l == 2, "l != 2");
            out.require(r.p == 1, "p != 1");
            out.require(r.q == 2, "q != 2");
        }
    }
    out.require(found_root, "root 2pi i/3 not reported");
    auto td = magnus_t_domain(op, 4.0);
    out.detail += ", t-domain = " + g(td.t);
    out.require(!td.is_infinite && std::abs(td.t - 2.0 * M_PI / 3.0) <= 1e-3,
                "t-domain not 2pi/3 +- 1e-3");
    // the analyzer can never undercut the norm certificate
    out.require(sr.value >= M_PI / norm_integral(op, 1.0) - 1e-6,
                "spectral radius below the certified pi / integral ||A||");
    auto mt = magnus_terms(op, 1.0, 14);
    out.require(mt.radius_available &&
                    std::abs(mt.empirical_radius.value - sr.value) <= 0.1 * sr.value,
                "empirical radius disagrees with the spectral radius beyond 10%");
    return out;
}

Outcome criterion4() {
    Outcome out;
    const double alpha = 0.4, beta = 1.0;
    auto op = make_catalog_operator(CatalogId::example2, {{"alpha", alpha}, {"beta", beta}});
    auto series = magnus_terms(op, 2.0, 12);
    const ComplexMatrix x1(2, {1.0, 0.0, 0.0, -1.0});
    const ComplexMatrix x2(2, {0.0, 1.0, 0.0, 0.0});
    for (int n = 2; n <= 8; ++n) {
        const double bn = mpq_class(bernoulli(n - 1)).get_d();
        double c = ((n - 1) % 2 == 0 ? 1.0 : -1.0) * std::pow(2.0, n - 1) * bn;
        for (int j = 2; j <= n - 1; ++j) c /= j;
        c *= std::pow(alpha, n - 1) * beta;
        const auto& got = series.terms[static_cast<std::size_t>(n - 1)];
        if (c != 0.0) {
            const double rel = spectral_norm(got - Complex(c) * x2) / std::abs(c);
            out.require(rel <= 1e-6, "Omega_" + std::to_string(n) + " relative error " + g(rel));
        } else {
            out.require(spectral_norm(got) <= 1e-9,
                        "Omega_" + std::to_string(n) + " should vanish");
        }
    }
    // partial sum vs the closed-form logarithm
    ComplexMatrix sum(2);
    for (const auto& term : series.terms) sum += term;
    const double cx2 = 2.0 * alpha * beta / (1.0 - std::exp(-2.0 * alpha));
    const ComplexMatrix closed = Complex(alpha) * x1 + Complex(cx2) * x2;
    const double err = spectral_norm(sum - closed);
    out.detail = "sum error vs closed-form log = " + g(err);
    out.require(err <= 1e-6, "12-term sum differs from the closed-form log by " + g(err));
    return out;
}

Outcome criterion5() {
    Outcome out;
    auto op = make_catalog_operator(CatalogId::example2, {{"alpha", 2.0}, {"beta", 1.0}});
    auto sr = spectral_radius(op, 2.0);
    out.detail = "radius = " + g(sr.value);
    out.require(sr.is_exact && std::abs(sr.value - M_PI / 2.0) <= 1e-3, "radius not pi/2 +- 1e-3");
    out.require(sr.value >= M_PI / norm_integral(op, 2.0) - 1e-6,
                "spectral radius below the certified pi / integral ||A||");

    auto mt = magnus_terms(op, 2.0, 16);
    out.require(mt.radius_available, "empirical radius unavailable");
    if (mt.radius_available) {
        out.detail += ", empirical = " + g(mt.empirical_radius.value);
        out.require(std::abs(mt.empirical_radius.value - M_PI / 2.0) <= 0.1 * M_PI / 2.0,
                    "empirical radius off by more than 10%");
    }

    auto div_op = make_catalog_operator(CatalogId::example2, {{"alpha", 3.5}, {"beta", 1.0}});
    auto rec = reconstruct(div_op, 2.0, 16, 1.0);
    double emin = 1e300;
    for (double e : rec.errors_by_order) emin = std::min(emin, e);
    const double last = rec.errors_by_order.back();
    const double mid = rec.errors_by_order[rec.errors_by_order.size() / 2 - 1];
    out.detail += ", divergent min/last error = " + g(emin) + "/" + g(last);
    out.require(emin > 1.0, "reconstruction error dips below 1 for |alpha| > pi");
    out.require(last > mid, "reconstruction errors do not grow in the tail");
    return out;
}

Outcome criterion6() {
    Outcome out;
    auto op = make_catalog_operator(CatalogId::example3,
                                    {{"omega0", 1.0}, {"omega", 0.5}, {"beta", 1e-3}});
    auto sr = spectral_radius(op, 2.0 * M_PI);
    const DiscRoot* first = nullptr;
    for (const auto& r : sr.roots)
        if (r.classification == RootClassification::non_extraneous && !first) first = &r;
    out.require(first != nullptr, "no non-extraneous root found");
    if (first) {
        out.detail = "first non-extraneous |eps0| = " + g(std::abs(first->eps0));
        out.require(std::abs(std::abs(first->eps0) - 1.0) <= 0.01,
                    "first non-extraneous root not within 1% of 1");
        out.require(first->p == 1 && first->q == 2, "expected p = 1, q = 2");
        out.require(std::abs(first->eps0) >= M_PI / norm_integral(op, 2.0 * M_PI) - 1e-6,
                    "spectral radius below the certified pi / integral ||A||");
    }
    auto td = magnus_t_domain(op, 8.0);
    out.detail += ", t-domain = " + g(td.t);
    out.require(!td.is_infinite && std::abs(td.t - 2.0 * M_PI) <= 0.01 * 2.0 * M_PI,
                "t-domain not within 1% of 2pi");
    return out;
}

Outcome criterion7() {
    Outcome out;
    const int cases = 200;

    // (a)-(d): Liouville, Gronwall, angle bound, sector containment on
    // random smooth operators.
    {
        std::mt19937 rng(2024);
        int sector_checked = 0;
        for (int rep = 0; rep < cases; ++rep) {
            const int n = 2 + (rep % 2);
            auto op = random_operator(rng, n);
            const double t = uniform(rng, 0.3, 1.4);
            const double kappa = norm_integral(op, t);
            Complex eps = rnd_complex(rng, 0.9);
            // keep gamma below pi to stay inside the certified sector
            const double gamma_cap = 0.95 * M_PI;
            if (std::abs(eps) * kappa >= gamma_cap)
                eps *= gamma_cap / (std::abs(eps) * kappa + 1e-12);
            const double gamma = std::abs(eps) * kappa;

            auto res = propagate(op, t, eps);
            const Complex li = std::exp(eps * trace_integral(op, t));
            out.require(std::abs(det(res.y) - li) <= 1e-9 * std::abs(li),
                        "Liouville identity violated (case " + std::to_string(rep) + ")");

            const double bound = std::exp(gamma) * (1.0 + 1e-9) + 1e-9;
            out.require(spectral_norm(res.y) <= bound, "Gronwall bound on Y violated");
            out.require(spectral_norm(inverse(res.y)) <= bound, "Gronwall bound on Y^-1 violated");

            std::vector<Complex> x(static_cast<std::size_t>(n));
            double nx = 0.0;
            for (auto& v : x) {
                v = rnd_complex(rng, 1.0);
                nx += std::norm(v);
            }
            if (nx > 1e-6) {
                out.require(angle(res.y * x, x) <= gamma + 1e-8, "angle bound violated");
            }

            ++sector_checked;
            for (const Complex& lam : eigenvalues(res.y)) {
                out.require(std::abs(lam) <= std::exp(gamma) * (1.0 + 1e-9) &&
                                std::abs(lam) >= std::exp(-gamma) * (1.0 - 1e-9),
                            "eigenvalue outside the Gronwall annulus");
                out.require(std::abs(std::arg(lam)) <= gamma + 1e-6,
                            "eigenvalue outside the sector");
            }
            if (!out.pass) break;
        }
        out.require(sector_checked >= cases, "sector suite did not reach its case count");
    }

    // (e) traceless higher terms and (f) diagonal termination.
    {
        std::mt19937 rng(2025);
        for (int rep = 0; rep < cases && out.pass; ++rep) {
            auto op = random_operator(rng, 2);
            auto mt = magnus_terms(op, uniform(rng, 0.4, 1.2), 4);
            for (std::size_t k = 1; k < mt.terms.size(); ++k)
                out.require(std::abs(mt.terms[k].trace()) <= 1e-10,
                            "higher Magnus term has nonzero trace");
        }
        std::mt19937 rng2(2026);
        for (int rep = 0; rep < cases && out.pass; ++rep) {
            auto op = random_diagonal_operator(rng2);
            auto mt = magnus_terms(op, uniform(rng2, 0.4, 1.5), 4);
            for (std::size_t k = 1; k < mt.terms.size(); ++k)
                out.require(mt.term_norms[k] < 1e-10, "diagonal problem series did not terminate");
        }
    }

    // (g) contour logarithm against the principal logarithm.
    {
        std::mt19937 rng(2027);
        for (int rep = 0; rep < cases && out.pass; ++rep) {
            const int n = 2 + (rep % 2);
            ComplexMatrix s(n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) s(i, j) = rnd_complex(rng, 0.5 / n);
            auto y = expm(s);
            auto a = logm_contour(y, 1.2);
            auto b = logm_principal(y);
            out.require(max_abs(a - b) <= 1e-8, "contour log differs from principal log");
        }
    }

    // (h) discriminant <-> multiple eigenvalue equivalence on planted cases.
    {
        std::mt19937 rng(2028);
        for (int rep = 0; rep < cases && out.pass; ++rep) {
            const int n = 2 + (rep % 2);
            ComplexMatrix v(n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) v(i, j) = rnd_complex(rng, 1.0);
                v(i, i) += 3.0;
            }
            ComplexMatrix d(n);
            const bool plant_double = (rep % 2 == 0);
            std::vector<Complex> lams;
            for (int i = 0; i < n; ++i) {
                Complex lam;
                for (int attempt = 0; attempt < 100; ++attempt) {
                    lam = rnd_complex(rng, 1.5);
                    bool far = true;
                    for (const auto& other : lams)
                        if (std::abs(lam - other) < 0.4) far = false;
                    if (far) break;
                }
                lams.push_back(lam);
            }
            if (plant_double) lams[1] = lams[0];
            for (int i = 0; i < n; ++i) d(i, i) = lams[static_cast<std::size_t>(i)];
            auto a = v * d * inverse(v);
            const double disc = std::abs(discriminant(a));
            // detection side: does the computed spectrum contain a close pair?
            auto ev = eigenvalues(a);
            double min_gap = 1e300;
            for (std::size_t i = 0; i < ev.size(); ++i)
                for (std::size_t j = i + 1; j < ev.size(); ++j)
                    min_gap = std::min(min_gap, std::abs(ev[i] - ev[j]));
            if (plant_double) {
                out.require(disc < 1e-8, "planted double eigenvalue but |disc| = " + g(disc));
                out.require(min_gap < 1e-5, "planted double eigenvalue not detected in spectrum");
            } else {
                out.require(disc > 1e-6, "separated spectrum but |disc| = " + g(disc));
                out.require(min_gap > 0.1, "separated spectrum clustered unexpectedly");
            }
        }
    }
    if (out.pass) out.detail = "8 suites x " + std::to_string(cases) + " cases";
    return out;
}

Outcome criterion8() {
    Outcome out;
    const auto constants = norm_certificate_constants();
    struct Entry {
        CatalogId id;
        ParamMap params;
        double t_max;
    };
    const std::vector<Entry> entries = {
        {CatalogId::example1, {}, 4.0},
        {CatalogId::example2, {{"alpha", 2.0}, {"beta", 1.0}}, 4.0},
        {CatalogId::example3, {{"omega0", 1.0}, {"omega", 0.5}, {"beta", 1e-3}}, 8.0},
        {CatalogId::diagonal, {}, 3.0},
    };
    for (const auto& e : entries) {
        auto op = make_catalog_operator(e.id, e.params);
        std::vector<double> times;
        for (const auto& c : constants) {
            auto nb = norm_bound_time(op, c.value);
            times.push_back(nb.is_infinite ? std::numeric_limits<double>::infinity() : nb.t);
        }
        for (std::size_t i = 1; i < times.size(); ++i)
            out.require(times[i] > times[i - 1],
                        catalog_name(e.id) + ": T(" + constants[i].name + ") not above T(" +
                            constants[i - 1].name + ")");
        auto td = magnus_t_domain(op, e.t_max);
        const double tdom = td.is_infinite ? std::numeric_limits<double>::infinity() : td.t;
        // T(pi) <= t-domain; 2e-4 covers the bisection resolution of the
        // t-domain solve where the true gap is tiny (example3).
        out.require(times.back() <= tdom + 2e-4,
                    catalog_name(e.id) + ": T(pi) = " + g(times.back()) +
                        " exceeds t-domain = " + g(tdom));
        if (e.id == CatalogId::example1) {
            out.require(times.back() < tdom, "example1: T(pi) < t-domain must be strict");
            out.detail += "example1: 1.43205 < " + g(tdom) + "; ";
        }
        if (e.id == CatalogId::example2)
            out.require(times.back() < tdom, "example2: T(pi) < t-domain must be strict");
        if (e.id == CatalogId::diagonal)
            out.require(td.is_infinite, "diagonal: t-domain should be unbounded");
    }
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"C1 xi constant reproduces 1.08686869 within 1e-7", 1.0, criterion1},
        {"C2 example1 norm certificate T(pi) = 1.43205 +- 1e-3", 1.0, criterion2},
        {"C3 example1 spectral radius and t-domain at 2pi/3", 30.0, criterion3},
        {"C4 example2 term identity and closed-form logarithm", 60.0, criterion4},
        {"C5 example2 radius pi/2, empirical fit, divergence at alpha=3.5", 60.0, criterion5},
        {"C6 example3 root near 1 and t-domain near 2pi", 60.0, criterion6},
        {"C7 property suites (>= 200 randomized cases each)", 60.0, criterion7},
        {"C8 certificate ordering T(0.57745)<T(log2)<T(xi)<T(pi)<=t-domain", 120.0, criterion8},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto start = Clock::now();
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        if (out.seconds > c.budget_seconds) {
            out.pass = false;
            out.detail += (out.detail.empty() ? "" : "; ") + std::string("runtime ") +
                          format_g17(out.seconds) + " s exceeds budget";
        }
        std::printf("%s  %s (%.2f s)%s%s\n", out.pass ? "PASS" : "FAIL", c.name, out.seconds,
                    out.detail.empty() ? "" : " -- ", out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    return failures;
}
