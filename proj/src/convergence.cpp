#include "magnuslab/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <future>
#include <limits>
#include <sstream>

#include "magnuslab/errors.hpp"
#include "magnuslab/quadrature.hpp"

namespace magnuslab {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double inf() { return std::numeric_limits<double>::infinity(); }

}  // namespace

// ---------------------------------------------------------------------------
// Norm certificates
// ---------------------------------------------------------------------------

double compute_xi(double abs_tol) {
    // Integrand 1/2 / (2 + y (1 - cot y)), y = x/2. Near x = 0 the
    // denominator is evaluated by the Laurent series of y cot y, giving
    // the removable-limit value 1/2 at x = 0.
    auto integrand = [](double x) {
        const double y = 0.5 * x;
        double denom;
        if (std::abs(y) < 0.1) {
            const double y2 = y * y;
            // 2 + y - y cot y = 1 + y + y^2/3 + y^4/45 + 2 y^6/945 + ...
            denom = 1.0 + y + y2 / 3.0 + y2 * y2 / 45.0 + 2.0 * y2 * y2 * y2 / 945.0;
        } else {
            denom = 2.0 + y * (1.0 - std::cos(y) / std::sin(y));
        }
        return 0.5 / denom;
    };
    auto r = integrate_adaptive(integrand, 0.0, kTwoPi, abs_tol);
    if (!r.converged) throw NumericalError("compute_xi: quadrature did not converge");
    return r.value;
}

std::vector<NormConstant> norm_certificate_constants() {
    return {{"0.57745", 0.57745},
            {"log2", std::log(2.0)},
            {"xi", compute_xi()},
            {"pi", M_PI}};
}

NormBoundTime norm_bound_time(const TimeDependentOperator& op, double r_c, double t_tol) {
    if (!(r_c > 0.0)) throw ConfigError("norm_bound_time: r_c must be positive");
    // Domain end, if the operator is only defined on a bounded interval.
    double domain_end = inf();
    if (std::isfinite(op.pieces().back().t_end)) domain_end = op.pieces().back().t_end;

    auto integral = [&](double t) { return norm_integral(op, t); };

    double hi = std::min(1.0, domain_end);
    double lo = 0.0;
    while (integral(hi) < r_c) {
        if (hi >= domain_end) return {0.0, true};
        lo = hi;
        hi = std::min(hi * 2.0, domain_end);
        if (hi > 1e9) return {0.0, true};
    }
    // Bisection with a Newton nudge (the derivative is ||A(t)||).
    for (int it = 0; it < 200 && (hi - lo) > t_tol; ++it) {
        double mid = 0.5 * (lo + hi);
        const double f = integral(mid) - r_c;
        if (f == 0.0) return {mid, false};
        if (f < 0.0)
            lo = mid;
        else
            hi = mid;
        const double slope = spectral_norm(op.evaluate(std::min(mid, domain_end)));
        if (slope > 0.0) {
            const double newton = mid - f / slope;
            if (newton > lo && newton < hi) {
                const double fn = integral(newton) - r_c;
                if (fn < 0.0)
                    lo = newton;
                else
                    hi = newton;
            }
        }
    }
    return {0.5 * (lo + hi), false};
}

EigenvalueGapCheck eigenvalue_gap_check(const ComplexMatrix& omega, double gap_tol) {
    EigenvalueGapCheck out;
    const auto ev = eigenvalues(omega);
    const int n = static_cast<int>(ev.size());
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            if (j == k) continue;
            const Complex diff = ev[static_cast<std::size_t>(j)] - ev[static_cast<std::size_t>(k)];
            const long m = std::lround(diff.imag() / kTwoPi);
            if (m == 0) continue;
            if (std::abs(diff - Complex(0.0, kTwoPi * static_cast<double>(m))) <= gap_tol)
                out.offenders.push_back({j, k, m, diff});
        }
    }
    out.pass = out.offenders.empty();
    return out;
}

// ---------------------------------------------------------------------------
// Discriminant in the eps plane
// ---------------------------------------------------------------------------

DiscriminantValue discriminant_of_eps(const TimeDependentOperator& op, double t, Complex eps,
                                      double tol) {
    auto res = propagate_variational(op, t, eps, tol);
    return discriminant_with_derivative(res.y, *res.dy_deps);
}

namespace {

// Shared state for one (op, t) analysis: the eps power series of the
// fundamental solution plus the discriminant normalization.
struct ScanContext {
    const TimeDependentOperator* op = nullptr;
    double t = 0.0;
    EpsilonSeries series;
    double scale = 1.0;      // max |Delta| over the sampling rings
    double zero_floor = 0.0; // below this, Delta counts as identically zero
    double radius = 0.0;

    Complex delta(Complex eps) const { return discriminant(series.eval(eps)); }
    DiscriminantValue delta_deriv(Complex eps) const {
        return discriminant_with_derivative(series.eval(eps), series.eval_derivative(eps));
    }
};

ScanContext make_scan_context(const TimeDependentOperator& op, double t, double radius,
                              const ConvergenceConfig& cfg) {
    ScanContext ctx;
    ctx.op = &op;
    ctx.t = t;
    ctx.radius = radius;
    // The subdivision works on the square circumscribing the search disk,
    // and boundary retries inflate rectangles; the series must stay
    // convergent out to those corners.
    ctx.series = EpsilonSeries::build(op, t, radius * 1.75);

    const int n_samples = 64;
    std::vector<Complex> samples;
    samples.reserve(2 * n_samples);
    for (int ring = 0; ring < 2; ++ring) {
        const double r = radius * (ring == 0 ? 0.97 : 0.55);
        for (int i = 0; i < n_samples; ++i)
            samples.push_back(std::polar(r, kTwoPi * (i + 0.13) / n_samples));
    }
    std::vector<double> dvals(samples.size());
    std::vector<double> yvals(samples.size());
    auto eval_range = [&](std::size_t a, std::size_t b) {
        for (std::size_t i = a; i < b; ++i) {
            const ComplexMatrix y = ctx.series.eval(samples[i]);
            yvals[i] = max_abs(y);
            dvals[i] = std::abs(discriminant(y));
        }
    };
    if (cfg.jobs > 1) {
        const std::size_t jobs = static_cast<std::size_t>(cfg.jobs);
        const std::size_t chunk = (samples.size() + jobs - 1) / jobs;
        std::vector<std::future<void>> futs;
        for (std::size_t a = 0; a < samples.size(); a += chunk)
            futs.push_back(std::async(std::launch::async, eval_range, a,
                                      std::min(a + chunk, samples.size())));
        for (auto& f : futs) f.get();
    } else {
        eval_range(0, samples.size());
    }
    double dmax = 0.0, ymax = 1.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        dmax = std::max(dmax, dvals[i]);
        ymax = std::max(ymax, yvals[i]);
    }
    const int n = op.dim();
    ctx.zero_floor = 1e-12 * std::pow(2.0 * ymax, 2 * n - 2);
    ctx.scale = std::max(dmax, 1e-300);
    return ctx;
}

struct Rect {
    double x0, y0, x1, y1;
    double diam() const { return std::hypot(x1 - x0, y1 - y0); }
    Complex center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    Rect inflated(double f) const {
        const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
        const double hx = 0.5 * (x1 - x0) * f, hy = 0.5 * (y1 - y0) * f;
        return {cx - hx, cy - hy, cx + hx, cy + hy};
    }
    bool contains(Complex z, double margin) const {
        return z.real() > x0 + margin && z.real() < x1 - margin && z.imag() > y0 + margin &&
               z.imag() < y1 - margin;
    }
    bool near_boundary(Complex z, double margin) const {
        const bool inside_wide = z.real() > x0 - margin && z.real() < x1 + margin &&
                                 z.imag() > y0 - margin && z.imag() < y1 + margin;
        return inside_wide && !contains(z, margin);
    }
};

// Boundary sample: Delta and the magnitude of its logarithmic
// derivative, which bounds how fast the phase can rotate nearby.
struct BoundarySample {
    Complex f;
    double logderiv = 0.0;
};

BoundarySample boundary_sample(const ScanContext& ctx, Complex z) {
    const auto dv = ctx.delta_deriv(z);
    BoundarySample s;
    s.f = dv.value;
    const double fa = std::abs(dv.value);
    s.logderiv = (fa > 0.0) ? std::abs(dv.deriv) / fa : std::numeric_limits<double>::infinity();
    return s;
}

// Phase increment of Delta along a segment. A sub-step is accepted only
// when the principal-value rotation is below pi/2 AND the logarithmic
// derivative certifies that the true rotation cannot have aliased past a
// full turn; otherwise the segment is bisected. Fails (nullopt path via
// false) when |Delta| dips under the floor or refinement is exhausted,
// both signs of a root on the boundary.
bool edge_phase(const ScanContext& ctx, Complex a, Complex b, const BoundarySample& fa,
                const BoundarySample& fb, int depth, double floor_abs, double& total) {
    if (!(std::abs(fa.f) > floor_abs) || !(std::abs(fb.f) > floor_abs)) return false;
    const double dphi = std::arg(fb.f / fa.f);
    const double travel = std::abs(b - a) * 0.5 * (fa.logderiv + fb.logderiv);
    if (std::abs(dphi) <= M_PI / 2.0 && travel <= 1.2) {
        total += dphi;
        return true;
    }
    if (depth <= 0) return false;
    const Complex mid = 0.5 * (a + b);
    const BoundarySample fm = boundary_sample(ctx, mid);
    return edge_phase(ctx, a, mid, fa, fm, depth - 1, floor_abs, total) &&
           edge_phase(ctx, mid, b, fm, fb, depth - 1, floor_abs, total);
}

std::optional<int> rect_winding(const ScanContext& ctx, const Rect& r) {
    const Complex corners[4] = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
    const double floor_abs = 1e-20 * ctx.scale;
    const int initial = 12;
    double total = 0.0;
    for (int e = 0; e < 4; ++e) {
        const Complex a = corners[e];
        const Complex b = corners[(e + 1) % 4];
        Complex prev = a;
        BoundarySample fprev = boundary_sample(ctx, a);
        for (int i = 1; i <= initial; ++i) {
            const Complex cur = a + (b - a) * (static_cast<double>(i) / initial);
            const BoundarySample fcur = boundary_sample(ctx, cur);
            if (!edge_phase(ctx, prev, cur, fprev, fcur, 30, floor_abs, total))
                return std::nullopt;
            prev = cur;
            fprev = fcur;
        }
    }
    const double turns = total / kTwoPi;
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 0.2) return std::nullopt;
    return static_cast<int>(rounded);
}

struct RawRoot {
    Complex eps;
    int multiplicity = 1;
    double residual = 0.0;
};

struct ScanState {
    const ConvergenceConfig* cfg = nullptr;
    double root_tol = 1e-9;
    double r0 = 0.0;            // trivial-root exclusion radius
    int trivial_multiplicity = 0;
    std::vector<RawRoot> found;
    long rects_processed = 0;
};

// Winding with boundary-perturbation retries. Returns the count and the
// rectangle it was actually measured on (origin containment and the
// trivial-root subtraction must refer to that one).
struct WindingResult {
    int count = 0;
    Rect used{};
};

std::optional<WindingResult> try_winding(const ScanContext& ctx, Rect r) {
    double f = 1.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
        const Rect probe = attempt == 0 ? r : r.inflated(f);
        auto w = rect_winding(ctx, probe);
        if (w) return WindingResult{*w, probe};
        f *= 1.033;
    }
    return std::nullopt;
}

int winding_with_retries(const ScanContext& ctx, Rect r, const char* what) {
    auto w = try_winding(ctx, r);
    if (!w)
        throw NumericalError(std::string("find_disc_roots: winding number inconsistent (") + what +
                             "), a root sits on every perturbed boundary tried");
    return w->count;
}

// Multiplicity-aware two-stage Newton: first on the eps power series,
// then sealed with the variational propagator. Returns the residual
// |Delta| (recomputed by plain propagation) relative to the scan scale.
std::optional<RawRoot> newton_polish(const ScanContext& ctx, const ConvergenceConfig& cfg,
                                     double root_tol, Complex start, int multiplicity,
                                     double leash) {
    Complex eps = start;
    const double mult = static_cast<double>(std::max(1, multiplicity));
    for (int it = 0; it < 80; ++it) {
        const auto dv = ctx.delta_deriv(eps);
        if (std::abs(dv.value) < 1e-18 * ctx.scale) break;
        if (dv.deriv == Complex(0.0)) break;
        const Complex step = mult * dv.value / dv.deriv;
        eps -= step;
        if (std::abs(eps - start) > leash) return std::nullopt;
        if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(eps))) break;
    }
    for (int it = 0; it < 12; ++it) {
        const auto dd = discriminant_of_eps(*ctx.op, ctx.t, eps, cfg.propagate_tol);
        if (std::abs(dd.value) < 1e-18 * ctx.scale) break;
        if (dd.deriv == Complex(0.0)) break;
        const Complex step = mult * dd.value / dd.deriv;
        eps -= step;
        if (std::abs(eps - start) > leash) return std::nullopt;
        if (std::abs(step) < 5e-14 * std::max(1.0, std::abs(eps))) break;
    }
    const auto final_y = propagate(*ctx.op, ctx.t, eps, cfg.propagate_tol);
    const double residual = std::abs(discriminant(final_y.y)) / ctx.scale;
    if (residual > root_tol) return std::nullopt;
    return RawRoot{eps, multiplicity, residual};
}

// Last-resort root extraction in a small rectangle: try one root of the
// given multiplicity, then fall back to repeated simple-root Newton with
// deflation through the already-found set.
std::vector<RawRoot> newton_hunt(const ScanContext& ctx, const ConvergenceConfig& cfg,
                                 double root_tol, const Rect& rect, int budget) {
    const double leash = 8.0 * rect.diam() + 2e-3 * ctx.radius;
    if (auto r = newton_polish(ctx, cfg, root_tol, rect.center(), budget, leash)) return {*r};

    std::vector<RawRoot> found;
    const double hx = 0.25 * (rect.x1 - rect.x0), hy = 0.25 * (rect.y1 - rect.y0);
    const Complex c = rect.center();
    const Complex starts[5] = {c, c + Complex(hx, hy), c + Complex(-hx, hy),
                               c + Complex(hx, -hy), c + Complex(-hx, -hy)};
    for (int round = 0; round < budget; ++round) {
        bool progressed = false;
        for (const Complex& s0 : starts) {
            Complex eps = s0;
            bool ok = false;
            for (int it = 0; it < 100; ++it) {
                const auto dv = ctx.delta_deriv(eps);
                Complex denom = dv.deriv;
                for (const auto& r : found) denom -= dv.value / (eps - r.eps);
                if (denom == Complex(0.0)) break;
                const Complex step = dv.value / denom;
                eps -= step;
                if (std::abs(eps - s0) > leash) break;
                if (std::abs(step) < 1e-12 * std::max(1.0, std::abs(eps))) {
                    ok = true;
                    break;
                }
            }
            if (!ok) continue;
            bool duplicate = false;
            for (const auto& r : found)
                if (std::abs(r.eps - eps) < cfg.dedup_tol) duplicate = true;
            if (duplicate) continue;
            if (auto polished = newton_polish(ctx, cfg, root_tol, eps, 1, leash)) {
                found.push_back(*polished);
                progressed = true;
                break;
            }
        }
        if (!progressed) break;
    }
    return found;
}

void scan_rect(const ScanContext& ctx, ScanState& st, const Rect& rect, int depth, int budget) {
    if (++st.rects_processed > 200000)
        throw NumericalError("find_disc_roots: subdivision budget exhausted");
    if (depth > 60) throw NumericalError("find_disc_roots: subdivision depth exhausted");

    // Handoff size: small enough to isolate distinct roots of the
    // catalog-scale problems, large enough that the boundary phases stay
    // above the power-series rounding noise.
    const double cluster_leaf = 3e-4 * ctx.radius;
    const double newton_leaf = 0.04 * ctx.radius;
    const double leash = 6.0 * rect.diam() + 1e-3 * ctx.radius;

    // Rectangles buried inside the trivial-root probe square hold nothing
    // but the root at 0.
    if (std::max({std::abs(rect.x0), std::abs(rect.x1), std::abs(rect.y0), std::abs(rect.y1)}) <=
        1.5 * st.r0)
        return;

    const auto w_opt = try_winding(ctx, rect);
    if (!w_opt) {
        // A root refuses to leave the (perturbed) boundary. For a small
        // rectangle Newton can still dig the roots out; otherwise split
        // blindly and let the children's boundaries settle.
        if (rect.diam() <= 8.0 * cluster_leaf) {
            auto roots = newton_hunt(ctx, *st.cfg, st.root_tol, rect, std::max(budget, 1));
            if (roots.empty())
                throw NumericalError(
                    "find_disc_roots: winding number inconsistent (subdivision), a root sits on "
                    "every perturbed boundary tried");
            for (const auto& r : roots) st.found.push_back(r);
            return;
        }
    }
    const bool has_origin =
        w_opt ? w_opt->used.contains(Complex(0.0), 1e-12 * ctx.radius) : false;
    int effective = budget;
    if (w_opt) {
        if (std::getenv("MAGNUSLAB_SCAN_TRACE"))
            std::fprintf(stderr, "rect d=%d [%.6g,%.6g]x[%.6g,%.6g] diam=%.3g W=%d\n", depth,
                         rect.x0, rect.x1, rect.y0, rect.y1, rect.diam(), w_opt->count);
        effective = w_opt->count - (has_origin ? st.trivial_multiplicity : 0);
        if (effective <= 0) return;

        if (!has_origin && rect.diam() <= cluster_leaf) {
            auto roots = newton_hunt(ctx, *st.cfg, st.root_tol, rect, effective);
            if (roots.empty())
                throw NumericalError(
                    "find_disc_roots: Newton failed on a clustered root near eps = " +
                    std::to_string(rect.center().real()) + "+" +
                    std::to_string(rect.center().imag()) + "i");
            for (const auto& r : roots) st.found.push_back(r);
            return;
        }
        if (!has_origin && w_opt->count == 1 && rect.diam() <= newton_leaf) {
            if (auto r = newton_polish(ctx, *st.cfg, st.root_tol, rect.center(), 1, leash)) {
                st.found.push_back(*r);
                return;
            }
            // fall through to subdivision
        }
    }
    const Complex c = rect.center();
    const Rect children[4] = {{rect.x0, rect.y0, c.real(), c.imag()},
                              {c.real(), rect.y0, rect.x1, c.imag()},
                              {rect.x0, c.imag(), c.real(), rect.y1},
                              {c.real(), c.imag(), rect.x1, rect.y1}};
    for (const auto& child : children) scan_rect(ctx, st, child, depth + 1, effective);
}

DiscRootScan scan_roots(const ScanContext& ctx, double search_radius, double root_tol,
                        const ConvergenceConfig& cfg) {
    DiscRootScan out;
    out.scale = ctx.scale;
    if (ctx.scale <= ctx.zero_floor) {
        out.identically_zero = true;
        out.roots = {Complex(0.0)};
        return out;
    }

    ScanState st;
    st.cfg = &cfg;
    st.root_tol = root_tol;

    // Multiplicity of the trivial root at eps = 0. Delta vanishes to high
    // order there (every eigenvalue pair coalesces), so the probe square
    // grows until |Delta| on its boundary clears the evaluation noise.
    st.r0 = 1e-3 * search_radius;
    for (;;) {
        Rect tiny{-st.r0, -st.r0, st.r0, st.r0};
        auto w = try_winding(ctx, tiny);
        if (w) {
            st.trivial_multiplicity = w->count;
            break;
        }
        st.r0 *= 2.5;
        if (st.r0 > 0.02 * search_radius)
            throw NumericalError(
                "find_disc_roots: cannot measure the multiplicity of the trivial root");
    }

    // Deterministic jitter keeps roots on the axes away from subdivision
    // seams.
    const Complex c0 = search_radius * Complex(0.0037, 0.0019);
    const double half = search_radius * 1.0002;
    Rect top{c0.real() - half, c0.imag() - half, c0.real() + half, c0.imag() + half};
    const int w_top = winding_with_retries(ctx, top, "top-level");
    scan_rect(ctx, st, top, 0, w_top);

    // Deduplicate, drop the trivial root and anything outside the disk.
    std::vector<RawRoot> unique;
    for (const auto& r : st.found) {
        if (std::abs(r.eps) <= std::max(cfg.dedup_tol, 1.6 * st.r0)) continue;
        if (std::abs(r.eps) > search_radius * (1.0 + 1e-9)) continue;
        bool merged = false;
        for (auto& u : unique) {
            if (std::abs(u.eps - r.eps) < cfg.dedup_tol) {
                if (r.residual < u.residual) u = r;
                merged = true;
                break;
            }
        }
        if (!merged) unique.push_back(r);
    }
    std::sort(unique.begin(), unique.end(), [](const RawRoot& a, const RawRoot& b) {
        const double ra = std::abs(a.eps), rb = std::abs(b.eps);
        if (std::abs(ra - rb) > 1e-9 * std::max(1.0, std::max(ra, rb))) return ra < rb;
        auto arg_key = [](Complex z) {
            double v = std::arg(z);
            if (v < -1e-9) v += kTwoPi;  // keep roots on the positive real axis first
            return std::max(v, 0.0);
        };
        return arg_key(a.eps) < arg_key(b.eps);
    });
    out.roots.push_back(Complex(0.0));
    for (const auto& r : unique) out.roots.push_back(r.eps);
    out.trivial_multiplicity = st.trivial_multiplicity;
    return out;
}

}  // namespace

DiscRootScan find_disc_roots(const TimeDependentOperator& op, double t, double search_radius,
                             double root_tol, const ConvergenceConfig& cfg) {
    if (!(search_radius > 0.0)) throw ConfigError("find_disc_roots: search_radius must be positive");
    auto ctx = make_scan_context(op, t, search_radius, cfg);
    return scan_roots(ctx, search_radius, root_tol, cfg);
}

// ---------------------------------------------------------------------------
// Eigenvalue continuation
// ---------------------------------------------------------------------------

CurveSpec CurveSpec::detour(Complex eps0, double side) {
    const Complex perp = Complex(0.0, 1.0) * eps0;
    return CurveSpec{{Complex(0.0), 0.5 * eps0 + side * perp, eps0}};
}

namespace {

Complex curve_point(const CurveSpec& curve, double u) {
    const auto& w = curve.waypoints;
    const double scaled = u * static_cast<double>(w.size() - 1);
    const std::size_t seg = std::min(static_cast<std::size_t>(scaled), w.size() - 2);
    const double frac = scaled - static_cast<double>(seg);
    return w[seg] + frac * (w[seg + 1] - w[seg]);
}

// Greedy minimal-distance assignment of new eigenvalues to the previous
// ones; adequate because step acceptance separately verifies the
// assignment is unambiguous.
std::vector<Complex> pair_eigenvalues(const std::vector<Complex>& prev,
                                      std::vector<Complex> next) {
    const std::size_t n = prev.size();
    std::vector<std::tuple<double, std::size_t, std::size_t>> dist;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) dist.emplace_back(std::abs(next[j] - prev[i]), i, j);
    std::sort(dist.begin(), dist.end());
    std::vector<bool> used_prev(n, false), used_next(n, false);
    std::vector<Complex> out(n);
    std::size_t assigned = 0;
    for (const auto& [d, i, j] : dist) {
        if (used_prev[i] || used_next[j]) continue;
        out[i] = next[j];
        used_prev[i] = used_next[j] = true;
        if (++assigned == n) break;
    }
    return out;
}

}  // namespace

EigenPath continue_eigenvalues(const TimeDependentOperator& op, double t, Complex eps0,
                               const CurveSpec& curve_in, const ConvergenceConfig& cfg,
                               const EpsilonSeries* series) {
    CurveSpec curve = curve_in;
    if (curve.waypoints.empty()) curve = CurveSpec::segment(eps0);
    if (std::abs(curve.waypoints.front()) != 0.0)
        throw ConfigError("continue_eigenvalues: curve must start at eps = 0");
    if (std::abs(curve.waypoints.back() - eps0) > 1e-12 * std::max(1.0, std::abs(eps0)))
        throw ConfigError("continue_eigenvalues: curve must end at eps0");

    std::optional<EpsilonSeries> own;
    if (!series) {
        double reach = 0.0;
        for (const auto& w : curve.waypoints) reach = std::max(reach, std::abs(w));
        own = EpsilonSeries::build(op, t, std::max(reach, 1e-12) * 1.05);
        series = &*own;
    }

    const int n = op.dim();
    EigenPath path;
    path.curve.push_back(Complex(0.0));
    path.rho.emplace_back(static_cast<std::size_t>(n), Complex(1.0));
    path.logrho.emplace_back(static_cast<std::size_t>(n), Complex(0.0));

    std::vector<Complex> rho = path.rho.back();
    std::vector<Complex> logrho = path.logrho.back();
    std::vector<std::vector<double>> max_gap_seen(static_cast<std::size_t>(n),
                                                  std::vector<double>(static_cast<std::size_t>(n), 0.0));

    double u = 0.0;
    double du = 1.0 / 64.0;
    const double du_min = 1e-14;
    long steps = 0;
    while (u < 1.0) {
        if (++steps > 200000)
            throw NumericalError("continue_eigenvalues: step budget exhausted");
        const double u2 = std::min(1.0, u + du);
        const Complex eps2 = curve_point(curve, u2);
        std::vector<Complex> next = pair_eigenvalues(rho, eigenvalues(series->eval(eps2)));

        double rho_scale = 1.0;
        for (const auto& r : rho) rho_scale = std::max(rho_scale, std::abs(r));
        const double wabs = cfg.cluster_tol * rho_scale;

        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            const Complex rj = rho[static_cast<std::size_t>(j)];
            const Complex nj = next[static_cast<std::size_t>(j)];
            if (std::abs(nj - rj) > 0.7 * std::abs(rj)) {
                ok = false;  // ratio too large for a safe log step
                break;
            }
            const double d_self = std::abs(nj - rj);
            double parent_gap = inf();
            double d_other = inf();
            for (int k = 0; k < n; ++k) {
                if (k == j) continue;
                parent_gap = std::min(parent_gap, std::abs(rho[static_cast<std::size_t>(k)] - rj));
                d_other = std::min(d_other, std::abs(nj - rho[static_cast<std::size_t>(k)]));
            }
            if (n == 1) break;
            if (parent_gap <= wabs) continue;  // inside a cluster window: swaps harmless
            if (d_other < 2.0 * d_self) ok = false;
        }
        if (!ok) {
            du *= 0.5;
            if (du < du_min)
                throw NumericalError(
                    "continue_eigenvalues: cannot resolve eigenvalue pairing near eps = " +
                    std::to_string(curve_point(curve, u).real()) + "+" +
                    std::to_string(curve_point(curve, u).imag()) + "i");
            continue;
        }

        // Interior collision: previously separated branches meeting well
        // before the end of the curve.
        double rho_scale2 = 1.0;
        for (const auto& r : next) rho_scale2 = std::max(rho_scale2, std::abs(r));
        const double wcol = cfg.cluster_tol * rho_scale2;
        for (int j = 0; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                const double gap =
                    std::abs(next[static_cast<std::size_t>(j)] - next[static_cast<std::size_t>(k)]);
                auto& seen = max_gap_seen[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
                if (u2 < 0.98 && gap < wcol && seen > 100.0 * wcol)
                    throw NumericalError(
                        "continue_eigenvalues: eigenvalue collision strictly inside the curve at "
                        "eps = " +
                        std::to_string(eps2.real()) + "+" + std::to_string(eps2.imag()) +
                        "i (itself a discriminant root; classify it first)");
                seen = std::max(seen, gap);
            }

        for (int j = 0; j < n; ++j) {
            const std::size_t sj = static_cast<std::size_t>(j);
            logrho[sj] += std::log(next[sj] / rho[sj]);  // principal step, |arg| < pi/2
        }
        rho = std::move(next);
        path.curve.push_back(eps2);
        path.rho.push_back(rho);
        path.logrho.push_back(logrho);
        u = u2;
        du = std::min(du * 1.35, 1.0 / 32.0);
    }
    return path;
}

// ---------------------------------------------------------------------------
// Root classification
// ---------------------------------------------------------------------------

std::string to_string(RootClassification c) {
    switch (c) {
        case RootClassification::extraneous: return "extraneous";
        case RootClassification::non_extraneous: return "non_extraneous";
        case RootClassification::inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

struct Cluster {
    std::vector<int> members;
    Complex rho0;
    int p = 0;
    int q = 0;
};

// Union-find style clustering of terminal eigenvalues.
std::vector<Cluster> cluster_values(const std::vector<Complex>& vals, double tol) {
    const int n = static_cast<int>(vals.size());
    std::vector<int> parent(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
        return x;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(vals[static_cast<std::size_t>(i)] - vals[static_cast<std::size_t>(j)]) <= tol)
                parent[static_cast<std::size_t>(find(j))] = find(i);
    std::vector<Cluster> out;
    for (int i = 0; i < n; ++i) {
        if (find(i) != i) continue;
        Cluster c;
        Complex mean = 0.0;
        for (int j = 0; j < n; ++j)
            if (find(j) == i) {
                c.members.push_back(j);
                mean += vals[static_cast<std::size_t>(j)];
            }
        c.rho0 = mean / static_cast<double>(c.members.size());
        out.push_back(std::move(c));
    }
    return out;
}

int max_equal_group(const std::vector<Complex>& logs, double tol) {
    auto groups = cluster_values(logs, tol);
    int best = 0;
    for (const auto& g : groups) best = std::max(best, static_cast<int>(g.members.size()));
    return best;
}

}  // namespace

DiscRoot classify_root(const TimeDependentOperator& op, double t, Complex eps0,
                       const ConvergenceConfig& cfg, const EpsilonSeries* series,
                       double scale_hint) {
    DiscRoot root;
    root.eps0 = eps0;
    const int n = op.dim();

    std::optional<EpsilonSeries> own;
    if (!series) {
        own = EpsilonSeries::build(op, t, std::max(std::abs(eps0), 1e-9) * 1.05);
        series = &*own;
    }

    // eps = 0 is extraneous by definition: all logs start on the
    // principal sheet at 0.
    if (std::abs(eps0) == 0.0) {
        root.residual = 0.0;
        root.multiplicity_l = n;
        root.rho0 = 1.0;
        root.p = n;
        root.q = 1;
        root.classification = RootClassification::extraneous;
        root.note = "trivial root (Y = I)";
        return root;
    }

    const auto prop = propagate(op, t, eps0, cfg.propagate_tol);
    const ComplexMatrix& y0 = prop.y;
    const double ynorm = spectral_norm(y0);

    double scale = scale_hint;
    if (scale <= 0.0) {
        for (int i = 0; i < 16; ++i) {
            const Complex probe = eps0 * std::polar(1.0, kTwoPi * (i + 0.29) / 16.0);
            scale = std::max(scale, std::abs(discriminant(series->eval(probe))));
        }
        scale = std::max(scale, 1e-300);
    }
    root.residual = std::abs(discriminant(y0)) / scale;
    if (root.residual > 1e3 * cfg.root_tol)
        throw NumericalError("classify_root: eps0 is not a discriminant root (residual " +
                             std::to_string(root.residual) + ")");

    // Identically degenerate family: Delta vanishes along the whole
    // curve, so the continued logarithms can be chosen equal on every
    // branch and no root is decisive.
    bool degenerate = true;
    const double degenerate_floor = std::max(1e-10 * scale, 1e-280);
    for (int i = 1; i <= 8 && degenerate; ++i) {
        const Complex probe = eps0 * (static_cast<double>(i) / 8.0);
        if (std::abs(discriminant(series->eval(probe))) > degenerate_floor) degenerate = false;
    }

    EigenPath path;
    if (!degenerate) {
        try {
            path = continue_eigenvalues(op, t, eps0, CurveSpec::segment(eps0), cfg, series);
        } catch (const NumericalError&) {
            // Interior collision on the straight segment: look for a second
            // witness along a perpendicular detour before giving up.
            try {
                path = continue_eigenvalues(op, t, eps0, CurveSpec::detour(eps0, 0.18), cfg, series);
            } catch (const NumericalError&) {
                path = continue_eigenvalues(op, t, eps0, CurveSpec::detour(eps0, -0.18), cfg, series);
            }
        }
    } else {
        path = continue_eigenvalues(op, t, eps0, CurveSpec::segment(eps0), cfg, series);
    }

    const auto& terminal_rho = path.rho.back();
    const auto& terminal_log = path.logrho.back();

    // Cluster terminal eigenvalues; a confirmed root must have one
    // cluster of size >= 2, so widen the tolerance up to the observed
    // minimal gap when necessary.
    double min_gap = inf();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            min_gap = std::min(min_gap, std::abs(terminal_rho[static_cast<std::size_t>(i)] -
                                                 terminal_rho[static_cast<std::size_t>(j)]));
    double cl_tol = cfg.cluster_tol * std::max(1.0, ynorm);
    if (min_gap > cl_tol && min_gap <= 100.0 * cl_tol) cl_tol = 1.5 * min_gap;
    auto clusters = cluster_values(terminal_rho, cl_tol);

    // Ambiguity guard: distinct clusters must be well separated.
    for (std::size_t a = 0; a < clusters.size(); ++a)
        for (std::size_t b = a + 1; b < clusters.size(); ++b)
            if (std::abs(clusters[a].rho0 - clusters[b].rho0) < 10.0 * cl_tol)
                throw NumericalError("classify_root: ambiguous eigenvalue clustering at eps0");

    bool any_multiple = false;
    bool all_same_sheet = true;
    const Cluster* decisive = nullptr;
    const Cluster* representative = nullptr;
    const double log_tol = kTwoPi * cfg.branch_tol;
    for (auto& c : clusters) {
        const int l = static_cast<int>(c.members.size());
        if (l < 2) continue;
        any_multiple = true;
        std::vector<Complex> logs;
        for (int idx : c.members) logs.push_back(terminal_log[static_cast<std::size_t>(idx)]);
        c.p = degenerate ? l : max_equal_group(logs, log_tol);
        c.q = max_jordan_block(y0, c.rho0, cfg.rank_tol);
        if (c.p < l) all_same_sheet = false;
        if (c.p < c.q && !decisive) decisive = &c;
        if (!representative || (c.p - c.q) < (representative->p - representative->q))
            representative = &c;
    }
    if (!any_multiple)
        throw NumericalError("classify_root: no coalescing eigenvalue cluster found at eps0");

    const Cluster* chosen = decisive ? decisive : representative;
    root.multiplicity_l = static_cast<int>(chosen->members.size());
    root.rho0 = chosen->rho0;
    root.p = chosen->p;
    root.q = chosen->q;

    if (degenerate) {
        root.classification = RootClassification::inconclusive;
        root.note = "discriminant vanishes identically along the curve; no sheet obstruction";
    } else if (all_same_sheet) {
        root.classification = RootClassification::extraneous;
        root.note = "all continued logarithms on one sheet for every cluster";
    } else if (decisive) {
        root.classification = RootClassification::non_extraneous;
        root.note = "p < q certifies the radius";
    } else {
        root.classification = RootClassification::inconclusive;
        root.note = "non-extraneous but p >= q for every cluster; series may still converge";
    }
    return root;
}

// ---------------------------------------------------------------------------
// Spectral radius and the t-domain
// ---------------------------------------------------------------------------

SpectralRadiusResult spectral_radius(const TimeDependentOperator& op, double t,
                                     double search_radius, const ConvergenceConfig& cfg) {
    SpectralRadiusResult out;
    double radius = search_radius;
    if (radius <= 0.0) {
        const double kappa = norm_integral(op, t);
        radius = (kappa > 0.0) ? 3.0 * M_PI / kappa : 10.0;
    }
    out.search_radius = radius;

    auto ctx = make_scan_context(op, t, radius, cfg);
    auto scan = scan_roots(ctx, radius, cfg.root_tol, cfg);
    if (scan.identically_zero) {
        out.value = radius;
        out.is_exact = false;
        out.identically_degenerate = true;
        out.note =
            "discriminant vanishes identically (permanent eigenvalue coincidence), so no "
            "root can certify divergence; radius is a lower bound";
        return out;
    }

    for (const Complex& eps0 : scan.roots) {
        DiscRoot root = classify_root(op, t, eps0, cfg, &ctx.series, scan.scale);
        out.roots.push_back(root);
        if (root.classification == RootClassification::extraneous) continue;
        out.value = std::abs(root.eps0);
        if (root.classification == RootClassification::non_extraneous) {
            out.is_exact = true;
            out.note = "radius fixed by the first non-extraneous root with p < q";
        } else {
            out.is_exact = false;
            out.note =
                "first non-extraneous root has p >= q; |eps0| is only a lower bound for the "
                "radius";
        }
        return out;
    }
    out.value = radius;
    out.is_exact = false;
    out.note = "no non-extraneous root inside the search disk; radius exceeds the search radius";
    return out;
}

TDomainResult magnus_t_domain(const TimeDependentOperator& op, double t_max,
                              const ConvergenceConfig& cfg, double t_tol) {
    if (!(t_max > 0.0)) throw ConfigError("magnus_t_domain: t_max must be positive");
    std::string note;

    // F(t) > 1? Uses a capped search radius: any certified lower bound
    // above 1 already decides the question.
    auto above_one = [&](double t) {
        if (t <= 0.0) return true;
        const double kappa = norm_integral(op, t);
        const double radius = (kappa > 0.0) ? std::min(3.0 * M_PI / kappa, 2.5) : 2.5;
        auto res = spectral_radius(op, t, radius, cfg);
        if (res.is_exact) return res.value > 1.0;
        if (res.value > 1.0) return true;
        throw NumericalError(
            "magnus_t_domain: inconclusive radius bound below 1 at t = " + std::to_string(t) +
            "; cannot certify the crossing");
    };

    const int coarse = 8;
    std::vector<bool> above(static_cast<std::size_t>(coarse) + 1, true);
    int first_false = -1;
    bool monotone = true;
    for (int i = 1; i <= coarse; ++i) {
        above[static_cast<std::size_t>(i)] = above_one(t_max * i / coarse);
        if (!above[static_cast<std::size_t>(i)] && first_false < 0) first_false = i;
        if (above[static_cast<std::size_t>(i)] && first_false > 0) monotone = false;
    }
    double lo, hi;
    if (!monotone) {
        note = "non-monotone F(t) detected on the coarse grid; dense scan fallback";
        const int dense = 64;
        int ff = -1;
        for (int i = 1; i <= dense; ++i) {
            if (!above_one(t_max * i / dense)) {
                ff = i;
                break;
            }
        }
        if (ff < 0) return {0.0, true, note};
        lo = t_max * (ff - 1) / dense;
        hi = t_max * ff / dense;
    } else {
        if (first_false < 0) return {0.0, true, "F(t) > 1 throughout (0, t_max]"};
        lo = t_max * (first_false - 1) / coarse;
        hi = t_max * first_false / coarse;
    }
    while (hi - lo > t_tol) {
        const double mid = 0.5 * (lo + hi);
        if (above_one(mid))
            lo = mid;
        else
            hi = mid;
    }
    return {0.5 * (lo + hi), false, note};
}

// ---------------------------------------------------------------------------
// Aggregate report + serialization
// ---------------------------------------------------------------------------

ConvergenceReport analyze(const TimeDependentOperator& op, double t,
                          const AnalyzeOptions& options) {
    ConvergenceReport rep;
    rep.t = t;
    for (const auto& c : norm_certificate_constants())
        rep.norm_times.emplace_back(c, norm_bound_time(op, c.value));
    rep.radius = spectral_radius(op, t, options.search_radius, options.cfg);
    try {
        auto series = magnus_terms(op, t, options.empirical_terms);
        if (series.radius_available) {
            rep.empirical = series.empirical_radius;
            rep.empirical_available = true;
        }
    } catch (const Error&) {
        rep.empirical_available = false;
    }
    if (options.t_domain_max)
        rep.t_domain = magnus_t_domain(op, *options.t_domain_max, options.cfg);
    return rep;
}

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string json_complex_pair(Complex z) {
    return "[" + format_g17(z.real()) + ", " + format_g17(z.imag()) + "]";
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::string to_json(const ConvergenceReport& rep) {
    std::ostringstream os;
    os << "{\n  \"schema\": 1,\n";
    os << "  \"t\": " << format_g17(rep.t) << ",\n";
    os << "  \"norm_times\": {";
    for (std::size_t i = 0; i < rep.norm_times.size(); ++i) {
        const auto& [c, nt] = rep.norm_times[i];
        os << (i ? ", " : "") << "\"" << c.name << "\": ";
        if (nt.is_infinite)
            os << "\"inf\"";
        else
            os << format_g17(nt.t);
    }
    os << "},\n";
    os << "  \"disc_roots\": [";
    for (std::size_t i = 0; i < rep.radius.roots.size(); ++i) {
        const auto& r = rep.radius.roots[i];
        os << (i ? ",\n    " : "\n    ");
        os << "{\"eps0\": " << json_complex_pair(r.eps0) << ", \"abs\": "
           << format_g17(std::abs(r.eps0)) << ", \"residual\": " << format_g17(r.residual)
           << ", \"l\": " << r.multiplicity_l << ", \"rho0\": " << json_complex_pair(r.rho0)
           << ", \"p\": " << r.p << ", \"q\": " << r.q << ", \"classification\": \""
           << to_string(r.classification) << "\", \"note\": \"" << json_escape(r.note) << "\"}";
    }
    os << (rep.radius.roots.empty() ? "]," : "\n  ],") << "\n";
    os << "  \"spectral_radius\": {\"value\": " << format_g17(rep.radius.value)
       << ", \"exact\": " << (rep.radius.is_exact ? "true" : "false")
       << ", \"identically_degenerate\": " << (rep.radius.identically_degenerate ? "true" : "false")
       << ", \"search_radius\": " << format_g17(rep.radius.search_radius) << ", \"note\": \""
       << json_escape(rep.radius.note) << "\"},\n";
    os << "  \"empirical_radius\": ";
    if (rep.empirical_available) {
        os << "{\"value\": ";
        if (rep.empirical.is_infinite)
            os << "\"inf\"";
        else
            os << format_g17(rep.empirical.value);
        os << ", \"slope\": " << format_g17(rep.empirical.slope)
           << ", \"points_used\": " << rep.empirical.points_used
           << ", \"fit_residual\": " << format_g17(rep.empirical.fit_residual) << "}";
    } else {
        os << "null";
    }
    os << ",\n  \"magnus_t_domain\": ";
    if (rep.t_domain) {
        if (rep.t_domain->is_infinite)
            os << "\"inf\"";
        else
            os << format_g17(rep.t_domain->t);
    } else {
        os << "null";
    }
    os << "\n}\n";
    return os.str();
}

std::string to_csv(const EigenPath& path) {
    std::ostringstream os;
    const std::size_t n = path.rho.empty() ? 0 : path.rho.front().size();
    os << "eps_re,eps_im";
    for (std::size_t j = 0; j < n; ++j)
        os << ",rho" << j + 1 << "_re,rho" << j + 1 << "_im,logrho" << j + 1 << "_re,logrho"
           << j + 1 << "_im";
    os << "\n";
    for (std::size_t i = 0; i < path.curve.size(); ++i) {
        os << format_g17(path.curve[i].real()) << "," << format_g17(path.curve[i].imag());
        for (std::size_t j = 0; j < n; ++j) {
            os << "," << format_g17(path.rho[i][j].real()) << ","
               << format_g17(path.rho[i][j].imag()) << "," << format_g17(path.logrho[i][j].real())
               << "," << format_g17(path.logrho[i][j].imag());
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace magnuslab
