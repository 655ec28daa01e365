#include "magnuslab/magnus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "magnuslab/errors.hpp"
#include "magnuslab/linalg.hpp"
#include "magnuslab/propagator.hpp"
#include "magnuslab/quadrature.hpp"

namespace magnuslab {

int count_fit_points(const std::vector<double>& term_norms);

Rational bernoulli(int k) {
    if (k < 0 || k > 64) throw ConfigError("bernoulli: k must be in [0, 64]");
    static std::vector<Rational> cache = {Rational(1)};
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    while (static_cast<int>(cache.size()) <= k) {
        const int m = static_cast<int>(cache.size());
        // B_m = -1/(m+1) * sum_{j<m} C(m+1, j) B_j
        Rational sum = 0;
        mpz_class binom = 1;  // C(m+1, j), updated incrementally
        for (int j = 0; j < m; ++j) {
            sum += Rational(binom) * cache[static_cast<std::size_t>(j)];
            binom = binom * (m + 1 - j) / (j + 1);
        }
        Rational b = -sum / Rational(m + 1);
        b.canonicalize();
        cache.push_back(b);
    }
    return cache[static_cast<std::size_t>(k)];
}

double bernoulli_over_factorial(int k) {
    static std::vector<double> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    while (static_cast<int>(cache.size()) <= k) {
        const int m = static_cast<int>(cache.size());
        mpq_class f = bernoulli(m);
        mpz_class fact = 1;
        for (int j = 2; j <= m; ++j) fact *= j;
        f /= Rational(fact);
        cache.push_back(f.get_d());
    }
    return cache[static_cast<std::size_t>(k)];
}

namespace {

void compositions_rec(int remaining, int parts, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        cur.push_back(remaining);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int first = 1; first <= remaining - (parts - 1); ++first) {
        cur.push_back(first);
        compositions_rec(remaining - first, parts - 1, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<std::vector<int>> compositions(int total, int parts) {
    if (parts < 1 || total < parts) return {};
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    compositions_rec(total, parts, cur, out);
    return out;
}

ComplexMatrix dexpinv_apply(const ComplexMatrix& omega, const ComplexMatrix& a, int order) {
    if (order < 0 || order > 64) throw ConfigError("dexpinv_apply: order must be in [0, 64]");
    ComplexMatrix acc = a;  // B_0 = 1
    ComplexMatrix ad = a;
    for (int k = 1; k <= order; ++k) {
        ad = commutator(omega, ad);
        const double w = bernoulli_over_factorial(k);
        if (w != 0.0) acc += Complex(w) * ad;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Term computation
//
// Within each subinterval the integrands are known at the four
// Gauss-Legendre nodes; the cumulative integral to the subinterval end
// uses the GL weights, and the values *at* the GL nodes themselves come
// from integrating the cubic interpolant (partial weights W below). The
// nested-commutator sums follow the recursive generation
//   S_m^(1) = [Omega_{m-1}, A],
//   S_m^(j) = sum_{k=1}^{m-j} [Omega_k, S_{m-k}^(j-1)],
//   integrand_m = sum_j (B_j / j!) S_m^(j),
// equivalent to the composition sum over k_1 + ... + k_j = m - 1.
// ---------------------------------------------------------------------------

namespace {

struct UnitRule {
    double u[4];        // GL nodes on [0, 1]
    double w[4];        // GL weights on [0, 1]
    double W[4][4];     // W[i][j] = integral_0^{u_i} L_j(u) du
};

const UnitRule& unit_rule() {
    static UnitRule rule = [] {
        UnitRule r;
        const auto& gl = gauss_legendre(4);
        for (int i = 0; i < 4; ++i) {
            r.u[i] = 0.5 * (gl.nodes[static_cast<std::size_t>(i)] + 1.0);
            r.w[i] = 0.5 * gl.weights[static_cast<std::size_t>(i)];
        }
        // Lagrange basis L_j over the 4 unit nodes, integrated with an
        // 8-point rule (exact for cubics).
        const auto& fine = gauss_legendre(8);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (std::size_t q = 0; q < fine.nodes.size(); ++q) {
                    const double x = 0.5 * r.u[i] * (fine.nodes[q] + 1.0);
                    const double wq = 0.5 * r.u[i] * fine.weights[q];
                    double l = 1.0;
                    for (int k = 0; k < 4; ++k)
                        if (k != j) l *= (x - r.u[k]) / (r.u[j] - r.u[k]);
                    acc += wq * l;
                }
                r.W[i][j] = acc;
            }
        }
        return r;
    }();
    return rule;
}

struct LevelResult {
    std::vector<ComplexMatrix> omega_final;  // Omega_k(t)
    SeriesGrid grid;                         // filled when requested
};

LevelResult compute_level(const TimeDependentOperator& op, double t, int terms, int subint,
                          bool keep_grid) {
    const int n = op.dim();
    const int K = terms;
    const UnitRule& ur = unit_rule();

    std::vector<double> cuts = op.breakpoints_below(t);
    cuts.insert(cuts.begin(), 0.0);
    cuts.push_back(t);

    LevelResult out;
    out.omega_final.assign(static_cast<std::size_t>(K), ComplexMatrix(n));
    std::vector<ComplexMatrix>& omega_end = out.omega_final;  // prefix values, updated in place

    if (keep_grid) {
        out.grid.t_final = t;
        out.grid.nodes.push_back(0.0);
        out.grid.omega.assign(static_cast<std::size_t>(K), {});
        for (int k = 0; k < K; ++k) out.grid.omega[static_cast<std::size_t>(k)].push_back(ComplexMatrix(n));
    }

    // Node-local scratch: Omega_k and the S table at the 4 GL nodes.
    std::vector<std::vector<ComplexMatrix>> omega_at(4);       // [node][k-1]
    std::vector<std::vector<std::vector<ComplexMatrix>>> stab(4);  // [node][m][j]

    for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
        const double lo = cuts[seg], hi = cuts[seg + 1];
        if (!(hi > lo)) continue;
        const double h_piece = (hi - lo) / subint;
        for (int si = 0; si < subint; ++si) {
            const double x0 = lo + si * h_piece;
            const double h = h_piece;
            ComplexMatrix a_at[4];
            for (int nd = 0; nd < 4; ++nd) a_at[nd] = op.evaluate(x0 + h * ur.u[nd]);
            for (int nd = 0; nd < 4; ++nd) {
                omega_at[static_cast<std::size_t>(nd)].assign(static_cast<std::size_t>(K), ComplexMatrix(n));
                stab[static_cast<std::size_t>(nd)].assign(static_cast<std::size_t>(K) + 1, {});
            }
            ComplexMatrix g[4];
            for (int m = 1; m <= K; ++m) {
                // Integrand of term m at the GL nodes.
                for (int nd = 0; nd < 4; ++nd) {
                    auto& om = omega_at[static_cast<std::size_t>(nd)];
                    auto& st = stab[static_cast<std::size_t>(nd)];
                    if (m == 1) {
                        g[nd] = a_at[nd];
                        continue;
                    }
                    // Row m of the S table at this node.
                    auto& row = st[static_cast<std::size_t>(m)];
                    row.assign(static_cast<std::size_t>(m), ComplexMatrix(n));  // row[j], j=1..m-1
                    row[1] = commutator(om[static_cast<std::size_t>(m - 2)], a_at[nd]);
                    for (int j = 2; j <= m - 1; ++j) {
                        ComplexMatrix acc(n);
                        for (int k = 1; k <= m - j; ++k)
                            acc += commutator(om[static_cast<std::size_t>(k - 1)],
                                              stab[static_cast<std::size_t>(nd)][static_cast<std::size_t>(m - k)]
                                                  [static_cast<std::size_t>(j - 1)]);
                        row[static_cast<std::size_t>(j)] = std::move(acc);
                    }
                    ComplexMatrix integrand(n);
                    for (int j = 1; j <= m - 1; ++j) {
                        const double w = bernoulli_over_factorial(j);
                        if (w != 0.0) integrand += Complex(w) * row[static_cast<std::size_t>(j)];
                    }
                    g[nd] = std::move(integrand);
                }
                // Omega_m at the GL nodes (partial weights) and at the end.
                for (int nd = 0; nd < 4; ++nd) {
                    ComplexMatrix acc = omega_end[static_cast<std::size_t>(m - 1)];
                    for (int j = 0; j < 4; ++j) acc += Complex(h * ur.W[nd][j]) * g[j];
                    omega_at[static_cast<std::size_t>(nd)][static_cast<std::size_t>(m - 1)] = std::move(acc);
                }
                // The GL-node values above read the start prefix, so the end
                // update must come after them.
                ComplexMatrix end_acc = omega_end[static_cast<std::size_t>(m - 1)];
                for (int j = 0; j < 4; ++j) end_acc += Complex(h * ur.w[j]) * g[j];
                omega_end[static_cast<std::size_t>(m - 1)] = std::move(end_acc);
            }
            if (keep_grid) {
                for (int nd = 0; nd < 4; ++nd) {
                    out.grid.nodes.push_back(x0 + h * ur.u[nd]);
                    for (int k = 0; k < K; ++k)
                        out.grid.omega[static_cast<std::size_t>(k)].push_back(
                            omega_at[static_cast<std::size_t>(nd)][static_cast<std::size_t>(k)]);
                }
                out.grid.nodes.push_back(x0 + h);
                for (int k = 0; k < K; ++k)
                    out.grid.omega[static_cast<std::size_t>(k)].push_back(
                        omega_end[static_cast<std::size_t>(k)]);
            }
        }
    }
    return out;
}

}  // namespace

SeriesGrid magnus_series_grid(const TimeDependentOperator& op, double t, int terms,
                              int n_subintervals) {
    if (terms < 1) throw ConfigError("magnus: need at least one term");
    return compute_level(op, t, terms, n_subintervals, true).grid;
}

MagnusSeriesResult magnus_terms(const TimeDependentOperator& op, double t, int terms,
                                int n_subintervals, const MagnusOptions& options) {
    if (terms < 1 || terms > options.max_terms)
        throw ConfigError("magnus_terms: terms must be in [1, " +
                          std::to_string(options.max_terms) + "]");
    if (t < 0.0) throw ConfigError("magnus_terms: t must be >= 0");
    const int subint0 = std::max(options.min_subintervals, n_subintervals);

    MagnusSeriesResult res;
    std::vector<ComplexMatrix> prev;
    int subint = subint0;
    int levels = 0;
    for (;; subint *= 2, ++levels) {
        auto level = compute_level(op, t, terms, subint, false);
        if (!prev.empty()) {
            double max_norm = 0.0;
            for (const auto& m : level.omega_final) max_norm = std::max(max_norm, spectral_norm(m));
            double worst = 0.0;
            bool ok = true;
            for (int k = 0; k < terms; ++k) {
                const double delta =
                    spectral_norm(level.omega_final[static_cast<std::size_t>(k)] -
                                  prev[static_cast<std::size_t>(k)]);
                const double cur = spectral_norm(level.omega_final[static_cast<std::size_t>(k)]);
                const double bound =
                    std::max(options.rtol * cur, options.atol_factor * std::max(max_norm, 1e-30));
                worst = std::max(worst, delta / std::max(bound, 1e-300));
                if (delta > bound) ok = false;
            }
            res.last_delta = worst;
            if (ok) {
                prev = std::move(level.omega_final);
                break;
            }
        }
        prev = std::move(level.omega_final);
        if (subint * 2 > options.max_subintervals)
            throw NumericalError("magnus_terms: refinement cap exceeded (last relative delta " +
                                 std::to_string(res.last_delta) + ")");
    }
    res.refinement_levels = levels;
    res.subintervals_per_piece = subint;
    res.terms = std::move(prev);
    res.term_norms.reserve(res.terms.size());
    for (const auto& m : res.terms) res.term_norms.push_back(spectral_norm(m));
    res.partial_sums.reserve(res.terms.size());
    ComplexMatrix acc(op.dim());
    for (const auto& m : res.terms) {
        acc += m;
        res.partial_sums.push_back(acc);
    }
    if (count_fit_points(res.term_norms) >= 8) {
        res.empirical_radius = empirical_radius(res.term_norms);
        res.radius_available = true;
    }
    return res;
}

namespace {

// A term counts as nonzero when it does not fall far below the geometric
// interpolation of its neighbours: exact zeros (odd Bernoulli numbers)
// and cancellation noise sit many orders under the local trend, while
// genuinely fast-decaying sequences track it and keep all their points.
std::vector<std::pair<double, double>> fit_points(const std::vector<double>& norms) {
    std::vector<std::pair<double, double>> pts;  // (k, log norm), k 1-based
    for (std::size_t i = 0; i < norms.size(); ++i) {
        const double v = norms[i];
        if (!(v > 0.0)) continue;
        if (i > 0 && i + 1 < norms.size() && norms[i - 1] > 0.0 && norms[i + 1] > 0.0) {
            const double local = std::sqrt(norms[i - 1] * norms[i + 1]);
            if (v < 1e-6 * local) continue;
        } else {
            double neighbour = 0.0;
            if (i > 0)
                neighbour = norms[i - 1];
            else if (i + 1 < norms.size())
                neighbour = norms[i + 1];
            if (neighbour > 0.0 && v < 1e-12 * neighbour) continue;
        }
        pts.emplace_back(static_cast<double>(i + 1), std::log(v));
    }
    return pts;
}

}  // namespace

int count_fit_points(const std::vector<double>& term_norms) {
    return static_cast<int>(fit_points(term_norms).size());
}

RadiusFit empirical_radius(const std::vector<double>& term_norms) {
    auto pts = fit_points(term_norms);
    if (pts.size() < 8)
        throw NumericalError("empirical_radius: needs at least 8 nonzero terms, have " +
                             std::to_string(pts.size()));
    // Fit on the upper half of the available k range.
    const std::size_t start = pts.size() / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(pts.size() - start);
    for (std::size_t i = start; i < pts.size(); ++i) {
        sx += pts[i].first;
        sy += pts[i].second;
        sxx += pts[i].first * pts[i].first;
        sxy += pts[i].first * pts[i].second;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    double rss = 0.0;
    for (std::size_t i = start; i < pts.size(); ++i) {
        const double r = pts[i].second - (slope * pts[i].first + intercept);
        rss += r * r;
    }
    RadiusFit fit;
    fit.slope = slope;
    fit.points_used = static_cast<int>(m);
    fit.fit_residual = std::sqrt(rss / m);
    if (slope < -std::log(1e6)) {
        fit.is_infinite = true;
        fit.value = std::numeric_limits<double>::infinity();
    } else {
        fit.value = std::exp(-slope);
    }
    return fit;
}

ReconstructionResult reconstruct(const TimeDependentOperator& op, double t, int terms, Complex eps,
                                 const MagnusOptions& options) {
    auto series = magnus_terms(op, t, terms, options.min_subintervals, options);
    const auto ref = propagate(op, t, eps);
    ReconstructionResult out;
    out.errors_by_order.reserve(series.terms.size());
    ComplexMatrix sum(op.dim());
    Complex epspow = 1.0;
    for (const auto& term : series.terms) {
        epspow *= eps;
        sum += epspow * term;
        const ComplexMatrix y = expm(sum);
        out.errors_by_order.push_back(spectral_norm(y - ref.y));
        out.y_magnus = y;
    }
    return out;
}

}  // namespace magnuslab
