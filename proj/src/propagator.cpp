#include "magnuslab/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "magnuslab/errors.hpp"
#include "magnuslab/linalg.hpp"

namespace magnuslab {

namespace {

using State = std::vector<Complex>;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepControl {
    double safety = 0.9;
    double min_ratio = 0.2;
    double max_ratio = 5.0;
    // Fraction of the span used to convert the requested tolerance into a
    // per-step budget, so the accumulated estimate stays near tol.
    double epus_floor = 0.002;
};

// Adaptive DP5(4) over [t0, t1]. `rhs(t, y, dy)` fills dy. Error is
// controlled per unit step against atol + rtol*|y|. Returns the sum of
// accepted local error estimates.
template <typename Rhs>
double integrate_dp54(const Rhs& rhs, State& y, double t0, double t1, double rtol, double atol,
                      double span_total, const StepControl& ctl = {}) {
    const std::size_t dim = y.size();
    if (t1 <= t0) return 0.0;
    State k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), ytmp(dim), ynew(dim);
    double t = t0;
    double h = std::min((t1 - t0) * 0.1, 0.1);
    double accumulated = 0.0;
    rhs(t, y, k1);
    bool k1_fresh = true;
    long steps = 0;
    const long max_steps = 40'000'000;
    while (t < t1) {
        if (++steps > max_steps) throw NumericalError("propagate: step budget exhausted");
        h = std::min(h, t1 - t);
        if (h <= std::abs(t) * 1e-15 + 1e-300)
            throw NumericalError("propagate: step-size underflow at t = " + std::to_string(t));
        if (!k1_fresh) {
            rhs(t, y, k1);
            k1_fresh = true;
        }
        for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < dim; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < dim; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < dim; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, ytmp, k6);
        for (std::size_t i = 0; i < dim; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        rhs(t + h, ynew, k7);

        // Scaled RMS error, budgeted per unit step.
        const double budget = std::max(h / span_total, ctl.epus_floor);
        double err2 = 0.0;
        double raw = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const Complex ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                    e6 * k6[i] + e7 * k7[i]);
            const double sc = (atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]))) * budget;
            const double q = std::abs(ei) / sc;
            err2 += q * q;
            raw = std::max(raw, std::abs(ei));
        }
        const double err = std::sqrt(err2 / static_cast<double>(dim));
        if (err <= 1.0) {
            t += h;
            y.swap(ynew);
            k1.swap(k7);  // FSAL
            k1_fresh = true;
            accumulated += raw;
        } else {
            k1_fresh = true;  // k1 still matches (t, y)
        }
        const double factor = (err == 0.0)
                                  ? ctl.max_ratio
                                  : std::clamp(ctl.safety * std::pow(err, -0.2), ctl.min_ratio,
                                               ctl.max_ratio);
        h *= factor;
    }
    return accumulated;
}

std::vector<std::pair<double, double>> clipped_segments(const TimeDependentOperator& op, double t) {
    std::vector<double> cuts = op.breakpoints_below(t);
    cuts.insert(cuts.begin(), 0.0);
    cuts.push_back(t);
    std::vector<std::pair<double, double>> seg;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) seg.emplace_back(cuts[i], cuts[i + 1]);
    return seg;
}

void check_tol(double tol) {
    if (!(tol >= 1e-13)) throw ConfigError("propagate: tol must be >= 1e-13");
}

}  // namespace

PropagationResult propagate(const TimeDependentOperator& op, double t, Complex eps, double tol) {
    check_tol(tol);
    if (t < 0.0) throw ConfigError("propagate: t must be >= 0");
    const int n = op.dim();
    PropagationResult res;
    res.t = t;
    res.eps = eps;
    res.y = ComplexMatrix::identity(n);
    if (t == 0.0) return res;

    for (const auto& [a, b] : clipped_segments(op, t)) {
        const auto& piece = op.pieces()[op.piece_index(a)];
        if (piece.time_independent) {
            const ComplexMatrix am = op.evaluate(a);
            res.y = expm((eps * (b - a)) * am) * res.y;
            continue;
        }
        State y(res.y.data().begin(), res.y.data().end());
        auto rhs = [&](double s, const State& yy, State& dy) {
            const ComplexMatrix am = op.evaluate(s);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    Complex acc = 0.0;
                    for (int k = 0; k < n; ++k)
                        acc += am(i, k) * yy[static_cast<std::size_t>(k * n + j)];
                    dy[static_cast<std::size_t>(i * n + j)] = eps * acc;
                }
        };
        res.est_error += integrate_dp54(rhs, y, a, b, tol, tol, t);
        std::copy(y.begin(), y.end(), res.y.data().begin());
    }
    if (!res.y.all_finite()) throw NumericalError("propagate: non-finite solution");
    return res;
}

PropagationResult propagate_variational(const TimeDependentOperator& op, double t, Complex eps,
                                        double tol) {
    check_tol(tol);
    if (t < 0.0) throw ConfigError("propagate: t must be >= 0");
    const int n = op.dim();
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    PropagationResult res;
    res.t = t;
    res.eps = eps;
    res.y = ComplexMatrix::identity(n);
    res.dy_deps = ComplexMatrix(n);
    if (t == 0.0) return res;

    for (const auto& [a, b] : clipped_segments(op, t)) {
        const auto& piece = op.pieces()[op.piece_index(a)];
        if (piece.time_independent) {
            const ComplexMatrix am = op.evaluate(a);
            const double dt = b - a;
            const ComplexMatrix e = expm((eps * dt) * am);
            // Z -> E Z + dt A E Y  (A commutes with its own propagator)
            *res.dy_deps = e * (*res.dy_deps) + Complex(dt) * (am * (e * res.y));
            res.y = e * res.y;
            continue;
        }
        State y(2 * nn);
        std::copy(res.y.data().begin(), res.y.data().end(), y.begin());
        std::copy(res.dy_deps->data().begin(), res.dy_deps->data().end(), y.begin() + static_cast<long>(nn));
        auto rhs = [&](double s, const State& yy, State& dy) {
            const ComplexMatrix am = op.evaluate(s);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    Complex ay = 0.0, az = 0.0;
                    for (int k = 0; k < n; ++k) {
                        ay += am(i, k) * yy[static_cast<std::size_t>(k * n + j)];
                        az += am(i, k) * yy[nn + static_cast<std::size_t>(k * n + j)];
                    }
                    dy[static_cast<std::size_t>(i * n + j)] = eps * ay;
                    dy[nn + static_cast<std::size_t>(i * n + j)] = eps * az + ay;
                }
        };
        res.est_error += integrate_dp54(rhs, y, a, b, tol, tol, t);
        std::copy(y.begin(), y.begin() + static_cast<long>(nn), res.y.data().begin());
        std::copy(y.begin() + static_cast<long>(nn), y.end(), res.dy_deps->data().begin());
    }
    if (!res.y.all_finite() || !res.dy_deps->all_finite())
        throw NumericalError("propagate: non-finite solution");
    return res;
}

// ---------------------------------------------------------------------------
// EpsilonSeries
// ---------------------------------------------------------------------------

EpsilonSeries EpsilonSeries::build(const TimeDependentOperator& op, double t, double max_abs_eps,
                                   double tol) {
    if (!(max_abs_eps > 0.0)) throw ConfigError("EpsilonSeries: radius must be positive");
    EpsilonSeries es;
    es.radius_ = max_abs_eps;
    const int n = op.dim();
    const double kappa = norm_integral(op, t);
    const double x = kappa * max_abs_eps;
    if (x > 34.0)
        throw NumericalError(
            "EpsilonSeries: |eps| * integral ||A|| too large for double precision; "
            "reduce the search radius");
    // Truncation: smallest K with x^{K+1}/(K+1)! / (1 - x/(K+2)) below
    // 1e-16 relative to e^x.
    int order = 8;
    {
        double term = 1.0;
        double tail_target = 1e-16 * std::exp(x);
        int k = 0;
        while (k < 150) {
            term *= x / (k + 1);
            ++k;
            if (k + 2 > x && term / (1.0 - x / (k + 2)) < tail_target && k >= 8) break;
        }
        order = std::min(150, k + 2);
    }

    auto& coeff = es.coeff_;
    coeff.assign(static_cast<std::size_t>(order) + 1, ComplexMatrix(n));
    coeff[0] = ComplexMatrix::identity(n);
    if (t == 0.0) return es;

    const double r = max_abs_eps;
    for (const auto& [a, b] : clipped_segments(op, t)) {
        const auto& piece = op.pieces()[op.piece_index(a)];
        if (piece.time_independent) {
            // Exact polynomial update through a constant piece:
            // M_k <- sum_j (dt R A)^j / j! * M_{k-j}.
            const ComplexMatrix am = op.evaluate(a);
            const double dt = b - a;
            std::vector<ComplexMatrix> bpow;  // (dt R A)^j / j!
            bpow.push_back(ComplexMatrix::identity(n));
            const ComplexMatrix base = (Complex(dt * r)) * am;
            for (int j = 1; j <= order; ++j) {
                bpow.push_back((1.0 / j) * (bpow.back() * base));
                if (max_abs(bpow.back()) < 1e-30) {
                    bpow.resize(static_cast<std::size_t>(j) + 1);
                    break;
                }
            }
            std::vector<ComplexMatrix> next(coeff.size(), ComplexMatrix(n));
            for (int k = 0; k <= order; ++k) {
                ComplexMatrix acc(n);
                const int jmax = std::min<int>(k, static_cast<int>(bpow.size()) - 1);
                for (int j = 0; j <= jmax; ++j)
                    acc += bpow[static_cast<std::size_t>(j)] * coeff[static_cast<std::size_t>(k - j)];
                next[static_cast<std::size_t>(k)] = std::move(acc);
            }
            coeff = std::move(next);
            continue;
        }
        // Hierarchy M_k' = R A(t) M_{k-1}, integrated jointly.
        const std::size_t nn = static_cast<std::size_t>(n) * n;
        State y(static_cast<std::size_t>(order) * nn);
        for (int k = 1; k <= order; ++k)
            std::copy(coeff[static_cast<std::size_t>(k)].data().begin(),
                      coeff[static_cast<std::size_t>(k)].data().end(),
                      y.begin() + static_cast<long>((k - 1) * static_cast<long>(nn)));
        const ComplexMatrix& m0 = coeff[0];
        auto rhs = [&](double s, const State& yy, State& dy) {
            const ComplexMatrix am = op.evaluate(s);
            for (int k = 1; k <= order; ++k) {
                const long o = (k - 1) * static_cast<long>(nn);
                const long prev = (k - 2) * static_cast<long>(nn);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        Complex acc = 0.0;
                        if (k == 1) {
                            for (int kk = 0; kk < n; ++kk) acc += am(i, kk) * m0(kk, j);
                        } else {
                            for (int kk = 0; kk < n; ++kk)
                                acc += am(i, kk) * yy[static_cast<std::size_t>(prev + kk * n + j)];
                        }
                        dy[static_cast<std::size_t>(o + i * n + j)] = acc * r;
                    }
            }
        };
        StepControl ctl;
        ctl.epus_floor = 1.0;  // per-step control; summation noise dominates here
        integrate_dp54(rhs, y, a, b, tol, tol, t, ctl);
        for (int k = 1; k <= order; ++k)
            std::copy(y.begin() + static_cast<long>((k - 1) * static_cast<long>(nn)),
                      y.begin() + static_cast<long>(k * static_cast<long>(nn)),
                      coeff[static_cast<std::size_t>(k)].data().begin());
    }
    return es;
}

ComplexMatrix EpsilonSeries::eval(Complex eps) const {
    const Complex u = eps / radius_;
    ComplexMatrix acc = coeff_.back();
    for (int k = static_cast<int>(coeff_.size()) - 2; k >= 0; --k) {
        acc = u * acc;
        acc += coeff_[static_cast<std::size_t>(k)];
    }
    return acc;
}

ComplexMatrix EpsilonSeries::eval_derivative(Complex eps) const {
    const Complex u = eps / radius_;
    const int top = static_cast<int>(coeff_.size()) - 1;
    ComplexMatrix acc = Complex(static_cast<double>(top)) * coeff_.back();
    for (int k = top - 1; k >= 1; --k) {
        acc = u * acc;
        acc += Complex(static_cast<double>(k)) * coeff_[static_cast<std::size_t>(k)];
    }
    return (1.0 / radius_) * acc;
}

}  // namespace magnuslab
