#include "magnuslab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "magnuslab/errors.hpp"
#include "magnuslab/quadrature.hpp"

namespace magnuslab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string complex_str(Complex z) {
    std::ostringstream os;
    os.precision(16);
    os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Singular values: one-sided Jacobi. Columns of the working copy are
// rotated pairwise until mutually orthogonal; their lengths are the
// singular values. Keeps full relative accuracy for the small ones,
// which the Jordan rank tests rely on.
// ---------------------------------------------------------------------------

std::vector<double> singular_values(const ComplexMatrix& a_in) {
    ComplexMatrix a = a_in;
    const int n = a.dim();
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0;
                Complex apq = 0.0;
                for (int i = 0; i < n; ++i) {
                    app += std::norm(a(i, p));
                    aqq += std::norm(a(i, q));
                    apq += std::conj(a(i, p)) * a(i, q);
                }
                const double g = std::abs(apq);
                if (g <= 1e2 * kEps * std::sqrt(app * aqq) || g == 0.0) continue;
                off = std::max(off, g / std::sqrt(std::max(app * aqq, 1e-300)));
                const Complex phase = apq / g;  // e^{i phi}
                const double tau = (aqq - app) / (2.0 * g);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const Complex ph_conj = std::conj(phase);
                for (int i = 0; i < n; ++i) {
                    const Complex xp = a(i, p);
                    const Complex xq = a(i, q);
                    a(i, p) = c * xp - s * ph_conj * xq;
                    a(i, q) = s * phase * xp + c * xq;
                }
            }
        }
        if (off < 1e3 * kEps) break;
    }
    std::vector<double> sigma(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::norm(a(i, j));
        sigma[static_cast<std::size_t>(j)] = std::sqrt(s);
    }
    std::sort(sigma.begin(), sigma.end(), std::greater<double>());
    return sigma;
}

double spectral_norm(const ComplexMatrix& a) {
    const int n = a.dim();
    if (n == 1) return std::abs(a(0, 0));
    if (n == 2) {
        // sqrt of the larger eigenvalue of the 2x2 Gram matrix A*A.
        const double g11 = std::norm(a(0, 0)) + std::norm(a(1, 0));
        const double g22 = std::norm(a(0, 1)) + std::norm(a(1, 1));
        const Complex g12 = std::conj(a(0, 0)) * a(0, 1) + std::conj(a(1, 0)) * a(1, 1);
        const double m = 0.5 * (g11 + g22);
        const double d = std::sqrt(0.25 * (g11 - g22) * (g11 - g22) + std::norm(g12));
        return std::sqrt(std::max(0.0, m + d));
    }
    auto sigma = singular_values(a);
    return sigma.empty() ? 0.0 : sigma.front();
}

// ---------------------------------------------------------------------------
// Eigenvalues and Schur form
// ---------------------------------------------------------------------------

namespace {

std::pair<Complex, Complex> eig2x2(Complex a, Complex b, Complex c, Complex d) {
    const Complex m = 0.5 * (a + d);
    const Complex detv = a * d - b * c;
    Complex sq = std::sqrt(m * m - detv);
    // Choose the sign that avoids cancellation in m + sq.
    if (m.real() * sq.real() + m.imag() * sq.imag() < 0.0) sq = -sq;
    const Complex l1 = m + sq;
    const Complex l2 = (std::abs(l1) > 0.0) ? detv / l1 : m - sq;
    return {l1, l2};
}

struct Givens {
    double c;   // real cosine
    Complex s;  // complex sine
};

// Rotation with G* [a; b] = [r; 0].
Givens make_givens(Complex a, Complex b, Complex& r) {
    Givens g;
    const double aa = std::abs(a), ab = std::abs(b);
    if (ab == 0.0) {
        g.c = 1.0;
        g.s = 0.0;
        r = a;
        return g;
    }
    if (aa == 0.0) {
        g.c = 0.0;
        g.s = 1.0;
        r = b;
        return g;
    }
    const double nrm = std::hypot(aa, ab);
    const Complex alpha = a / aa;
    g.c = aa / nrm;
    g.s = alpha * std::conj(b) / nrm;
    r = alpha * nrm;
    return g;
}

// Householder reduction to upper Hessenberg, accumulating Q.
void hessenberg(ComplexMatrix& a, ComplexMatrix& q) {
    const int n = a.dim();
    q = ComplexMatrix::identity(n);
    for (int k = 0; k < n - 2; ++k) {
        double xnorm = 0.0;
        for (int i = k + 1; i < n; ++i) xnorm += std::norm(a(i, k));
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0.0) continue;
        const Complex x0 = a(k + 1, k);
        const Complex alpha = (std::abs(x0) == 0.0) ? Complex(-xnorm) : -(x0 / std::abs(x0)) * xnorm;
        std::vector<Complex> v(static_cast<std::size_t>(n), 0.0);
        v[static_cast<std::size_t>(k + 1)] = x0 - alpha;
        for (int i = k + 2; i < n; ++i) v[static_cast<std::size_t>(i)] = a(i, k);
        double vv = 0.0;
        for (const auto& t : v) vv += std::norm(t);
        if (vv == 0.0) continue;
        const double beta = 2.0 / vv;
        // A <- P A, P = I - beta v v*
        for (int j = 0; j < n; ++j) {
            Complex dot = 0.0;
            for (int i = k + 1; i < n; ++i) dot += std::conj(v[static_cast<std::size_t>(i)]) * a(i, j);
            dot *= beta;
            for (int i = k + 1; i < n; ++i) a(i, j) -= dot * v[static_cast<std::size_t>(i)];
        }
        // A <- A P
        for (int i = 0; i < n; ++i) {
            Complex dot = 0.0;
            for (int j = k + 1; j < n; ++j) dot += a(i, j) * v[static_cast<std::size_t>(j)];
            dot *= beta;
            for (int j = k + 1; j < n; ++j) a(i, j) -= dot * std::conj(v[static_cast<std::size_t>(j)]);
        }
        // Q <- Q P
        for (int i = 0; i < n; ++i) {
            Complex dot = 0.0;
            for (int j = k + 1; j < n; ++j) dot += q(i, j) * v[static_cast<std::size_t>(j)];
            dot *= beta;
            for (int j = k + 1; j < n; ++j) q(i, j) -= dot * std::conj(v[static_cast<std::size_t>(j)]);
        }
    }
}

// Shifted complex QR iteration on a Hessenberg matrix, explicit form.
// Deflates trailing eigenvalues; accumulates Q.
void hessenberg_qr(ComplexMatrix& t, ComplexMatrix& q) {
    const int n = t.dim();
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(t(i, j)));
    if (scale == 0.0) return;

    int hi = n - 1;
    int iters_at_block = 0;
    int total_iters = 0;
    const int max_total = 120 * n;
    while (hi > 0) {
        // Deflation test on the last subdiagonal of the active block.
        const double thresh =
            kEps * (std::abs(t(hi - 1, hi - 1)) + std::abs(t(hi, hi))) + 1e-300 + kEps * scale * 1e-2;
        if (std::abs(t(hi, hi - 1)) <= thresh) {
            t(hi, hi - 1) = 0.0;
            --hi;
            iters_at_block = 0;
            continue;
        }
        // Find the start of the active block.
        int lo = hi;
        while (lo > 0) {
            const double th =
                kEps * (std::abs(t(lo - 1, lo - 1)) + std::abs(t(lo, lo))) + 1e-300 + kEps * scale * 1e-2;
            if (std::abs(t(lo, lo - 1)) <= th) {
                t(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (++total_iters > max_total)
            throw NumericalError("eigenvalues: QR iteration failed to converge");

        // Wilkinson shift: trailing 2x2 eigenvalue nearest t(hi, hi).
        Complex mu;
        if (++iters_at_block % 24 == 0) {
            mu = t(hi, hi) + Complex(1.5 * std::abs(t(hi, hi - 1)), 0.5 * std::abs(t(hi, hi - 1)));
        } else {
            auto [l1, l2] = eig2x2(t(hi - 1, hi - 1), t(hi - 1, hi), t(hi, hi - 1), t(hi, hi));
            mu = (std::abs(l1 - t(hi, hi)) < std::abs(l2 - t(hi, hi))) ? l1 : l2;
        }

        // Explicit QR step on the block: W = T - mu I = G_lo ... G_{hi-1} R.
        for (int i = lo; i <= hi; ++i) t(i, i) -= mu;
        std::vector<Givens> rots(static_cast<std::size_t>(hi - lo));
        for (int k = lo; k < hi; ++k) {
            Complex r;
            Givens g = make_givens(t(k, k), t(k + 1, k), r);
            rots[static_cast<std::size_t>(k - lo)] = g;
            t(k, k) = r;
            t(k + 1, k) = 0.0;
            for (int j = k + 1; j < n; ++j) {
                const Complex x = t(k, j), y = t(k + 1, j);
                t(k, j) = g.c * x + g.s * y;
                t(k + 1, j) = -std::conj(g.s) * x + g.c * y;
            }
        }
        // T <- R G + mu I, applying each rotation on columns (k, k+1).
        for (int k = lo; k < hi; ++k) {
            const Givens& g = rots[static_cast<std::size_t>(k - lo)];
            const int top = std::min(k + 1, hi);
            for (int i = 0; i <= top; ++i) {
                const Complex x = t(i, k), y = t(i, k + 1);
                t(i, k) = g.c * x + std::conj(g.s) * y;
                t(i, k + 1) = -g.s * x + g.c * y;
            }
            for (int i = 0; i < n; ++i) {
                const Complex x = q(i, k), y = q(i, k + 1);
                q(i, k) = g.c * x + std::conj(g.s) * y;
                q(i, k + 1) = -g.s * x + g.c * y;
            }
        }
        for (int i = lo; i <= hi; ++i) t(i, i) += mu;
    }
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < i; ++j) t(i, j) = 0.0;
}

}  // namespace

SchurDecomposition schur(const ComplexMatrix& a) {
    if (a.dim() > kMaxEigenDim) throw ConfigError("schur: dimension exceeds N_max");
    if (!a.all_finite()) throw ConfigError("schur: non-finite entries");
    SchurDecomposition sd;
    sd.t = a;
    hessenberg(sd.t, sd.q);
    hessenberg_qr(sd.t, sd.q);
    return sd;
}

std::vector<Complex> eigenvalues(const ComplexMatrix& a) {
    const int n = a.dim();
    if (n > kMaxEigenDim) throw ConfigError("eigenvalues: dimension exceeds N_max");
    if (n == 1) return {a(0, 0)};
    if (n == 2) {
        auto [l1, l2] = eig2x2(a(0, 0), a(0, 1), a(1, 0), a(1, 1));
        return {l1, l2};
    }
    auto sd = schur(a);
    std::vector<Complex> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = sd.t(i, i);
    return ev;
}

EigenDecomposition eigen_decomposition(const ComplexMatrix& a) {
    const int n = a.dim();
    EigenDecomposition ed;
    auto sd = schur(a);
    ed.eigenvalues.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ed.eigenvalues[static_cast<std::size_t>(i)] = sd.t(i, i);

    // Eigenvectors of the triangular factor by back substitution; tiny
    // denominators are clamped, which degrades the conditioning estimate
    // rather than producing infinities.
    double tnorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) tnorm = std::max(tnorm, std::abs(sd.t(i, j)));
    ComplexMatrix z(n);
    for (int col = 0; col < n; ++col) {
        const Complex lambda = sd.t(col, col);
        z(col, col) = 1.0;
        for (int i = col - 1; i >= 0; --i) {
            Complex s = 0.0;
            for (int j = i + 1; j <= col; ++j) s += sd.t(i, j) * z(j, col);
            Complex denom = sd.t(i, i) - lambda;
            const double floor = kEps * (tnorm + 1e-300);
            if (std::abs(denom) < floor) denom = floor;
            z(i, col) = -s / denom;
        }
        double nrm = 0.0;
        for (int i = 0; i <= col; ++i) nrm += std::norm(z(i, col));
        nrm = std::sqrt(nrm);
        for (int i = 0; i <= col; ++i) z(i, col) /= nrm;
    }
    ComplexMatrix v = sd.q * z;
    auto sigma = singular_values(v);
    const double smin = sigma.back();
    ed.transform_condition = (smin > 0.0) ? sigma.front() / smin : std::numeric_limits<double>::infinity();
    ed.diagonalizable = std::isfinite(ed.transform_condition) && ed.transform_condition < 1e12;
    ed.transform = std::move(v);
    return ed;
}

// ---------------------------------------------------------------------------
// expm: scaling and squaring with the [13/13] Pade approximant.
// ---------------------------------------------------------------------------

ComplexMatrix expm(const ComplexMatrix& a_in) {
    if (!a_in.all_finite()) throw NumericalError("expm: non-finite entries");
    const int n = a_in.dim();
    // 1-norm (max column sum).
    double norm1 = 0.0;
    for (int j = 0; j < n; ++j) {
        double col = 0.0;
        for (int i = 0; i < n; ++i) col += std::abs(a_in(i, j));
        norm1 = std::max(norm1, col);
    }
    const double theta13 = 5.371920351148152;
    int s = 0;
    if (norm1 > theta13) {
        s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
        if (s > 64) throw NumericalError("expm: norm too large, scaling overflow");
    }
    ComplexMatrix a = a_in;
    if (s > 0) a *= Complex(std::ldexp(1.0, -s));

    static const double b[14] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};

    const ComplexMatrix id = ComplexMatrix::identity(n);
    const ComplexMatrix a2 = a * a;
    const ComplexMatrix a4 = a2 * a2;
    const ComplexMatrix a6 = a2 * a4;

    ComplexMatrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                           b[3] * a2 + b[1] * id);
    ComplexMatrix v =
        a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    ComplexMatrix e = solve(v - u, v + u);
    for (int k = 0; k < s; ++k) e = e * e;
    if (!e.all_finite()) throw NumericalError("expm: overflow in result");
    return e;
}

// ---------------------------------------------------------------------------
// logm: Schur + inverse scaling and squaring on the triangular factor.
// ---------------------------------------------------------------------------

namespace {

// Principal square root of an upper triangular matrix (Bjorck-Hammarling).
ComplexMatrix sqrtm_triangular(const ComplexMatrix& t) {
    const int n = t.dim();
    ComplexMatrix r(n);
    for (int i = 0; i < n; ++i) r(i, i) = std::sqrt(t(i, i));
    for (int d = 1; d < n; ++d) {
        for (int i = 0; i + d < n; ++i) {
            const int j = i + d;
            Complex s = t(i, j);
            for (int k = i + 1; k < j; ++k) s -= r(i, k) * r(k, j);
            const Complex denom = r(i, i) + r(j, j);
            if (std::abs(denom) == 0.0)
                throw NumericalError("logm: square root breakdown (eigenvalue pair on branch cut)");
            r(i, j) = s / denom;
        }
    }
    return r;
}

// log(I + P) via the [m/m] Pade approximant in partial-fraction form with
// Gauss-Legendre nodes mapped to [0,1].
ComplexMatrix log_pade(const ComplexMatrix& p, int m) {
    const int n = p.dim();
    const auto& rule = gauss_legendre(m);
    ComplexMatrix out(n);
    const ComplexMatrix id = ComplexMatrix::identity(n);
    for (int j = 0; j < m; ++j) {
        const double xj = 0.5 * (rule.nodes[static_cast<std::size_t>(j)] + 1.0);
        const double wj = 0.5 * rule.weights[static_cast<std::size_t>(j)];
        out += wj * solve(id + xj * p, p);
    }
    return out;
}

void check_log_spectrum(const std::vector<Complex>& ev, double scale) {
    for (const Complex& lambda : ev) {
        if (std::abs(lambda) <= 1e3 * kEps * scale)
            throw NumericalError("logm: singular matrix (zero eigenvalue)");
        if (lambda.real() <= 0.0 && std::abs(lambda.imag()) <= 1e3 * kEps * scale)
            throw NumericalError("logm: eigenvalue on the closed negative real axis: " +
                                 complex_str(lambda));
    }
}

}  // namespace

ComplexMatrix logm_principal(const ComplexMatrix& y) {
    const int n = y.dim();
    if (n > kMaxEigenDim) throw ConfigError("logm: dimension exceeds N_max");
    auto sd = schur(y);
    std::vector<Complex> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = sd.t(i, i);
    double scale = 0.0;
    for (const auto& l : ev) scale = std::max(scale, std::abs(l));
    check_log_spectrum(ev, std::max(scale, 1.0));

    // Diagonalization shortcut for comfortably non-defective matrices.
    if (n > 1) {
        auto ed = eigen_decomposition(y);
        if (ed.transform_condition < 1e6) {
            const ComplexMatrix& v = *ed.transform;
            ComplexMatrix lg(n);
            for (int i = 0; i < n; ++i) lg(i, i) = std::log(ed.eigenvalues[static_cast<std::size_t>(i)]);
            // V log(D) V^{-1} as solve(V^T, (V lg)^T)^T
            ComplexMatrix vl = v * lg;
            ComplexMatrix res = solve(v.adjoint(), vl.adjoint()).adjoint();
            return res;
        }
    }

    ComplexMatrix t = sd.t;
    int k = 0;
    const int max_sqrts = 50;
    auto dist_to_identity = [&](const ComplexMatrix& m) {
        ComplexMatrix d = m - ComplexMatrix::identity(m.dim());
        return max_abs(d);
    };
    while (dist_to_identity(t) > 0.2 && k < max_sqrts) {
        t = sqrtm_triangular(t);
        ++k;
    }
    if (k == max_sqrts) throw NumericalError("logm: inverse scaling did not contract");
    ComplexMatrix p = t - ComplexMatrix::identity(n);
    ComplexMatrix lg = log_pade(p, 12);
    lg *= Complex(std::ldexp(1.0, k));
    return sd.q * lg * sd.q.adjoint();
}

ComplexMatrix logm_contour(const ComplexMatrix& y, double gamma) {
    const int n = y.dim();
    if (!(gamma > 0.0 && gamma < M_PI)) throw ConfigError("logm_contour: gamma must be in (0, pi)");
    const double gp = 0.5 * (gamma + M_PI);
    const double r_out = std::exp(gp);
    const double r_in = std::exp(-gp);

    const auto ev = eigenvalues(y);
    for (const Complex& l : ev) {
        const double r = std::abs(l);
        const double arg = std::abs(std::arg(l));
        if (!(r > r_in * (1.0 + 1e-12) && r < r_out * (1.0 - 1e-12) && arg < gp * (1.0 - 1e-12)))
            throw NumericalError("logm_contour: eigenvalue on or outside the contour: " +
                                 complex_str(l));
    }

    const ComplexMatrix id = ComplexMatrix::identity(n);
    // (1/2*pi*i) * integral over one parametrized piece, composite GL.
    auto piece = [&](int nodes, auto z_of, auto dz_of, double a, double b) {
        const auto& rule = gauss_legendre(nodes);
        ComplexMatrix acc(n);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double u = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i];
            const double w = 0.5 * (b - a) * rule.weights[i];
            const Complex z = z_of(u);
            const Complex dz = dz_of(u);
            ComplexMatrix resolvent = solve(z * id - y, id);
            acc += (w * std::log(z) * dz) * resolvent;
        }
        return acc;
    };

    const Complex rot_minus = std::polar(1.0, -gp);
    const Complex rot_plus = std::polar(1.0, gp);
    ComplexMatrix prev(n);
    for (int nodes = 64; nodes <= 1024; nodes *= 2) {
        ComplexMatrix total(n);
        // radial segment at angle -gamma', outward
        total += piece(
            nodes, [&](double r) { return r * rot_minus; }, [&](double) { return rot_minus; }, r_in,
            r_out);
        // outer arc, counterclockwise
        total += piece(
            nodes, [&](double th) { return std::polar(r_out, th); },
            [&](double th) { return Complex(0, 1) * std::polar(r_out, th); }, -gp, gp);
        // radial segment at angle +gamma', inward
        total += piece(
            nodes, [&](double r) { return r * rot_plus; }, [&](double) { return rot_plus; }, r_out,
            r_in);
        // inner arc, clockwise in angle
        total += piece(
            nodes, [&](double th) { return std::polar(r_in, th); },
            [&](double th) { return Complex(0, 1) * std::polar(r_in, th); }, gp, -gp);
        total *= Complex(0.0, -1.0 / (2.0 * M_PI));  // 1/(2 pi i)
        if (nodes > 64) {
            const double change = max_abs(total - prev);
            if (change < 1e-10 * std::max(1.0, max_abs(total))) return total;
        }
        prev = total;
    }
    throw NumericalError("logm_contour: quadrature did not converge");
}

// ---------------------------------------------------------------------------
// Characteristic polynomial, discriminant, Jordan structure
// ---------------------------------------------------------------------------

std::vector<Complex> characteristic_polynomial(const ComplexMatrix& a) {
    std::vector<Complex> c, dc;
    characteristic_polynomial_with_derivative(a, ComplexMatrix(a.dim()), c, dc);
    return c;
}

void characteristic_polynomial_with_derivative(const ComplexMatrix& a, const ComplexMatrix& da,
                                               std::vector<Complex>& c, std::vector<Complex>& dc) {
    const int n = a.dim();
    c.assign(static_cast<std::size_t>(n) + 1, Complex(0.0));
    dc.assign(static_cast<std::size_t>(n) + 1, Complex(0.0));
    c[static_cast<std::size_t>(n)] = 1.0;
    // Faddeev-LeVerrier, run in dual numbers (value, derivative).
    ComplexMatrix m = a;
    ComplexMatrix dm = da;
    c[static_cast<std::size_t>(n - 1)] = -m.trace();
    dc[static_cast<std::size_t>(n - 1)] = -dm.trace();
    for (int k = 2; k <= n; ++k) {
        ComplexMatrix shifted = m;
        for (int i = 0; i < n; ++i) shifted(i, i) += c[static_cast<std::size_t>(n - k + 1)];
        ComplexMatrix dshifted = dm;
        for (int i = 0; i < n; ++i) dshifted(i, i) += dc[static_cast<std::size_t>(n - k + 1)];
        dm = da * shifted + a * dshifted;
        m = a * shifted;
        c[static_cast<std::size_t>(n - k)] = -m.trace() / static_cast<double>(k);
        dc[static_cast<std::size_t>(n - k)] = -dm.trace() / static_cast<double>(k);
    }
}

namespace {

// Sylvester matrix of the monic polynomial p (degree n) and p'.
ComplexMatrix sylvester_of_charpoly(const std::vector<Complex>& c) {
    const int n = static_cast<int>(c.size()) - 1;
    const int m = 2 * n - 1;
    ComplexMatrix s(m);
    for (int row = 0; row < n - 1; ++row)
        for (int k = 0; k <= n; ++k) s(row, row + k) = c[static_cast<std::size_t>(n - k)];
    for (int row = 0; row < n; ++row)
        for (int k = 0; k <= n - 1; ++k)
            s(n - 1 + row, row + k) =
                static_cast<double>(n - k) * c[static_cast<std::size_t>(n - k)];
    return s;
}

int disc_sign(int n) { return (((n * (n - 1)) / 2) % 2 == 0) ? 1 : -1; }

}  // namespace

Complex polynomial_discriminant(const std::vector<Complex>& c) {
    const int n = static_cast<int>(c.size()) - 1;
    if (n < 1) throw ConfigError("polynomial_discriminant: degree must be >= 1");
    if (n == 1) return 1.0;
    if (n == 2) return c[1] * c[1] - 4.0 * c[0];
    return static_cast<double>(disc_sign(n)) * det(sylvester_of_charpoly(c));
}

Complex discriminant(const ComplexMatrix& a) {
    const int n = a.dim();
    if (n > kMaxEigenDim) throw ConfigError("discriminant: dimension exceeds N_max");
    if (n == 2) {
        const Complex tr = a(0, 0) + a(1, 1);
        return tr * tr - 4.0 * (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0));
    }
    return polynomial_discriminant(characteristic_polynomial(a));
}

DiscriminantValue discriminant_with_derivative(const ComplexMatrix& a, const ComplexMatrix& da) {
    const int n = a.dim();
    if (n > kMaxEigenDim) throw ConfigError("discriminant: dimension exceeds N_max");
    DiscriminantValue out;
    if (n == 1) {
        out.value = 1.0;
        out.deriv = 0.0;
        return out;
    }
    if (n == 2) {
        const Complex tr = a(0, 0) + a(1, 1);
        const Complex dtr = da(0, 0) + da(1, 1);
        const Complex dt = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        const Complex ddt = da(0, 0) * a(1, 1) + a(0, 0) * da(1, 1) - da(0, 1) * a(1, 0) -
                            a(0, 1) * da(1, 0);
        out.value = tr * tr - 4.0 * dt;
        out.deriv = 2.0 * tr * dtr - 4.0 * ddt;
        return out;
    }
    std::vector<Complex> c, dc;
    characteristic_polynomial_with_derivative(a, da, c, dc);
    const ComplexMatrix s = sylvester_of_charpoly(c);
    const ComplexMatrix ds = sylvester_of_charpoly(dc);  // entries are linear in the coefficients
    const double sgn = disc_sign(n);
    out.value = sgn * det(s);
    // d det(S) = sum_j det(S with column j replaced by dS_j).
    Complex dd = 0.0;
    const int m = s.dim();
    for (int j = 0; j < m; ++j) {
        ComplexMatrix sj = s;
        for (int i = 0; i < m; ++i) sj(i, j) = ds(i, j);
        dd += det(sj);
    }
    out.deriv = sgn * dd;
    return out;
}

int max_jordan_block(const ComplexMatrix& y, Complex rho0, double tol) {
    const int n = y.dim();
    const double ynorm = spectral_norm(y);
    const auto ev = eigenvalues(y);
    double mind = std::numeric_limits<double>::infinity();
    for (const auto& l : ev) mind = std::min(mind, std::abs(l - rho0));
    if (mind > 1e-4 * std::max(1.0, ynorm))
        throw NumericalError("max_jordan_block: rho0 is not near an eigenvalue of Y");

    ComplexMatrix b = y;
    for (int i = 0; i < n; ++i) b(i, i) -= rho0;
    const double thresh = tol * std::max(ynorm, 1e-300);
    auto rank_of = [&](const ComplexMatrix& m) {
        int r = 0;
        for (double s : singular_values(m))
            if (s > thresh) ++r;
        return r;
    };
    ComplexMatrix p = b;
    int prev_rank = rank_of(p);
    if (prev_rank == n) throw NumericalError("max_jordan_block: rho0 is not an eigenvalue at this tolerance");
    for (int k = 1; k <= n; ++k) {
        ComplexMatrix pn = p * b;
        const int r = rank_of(pn);
        if (r == prev_rank) return k;
        prev_rank = r;
        p = std::move(pn);
    }
    return n;
}

double angle(const std::vector<Complex>& x, const std::vector<Complex>& y) {
    if (x.size() != y.size()) throw ConfigError("angle: dimension mismatch");
    double nx = 0.0, ny = 0.0;
    Complex dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        nx += std::norm(x[i]);
        ny += std::norm(y[i]);
        dot += std::conj(x[i]) * y[i];
    }
    if (nx == 0.0 || ny == 0.0) throw ConfigError("angle: zero vector");
    double c = dot.real() / std::sqrt(nx * ny);
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c);
}

}  // namespace magnuslab
