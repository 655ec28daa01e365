#include "magnuslab/complex_matrix.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "magnuslab/errors.hpp"

namespace magnuslab {

ComplexMatrix::ComplexMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n) {
    if (n < 1) throw ConfigError("matrix dimension must be >= 1");
}

ComplexMatrix::ComplexMatrix(int n, std::initializer_list<Complex> entries) : ComplexMatrix(n) {
    if (static_cast<int>(entries.size()) != n * n)
        throw ConfigError("matrix initializer size does not match dimension");
    std::size_t k = 0;
    for (Complex v : entries) a_[k++] = v;
}

ComplexMatrix ComplexMatrix::identity(int n) {
    ComplexMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::initializer_list<Complex> d) {
    ComplexMatrix m(static_cast<int>(d.size()));
    int i = 0;
    for (Complex v : d) {
        m(i, i) = v;
        ++i;
    }
    return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
    if (n_ != rhs.n_) throw ConfigError("matrix dimension mismatch in +");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += rhs.a_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& rhs) {
    if (n_ != rhs.n_) throw ConfigError("matrix dimension mismatch in -");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= rhs.a_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
    for (auto& v : a_) v *= s;
    return *this;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix m(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
}

Complex ComplexMatrix::trace() const {
    Complex t = 0.0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

bool ComplexMatrix::all_finite() const {
    for (const auto& v : a_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs += rhs; }
ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs -= rhs; }

ComplexMatrix operator*(const ComplexMatrix& lhs, const ComplexMatrix& rhs) {
    const int n = lhs.dim();
    if (n != rhs.dim()) throw ConfigError("matrix dimension mismatch in *");
    ComplexMatrix out(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const Complex v = lhs(i, k);
            if (v == Complex(0.0)) continue;
            for (int j = 0; j < n; ++j) out(i, j) += v * rhs(k, j);
        }
    }
    return out;
}

ComplexMatrix operator*(Complex s, ComplexMatrix m) { return m *= s; }
ComplexMatrix operator*(ComplexMatrix m, Complex s) { return m *= s; }

std::vector<Complex> operator*(const ComplexMatrix& m, const std::vector<Complex>& x) {
    const int n = m.dim();
    if (static_cast<int>(x.size()) != n) throw ConfigError("matrix-vector dimension mismatch");
    std::vector<Complex> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Complex s = 0.0;
        for (int j = 0; j < n; ++j) s += m(i, j) * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = s;
    }
    return y;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a * b - b * a;
}

double frobenius_norm(const ComplexMatrix& m) {
    double s = 0.0;
    for (const auto& v : m.data()) s += std::norm(v);
    return std::sqrt(s);
}

double max_abs(const ComplexMatrix& m) {
    double s = 0.0;
    for (const auto& v : m.data()) s = std::max(s, std::abs(v));
    return s;
}

namespace {

// LU with partial pivoting, in place. Returns the permutation sign, or 0
// if the matrix is singular to working precision.
int lu_decompose(ComplexMatrix& a, std::vector<int>& piv) {
    const int n = a.dim();
    piv.resize(static_cast<std::size_t>(n));
    int sign = 1;
    for (int col = 0; col < n; ++col) {
        int p = col;
        double best = std::abs(a(col, col));
        for (int r = col + 1; r < n; ++r) {
            const double v = std::abs(a(r, col));
            if (v > best) {
                best = v;
                p = r;
            }
        }
        if (best == 0.0) return 0;
        piv[static_cast<std::size_t>(col)] = p;
        if (p != col) {
            for (int j = 0; j < n; ++j) std::swap(a(p, j), a(col, j));
            sign = -sign;
        }
        const Complex d = a(col, col);
        for (int r = col + 1; r < n; ++r) {
            const Complex f = a(r, col) / d;
            a(r, col) = f;
            for (int j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
        }
    }
    return sign;
}

}  // namespace

Complex det(const ComplexMatrix& m) {
    ComplexMatrix a = m;
    std::vector<int> piv;
    const int sign = lu_decompose(a, piv);
    if (sign == 0) return 0.0;
    Complex d = static_cast<double>(sign);
    for (int i = 0; i < a.dim(); ++i) d *= a(i, i);
    return d;
}

std::vector<Complex> solve(const ComplexMatrix& a_in, const std::vector<Complex>& b) {
    ComplexMatrix a = a_in;
    const int n = a.dim();
    if (static_cast<int>(b.size()) != n) throw ConfigError("solve: rhs dimension mismatch");
    std::vector<int> piv;
    if (lu_decompose(a, piv) == 0) throw NumericalError("solve: singular matrix");
    std::vector<Complex> x = b;
    for (int i = 0; i < n; ++i) {
        std::swap(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(piv[static_cast<std::size_t>(i)])]);
        for (int j = 0; j < i; ++j) x[static_cast<std::size_t>(i)] -= a(i, j) * x[static_cast<std::size_t>(j)];
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) x[static_cast<std::size_t>(i)] -= a(i, j) * x[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(i)] /= a(i, i);
    }
    return x;
}

ComplexMatrix solve(const ComplexMatrix& a_in, const ComplexMatrix& b) {
    ComplexMatrix a = a_in;
    const int n = a.dim();
    if (b.dim() != n) throw ConfigError("solve: rhs dimension mismatch");
    std::vector<int> piv;
    if (lu_decompose(a, piv) == 0) throw NumericalError("solve: singular matrix");
    ComplexMatrix x = b;
    for (int i = 0; i < n; ++i) {
        const int p = piv[static_cast<std::size_t>(i)];
        if (p != i)
            for (int c = 0; c < n; ++c) std::swap(x(i, c), x(p, c));
        for (int j = 0; j < i; ++j)
            for (int c = 0; c < n; ++c) x(i, c) -= a(i, j) * x(j, c);
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j)
            for (int c = 0; c < n; ++c) x(i, c) -= a(i, j) * x(j, c);
        for (int c = 0; c < n; ++c) x(i, c) /= a(i, i);
    }
    return x;
}

ComplexMatrix inverse(const ComplexMatrix& m) {
    return solve(m, ComplexMatrix::identity(m.dim()));
}

std::string to_string(const ComplexMatrix& m) {
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < m.dim(); ++i) {
        os << (i == 0 ? "[" : " ");
        for (int j = 0; j < m.dim(); ++j) {
            const Complex v = m(i, j);
            os << "(" << v.real() << (v.imag() < 0 ? "" : "+") << v.imag() << "i)";
            if (j + 1 < m.dim()) os << ", ";
        }
        os << (i + 1 == m.dim() ? "]" : ";\n");
    }
    return os.str();
}

}  // namespace magnuslab
