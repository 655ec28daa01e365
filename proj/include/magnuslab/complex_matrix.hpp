#pragma once

#include <complex>
#include <initializer_list>
#include <string>
#include <vector>

namespace magnuslab {

using Complex = std::complex<double>;

/// Dense n x n complex matrix, row-major storage. Value semantics; all
/// operations return fresh matrices. This is the universal carrier for
/// A(t), fundamental solutions Y and series terms.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(int n);
    ComplexMatrix(int n, std::initializer_list<Complex> entries);

    static ComplexMatrix identity(int n);
    static ComplexMatrix zero(int n) { return ComplexMatrix(n); }
    static ComplexMatrix diagonal(std::initializer_list<Complex> d);

    int dim() const { return n_; }

    Complex& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    const Complex& operator()(int i, int j) const {
        return a_[static_cast<std::size_t>(i) * n_ + j];
    }

    ComplexMatrix& operator+=(const ComplexMatrix& rhs);
    ComplexMatrix& operator-=(const ComplexMatrix& rhs);
    ComplexMatrix& operator*=(Complex s);

    ComplexMatrix adjoint() const;
    Complex trace() const;
    bool all_finite() const;

    const std::vector<Complex>& data() const { return a_; }
    std::vector<Complex>& data() { return a_; }

private:
    int n_ = 0;
    std::vector<Complex> a_;
};

ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs);
ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs);
ComplexMatrix operator*(const ComplexMatrix& lhs, const ComplexMatrix& rhs);
ComplexMatrix operator*(Complex s, ComplexMatrix m);
ComplexMatrix operator*(ComplexMatrix m, Complex s);
std::vector<Complex> operator*(const ComplexMatrix& m, const std::vector<Complex>& x);

/// [A, B] = AB - BA.
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

double frobenius_norm(const ComplexMatrix& m);
double max_abs(const ComplexMatrix& m);

/// Determinant by LU with partial pivoting.
Complex det(const ComplexMatrix& m);

/// Solves A x = b. Throws NumericalError when A is singular to working precision.
std::vector<Complex> solve(const ComplexMatrix& a, const std::vector<Complex>& b);

/// Solves A X = B columnwise.
ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix inverse(const ComplexMatrix& m);

std::string to_string(const ComplexMatrix& m);

}  // namespace magnuslab
