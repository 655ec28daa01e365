#pragma once

#include <optional>
#include <vector>

#include "magnuslab/complex_matrix.hpp"

namespace magnuslab {

/// Largest dimension accepted by the eigenvalue-based operations. All
/// analyses in this project are desk-scale.
inline constexpr int kMaxEigenDim = 16;

/// Largest singular value (2-norm).
double spectral_norm(const ComplexMatrix& a);

/// All singular values in descending order (one-sided Jacobi).
std::vector<double> singular_values(const ComplexMatrix& a);

/// Eigenvalues with algebraic multiplicity. Closed form for n <= 2,
/// Hessenberg + shifted QR otherwise. Throws NumericalError on
/// non-convergence, ConfigError for n > kMaxEigenDim.
std::vector<Complex> eigenvalues(const ComplexMatrix& a);

/// Complex Schur form A = Q T Q* with T upper triangular and Q unitary.
struct SchurDecomposition {
    ComplexMatrix q;
    ComplexMatrix t;
};
SchurDecomposition schur(const ComplexMatrix& a);

struct EigenDecomposition {
    std::vector<Complex> eigenvalues;
    bool diagonalizable = false;
    std::optional<ComplexMatrix> transform;  // eigenvectors by column
    double transform_condition = 0.0;        // sigma_max / sigma_min of transform
};
EigenDecomposition eigen_decomposition(const ComplexMatrix& a);

/// Matrix exponential, scaling-and-squaring with the [13/13] diagonal
/// Pade approximant.
ComplexMatrix expm(const ComplexMatrix& a);

/// Principal matrix logarithm: every eigenvalue of the result has
/// imaginary part in (-pi, pi]. Schur form + inverse scaling-and-squaring;
/// a diagonalization shortcut is taken when the eigenvector matrix is
/// well conditioned. Throws on singular input or an eigenvalue on the
/// closed negative real axis.
ComplexMatrix logm_principal(const ComplexMatrix& y);

/// Matrix logarithm by resolvent quadrature over the boundary of
/// Lambda_{gamma'} = {e^{-gamma'} <= |z| <= e^{gamma'}, |arg z| <= gamma'}
/// with gamma' = (gamma + pi)/2, traversed counterclockwise. Requires the
/// spectrum strictly inside the contour.
ComplexMatrix logm_contour(const ComplexMatrix& y, double gamma);

/// Monic characteristic polynomial of det(rho I - A) by Faddeev-LeVerrier:
/// returns c[0..n] with p(rho) = sum_k c[k] rho^k, c[n] = 1.
std::vector<Complex> characteristic_polynomial(const ComplexMatrix& a);

/// Same recurrence carried through with a directional derivative dA,
/// producing d(c_k) alongside c_k.
void characteristic_polynomial_with_derivative(const ComplexMatrix& a, const ComplexMatrix& da,
                                               std::vector<Complex>& c, std::vector<Complex>& dc);

/// Discriminant of the characteristic polynomial. Zero (to tolerance) iff
/// A has a repeated eigenvalue. (tr A)^2 - 4 det A for n = 2; resultant of
/// (p, p') via a Sylvester determinant for larger n.
Complex discriminant(const ComplexMatrix& a);

/// Discriminant together with its directional derivative along da.
struct DiscriminantValue {
    Complex value;
    Complex deriv;
};
DiscriminantValue discriminant_with_derivative(const ComplexMatrix& a, const ComplexMatrix& da);

/// Discriminant from monic polynomial coefficients (c[deg] = 1).
Complex polynomial_discriminant(const std::vector<Complex>& c);

/// Largest Jordan block dimension for the eigenvalue cluster at rho0:
/// smallest k >= 1 with rank((Y - rho0 I)^k) = rank((Y - rho0 I)^{k+1}),
/// ranks by singular-value thresholding at tol * ||Y||_2.
int max_jordan_block(const ComplexMatrix& y, Complex rho0, double tol = 1e-8);

/// Angle between nonzero vectors on the unit sphere:
/// arccos(Re<x,y> / (||x|| ||y||)) in [0, pi].
double angle(const std::vector<Complex>& x, const std::vector<Complex>& y);

}  // namespace magnuslab
