#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "magnuslab/errors.hpp"
#include "magnuslab/linalg.hpp"
#include "test_helpers.hpp"

using namespace magnuslab;
using namespace magnuslab::testing;

namespace {

const ComplexMatrix kX1(2, {1.0, 0.0, 0.0, -1.0});
const ComplexMatrix kX2(2, {0.0, 1.0, 0.0, 0.0});

}  // namespace

TEST_CASE("matmul basics") {
    std::mt19937 rng(11);
    auto a = random_matrix(rng, 3);
    CHECK(matrix_distance(ComplexMatrix::identity(3) * a, a) == 0.0);

    auto prod = kX1 * kX2;
    CHECK(matrix_distance(prod, kX2) < 1e-15);  // X1 X2 = X2 by hand multiplication

    // A * A^-1 = I for a well-conditioned 4x4
    ComplexMatrix b = random_matrix(rng, 4);
    for (int i = 0; i < 4; ++i) b(i, i) += 4.0;
    CHECK(matrix_distance(b * inverse(b), ComplexMatrix::identity(4)) < 1e-12);
}

TEST_CASE("commutator identities") {
    std::mt19937 rng(12);
    auto a = random_matrix(rng, 3);
    CHECK(max_abs(commutator(a, a)) < 1e-14);

    CHECK(matrix_distance(commutator(kX1, kX2), 2.0 * kX2) < 1e-15);

    auto d1 = ComplexMatrix::diagonal({Complex(1, 2), Complex(-3, 0.5)});
    auto d2 = ComplexMatrix::diagonal({Complex(0, 1), Complex(7, -2)});
    CHECK(max_abs(commutator(d1, d2)) == 0.0);

    // trace of a commutator vanishes
    for (int rep = 0; rep < 20; ++rep) {
        auto x = random_matrix(rng, 4, 2.0);
        auto y = random_matrix(rng, 4, 2.0);
        const double bound = 1e-12 * frobenius_norm(x) * frobenius_norm(y);
        CHECK(std::abs(commutator(x, y).trace()) <= bound);
    }
}

TEST_CASE("spectral norm") {
    CHECK(spectral_norm(ComplexMatrix::identity(3)) == doctest::Approx(1.0));
    CHECK(spectral_norm(ComplexMatrix::diagonal({2.0, -1.0})) == doctest::Approx(2.0));

    // [[2, 1], [0, -1]]: brute-force via the characteristic polynomial of A*A
    ComplexMatrix a(2, {2.0, 1.0, 0.0, -1.0});
    // A*A = [[4, 2], [2, 2]]; eigenvalues (6 +- sqrt(16 + 4*... )) from the quadratic
    const double tr = 6.0, dt = 4.0 * 2.0 - 2.0 * 2.0;
    const double lmax = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * dt));
    CHECK(spectral_norm(a) == doctest::Approx(std::sqrt(lmax)).epsilon(1e-12));
}

TEST_CASE("singular values against 2x2 closed form") {
    std::mt19937 rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        auto a = random_matrix(rng, 2, 3.0);
        const auto sv = singular_values(a);
        REQUIRE(sv.size() == 2);
        // closed form via Gram matrix
        const double g11 = std::norm(a(0, 0)) + std::norm(a(1, 0));
        const double g22 = std::norm(a(0, 1)) + std::norm(a(1, 1));
        const Complex g12 = std::conj(a(0, 0)) * a(0, 1) + std::conj(a(1, 0)) * a(1, 1);
        const double m = 0.5 * (g11 + g22);
        const double d = std::sqrt(0.25 * (g11 - g22) * (g11 - g22) + std::norm(g12));
        CHECK(sv[0] == doctest::Approx(std::sqrt(std::max(0.0, m + d))).epsilon(1e-10));
        CHECK(sv[1] == doctest::Approx(std::sqrt(std::max(0.0, m - d))).epsilon(1e-8));
    }
}

TEST_CASE("eigenvalues: triangular, planted, residual") {
    ComplexMatrix tri(3, {Complex(1, 1), 5.0, -2.0, 0.0, Complex(-2, 0), 3.0, 0.0, 0.0, Complex(0, 4)});
    auto ev = eigenvalues(tri);
    std::vector<Complex> expect = {Complex(1, 1), Complex(-2, 0), Complex(0, 4)};
    for (const auto& lam : expect) {
        double best = 1e9;
        for (const auto& e : ev) best = std::min(best, std::abs(e - lam));
        CHECK(best < 1e-12);
    }

    // planted spectrum via similarity transform, n = 5
    std::mt19937 rng(14);
    std::vector<Complex> plant = {Complex(2, 0), Complex(-1, 1), Complex(-1, -1), Complex(0, 3),
                                  Complex(0.5, 0.5)};
    ComplexMatrix d(5);
    for (int i = 0; i < 5; ++i) d(i, i) = plant[static_cast<std::size_t>(i)];
    ComplexMatrix v = random_matrix(rng, 5);
    for (int i = 0; i < 5; ++i) v(i, i) += 3.0;
    ComplexMatrix a = v * d * inverse(v);
    auto got = eigenvalues(a);
    for (const auto& lam : plant) {
        double best = 1e9;
        for (const auto& e : got) best = std::min(best, std::abs(e - lam));
        CHECK(best < 1e-9);
    }

    // residual |det(A - rho I)| small for each returned eigenvalue (n <= 4)
    for (int rep = 0; rep < 25; ++rep) {
        auto b = random_matrix(rng, 4, 1.5);
        for (const auto& rho : eigenvalues(b)) {
            ComplexMatrix shifted = b;
            for (int i = 0; i < 4; ++i) shifted(i, i) -= rho;
            CHECK(std::abs(det(shifted)) < 1e-9);
        }
    }
}

TEST_CASE("schur decomposition reconstructs the matrix") {
    std::mt19937 rng(15);
    for (int n : {2, 3, 6, 9}) {
        auto a = random_matrix(rng, n, 2.0);
        auto sd = schur(a);
        // T upper triangular
        for (int i = 1; i < n; ++i)
            for (int j = 0; j < i; ++j) CHECK(std::abs(sd.t(i, j)) < 1e-10);
        // Q unitary
        CHECK(matrix_distance(sd.q.adjoint() * sd.q, ComplexMatrix::identity(n)) < 1e-12);
        // reconstruction
        CHECK(matrix_distance(sd.q * sd.t * sd.q.adjoint(), a) < 1e-10 * std::max(1.0, max_abs(a)));
    }
}

TEST_CASE("expm basics") {
    CHECK(matrix_distance(expm(ComplexMatrix(3)), ComplexMatrix::identity(3)) == 0.0);

    auto d = ComplexMatrix::diagonal({Complex(0.3, 1.2), Complex(-2, 0.5)});
    auto e = expm(d);
    CHECK(std::abs(e(0, 0) - std::exp(Complex(0.3, 1.2))) < 1e-14);
    CHECK(std::abs(e(1, 1) - std::exp(Complex(-2, 0.5))) < 1e-14);
    CHECK(std::abs(e(0, 1)) < 1e-15);

    // nilpotent: expm(b X2) = I + b X2
    auto nil = expm(Complex(2.5, -1.0) * kX2);
    CHECK(std::abs(nil(0, 1) - Complex(2.5, -1.0)) < 1e-14);
    CHECK(std::abs(nil(0, 0) - 1.0) < 1e-14);
}

TEST_CASE("expm against a scaled Taylor oracle") {
    std::mt19937 rng(16);
    for (int rep = 0; rep < 10; ++rep) {
        auto a = random_matrix(rng, 3, 1.0);
        // Taylor with 60 terms at this norm is accurate to machine precision
        ComplexMatrix sum = ComplexMatrix::identity(3);
        ComplexMatrix term = ComplexMatrix::identity(3);
        for (int k = 1; k <= 60; ++k) {
            term = (1.0 / k) * (term * a);
            sum += term;
        }
        CHECK(matrix_distance(expm(a), sum) < 1e-12);
    }
}

TEST_CASE("logm principal: identity, BCH example, round trips") {
    CHECK(max_abs(logm_principal(ComplexMatrix::identity(4))) < 1e-14);

    // log(e^{alpha X1} e^{beta X2}) = alpha X1 + (2 alpha beta / (1 - e^{-2 alpha})) X2
    const double alpha = 0.3, beta = 1.0;
    auto y = expm(Complex(alpha) * kX1) * expm(Complex(beta) * kX2);
    auto lg = logm_principal(y);
    const double coeff = 2.0 * alpha * beta / (1.0 - std::exp(-2.0 * alpha));
    ComplexMatrix expect = Complex(alpha) * kX1 + Complex(coeff) * kX2;
    CHECK(matrix_distance(lg, expect) < 1e-11);

    std::mt19937 rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        auto s = random_matrix(rng, 3, 0.8);
        auto e = expm(s);
        auto l = logm_principal(e);
        CHECK(matrix_distance(expm(l), e) < 1e-9 * std::max(1.0, max_abs(e)));
        // principal branch confined
        for (const auto& lam : eigenvalues(l)) CHECK(std::abs(lam.imag()) <= M_PI + 1e-12);
    }
}

TEST_CASE("logm principal on a defective (Jordan) matrix") {
    // [[1, 1], [0, 1]] has log [[0, 1], [0, 0]]
    ComplexMatrix j(2, {1.0, 1.0, 0.0, 1.0});
    auto lg = logm_principal(j);
    CHECK(matrix_distance(lg, kX2) < 1e-9);
}

TEST_CASE("logm errors") {
    CHECK_THROWS_AS((void)logm_principal(ComplexMatrix::diagonal({-1.0, 2.0})), NumericalError);
    CHECK_THROWS_AS((void)logm_principal(ComplexMatrix::diagonal({0.0, 2.0})), NumericalError);
}

TEST_CASE("logm contour: trivial and diagonal unitary") {
    CHECK(max_abs(logm_contour(ComplexMatrix::identity(2), 1.0)) < 1e-10);

    auto y = ComplexMatrix::diagonal({std::polar(1.0, 0.5), std::polar(1.0, -0.5)});
    auto lg = logm_contour(y, 1.0);
    CHECK(std::abs(lg(0, 0) - Complex(0.0, 0.5)) < 1e-9);
    CHECK(std::abs(lg(1, 1) - Complex(0.0, -0.5)) < 1e-9);
    CHECK(std::abs(lg(0, 1)) < 1e-10);
}

TEST_CASE("logm contour agrees with principal on random spectra in the sector") {
    std::mt19937 rng(18);
    for (int rep = 0; rep < 10; ++rep) {
        auto s = random_matrix(rng, 2, 0.55);  // ||S|| <~ 1.2 keeps spectrum inside Lambda_1.2
        auto y = expm(s);
        auto a = logm_contour(y, 1.2);
        auto b = logm_principal(y);
        CHECK(matrix_distance(a, b) < 1e-8);
    }
}

TEST_CASE("discriminant closed forms and resultant route") {
    CHECK(std::abs(discriminant(ComplexMatrix::identity(2))) < 1e-14);
    CHECK(std::abs(discriminant(ComplexMatrix::diagonal({1.0, 3.0})) - 4.0) < 1e-13);

    // n = 3, 4: product of squared root differences
    auto d3 = ComplexMatrix::diagonal({1.0, 2.0, 3.0});
    CHECK(std::abs(discriminant(d3) - 4.0) < 1e-10);
    auto d4 = ComplexMatrix::diagonal({0.0, 1.0, 3.0, 6.0});
    CHECK(std::abs(discriminant(d4) - 291600.0) < 1e-6);

    std::mt19937 rng(19);
    for (int rep = 0; rep < 20; ++rep) {
        auto a = random_matrix(rng, 3, 1.0);
        const auto ev = eigenvalues(a);
        Complex prod = 1.0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                const Complex d = ev[static_cast<std::size_t>(i)] - ev[static_cast<std::size_t>(j)];
                prod *= d * d;
            }
        CHECK(std::abs(discriminant(a) - prod) < 1e-8 * std::max(1.0, std::abs(prod)));
    }
}

TEST_CASE("discriminant derivative against finite differences") {
    std::mt19937 rng(20);
    for (int n : {2, 3}) {
        auto a = random_matrix(rng, n, 1.0);
        auto da = random_matrix(rng, n, 1.0);
        auto v = discriminant_with_derivative(a, da);
        const double h = 1e-6;
        const Complex fwd = discriminant(a + Complex(h) * da);
        const Complex bwd = discriminant(a - Complex(h) * da);
        const Complex fd = (fwd - bwd) / (2.0 * h);
        CHECK(std::abs(v.deriv - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
        CHECK(std::abs(v.value - discriminant(a)) < 1e-12 * std::max(1.0, std::abs(v.value)));
    }
}

TEST_CASE("characteristic polynomial matches eigenvalue expansion") {
    std::mt19937 rng(21);
    auto a = random_matrix(rng, 4, 1.0);
    auto c = characteristic_polynomial(a);
    REQUIRE(c.size() == 5);
    const auto ev = eigenvalues(a);
    // evaluate p at a probe point and compare with prod(z - rho)
    const Complex z(0.37, -1.21);
    Complex p = 0.0, zp = 1.0;
    for (const auto& ck : c) {
        p += ck * zp;
        zp *= z;
    }
    Complex prod = 1.0;
    for (const auto& rho : ev) prod *= (z - rho);
    CHECK(std::abs(p - prod) < 1e-10 * std::abs(prod));
}

TEST_CASE("max_jordan_block") {
    CHECK(max_jordan_block(ComplexMatrix::identity(2), 1.0) == 1);
    CHECK(max_jordan_block(ComplexMatrix(2, {1.0, 1.0, 0.0, 1.0}), 1.0) == 2);

    // 3-block planted under a similarity transform
    ComplexMatrix j(3);
    for (int i = 0; i < 3; ++i) j(i, i) = Complex(0.5, 0.5);
    j(0, 1) = 1.0;
    j(1, 2) = 1.0;
    std::mt19937 rng(22);
    auto v = random_matrix(rng, 3);
    for (int i = 0; i < 3; ++i) v(i, i) += 2.5;
    auto a = v * j * inverse(v);
    CHECK(max_jordan_block(a, Complex(0.5, 0.5)) == 3);

    CHECK_THROWS_AS((void)max_jordan_block(ComplexMatrix::identity(2), Complex(5.0)), NumericalError);
}

TEST_CASE("angle") {
    std::vector<Complex> x = {Complex(1, 2), Complex(0, -1)};
    CHECK(angle(x, x) == doctest::Approx(0.0).epsilon(1e-12));
    std::vector<Complex> e1 = {1.0, 0.0}, e2 = {0.0, 1.0};
    CHECK(angle(e1, e2) == doctest::Approx(M_PI / 2));
    std::vector<Complex> mx = {Complex(-1, -2), Complex(0, 1)};
    CHECK(angle(x, mx) == doctest::Approx(M_PI));
    CHECK_THROWS_AS((void)angle(x, std::vector<Complex>{0.0, 0.0}), ConfigError);
}

TEST_CASE("unitary matrices have unit spectral norm") {
    std::mt19937 rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        auto u = expm(random_anti_hermitian(rng, 3, 1.0));
        CHECK(std::abs(spectral_norm(u) - 1.0) < 1e-10);
    }
}
