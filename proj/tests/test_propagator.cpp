#include <doctest.h>

#include <cmath>

#include "magnuslab/linalg.hpp"
#include "magnuslab/problem.hpp"
#include "magnuslab/propagator.hpp"
#include "magnuslab/quadrature.hpp"
#include "test_helpers.hpp"

using namespace magnuslab;
using namespace magnuslab::testing;

TEST_CASE("eps = 0 gives the identity exactly") {
    auto op = make_catalog_operator(CatalogId::example1);
    auto res = propagate(op, 1.7, 0.0);
    CHECK(matrix_distance(res.y, ComplexMatrix::identity(2)) == 0.0);
}

TEST_CASE("example1 against the closed form") {
    auto op = make_catalog_operator(CatalogId::example1);
    const Complex eps(0.0, 0.7);
    auto res = propagate(op, 1.0, eps);
    auto exact = exact_solution(op, 1.0, eps);
    CHECK(matrix_distance(res.y, exact) < 1e-10);
    CHECK(res.est_error < 1e-10);
}

TEST_CASE("example2 equals the product of piece exponentials") {
    auto op = make_catalog_operator(CatalogId::example2, {{"alpha", 1.3}, {"beta", -0.4}});
    const Complex eps(0.8, 0.1);
    auto res = propagate(op, 2.0, eps);
    ComplexMatrix x1(2, {1.0, 0.0, 0.0, -1.0});
    ComplexMatrix x2(2, {0.0, 1.0, 0.0, 0.0});
    auto expect = expm(eps * Complex(1.3) * x1) * expm(eps * Complex(-0.4) * x2);
    CHECK(matrix_distance(res.y, expect) < 1e-12);
}

TEST_CASE("example3 against the closed form at several (t, eps)") {
    auto op = make_catalog_operator(CatalogId::example3,
                                    {{"omega0", 1.0}, {"omega", 0.5}, {"beta", 0.3}});
    for (const Complex eps : {Complex(1.0, 0.0), Complex(0.4, 0.9)}) {
        for (const double t : {0.9, 2.0 * M_PI}) {
            auto res = propagate(op, t, eps);
            auto exact = exact_solution(op, t, eps);
            CHECK(matrix_distance(res.y, exact) < 1e-9 * std::max(1.0, max_abs(exact)));
        }
    }
}

TEST_CASE("liouville determinant identity") {
    auto op = make_catalog_operator(CatalogId::example1);
    const Complex eps(0.5, 0.25);
    const double t = 1.4;
    auto res = propagate(op, t, eps);
    // integral of tr A over [0, t] for example1 is (2 - 1) t = t
    const Complex expected = std::exp(eps * t);
    CHECK(std::abs(det(res.y) - expected) < 1e-9 * std::abs(expected));
}

TEST_CASE("variational solution at eps = 0 is the first Neumann term") {
    auto op = make_catalog_operator(CatalogId::example1);
    auto res = propagate_variational(op, 1.5, 0.0);
    REQUIRE(res.dy_deps.has_value());
    // integral of A over [0, t]: [[2t, t^2/2], [0, -t]]
    ComplexMatrix expect(2, {3.0, 1.125, 0.0, -1.5});
    CHECK(matrix_distance(*res.dy_deps, expect) < 1e-10);
}

TEST_CASE("variational solution matches central differences") {
    auto op = make_catalog_operator(CatalogId::example1);
    const Complex eps(0.3, 0.2);
    auto res = propagate_variational(op, 1.0, eps);
    const double h = 1e-5;
    auto plus = propagate(op, 1.0, eps + h);
    auto minus = propagate(op, 1.0, eps - h);
    ComplexMatrix fd = (1.0 / (2.0 * h)) * (plus.y - minus.y);
    CHECK(matrix_distance(*res.dy_deps, fd) < 1e-6);
}

TEST_CASE("variational solution on the diagonal problem") {
    auto op = make_catalog_operator(CatalogId::diagonal,
                                    {{"a1", Complex(0, 1)}, {"a2", Complex(-0.5, 0.25)}});
    const Complex eps(0.7, -0.2);
    const double t = 1.3;
    auto res = propagate_variational(op, t, eps);
    const Complex a1(0, 1), a2(-0.5, 0.25);
    CHECK(std::abs((*res.dy_deps)(0, 0) - a1 * t * std::exp(eps * a1 * t)) < 1e-11);
    CHECK(std::abs((*res.dy_deps)(1, 1) - a2 * t * std::exp(eps * a2 * t)) < 1e-11);
}

TEST_CASE("cocycle property on the autonomous piece") {
    auto op = make_catalog_operator(CatalogId::example2, {{"alpha", 0.9}, {"beta", 0.2}});
    const Complex eps(0.5, 0.5);
    auto y1 = propagate(op, 1.4, eps).y;
    auto y2 = propagate(op, 1.9, eps).y;
    auto a = op.evaluate(1.5);
    CHECK(matrix_distance(y2, expm((eps * 0.5) * a) * y1) < 1e-11);
}

TEST_CASE("epsilon series reproduces the propagator inside its disk") {
    for (auto id : {CatalogId::example1, CatalogId::example2, CatalogId::example3}) {
        auto op = make_catalog_operator(id);
        const double t = 1.6;
        auto series = EpsilonSeries::build(op, t, 2.5);
        for (const Complex eps : {Complex(0.3, 0.1), Complex(0.0, 2.2), Complex(-1.9, 0.8)}) {
            if (std::abs(eps) > 2.5) continue;
            auto direct = propagate(op, t, eps);
            CHECK(matrix_distance(series.eval(eps), direct.y) <
                  1e-9 * std::max(1.0, max_abs(direct.y)));
        }
    }
}

TEST_CASE("epsilon series derivative matches the variational propagator") {
    auto op = make_catalog_operator(CatalogId::example1);
    const double t = 1.0;
    auto series = EpsilonSeries::build(op, t, 3.0);
    for (const Complex eps : {Complex(0.5, 0.0), Complex(0.0, 2.0)}) {
        auto var = propagate_variational(op, t, eps);
        CHECK(matrix_distance(series.eval_derivative(eps), *var.dy_deps) < 1e-8);
    }
}

TEST_CASE("gronwall bounds hold") {
    auto op = make_catalog_operator(CatalogId::example1);
    const double t = 1.2;
    const double kappa = norm_integral(op, t);
    for (const Complex eps : {Complex(0.4, 0.3), Complex(0.0, 1.0)}) {
        auto res = propagate(op, t, eps);
        const double bound = std::exp(std::abs(eps) * kappa) + 1e-9;
        CHECK(spectral_norm(res.y) <= bound);
        CHECK(spectral_norm(inverse(res.y)) <= bound);
    }
}
