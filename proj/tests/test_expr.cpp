#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "magnuslab/expr.hpp"

using namespace magnuslab;

TEST_CASE("parse and eval basics") {
    auto ast = parse_expression("t^2/2");
    CHECK(eval(*ast, 2.0, {}) == Complex(2.0, 0.0));

    CHECK(eval(*parse_expression("2"), 0.0, {}) == Complex(2.0));
    CHECK(eval(*parse_expression("-1"), 0.0, {}) == Complex(-1.0));

    auto c = eval(*parse_expression("cos(omega*t)"), 0.5, {{"omega", Complex(M_PI)}});
    CHECK(std::abs(c) < 1e-15);

    auto ip = eval(*parse_expression("i*pi"), 0.0, {});
    CHECK(ip.real() == 0.0);
    CHECK(ip.imag() == doctest::Approx(M_PI));

    CHECK(eval(*parse_expression("t"), 3.5, {}).real() == 3.5);

    // X2-coefficient factor of the BCH closed form
    auto f = eval(*parse_expression("1/(1-exp(-2*alpha))"), 0.0, {{"alpha", Complex(0.3)}});
    CHECK((2.0 * 0.3 * 1.0 * f).real() == doctest::Approx(0.6 / (1.0 - std::exp(-0.6))));
}

TEST_CASE("imaginary literals and complex scalars") {
    CHECK(eval(*parse_expression("0.7i"), 0.0, {}) == Complex(0.0, 0.7));
    CHECK(eval(*parse_expression("0+0.7i"), 0.0, {}) == Complex(0.0, 0.7));
    CHECK(eval(*parse_expression("2i*3"), 0.0, {}) == Complex(0.0, 6.0));
    CHECK(parse_scalar("1+2i") == Complex(1.0, 2.0));
    CHECK(parse_scalar("pi/2").real() == doctest::Approx(M_PI / 2));
    CHECK_THROWS_AS(parse_scalar("t+1"), ConfigError);
}

TEST_CASE("precedence and associativity") {
    CHECK(eval(*parse_expression("2+3*4"), 0.0, {}).real() == 14.0);
    CHECK(eval(*parse_expression("2*3^2"), 0.0, {}).real() == 18.0);
    CHECK(eval(*parse_expression("2^3^2"), 0.0, {}).real() == 512.0);  // right-assoc
    CHECK(eval(*parse_expression("-2^2"), 0.0, {}).real() == -4.0);
    CHECK(eval(*parse_expression("2^-1"), 0.0, {}).real() == 0.5);
    CHECK(eval(*parse_expression("10-2-3"), 0.0, {}).real() == 5.0);
    CHECK(eval(*parse_expression("(1+2)*3"), 0.0, {}).real() == 9.0);
}

TEST_CASE("parse errors carry offsets") {
    CHECK_THROWS_AS((void)parse_expression(""), ParseError);
    CHECK_THROWS_AS((void)parse_expression("2t"), ParseError);  // no implicit multiplication
    CHECK_THROWS_AS((void)parse_expression("foo(1)"), ParseError);
    CHECK_THROWS_AS((void)parse_expression("sin 1"), ParseError);
    CHECK_THROWS_AS((void)parse_expression("(1+2"), ParseError);
    CHECK_THROWS_AS((void)parse_expression("1+*2"), ParseError);
    try {
        (void)parse_expression("1 + $");
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
    }
}

TEST_CASE("eval errors") {
    CHECK_THROWS_AS((void)eval(*parse_expression("x+1"), 0.0, {}), ConfigError);
    CHECK_THROWS_AS((void)eval(*parse_expression("1/(t-1)"), 1.0, {}), NumericalError);
    CHECK_THROWS_AS((void)eval(*parse_expression("log(t)"), 0.0, {}), NumericalError);
}

TEST_CASE("principal-branch complex semantics") {
    // (-1)^0.5 = i (principal)
    auto v = eval(*parse_expression("(-1)^0.5"), 0.0, {});
    CHECK(std::abs(v - Complex(0.0, 1.0)) < 1e-15);
    // log of a negative number is complex
    auto lg = eval(*parse_expression("log(-1)"), 0.0, {});
    CHECK(lg.imag() == doctest::Approx(M_PI));
    // integer powers of real values stay real
    auto sq = eval(*parse_expression("t^2"), -1.5, {});
    CHECK(sq.imag() == 0.0);
    CHECK(sq.real() == doctest::Approx(2.25));
}

TEST_CASE("print round trip is stable") {
    const std::vector<std::string> sources = {
        "t^2/2",
        "cos(omega*t)+sin(t)^2",
        "-(alpha+1)*exp(-i*omega*t)/(2-t)",
        "1e-3*t - 2.5e2",
        "sqrt(abs(t))^(1/3)",
        "0.5i + pi*e",
    };
    for (const auto& src : sources) {
        auto once = print(*parse_expression(src));
        auto twice = print(*parse_expression(once));
        CHECK(once == twice);
    }
}

TEST_CASE("fuzzed inputs fail structurally, never crash") {
    std::mt19937 rng(99);
    const std::string alphabet = "0123456789.+-*/^()ti aeopx_,$";
    for (int rep = 0; rep < 3000; ++rep) {
        std::string s;
        const int len = 1 + static_cast<int>(rng() % 16);
        for (int i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
        try {
            auto ast = parse_expression(s);
            (void)eval(*ast, 0.7, {{"a", Complex(1)}, {"e", Complex(1)}});
        } catch (const Error&) {
            // structured failure is fine
        }
    }
    CHECK(true);
}
