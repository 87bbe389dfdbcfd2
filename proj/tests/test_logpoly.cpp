#include <catch2/catch_amalgamated.hpp>
#include <singcov/logpoly.hpp>

using namespace singcov;

TEST_CASE("integrate_op monomial rule") {
    // I^(1)(x^n) = x^{n+1}/(n+1)
    for (int n = 0; n <= 5; ++n) {
        const LogPoly g = integrate_op(LogPoly::monomial(n), 1);
        REQUIRE(g.poly.size() == static_cast<std::size_t>(n) + 2);
        CHECK(g.poly[n + 1] == Catch::Approx(1.0 / (n + 1)));
        CHECK(g.logpoly.empty());
    }
    // I^(p)(x^n) = x^{n+p} / ((n+1)...(n+p))
    const LogPoly g = integrate_op(LogPoly::monomial(2), 3);
    CHECK(g.poly[5] == Catch::Approx(1.0 / (3.0 * 4.0 * 5.0)));
    // I^(2)(1) = x^2/2
    const LogPoly h = integrate_op(LogPoly::monomial(0), 2);
    CHECK(h.poly[2] == Catch::Approx(0.5));
}

TEST_CASE("integrate_op log rule") {
    // I^(1)(log x) = x log x - x
    const LogPoly g = integrate_op(LogPoly::log_x(), 1);
    REQUIRE(g.logpoly.size() == 2);
    CHECK(g.logpoly[1] == Catch::Approx(1.0));
    CHECK(g.poly[1] == Catch::Approx(-1.0));
    CHECK(g.eval(1.0) == Catch::Approx(-1.0));
    CHECK(g.eval(2.0) == Catch::Approx(2.0 * std::log(2.0) - 2.0));
    // I^(1)(x^m log x) = x^{m+1} log x/(m+1) - x^{m+1}/(m+1)^2
    const LogPoly h = integrate_op(LogPoly::log_x().shifted(2), 1);
    CHECK(h.logpoly[3] == Catch::Approx(1.0 / 3.0));
    CHECK(h.poly[3] == Catch::Approx(-1.0 / 9.0));
}

TEST_CASE("integration matches numerical quadrature") {
    // Independent oracle: trapezoid integration of g recovers I^(1)(g) up to
    // the value at the lower endpoint.
    LogPoly g;
    g.poly = {0.5, -1.0, 2.0};
    g.logpoly = {0.3, 0.7};
    const LogPoly big = integrate_op(g, 1);
    const double a = 0.5, b = 2.5;
    const int steps = 200000;
    double acc = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double x0 = a + (b - a) * i / steps;
        const double x1 = a + (b - a) * (i + 1) / steps;
        acc += 0.5 * (g.eval(x0) + g.eval(x1)) * (x1 - x0);
    }
    CHECK(big.eval(b) - big.eval(a) == Catch::Approx(acc).epsilon(1e-8));
}

TEST_CASE("eval_derivative matches finite differences") {
    LogPoly g;
    g.poly = {1.0, -2.0, 0.5};
    g.logpoly = {0.25, 1.5, -0.75};
    for (double x : {0.3, 1.0, 4.2}) {
        const double h = 1e-6 * std::max(x, 1.0);
        const double fd = (g.eval(x + h) - g.eval(x - h)) / (2.0 * h);
        CHECK(g.eval_derivative(x) == Catch::Approx(fd).epsilon(1e-6).margin(1e-8));
    }
}

TEST_CASE("shifted multiplies by a power") {
    const LogPoly g = LogPoly::log_x().shifted(3);
    CHECK(g.eval(2.0) == Catch::Approx(8.0 * std::log(2.0)));
}
