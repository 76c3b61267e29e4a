#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "depca/coefficients.hpp"
#include "depca/expression.hpp"
#include "depca/grid.hpp"

using namespace depca;
using nlohmann::json;

TEST_CASE("grid nodes enumerate integers and rational offsets") {
    TimeGrid g = build_grid(0, 2, 2);
    CHECK(g.size() == 5);
    CHECK(g.node(0).value() == 0.0);
    CHECK(g.node(1).value() == 0.5);
    CHECK(g.node(2).value() == 1.0);
    CHECK(g.node(3).value() == 1.5);
    CHECK(g.node(4).value() == 2.0);
    CHECK(g.node(2).is_integer());
    CHECK_FALSE(g.node(3).is_integer());

    TimeGrid g2 = build_grid(-1, 1, 1);
    CHECK(g2.size() == 3);
    CHECK(g2.node(0).value() == -1.0);
    CHECK(g2.node(1).value() == 0.0);
    CHECK(g2.node(2).value() == 1.0);

    TimeGrid g3 = build_grid(0, 10, 100);
    CHECK(g3.size() == 1001);
    CHECK(g3.node(250).value() == 2.5);
    CHECK(g3.index_of_integer(7) == 700);
}

TEST_CASE("grid rejects bad parameters") {
    CHECK_THROWS_AS(build_grid(3, 3, 1), ConfigError);
    CHECK_THROWS_AS(build_grid(0, 1, 0), ConfigError);
}

TEST_CASE("floor anchor") {
    CHECK(floor_anchor(2.5) == 2);
    CHECK(floor_anchor(-0.25) == -1);
    CHECK(floor_anchor(3.0) == 3);
}

TEST_CASE("node floor is exact at every node") {
    TimeGrid g = build_grid(-5, 5, 7);
    for (std::int64_t k = 0; k < g.size(); ++k) {
        GridNode node = g.node(k);
        CHECK(node.floor() == node.base);
        // the double round trip may not cross an integer
        if (!node.is_integer()) CHECK(floor_anchor(node.value()) == node.base);
    }
}

TEST_CASE("expression parser evaluates arithmetic and functions") {
    Expression e = Expression::parse("sin(t) + 0.5*x^2");
    CHECK(e.eval({{"t", 0.0}, {"x", 2.0}}) == doctest::Approx(2.0));
    CHECK(e.eval({{"t", 1.0}, {"x", 0.0}}) == doctest::Approx(std::sin(1.0)));

    CHECK(Expression::parse("2^3^2").eval({}) == doctest::Approx(512.0));
    CHECK(Expression::parse("-2^2").eval({}) == doctest::Approx(-4.0));
    CHECK(Expression::parse("pi").eval({}) == doctest::Approx(M_PI));
    CHECK(Expression::parse("exp(1)").eval({}) == doctest::Approx(std::exp(1.0)));
    CHECK(Expression::parse("abs(-3) + floor(2.7)").eval({}) == doctest::Approx(5.0));
}

TEST_CASE("expression reports free variables and rejects junk") {
    Expression e = Expression::parse("a*t + b");
    auto vars = e.variables();
    CHECK(vars.size() == 3);
    CHECK_THROWS_AS(Expression::parse("1 +"), ConfigError);
    CHECK_THROWS_AS(Expression::parse("sin()"), ConfigError);
    CHECK_THROWS_AS((void)Expression::parse("t").eval({}), ConfigError);
}

TEST_CASE("validate_system measures the coefficient bound") {
    TimeGrid grid = build_grid(0, 10, 10);
    MatrixFn A = [](double) { return Mat::Constant(1, 1, -1.0).eval(); };
    MatrixFn B = [](double) { return Mat::Constant(1, 1, 0.5).eval(); };
    VectorFn f = [](double) { return Vec::Constant(1, 1.0).eval(); };
    CoefficientSystem sys = validate_system(1, A, B, f, grid);
    CHECK(sys.M == doctest::Approx(1.01).epsilon(1e-12));

    VectorFn zf = [](double) { return Vec::Zero(1).eval(); };
    MatrixFn zA = [](double) { return Mat::Zero(1, 1).eval(); };
    CoefficientSystem zero = validate_system(1, zA, zA, zf, grid);
    CHECK(zero.M == doctest::Approx(1e-12));
}

TEST_CASE("validate_system samples a trig sum densely enough") {
    // cos t + cos(sqrt(2) t) peaks near 2 when the phases almost align
    TimeGrid grid = build_grid(-200, 200, 20);
    MatrixFn A = [](double t) {
        return Mat::Constant(1, 1, std::cos(t) + std::cos(std::sqrt(2.0) * t))
            .eval();
    };
    MatrixFn B = [](double) { return Mat::Zero(1, 1).eval(); };
    VectorFn f = [](double) { return Vec::Zero(1).eval(); };
    CoefficientSystem sys = validate_system(1, A, B, f, grid);
    CHECK(sys.M > 1.9);
    CHECK(sys.M < 2.03);
}

TEST_CASE("validate_system rejects non-finite coefficients") {
    TimeGrid grid = build_grid(0, 2, 4);
    MatrixFn A = [](double t) {
        return Mat::Constant(1, 1, 1.0 / (t - 1.0)).eval();
    };
    MatrixFn B = [](double) { return Mat::Zero(1, 1).eval(); };
    VectorFn f = [](double) { return Vec::Zero(1).eval(); };
    CHECK_THROWS(validate_system(1, A, B, f, grid));
}

TEST_CASE("coefficient specs parse from JSON") {
    TimeGrid grid = build_grid(0, 4, 10);

    json j = {{"q", 1}, {"A", -1.0}, {"B", 0.5}, {"f", 1.0}};
    CoefficientSystem sys = system_from_json(j, grid);
    CHECK(sys.A(0.3)(0, 0) == doctest::Approx(-1.0));
    CHECK(sys.B(0.3)(0, 0) == doctest::Approx(0.5));
    CHECK(sys.f(0.3)(0) == doctest::Approx(1.0));

    json jexpr = {{"q", 1}, {"A", "-1 + 0.1*cos(t)"}, {"f", "sin(t)"}};
    CoefficientSystem se = system_from_json(jexpr, grid);
    CHECK(se.A(2.0)(0, 0) == doctest::Approx(-1.0 + 0.1 * std::cos(2.0)));
    CHECK(se.B(2.0)(0, 0) == doctest::Approx(0.0));
    CHECK(se.f(2.0)(0) == doctest::Approx(std::sin(2.0)));

    json jm = {{"q", 2},
               {"A", json::array({json::array({-1.0, 0.0}),
                                  json::array({0.0, -2.0})})}};
    CoefficientSystem sm = system_from_json(jm, grid);
    CHECK(sm.A(1.0)(1, 1) == doctest::Approx(-2.0));
    CHECK(sm.A(1.0)(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("demo generator value") {
    double t = 3.0;
    double expected = std::cos(t) + std::cos(std::sqrt(2.0) * t) +
                      std::sin(t + std::sqrt(std::abs(t))) +
                      3.0 * t * t / (t * t + 1.0);
    CHECK(rap_demo_value(t) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("grid parsing from JSON") {
    json j = {{"start", -3}, {"end", 5}, {"m", 25}};
    TimeGrid g = grid_from_json(j);
    CHECK(g.t_start() == -3);
    CHECK(g.t_end() == 5);
    CHECK(g.subdivisions() == 25);
}
