#include <cmath>
#include <numeric>

#include "doctest.h"
#include "omlab/error.hpp"
#include "omlab/expr.hpp"
#include "omlab/spaces.hpp"

using namespace omlab;

TEST_CASE("expressions evaluate the documented grammar") {
    const double p[] = {0.5, -2.0};
    CHECK(Expression::parse("x1^2/2 + 3*x2").evaluate(p) == doctest::Approx(0.125 - 6.0));
    CHECK(Expression::parse("-2^2").evaluate(p) == doctest::Approx(-4.0));
    CHECK(Expression::parse("2^3^2").evaluate(p) == doctest::Approx(512.0));
    CHECK(Expression::parse("max(x1, abs(x2)) + min(1, 2)").evaluate(p) == doctest::Approx(3.0));
    CHECK(Expression::parse("sin(pi/2) + cos(0) + exp(0) + log(1) + sqrt(4) + tanh(0)").evaluate(p) ==
          doctest::Approx(5.0));
    CHECK(Expression::parse("3").is_constant());
    CHECK_FALSE(Expression::parse("x1 + 0").is_constant());
    CHECK(Expression::parse("x1 + x3").max_coordinate() == 3);
}

TEST_CASE("expression errors are InputError") {
    CHECK_THROWS_AS(Expression::parse("x1 +"), InputError);
    CHECK_THROWS_AS(Expression::parse("foo(1)"), InputError);
    CHECK_THROWS_AS(Expression::parse("(1"), InputError);
    CHECK_THROWS_AS(Expression::parse("y"), InputError);
}

TEST_CASE("path primitives") {
    // w(t) = t on 4 steps over [0, 1]
    const double w[] = {0.25, 0.5, 0.75, 1.0};
    EvalContext ctx{w};
    ctx.terminal_time = 1.0;
    CHECK(Expression::parse("wT").evaluate(ctx) == doctest::Approx(1.0));
    CHECK(Expression::parse("integral(w)").evaluate(ctx) == doctest::Approx(0.5));
    CHECK(Expression::parse("0.5*tanh(wT)").terminal_only());
    CHECK_FALSE(Expression::parse("integral(w^2)").terminal_only());
}

TEST_CASE("grid cell volumes sum to the box volume") {
    const std::size_t r2[] = {3, 3};
    auto g = build_grid(Box{{0, 0}, {1, 1}}, r2);
    CHECK(g->cell_volume(4) == doctest::Approx(0.25));
    CHECK(g->total_volume() == doctest::Approx(1.0).epsilon(1e-9));

    const std::size_t r3[] = {11, 7, 5};
    auto g3 = build_grid(Box{{-1, 0, 2}, {1, 3, 2.5}}, r3);
    double s = 0.0;
    for (std::size_t i = 0; i < g3->size(); ++i) s += g3->cell_volume(i);
    CHECK(std::fabs(s - 3.0) / 3.0 < 1e-9);

    const std::size_t r1[] = {101};
    CHECK(build_grid(Box{{0}, {1}}, r1)->total_volume() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grid stencils") {
    auto count = [](const std::shared_ptr<const SampledSpace>& s, std::size_t i) {
        std::size_t n = 0;
        s->for_each_neighbor(i, [&](const Neighbor&) { ++n; });
        return n;
    };
    const std::size_t r1[] = {5};
    const std::size_t r2[] = {7, 7};
    const std::size_t r3[] = {5, 5, 5};
    CHECK(count(build_grid(Box{{0}, {1}}, r1), 2) == 2);
    CHECK(count(build_grid(Box{{0, 0}, {1, 1}}, r2), 24) == 16);
    CHECK(count(build_grid(Box{{0, 0, 0}, {1, 1, 1}}, r3), 62) == 26);
    CHECK(count(build_grid(Box{{0, 0}, {1, 1}}, r2), 0) == 5);  // corner: 3 king moves, 2 knight moves
}

TEST_CASE("grid point cap") {
    const std::size_t r[] = {1001, 1001};
    CHECK_THROWS_AS(build_grid(Box{{0, 0}, {1, 1}}, r, 1000), InputError);
}

TEST_CASE("atoms and nearest lookup") {
    auto a = build_atoms({{0, 0}, {1, 0}, {0, 1}}, {0.5, 0.25, 0.25}, {"a", "b", "c"});
    CHECK(a->size() == 3);
    CHECK(a->find_label("b") == 1);
    CHECK(a->cell_volume(0) == 0.5);
    const double q[] = {0.9, 0.2};
    CHECK(a->nearest(q) == 1);
    CHECK_THROWS_AS(build_atoms({{0, 0}, {0, 0}}, {1, 1}), InputError);
    CHECK_THROWS_AS(build_atoms({{0, 0}}, {-1}), InputError);
}

TEST_CASE("path lattice centers and functionals") {
    auto s = build_path_lattice(8, 1.0, {Expression::parse("0.5*t"), Expression::parse("0")}, {"drift", "zero"});
    CHECK(s->dimension() == 8);
    CHECK(s->size() == 2);
    CHECK(s->point(0).back() == doctest::Approx(0.5));
    auto u = ScalarField::from_expression(s, Expression::parse("0.5*tanh(wT)"));
    CHECK(u.value(0) == doctest::Approx(0.5 * std::tanh(0.5)));
    CHECK(u.value(1) == 0.0);
    CHECK_THROWS_AS(build_path_lattice(8, 1.0, {Expression::parse("1 + t")}), InputError);
    CHECK_THROWS_AS(build_path_lattice(1, 1.0), InputError);
}

TEST_CASE("multilinear interpolation reproduces bilinear fields") {
    const std::size_t r[] = {11, 21};
    auto g = build_grid(Box{{0, 0}, {1, 2}}, r);
    auto f = ScalarField::from_expression(g, Expression::parse("1 + 2*x1 - x2 + 3*x1*x2"));
    const double p[] = {0.33, 1.27};
    CHECK(f.evaluate(p) == doctest::Approx(1 + 0.66 - 1.27 + 3 * 0.33 * 1.27).epsilon(1e-12));
}

TEST_CASE("field arithmetic") {
    const std::size_t r[] = {5};
    auto g = build_grid(Box{{0}, {1}}, r);
    auto f = ScalarField::from_expression(g, Expression::parse("x1"));
    auto h = ScalarField::constant(g, 2.0);
    CHECK(h.is_constant());
    auto c = f.combine(2.0, h, -1.0);
    CHECK(c.value(4) == doctest::Approx(0.0));
    CHECK(f.affine(3.0, 1.0).value(2) == doctest::Approx(2.5));
    CHECK(f.max_value() == 1.0);
    CHECK(f.min_value() == 0.0);
}

TEST_CASE("empirical modulus") {
    const std::size_t r[] = {201, 201};
    auto g = build_grid(Box{{0, 0}, {1, 1}}, r);
    auto u = ScalarField::from_expression(g, Expression::parse("0.3*sin(x1)"));
    const double c[] = {0.5, 0.5};
    const auto m = estimate_modulus(u, g->nearest(c), 0.2, 0);
    REQUIRE(m.bounds.size() >= 2);
    for (std::size_t k = 1; k < m.bounds.size(); ++k) CHECK(m.bounds[k] >= m.bounds[k - 1]);
    CHECK(m.bounds.front() < 0.3 * m.breakpoints.front() + 1e-12);
    CHECK(m.at(0.2) <= 0.3 * 0.2 + 1e-12);
    CHECK_THROWS_AS(m.at(0.5), InputError);

    auto flat = ScalarField::constant(g, 1.0);
    CHECK(estimate_modulus(flat, 0, 0.1, 0).at(0.1) == 0.0);
}

TEST_CASE("metric and measure validation") {
    const std::size_t r[] = {5};
    auto g = build_grid(Box{{0}, {1}}, r);
    auto p = build_path_lattice(4, 1.0, {Expression::parse("0")});
    MetricSpec m = default_metric(*g);
    CHECK_NOTHROW(validate(m, *g));
    CHECK_THROWS_AS(validate(m, *p), InputError);
    MeasureSpec mu = default_measure(*p);
    CHECK(mu.base == BaseMeasure::GaussianPath);
    mu.tilt = ScalarField::constant(g, 0.0);
    CHECK_THROWS_AS(validate(mu, *p), InputError);
}

TEST_CASE("CSV ingestion") {
    const auto t = parse_csv("x1,x2,mass\n0,0,0.5\n1,0,0.25\n0,1,0.25\n");
    auto a = atoms_from_csv(t, "mass");
    CHECK(a->size() == 3);
    CHECK(a->total_volume() == doctest::Approx(1.0));
    CHECK_THROWS_AS(parse_csv("x1,x2\n0,zz\n"), InputError);
    CHECK_THROWS_AS(t.column("nope"), InputError);

    const std::size_t r[] = {3};
    auto g = build_grid(Box{{0}, {1}}, r);
    auto f = field_from_csv(g, parse_csv("x1,value\n0,1\n0.5,2\n1,3\n"), "value");
    CHECK(f.value(1) == 2.0);
    CHECK_THROWS_AS(field_from_csv(g, parse_csv("x1,value\n0,1\n1,3\n"), "value"), InputError);
}
