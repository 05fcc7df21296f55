#include <cmath>

#include "doctest.h"
#include "omlab/error.hpp"
#include "omlab/verify.hpp"
#include "oracle_values.hpp"

using namespace omlab;

namespace {

std::shared_ptr<const SampledSpace> plane(std::size_t n) {
    const std::size_t r[] = {n, n};
    return build_grid(Box{{-1.5, -1.5}, {1.5, 1.5}}, r);
}

std::size_t at(const SampledSpace& s, std::initializer_list<double> p) {
    std::vector<double> v(p);
    return s.nearest(v);
}

ScalarField field(const std::shared_ptr<const SampledSpace>& s, const char* e) {
    return ScalarField::from_expression(s, Expression::parse(e));
}

}  // namespace

TEST_CASE("predict_om_delta") {
    auto g = plane(301);
    const auto x = at(*g, {0, 0});
    const auto y = at(*g, {1, 0});
    const auto u = field(g, "0.3*sin(x1)");
    const auto v = field(g, "0.5*(x1^2 + x2^2)");
    const auto om0 = base_om_field(g);
    CHECK(predict_om_delta(&om0, &u, &v, 2.0, x, y) == doctest::Approx(oracle::kPredictExample).epsilon(1e-12));
    CHECK(predict_om_delta(&om0, &u, &v, 2.0, x, x) == 0.0);
    CHECK(predict_om_delta(&om0, nullptr, &v, 2.0, x, y) == doctest::Approx(0.5));

    // gauge invariance: shifting any field by a constant changes nothing
    const auto u2 = u.affine(1.0, 0.75);
    const auto v2 = v.affine(1.0, -3.0);
    const auto om2 = om0.affine(1.0, 0.25);
    for (auto [a, b] : {std::pair{x, y}, std::pair{at(*g, {-0.5, 0.5}), at(*g, {1.25, -1})}}) {
        const double ref = predict_om_delta(&om0, &u, &v, 2.0, a, b);
        CHECK(predict_om_delta(&om2, &u2, &v2, 2.0, a, b) == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("base OM fields") {
    auto a = build_atoms({{0, 0}, {1, 0}}, {0.25, 0.75});
    const auto om = base_om_field(a);
    CHECK(om.value(0) == doctest::Approx(-std::log(0.25)));
    auto p = build_path_lattice(256, 1.0, {Expression::parse("0"), Expression::parse("0.3*sin(pi*t)")});
    CHECK(base_om_field(p).value(1) == doctest::Approx(oracle::kCm256Bump).epsilon(1e-12));
}

TEST_CASE("part (a) examples") {
    HarnessOptions opt;
    const std::size_t r1[] = {60001};
    auto line = build_grid(Box{{-3}, {3}}, r1);
    const auto v = field(line, "x1^2/2");
    const auto radii = RadiusSchedule{0.2, 0.7, 6}.radii();
    const double p0[] = {0.0}, p1[] = {1.0};
    const PairList pairs{{line->nearest(p0), line->nearest(p1)}};
    const auto rep = verify_part_a(line, 0.0, &v, pairs, radii, opt);
    CHECK(rep.pass);
    CHECK(rep.max_gap <= 0.05);
    CHECK(rep.kind == TransformCase::PartA);

    // homogeneous measure, scaled metric
    auto g = plane(201);
    const PairList gp{{at(*g, {0, 0}), at(*g, {0.5, 0.25})}, {at(*g, {-1, 1}), at(*g, {1, -1})}};
    const auto flat = verify_part_a(g, std::log(2.0), nullptr, gp, RadiusSchedule{0.1, 0.8, 5}.radii(), opt);
    CHECK(flat.pass);
    for (const auto& pr : flat.pairs) CHECK(std::fabs(pr.empirical) < 1e-9);

    // atoms: the constant does not change the mass ratios
    auto atoms = build_atoms({{0, 0}, {1, 0}, {0, 1}}, {0.5, 0.3, 0.2});
    const auto ra = verify_part_a(atoms, 1.0, nullptr, {{0, 1}, {1, 2}}, RadiusSchedule{0.2, 0.8, 4}.radii(), opt);
    CHECK(ra.pass);
    CHECK(ra.pairs[0].empirical == doctest::Approx(std::log(0.5 / 0.3)));
}

TEST_CASE("part (b) with U = 0 matches the fixed-metric check") {
    HarnessOptions opt;
    auto g = plane(301);
    const auto v = field(g, "0.5*(x1^2 + x2^2)");
    const auto zero = ScalarField::constant(g, 0.0);
    const PairList pairs{{at(*g, {0, 0}), at(*g, {1, 0})}, {at(*g, {0.5, 0.5}), at(*g, {-0.5, 0})}};
    const auto radii = RadiusSchedule{0.15, 0.8, 5}.radii();
    const double mult[] = {1.5, 2.0};
    const auto b = verify_part_b(g, zero, &v, 2.0, pairs, radii, mult, opt);
    const auto f = verify_fixed_metric(g, &v, pairs, radii, opt);
    CHECK(b.pass == f.pass);
    CHECK(b.pass);
    REQUIRE(b.dimension_check);
    CHECK(b.dimension_check->p == doctest::Approx(2.0).epsilon(0.05));
    for (std::size_t k = 0; k < pairs.size(); ++k) CHECK(b.pairs[k].empirical == f.pairs[k].empirical);

    // an unconfirmed dimension fails the report
    const auto wrong = verify_part_b(g, zero, &v, 3.0, pairs, radii, mult, opt);
    CHECK_FALSE(wrong.pass);
    CHECK(wrong.note.find("does not confirm") != std::string::npos);
}

TEST_CASE("uniformizer and target metric") {
    auto g = plane(201);
    const auto f = field(g, "0.5*(x1^2 + x2^2)");
    const auto zero = ScalarField::constant(g, 0.0);
    const auto a = uniformize(f, 2);
    const auto b = target_metric_for_om(f, zero, 2);
    REQUIRE(a.conformal_weight);
    REQUIRE(b.conformal_weight);
    for (std::size_t i = 0; i < g->size(); ++i)
        REQUIRE(a.conformal_weight->value(i) == b.conformal_weight->value(i));

    const auto same = target_metric_for_om(f, f, 2);
    CHECK(same.conformal_weight->max_value() == 0.0);
    CHECK(same.conformal_weight->min_value() == 0.0);

    const auto c = ScalarField::constant(g, 1.7);
    CHECK(uniformize(c, 2).conformal_weight->is_constant());
    HarnessOptions opt;
    const PairList pairs{{at(*g, {0, 0}), at(*g, {0.5, -0.5})}};
    const auto rc = verify_uniformizer(g, c, 1.0, pairs, RadiusSchedule{0.1, 0.8, 5}.radii(), opt);
    CHECK(rc.pass);
    CHECK(std::fabs(rc.pairs[0].empirical) < 1e-9);

    const std::size_t r1[] = {20001};
    auto line = build_grid(Box{{-2}, {2}}, r1);
    const auto x1 = field(line, "x1");
    const double p0[] = {-0.5}, p1[] = {1.0};
    const auto r1d = verify_uniformizer(line, x1, 1.0, {{line->nearest(p0), line->nearest(p1)}},
                                        RadiusSchedule{0.1, 0.8, 5}.radii(), opt);
    CHECK(r1d.pass);

    auto atoms = build_atoms({{0.0}}, {1.0});
    CHECK_THROWS_AS(verify_uniformizer(atoms, ScalarField::constant(atoms, 0.0), 1.0, {{0, 0}}, r1d.radii, opt),
                    InputError);
}

TEST_CASE("divergence probe on the closed-form construction") {
    const double C = 1.3, alpha = 2.0, ux = 0.4, uy = -0.1;
    auto law = [=](double r) { return -C / std::pow(r, alpha); };
    SyntheticMassSource src(law, {std::exp(ux), std::exp(uy)});
    std::vector<double> radii;
    for (int j = 0; j < 8; ++j) radii.push_back(0.5 * std::pow(0.8, j));
    SmallBallFit sb;
    sb.alpha = alpha;
    sb.C_const = C;
    const auto rep = divergence_probe_c(src, ux, uy, 0, 1, radii, sb, HarnessOptions{});
    for (const auto& s : rep.per_radius) {
        const double exact = C * std::pow(s.radius, -alpha) * (std::exp(-alpha * uy) - std::exp(-alpha * ux));
        CHECK(std::fabs(s.log_ratio - exact) <= 1e-9 * std::fabs(exact));
    }
    CHECK(rep.diverged == Divergence::PlusInfinity);
    CHECK(rep.direction == "to-infinity");
    CHECK(rep.rate_exponent == doctest::Approx(alpha).epsilon(1e-6));
    CHECK(rep.rate_coefficient == doctest::Approx(rep.predicted_coefficient).epsilon(1e-6));
    CHECK(rep.pass);

    // swapping the weights reverses the direction
    SyntheticMassSource rev(law, {std::exp(uy), std::exp(ux)});
    const auto back = divergence_probe_c(rev, uy, ux, 0, 1, radii, sb, HarnessOptions{});
    CHECK(back.direction == "to-zero");
    CHECK(back.pass);

    // constant weight: bounded log-ratios, no divergence
    SyntheticMassSource flat(law, {std::exp(0.3), std::exp(0.3)});
    const auto none = divergence_probe_c(flat, 0.3, 0.3, 0, 1, radii, sb, HarnessOptions{});
    CHECK(none.diverged == Divergence::None);
    CHECK_FALSE(none.pass);
    CHECK(none.note == "no divergence detected");
}

TEST_CASE("rigidity guard on finite-dimensional spaces") {
    auto g = plane(101);
    const auto u1 = ScalarField::constant(g, 0.0);
    const auto u2 = ScalarField::constant(g, 1.0);
    const PairList pairs{{at(*g, {0, 0}), at(*g, {0.5, 0})}};
    const auto radii = RadiusSchedule{0.2, 0.8, 6}.radii();
    const auto rep = rigidity_check(g, u1, u2, pairs, radii, radii, SmallBallOptions{}, HarnessOptions{});
    CHECK_FALSE(rep.precondition_met);
    CHECK_FALSE(rep.pass);
    CHECK(rep.note.find("precondition not met") != std::string::npos);
}

TEST_CASE("rigidity on a Brownian lattice") {
    auto p = build_path_lattice(128, 1.0, {Expression::parse("0"), Expression::parse("0.2*t")});
    const auto u1 = ScalarField::constant(p, 0.0);
    const auto u2 = ScalarField::constant(p, 1.0);
    const auto tanh_w = ScalarField::from_expression(p, Expression::parse("0.5*tanh(10*wT)"));
    std::vector<double> sb;
    for (int j = 0; j < 8; ++j) sb.push_back(0.25 * std::pow(0.8153, j));
    const auto radii = RadiusSchedule{0.3, 0.8, 6}.radii();
    HarnessOptions opt;
    const auto rep = rigidity_check(p, u1, u2, {{0, 1}}, radii, sb, SmallBallOptions{}, opt);
    CHECK(rep.precondition_met);
    CHECK(rep.agree);
    CHECK(rep.pass);
    CHECK(rep.first.differences[0].empirical == doctest::Approx(0.02).epsilon(0.5));

    const auto div = rigidity_check(p, u1, tanh_w, {{1, 0}}, sb, sb, SmallBallOptions{}, opt);
    CHECK(div.precondition_met);
    CHECK_FALSE(div.second.constant);
    REQUIRE(div.second.probes.size() == 1);
    CHECK(div.second.probes[0].diverged != Divergence::None);
    CHECK(div.pass);
}
