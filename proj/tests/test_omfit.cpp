#include <cmath>

#include "doctest.h"
#include "omlab/error.hpp"
#include "omlab/omfit.hpp"

using namespace omlab;

namespace {

std::shared_ptr<const SampledSpace> gaussian_line() {
    const std::size_t r[] = {60001};
    return build_grid(Box{{-3}, {3}}, r);
}

std::size_t at(const SampledSpace& s, double x) {
    const double p[] = {x};
    return s.nearest(p);
}

// a source whose log-ratio sequence is given directly
class TableSource final : public MassSource {
public:
    explicit TableSource(std::vector<double> log_masses_y) : ly_(std::move(log_masses_y)) {}
    const SampledSpace* space() const override { return nullptr; }
    std::size_t center_count() const override { return 2; }
    std::vector<BallMassEstimate> masses(std::size_t c, std::span<const double> radii) const override {
        std::vector<BallMassEstimate> out(radii.size());
        for (std::size_t j = 0; j < radii.size(); ++j) {
            out[j].radius = radii[j];
            out[j].log_mass = c == 0 ? 0.0 : ly_.at(j);
            out[j].mass = std::exp(out[j].log_mass);
        }
        return out;
    }
    bool deterministic() const override { return true; }
    std::string describe() const override { return "table"; }

private:
    std::vector<double> ly_;
};

}  // namespace

TEST_CASE("weighted line fit") {
    const double x[] = {1, 2, 3, 4};
    const double y[] = {3, 5, 7, 9};
    const auto f = fit_line(x, y);
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.residual < 1e-12);
    const double se[] = {0.1, 0.1, 0.1, 0.1};
    CHECK(fit_line(x, y, se).weighted);
    const double one[] = {2};
    CHECK(fit_line(one, one).intercept == 2.0);
}

TEST_CASE("om_difference on the 1-D Gaussian") {
    auto g = gaussian_line();
    MeasureSpec mu = default_measure(*g);
    mu.tilt = ScalarField::from_expression(g, Expression::parse("x1^2/2"));
    GraphMassSource src(g, default_metric(*g), mu);
    const auto radii = RadiusSchedule{0.2, 0.7, 6}.radii();
    const auto e = om_difference(src, at(*g, 0), at(*g, 1), radii);
    CHECK(e.value == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::fabs(e.value - 0.5) < 0.05);
    CHECK(e.diverged == Divergence::None);
    CHECK(e.per_radius.size() == 6);
    CHECK(e.per_radius.front().radius > e.per_radius.back().radius);

    const auto same = om_difference(src, at(*g, 0.3), at(*g, 0.3), radii);
    CHECK(same.value == 0.0);

    // antisymmetry and cocycle are exact for deterministic masses
    const auto ab = om_difference(src, at(*g, -0.4), at(*g, 0.7), radii);
    const auto ba = om_difference(src, at(*g, 0.7), at(*g, -0.4), radii);
    const auto bc = om_difference(src, at(*g, 0.7), at(*g, 1.5), radii);
    const auto ac = om_difference(src, at(*g, -0.4), at(*g, 1.5), radii);
    CHECK(ab.value == doctest::Approx(-ba.value).epsilon(1e-12));
    CHECK(ac.value == doctest::Approx(ab.value + bc.value).epsilon(1e-9));
}

TEST_CASE("divergence detection") {
    const double radii[] = {0.5, 0.4, 0.3, 0.2, 0.1};
    OmDifferenceOptions opt;
    {
        TableSource s({-1, -5, -21, -30, -45});  // log-ratio 1, 5, 21, 30, 45
        const auto e = om_difference(s, 0, 1, radii, opt);
        CHECK(e.diverged == Divergence::PlusInfinity);
        CHECK(std::isinf(e.value));
    }
    {
        TableSource s({1, 5, 21, 30, 45});
        CHECK(om_difference(s, 0, 1, radii, opt).diverged == Divergence::MinusInfinity);
    }
    {
        TableSource s({-1, -5, -30, -25, -45});  // not monotone
        CHECK(om_difference(s, 0, 1, radii, opt).diverged == Divergence::None);
    }
    {
        TableSource s({-1, -5, -19, -30, -45});  // third-to-last under the threshold
        CHECK(om_difference(s, 0, 1, radii, opt).diverged == Divergence::None);
    }
}

TEST_CASE("om_difference reports infeasible schedules") {
    auto p = build_path_lattice(64, 1.0, {Expression::parse("0"), Expression::parse("0.1*t")});
    McOptions mc;
    mc.samples = 200;
    PathMassSource src(p, default_metric(*p), default_measure(*p), PathBackend::MonteCarlo, mc);
    const double radii[] = {0.05, 0.04};
    CHECK_THROWS_WITH_AS(om_difference(src, 0, 1, radii), doctest::Contains("schedule infeasible"), InfeasibleError);
}

TEST_CASE("local dimension") {
    const std::size_t r[] = {401, 401};
    auto g = build_grid(Box{{0, 0}, {1, 1}}, r);
    GraphMassSource src(g, default_metric(*g), default_measure(*g));
    const double c[] = {0.5, 0.5};
    const auto radii = RadiusSchedule{0.1, 0.8, 5}.radii();
    const double mult[] = {1.0, 1.5, 2.0};
    const auto d = fit_local_dimension(src, g->nearest(c), radii, mult);
    CHECK(d.p == doctest::Approx(2.0).epsilon(0.03));
    CHECK(d.per_multiplier[0].ratio == 1.0);
    const double only[] = {2.0};
    CHECK_THROWS_AS(fit_local_dimension(src, 0, radii, only), InputError);

    const double c2[] = {0.3, 0.6};
    const double mult2[] = {1.5, 2.0};
    CHECK(dimension_anchor_independence(src, g->nearest(c), g->nearest(c2), radii, mult2).agree);
}

TEST_CASE("small-ball fit recovers synthetic laws") {
    for (double alpha : {0.5, 1.0, 2.0}) {
        for (double C : {0.5, 2.0}) {
            std::vector<SmallBallPoint> pts;
            for (int j = 0; j < 8; ++j) {
                const double r = 0.25 * std::pow(1.25, j);
                pts.push_back({r, -C / std::pow(r, alpha)});
            }
            const auto f = fit_small_ball(pts);
            CHECK(f.detected);
            CHECK(std::fabs(f.alpha - alpha) <= 0.05 * alpha);
            CHECK(std::fabs(f.C_const - C) <= 0.05 * C);
        }
    }
}

TEST_CASE("small-ball fit rejects power laws and short windows") {
    // finite-dimensional: log m = 2 log r, no exp(-C/r^alpha) behaviour
    std::vector<SmallBallPoint> pts;
    for (int j = 0; j < 8; ++j) {
        const double r = 0.01 * std::pow(1.4, j);
        pts.push_back({r, 2.0 * std::log(r)});
    }
    CHECK_FALSE(fit_small_ball(pts).detected);
    pts.resize(3);
    CHECK_THROWS_AS(fit_small_ball(pts), InfeasibleError);
}

TEST_CASE("small-ball anchor independence on synthetic sources") {
    SyntheticMassSource src([](double r) { return -0.8 / (r * r); }, {1.0, 1.0});
    std::vector<double> radii;
    for (int j = 0; j < 8; ++j) radii.push_back(0.3 * std::pow(1.2, j));
    CHECK(small_ball_anchor_independence(src, 0, 1, radii).agree);
}
