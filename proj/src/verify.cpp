#include "omlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "omlab/error.hpp"

namespace omlab {

const char* to_string(TransformCase c) {
    switch (c) {
    case TransformCase::PartA: return "part-a";
    case TransformCase::PartB: return "part-b";
    case TransformCase::FixedMetric: return "fixed-metric";
    case TransformCase::Uniformize: return "uniformize";
    case TransformCase::TargetOm: return "target-om";
    case TransformCase::Rigidity: return "rigidity";
    }
    return "?";
}

std::unique_ptr<MassSource> make_mass_source(std::shared_ptr<const SampledSpace> space, MetricSpec metric,
                                             MeasureSpec measure, const HarnessOptions& options) {
    if (space->kind() == SpaceKind::PathLattice)
        return std::make_unique<PathMassSource>(std::move(space), std::move(metric), std::move(measure),
                                                options.path_backend, options.mc);
    return std::make_unique<GraphMassSource>(std::move(space), std::move(metric), std::move(measure));
}

ScalarField base_om_field(const std::shared_ptr<const SampledSpace>& space) {
    switch (space->kind()) {
    case SpaceKind::EuclideanGrid: return ScalarField::constant(space, 0.0);
    case SpaceKind::AtomSet: {
        std::vector<double> v(space->size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = -std::log(space->cell_volume(i));
        return ScalarField::from_values(space, std::move(v));
    }
    case SpaceKind::PathLattice: {
        const double dt = space->path()->terminal_time / static_cast<double>(space->dimension());
        return ScalarField::from_functional(space, [dt](std::span<const double> w) {
            double e = 0.0, prev = 0.0;
            for (double x : w) {
                e += (x - prev) * (x - prev);
                prev = x;
            }
            return 0.5 * e / dt;
        });
    }
    }
    throw InputError("unknown space kind");
}

double predict_om_delta(const ScalarField* om0, const ScalarField* u, const ScalarField* v, double p, std::size_t x,
                        std::size_t y) {
    auto diff = [&](const ScalarField* f) { return f ? f->value(y) - f->value(x) : 0.0; };
    return diff(om0) - p * diff(u) + diff(v);
}

namespace {

void check_pairs(const SampledSpace& space, const PairList& pairs) {
    if (pairs.empty()) throw InputError("no point pairs given");
    for (const auto& [x, y] : pairs)
        if (x >= space.size() || y >= space.size()) throw InputError("pair index outside the space");
}

MeasureSpec tilted(const SampledSpace& space, const ScalarField* v) {
    auto m = default_measure(space);
    if (v) m.tilt = *v;
    return m;
}

// runs om_difference on every pair and compares with predicted(x, y)
template <typename Predict>
TransformReport run_pairs(TransformCase kind, const MassSource& source, const PairList& pairs,
                          std::span<const double> radii, const HarnessOptions& options, Predict predicted) {
    TransformReport rep;
    rep.kind = kind;
    rep.tolerance = options.tolerance;
    rep.config_digest = options.config_digest;
    rep.source = source.describe();
    rep.radii.assign(radii.begin(), radii.end());
    std::sort(rep.radii.begin(), rep.radii.end(), std::greater<>());
    bool finite = true;
    for (const auto& [x, y] : pairs) {
        PairResult pr;
        pr.x = x;
        pr.y = y;
        pr.estimate = om_difference(source, x, y, radii, options.om);
        pr.x_name = pr.estimate.x_name;
        pr.y_name = pr.estimate.y_name;
        pr.empirical = pr.estimate.value;
        pr.predicted = predicted(x, y);
        pr.gap = std::fabs(pr.empirical - pr.predicted);
        if (!std::isfinite(pr.gap)) finite = false;
        rep.max_gap = std::max(rep.max_gap, std::isfinite(pr.gap) ? pr.gap : INFINITY);
        rep.pairs.push_back(std::move(pr));
    }
    rep.pass = finite && rep.max_gap <= rep.tolerance;
    if (!finite) rep.note = "an OM difference diverged";
    return rep;
}

}  // namespace

TransformReport verify_fixed_metric(std::shared_ptr<const SampledSpace> space, const ScalarField* v,
                                    const PairList& pairs, std::span<const double> radii,
                                    const HarnessOptions& options) {
    check_pairs(*space, pairs);
    const auto om0 = base_om_field(space);
    const auto source = make_mass_source(space, default_metric(*space), tilted(*space, v), options);
    return run_pairs(TransformCase::FixedMetric, *source, pairs, radii, options,
                     [&](std::size_t x, std::size_t y) { return predict_om_delta(&om0, nullptr, v, 0.0, x, y); });
}

TransformReport verify_part_a(std::shared_ptr<const SampledSpace> space, double c, const ScalarField* v,
                              const PairList& pairs, std::span<const double> radii, const HarnessOptions& options) {
    check_pairs(*space, pairs);
    const auto om0 = base_om_field(space);
    auto metric = default_metric(*space);
    metric.conformal_weight = ScalarField::constant(space, c);
    const auto source = make_mass_source(space, metric, tilted(*space, v), options);
    return run_pairs(TransformCase::PartA, *source, pairs, radii, options,
                     [&](std::size_t x, std::size_t y) { return predict_om_delta(&om0, nullptr, v, 0.0, x, y); });
}

TransformReport verify_part_b(std::shared_ptr<const SampledSpace> space, const ScalarField& u,
                              const ScalarField* v, double p, const PairList& pairs, std::span<const double> radii,
                              std::span<const double> multipliers, const HarnessOptions& options) {
    check_pairs(*space, pairs);
    if (&u.space() != space.get()) throw InputError("conformal weight lives on a different space");

    const auto base = make_mass_source(space, default_metric(*space), default_measure(*space), options);
    const auto dim = fit_local_dimension(*base, pairs.front().first, radii, multipliers);

    const auto om0 = base_om_field(space);
    auto metric = default_metric(*space);
    metric.conformal_weight = u;
    const auto source = make_mass_source(space, metric, tilted(*space, v), options);
    auto rep = run_pairs(TransformCase::PartB, *source, pairs, radii, options,
                         [&](std::size_t x, std::size_t y) { return predict_om_delta(&om0, &u, v, p, x, y); });
    rep.dimension_check = dim;
    if (std::fabs(dim.p - p) > 0.1) {
        rep.pass = false;
        char buf[128];
        std::snprintf(buf, sizeof buf, "local dimension %.4f does not confirm p = %g", dim.p, p);
        rep.note = buf;
    }
    return rep;
}

DivergenceReport divergence_probe_c(const MassSource& source, double u_x, double u_y, std::size_t x, std::size_t y,
                                    std::span<const double> radii, const SmallBallFit& smallball,
                                    const HarnessOptions& options) {
    DivergenceReport rep;
    rep.x = x;
    rep.y = y;
    rep.u_x = u_x;
    rep.u_y = u_y;
    rep.alpha = smallball.alpha;
    rep.C_const = smallball.C_const;

    const auto est = om_difference(source, x, y, radii, options.om);
    rep.x_name = est.x_name;
    rep.y_name = est.y_name;
    rep.per_radius = est.per_radius;
    rep.diverged = est.diverged;
    for (const auto& s : rep.per_radius) rep.max_abs_log_ratio = std::max(rep.max_abs_log_ratio, std::fabs(s.log_ratio));
    if (rep.diverged == Divergence::PlusInfinity) rep.direction = "to-infinity";
    if (rep.diverged == Divergence::MinusInfinity) rep.direction = "to-zero";

    rep.predicted_coefficient =
        smallball.C_const * std::fabs(std::exp(-smallball.alpha * u_y) - std::exp(-smallball.alpha * u_x));

    // |log-ratio| behaves like kappa r^{-gamma}: the same flatness fit as the
    // small-ball law, applied to -|log-ratio|
    std::vector<SmallBallPoint> pts;
    for (const auto& s : rep.per_radius)
        if (s.log_ratio != 0.0) pts.push_back({s.radius, -std::fabs(s.log_ratio)});
    SmallBallOptions rate;
    rate.min_radii = 3;
    if (rep.diverged != Divergence::None) try {
        const auto fit = fit_small_ball(pts, rate);
        rep.rate_exponent = fit.alpha;
        rep.rate_coefficient = fit.C_const;
        rep.rate_ok = smallball.alpha > 0.0 && std::fabs(fit.alpha - smallball.alpha) <= 0.3 * smallball.alpha;
    } catch (const std::exception& e) {
        rep.note = std::string("rate fit failed: ") + e.what();
    }

    const bool expect_inf = u_x > u_y;
    const bool direction_ok = (expect_inf && rep.diverged == Divergence::PlusInfinity) ||
                              (!expect_inf && rep.diverged == Divergence::MinusInfinity);
    rep.pass = rep.diverged != Divergence::None && direction_ok && rep.rate_ok;
    if (rep.diverged == Divergence::None && rep.note.empty()) rep.note = "no divergence detected";
    else if (rep.diverged != Divergence::None && !direction_ok) rep.note = "divergence in the wrong direction";
    return rep;
}

MetricSpec uniformize(const ScalarField& f, std::size_t n) {
    if (n == 0) throw InputError("uniformize: dimension must be positive");
    MetricSpec m = default_metric(f.space());
    m.conformal_weight = f.affine(1.0 / static_cast<double>(n), 0.0);
    return m;
}

MetricSpec target_metric_for_om(const ScalarField& f, const ScalarField& h, std::size_t n) {
    if (n == 0) throw InputError("target_metric_for_om: dimension must be positive");
    const double k = 1.0 / static_cast<double>(n);
    MetricSpec m = default_metric(f.space());
    m.conformal_weight = f.combine(k, h, -k);
    return m;
}

namespace {

void require_lebesgue(const SampledSpace& space) {
    if (space.kind() != SpaceKind::EuclideanGrid)
        throw InputError("the uniformizer needs a Lebesgue grid base space");
}

}  // namespace

TransformReport verify_uniformizer(std::shared_ptr<const SampledSpace> space, const ScalarField& f, double sign,
                                   const PairList& pairs, std::span<const double> radii,
                                   const HarnessOptions& options) {
    require_lebesgue(*space);
    check_pairs(*space, pairs);
    auto metric = uniformize(f, space->dimension());
    if (sign < 0.0) metric.conformal_weight = metric.conformal_weight->affine(-1.0, 0.0);
    const auto source = make_mass_source(space, metric, tilted(*space, &f), options);
    return run_pairs(TransformCase::Uniformize, *source, pairs, radii, options,
                     [](std::size_t, std::size_t) { return 0.0; });
}

TransformReport verify_target_om(std::shared_ptr<const SampledSpace> space, const ScalarField& f,
                                 const ScalarField& h, const PairList& pairs, std::span<const double> radii,
                                 const HarnessOptions& options) {
    require_lebesgue(*space);
    check_pairs(*space, pairs);
    const auto metric = target_metric_for_om(f, h, space->dimension());
    const auto source = make_mass_source(space, metric, tilted(*space, &f), options);
    return run_pairs(TransformCase::TargetOm, *source, pairs, radii, options,
                     [&](std::size_t x, std::size_t y) { return h.value(y) - h.value(x); });
}

RigidityReport rigidity_check(std::shared_ptr<const SampledSpace> space, const ScalarField& u1, const ScalarField& u2,
                              const PairList& pairs, std::span<const double> radii,
                              std::span<const double> smallball_radii, const SmallBallOptions& smallball_options,
                              const HarnessOptions& options) {
    check_pairs(*space, pairs);
    RigidityReport rep;
    rep.config_digest = options.config_digest;

    const auto base = make_mass_source(space, default_metric(*space), default_measure(*space), options);
    try {
        rep.law = fit_small_ball(*base, pairs.front().first, smallball_radii, smallball_options);
        rep.precondition_met = rep.law->detected;
    } catch (const InfeasibleError&) {
        rep.precondition_met = false;
    } catch (const InputError&) {
        rep.precondition_met = false;
    }
    if (!rep.precondition_met) {
        rep.note = "precondition not met: no small-ball law detected";
        return rep;
    }

    auto run_arm = [&](const ScalarField& u) {
        RigidityArm arm;
        arm.constant = u.is_constant();
        auto metric = default_metric(*space);
        metric.conformal_weight = u;
        const auto source = make_mass_source(space, metric, default_measure(*space), options);
        for (const auto& [x, y] : pairs) {
            if (arm.constant) {
                PairResult pr;
                pr.x = x;
                pr.y = y;
                pr.estimate = om_difference(*source, x, y, radii, options.om);
                pr.x_name = pr.estimate.x_name;
                pr.y_name = pr.estimate.y_name;
                pr.empirical = pr.estimate.value;
                arm.differences.push_back(std::move(pr));
            } else if (u.value(x) != u.value(y)) {
                arm.probes.push_back(divergence_probe_c(*source, u.value(x), u.value(y), x, y, radii, *rep.law, options));
            }
        }
        return arm;
    };
    rep.first = run_arm(u1);
    rep.second = run_arm(u2);

    if (rep.first.constant && rep.second.constant) {
        rep.agree = true;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            auto& a = rep.first.differences[k];
            auto& b = rep.second.differences[k];
            const double err = std::hypot(a.estimate.fit_error(), b.estimate.fit_error());
            const double tol = std::max(2.0 * err, options.tolerance);
            rep.tolerance = std::max(rep.tolerance, tol);
            a.predicted = b.empirical;
            b.predicted = a.empirical;
            a.gap = b.gap = std::fabs(a.empirical - b.empirical);
            if (!(a.gap <= tol)) rep.agree = false;
        }
        rep.pass = rep.agree;
        rep.note = rep.agree ? "OM differences agree under both constant weights"
                             : "OM differences under the two constant weights disagree";
    } else {
        // a nonconstant weight must make every probed pair diverge
        bool any = false, all = true;
        for (const auto* arm : {&rep.first, &rep.second}) {
            for (const auto& p : arm->probes) {
                any = true;
                all = all && p.diverged != Divergence::None;
            }
        }
        rep.pass = any && all;
        rep.note = !any ? "no pair separates the nonconstant weight" : all ? "nonconstant weight diverges"
                                                                             : "a probed pair did not diverge";
    }
    return rep;
}

}  // namespace omlab
