#include "omlab/omfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "omlab/error.hpp"

namespace omlab {

const char* to_string(Divergence d) {
    switch (d) {
    case Divergence::None: return "none";
    case Divergence::PlusInfinity: return "+inf";
    case Divergence::MinusInfinity: return "-inf";
    }
    return "?";
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> se) {
    if (x.size() != y.size() || x.empty()) throw InputError("fit_line needs matching non-empty inputs");
    LinearFit f;
    f.points = x.size();
    f.weighted = !se.empty() && se.size() == x.size() &&
                 std::all_of(se.begin(), se.end(), [](double s) { return s > 0.0 && std::isfinite(s); });
    if (x.size() == 1) {
        f.intercept = y[0];
        f.intercept_error = f.weighted ? se[0] : 0.0;
        return f;
    }
    double S = 0, Sx = 0, Sxx = 0, Sy = 0, Sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = f.weighted ? 1.0 / (se[i] * se[i]) : 1.0;
        S += w;
        Sx += w * x[i];
        Sxx += w * x[i] * x[i];
        Sy += w * y[i];
        Sxy += w * x[i] * y[i];
    }
    const double det = S * Sxx - Sx * Sx;
    if (!(std::fabs(det) > 0.0)) {
        f.intercept = Sy / S;
        return f;
    }
    f.slope = (S * Sxy - Sx * Sy) / det;
    f.intercept = (Sxx * Sy - Sx * Sxy) / det;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        rss += r * r;
    }
    f.residual = std::sqrt(rss / static_cast<double>(x.size()));
    if (f.weighted) {
        f.intercept_error = std::sqrt(Sxx / det);
    } else if (x.size() > 2) {
        const double s2 = rss / static_cast<double>(x.size() - 2);
        f.intercept_error = std::sqrt(s2 * Sxx / det);
    }
    return f;
}

double OMDifferenceEstimate::fit_error() const { return fit.intercept_error; }

Divergence detect_divergence(const std::vector<RadiusSample>& samples, const OmDifferenceOptions& options) {
    const std::size_t k = options.divergence_window;
    if (k == 0 || samples.size() < k) return Divergence::None;
    // samples are in decreasing radius order; the tail holds the smallest radii
    const auto tail = std::span(samples).last(k);
    const double sign = tail.front().log_ratio > 0.0 ? 1.0 : -1.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double v = tail[i].log_ratio * sign;
        if (!(v > options.divergence_threshold)) return Divergence::None;
        if (i > 0 && !(v > prev)) return Divergence::None;
        prev = v;
    }
    return sign > 0 ? Divergence::PlusInfinity : Divergence::MinusInfinity;
}

OMDifferenceEstimate om_difference(const MassSource& source, std::size_t x, std::size_t y,
                                   std::span<const double> radii, const OmDifferenceOptions& options) {
    if (x >= source.center_count() || y >= source.center_count())
        throw InputError("om_difference: point outside the source's space");
    if (radii.empty()) throw InputError("om_difference: empty radius schedule");

    std::vector<double> ordered(radii.begin(), radii.end());
    std::sort(ordered.begin(), ordered.end(), std::greater<>());

    OMDifferenceEstimate est;
    est.x = x;
    est.y = y;
    est.x_name = source.center_name(x);
    est.y_name = source.center_name(y);

    const auto mx = source.masses(x, ordered);
    const auto my = x == y ? mx : source.masses(y, ordered);
    for (std::size_t j = 0; j < ordered.size(); ++j) {
        if (mx[j].underflow || my[j].underflow || !std::isfinite(mx[j].log_mass) || !std::isfinite(my[j].log_mass)) {
            est.dropped_radii.push_back(ordered[j]);
            continue;
        }
        RadiusSample s;
        s.radius = ordered[j];
        s.log_ratio = x == y ? 0.0 : mx[j].log_mass - my[j].log_mass;
        s.std_error = std::hypot(mx[j].log_std_error(), my[j].log_std_error());
        est.per_radius.push_back(s);
    }
    if (est.per_radius.empty())
        throw InfeasibleError("schedule infeasible: every radius underflowed (smallest " +
                              std::to_string(ordered.back()) + ")");

    std::vector<double> r, l, se;
    for (const auto& s : est.per_radius) {
        r.push_back(s.radius);
        l.push_back(s.log_ratio);
        se.push_back(s.std_error);
    }
    est.fit = fit_line(r, l, se);
    est.diverged = detect_divergence(est.per_radius, options);
    switch (est.diverged) {
    case Divergence::None: est.value = est.fit.intercept; break;
    case Divergence::PlusInfinity: est.value = std::numeric_limits<double>::infinity(); break;
    case Divergence::MinusInfinity: est.value = -std::numeric_limits<double>::infinity(); break;
    }
    return est;
}

// ---------------------------------------------------------------------------
// local dimension

DimensionFit fit_local_dimension(const MassSource& source, std::size_t anchor, std::span<const double> radii,
                                 std::span<const double> multipliers) {
    if (anchor >= source.center_count()) throw InputError("fit_local_dimension: anchor out of range");
    const auto nontrivial = std::count_if(multipliers.begin(), multipliers.end(), [](double c) { return c != 1.0; });
    if (nontrivial < 2) throw InputError("fit_local_dimension needs at least 2 multipliers other than 1");
    if (radii.size() < 2) throw InputError("fit_local_dimension needs at least 2 radii");

    std::vector<double> all(radii.begin(), radii.end());
    for (double c : multipliers) {
        if (!(c > 0.0)) throw InputError("multipliers must be positive");
        if (c == 1.0) continue;
        for (double r : radii) all.push_back(c * r);
    }
    const auto masses = source.masses(anchor, all);
    const std::size_t n = radii.size();
    for (const auto& m : masses)
        if (m.underflow || !(std::isfinite(m.log_mass)))
            throw InfeasibleError("fit_local_dimension: non-positive ball mass at radius " + std::to_string(m.radius));

    DimensionFit out;
    out.anchor = anchor;
    double num = 0.0, den = 0.0;
    std::size_t block = 1;
    for (double c : multipliers) {
        MultiplierRatio mr;
        mr.multiplier = c;
        if (c == 1.0) {
            out.per_multiplier.push_back(mr);  // identity: ratio exactly 1
            continue;
        }
        std::vector<double> l(n), se(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& big = masses[block * n + j];
            const auto& small = masses[j];
            l[j] = big.log_mass - small.log_mass;
            se[j] = std::hypot(big.log_std_error(), small.log_std_error());
        }
        ++block;
        mr.fit = fit_line(radii, l, se);
        mr.log_ratio = mr.fit.intercept;
        mr.ratio = std::exp(mr.log_ratio);
        if (!(mr.ratio > 0.0) || !std::isfinite(mr.log_ratio))
            throw InfeasibleError("fit_local_dimension: non-positive extrapolated ratio for C=" + std::to_string(c));
        const double lc = std::log(c);
        num += mr.log_ratio * lc;
        den += lc * lc;
        out.per_multiplier.push_back(mr);
    }
    out.p = num / den;
    double rss = 0.0;
    std::size_t used = 0;
    for (const auto& mr : out.per_multiplier) {
        if (mr.multiplier == 1.0) continue;
        const double r = mr.log_ratio - out.p * std::log(mr.multiplier);
        rss += r * r;
        ++used;
    }
    out.residual = std::sqrt(rss / static_cast<double>(used));
    return out;
}

// ---------------------------------------------------------------------------
// small-ball law

namespace {

struct Flatness {
    double slope = 0.0;   // normalized, signed
    double spread = 0.0;  // coefficient of variation
    double mean = 0.0;
};

Flatness flatness(std::span<const SmallBallPoint> pts, double alpha) {
    std::vector<double> r(pts.size()), g(pts.size());
    double rlo = pts.front().radius, rhi = pts.front().radius;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        r[j] = pts[j].radius;
        g[j] = std::pow(pts[j].radius, alpha) * pts[j].log_mass;
        rlo = std::min(rlo, r[j]);
        rhi = std::max(rhi, r[j]);
    }
    const auto line = fit_line(r, g);
    Flatness f;
    f.mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    const double scale = std::fabs(f.mean) > 0.0 ? std::fabs(f.mean) : 1.0;
    f.slope = line.slope * (rhi - rlo) / scale;
    double ss = 0.0;
    for (double v : g) ss += (v - f.mean) * (v - f.mean);
    f.spread = std::sqrt(ss / static_cast<double>(g.size())) / scale;
    return f;
}

}  // namespace

double flatness_slope(std::span<const SmallBallPoint> points, double alpha) {
    return flatness(points, alpha).slope;
}

SmallBallFit fit_small_ball(std::vector<SmallBallPoint> points, const SmallBallOptions& options) {
    if (!(options.alpha_step > 0.0) || !(options.alpha_max > options.alpha_min) || !(options.alpha_min > 0.0))
        throw InputError("fit_small_ball: invalid alpha grid");
    std::erase_if(points, [&](const SmallBallPoint& p) {
        return p.radius < options.window_lo || p.radius > options.window_hi;
    });
    for (const auto& p : points)
        if (!std::isfinite(p.log_mass)) throw InfeasibleError("fit_small_ball: non-positive mass at radius " + std::to_string(p.radius));
    if (points.size() < options.min_radii)
        throw InfeasibleError("fit_small_ball: masses available at " + std::to_string(points.size()) +
                              " radii in the window, need " + std::to_string(options.min_radii));
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.radius < b.radius; });

    SmallBallFit out;
    out.points = points;
    out.window_lo = points.front().radius;
    out.window_hi = points.back().radius;

    std::vector<double> grid;
    for (double a = options.alpha_min; a <= options.alpha_max + 1e-12; a += options.alpha_step) grid.push_back(a);
    std::vector<Flatness> flat;
    for (double a : grid) flat.push_back(flatness(points, a));

    // candidates: roots of the signed slope (bisection) and the grid minimum
    std::vector<double> candidates;
    std::size_t best_grid = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (std::fabs(flat[k].slope) < std::fabs(flat[best_grid].slope)) best_grid = k;
        if (k + 1 < grid.size() && (flat[k].slope == 0.0 || flat[k].slope * flat[k + 1].slope < 0.0)) {
            double lo = grid[k], hi = grid[k + 1];
            double slo = flat[k].slope;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double sm = flatness(points, mid).slope;
                if ((sm < 0.0) == (slo < 0.0)) {
                    lo = mid;
                    slo = sm;
                } else {
                    hi = mid;
                }
            }
            candidates.push_back(0.5 * (lo + hi));
        }
    }
    candidates.push_back(grid[best_grid]);

    double best_alpha = candidates.front();
    Flatness best = flatness(points, best_alpha);
    for (double a : candidates) {
        const auto f = flatness(points, a);
        const bool better_slope = std::fabs(f.slope) < options.slope_threshold;
        const bool best_ok = std::fabs(best.slope) < options.slope_threshold;
        if ((better_slope && !best_ok) || (better_slope == best_ok && f.spread < best.spread)) {
            best = f;
            best_alpha = a;
        }
    }
    out.alpha = best_alpha;
    out.residual = std::fabs(best.slope);
    out.spread = best.spread;
    const double g0 = std::pow(points[0].radius, best_alpha) * points[0].log_mass;
    const double g1 = std::pow(points[1].radius, best_alpha) * points[1].log_mass;
    out.C_const = -0.5 * (g0 + g1);

    out.alpha_lo = out.alpha_hi = out.alpha;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (std::fabs(flat[k].slope) <= options.slope_threshold) {
            out.alpha_lo = std::min(out.alpha_lo, grid[k]);
            out.alpha_hi = std::max(out.alpha_hi, grid[k]);
        }
    }
    // competing power law a + p log r on the same window
    std::vector<double> lr(points.size()), lm(points.size());
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < points.size(); ++j) {
        lr[j] = std::log(points[j].radius);
        lm[j] = points[j].log_mass;
        const double q = std::pow(points[j].radius, -best_alpha);
        num -= lm[j] * q;
        den += q * q;
    }
    const double c_ls = num / den;
    const auto pl = fit_line(lr, lm);
    double ss = 0.0;
    for (std::size_t j = 0; j < points.size(); ++j) {
        const double e = lm[j] + c_ls * std::pow(points[j].radius, -best_alpha);
        ss += e * e;
    }
    out.law_rms = std::sqrt(ss / static_cast<double>(points.size()));
    out.power_rms = pl.residual;
    out.detected = out.residual <= options.slope_threshold && out.spread <= options.spread_threshold &&
                   out.C_const > 0.0 && best.mean < 0.0 && out.law_rms < out.power_rms;
    return out;
}

SmallBallFit fit_small_ball(const MassSource& source, std::size_t anchor, std::span<const double> radii,
                            const SmallBallOptions& options) {
    const auto masses = source.masses(anchor, radii);
    std::vector<SmallBallPoint> pts;
    for (const auto& m : masses) {
        if (m.underflow || !std::isfinite(m.log_mass)) continue;
        if (m.method == MassMethod::MonteCarlo && m.mass * static_cast<double>(m.sample_count) < options.min_mc_hits)
            continue;
        pts.push_back({m.radius, m.log_mass});
    }
    auto fit = fit_small_ball(std::move(pts), options);
    fit.anchor = anchor;
    return fit;
}

// ---------------------------------------------------------------------------
// anchors

AnchorReport anchor_independence(const std::function<AnchorFitSummary(std::size_t)>& fit, std::size_t q1,
                                 std::size_t q2, double tolerance) {
    const auto a = fit(q1);
    const auto b = fit(q2);
    AnchorReport r;
    r.q1 = q1;
    r.q2 = q2;
    r.value1 = a.value;
    r.value2 = b.value;
    r.lo1 = a.lo;
    r.hi1 = a.hi;
    r.lo2 = b.lo;
    r.hi2 = b.hi;
    r.tolerance = tolerance;
    const bool overlap = a.lo <= b.hi && b.lo <= a.hi;
    r.agree = overlap || std::fabs(a.value - b.value) <= tolerance;
    return r;
}

AnchorReport dimension_anchor_independence(const MassSource& source, std::size_t q1, std::size_t q2,
                                           std::span<const double> radii, std::span<const double> multipliers,
                                           double tolerance) {
    auto fit = [&](std::size_t q) {
        const auto d = fit_local_dimension(source, q, radii, multipliers);
        return AnchorFitSummary{d.p, d.p - d.residual, d.p + d.residual};
    };
    auto r = anchor_independence(fit, q1, q2, tolerance);
    // residual intervals may not overlap when both fits are very clean; the
    // tolerance alone then decides
    r.agree = std::fabs(r.value1 - r.value2) <= std::max(tolerance, 0.5 * ((r.hi1 - r.lo1) + (r.hi2 - r.lo2)));
    return r;
}

AnchorReport small_ball_anchor_independence(const MassSource& source, std::size_t q1, std::size_t q2,
                                            std::span<const double> radii, const SmallBallOptions& options) {
    auto fit = [&](std::size_t q) {
        const auto f = fit_small_ball(source, q, radii, options);
        return AnchorFitSummary{f.alpha, f.alpha_lo, f.alpha_hi};
    };
    return anchor_independence(fit, q1, q2, 0.0);
}

}  // namespace omlab
