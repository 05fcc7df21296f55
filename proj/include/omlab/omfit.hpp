#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "omlab/ballmass.hpp"

namespace omlab {

/// Weighted least-squares line y = intercept + slope * x.
struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double intercept_error = 0.0;  // standard error of the intercept
    double residual = 0.0;         // root-mean-square residual
    std::size_t points = 0;
    bool weighted = false;
};

/// Fits with weights 1/se^2 when every se is positive, uniformly otherwise.
LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> se = {});

enum class Divergence { None, PlusInfinity, MinusInfinity };

const char* to_string(Divergence d);

struct RadiusSample {
    double radius = 0.0;
    double log_ratio = 0.0;
    double std_error = 0.0;
};

/// Estimate of OM(y) - OM(x) = lim log[mu(B(r,x)) / mu(B(r,y))].
struct OMDifferenceEstimate {
    std::size_t x = 0;
    std::size_t y = 0;
    std::string x_name;
    std::string y_name;
    double value = 0.0;  // +-infinity when diverged
    std::vector<RadiusSample> per_radius;  // schedule order (decreasing radius)
    std::vector<double> dropped_radii;     // MC underflow
    LinearFit fit;
    Divergence diverged = Divergence::None;

    /// Error used for agreement checks: intercept error, floored by the fit residual.
    double fit_error() const;
};

struct OmDifferenceOptions {
    double divergence_threshold = 20.0;
    std::size_t divergence_window = 3;
};

/// Log-ratios on the radii, extrapolated to r -> 0 with a + b r.
OMDifferenceEstimate om_difference(const MassSource& source, std::size_t x, std::size_t y,
                                   std::span<const double> radii, const OmDifferenceOptions& options = {});

/// Divergence rule: the last `window` log-ratios all exceed the threshold in
/// magnitude, share a sign, and grow monotonically as r decreases.
Divergence detect_divergence(const std::vector<RadiusSample>& samples, const OmDifferenceOptions& options);

struct MultiplierRatio {
    double multiplier = 1.0;
    double log_ratio = 0.0;  // extrapolated log mu(B(Cr))/mu(B(r))
    double ratio = 1.0;
    LinearFit fit;
};

struct DimensionFit {
    std::size_t anchor = 0;
    double p = 0.0;
    std::vector<MultiplierRatio> per_multiplier;
    double residual = 0.0;
};

/// Regresses extrapolated log mass ratios on log C through the origin.
DimensionFit fit_local_dimension(const MassSource& source, std::size_t anchor, std::span<const double> radii,
                                 std::span<const double> multipliers);

struct SmallBallOptions {
    double alpha_min = 0.05;
    double alpha_max = 4.0;
    double alpha_step = 0.01;
    double window_lo = 0.0;
    double window_hi = std::numeric_limits<double>::infinity();
    double slope_threshold = 0.05;   // normalized slope allowed at the selected alpha
    double spread_threshold = 0.05;  // coefficient of variation of r^alpha log m
    std::size_t min_radii = 5;
    /// MC masses must exceed this many samples' worth (10/N) to be used.
    double min_mc_hits = 10.0;
};

struct SmallBallPoint {
    double radius = 0.0;
    double log_mass = 0.0;
};

struct SmallBallFit {
    std::size_t anchor = 0;
    double alpha = 0.0;
    double C_const = 0.0;
    double window_lo = 0.0;  // radii actually used
    double window_hi = 0.0;
    double residual = 0.0;   // |normalized slope| at alpha
    double spread = 0.0;     // coefficient of variation at alpha
    double alpha_lo = 0.0;   // alpha grid values still passing the slope threshold
    double alpha_hi = 0.0;
    // rms misfit of log m: exp(-C r^-alpha) law vs a + p log r
    double law_rms = 0.0;
    double power_rms = 0.0;
    bool detected = false;
    std::vector<SmallBallPoint> points;
};

/// Normalized slope of r^alpha log m versus r: LS slope * (r_hi - r_lo) / |mean|.
double flatness_slope(std::span<const SmallBallPoint> points, double alpha);

/// Chooses alpha by the flatness of r^alpha log m(r) over the window;
/// C = -mean of r^alpha log m at the two smallest radii.
SmallBallFit fit_small_ball(std::vector<SmallBallPoint> points, const SmallBallOptions& options = {});

/// Convenience: pulls masses from a source at the given radii (MC masses
/// below the feasibility floor are dropped) and fits.
SmallBallFit fit_small_ball(const MassSource& source, std::size_t anchor, std::span<const double> radii,
                            const SmallBallOptions& options = {});

/// Outcome of running one fit at two anchors.
struct AnchorReport {
    std::size_t q1 = 0;
    std::size_t q2 = 0;
    double value1 = 0.0;
    double value2 = 0.0;
    double lo1 = 0.0, hi1 = 0.0, lo2 = 0.0, hi2 = 0.0;
    double tolerance = 0.0;
    bool agree = false;
};

/// A fit summarized as a value with an uncertainty interval.
struct AnchorFitSummary {
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Runs `fit` at both anchors; they agree when the intervals overlap or the
/// values differ by at most `tolerance`.
AnchorReport anchor_independence(const std::function<AnchorFitSummary(std::size_t)>& fit, std::size_t q1,
                                 std::size_t q2, double tolerance);

AnchorReport dimension_anchor_independence(const MassSource& source, std::size_t q1, std::size_t q2,
                                           std::span<const double> radii, std::span<const double> multipliers,
                                           double tolerance = 0.05);

AnchorReport small_ball_anchor_independence(const MassSource& source, std::size_t q1, std::size_t q2,
                                            std::span<const double> radii, const SmallBallOptions& options = {});

}  // namespace omlab
