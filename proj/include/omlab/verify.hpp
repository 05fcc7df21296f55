#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "omlab/ballmass.hpp"
#include "omlab/omfit.hpp"
#include "omlab/spaces.hpp"

namespace omlab {

enum class TransformCase { PartA, PartB, FixedMetric, Uniformize, TargetOm, Rigidity };

const char* to_string(TransformCase c);

using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

struct PairResult {
    std::size_t x = 0;
    std::size_t y = 0;
    std::string x_name;
    std::string y_name;
    double empirical = 0.0;
    double predicted = 0.0;
    double gap = 0.0;
    OMDifferenceEstimate estimate;
};

/// Empirical OM differences against a closed-form prediction.
struct TransformReport {
    TransformCase kind = TransformCase::FixedMetric;
    std::vector<PairResult> pairs;
    double max_gap = 0.0;
    double tolerance = 0.1;
    bool pass = false;
    std::string config_digest;
    std::string source;
    std::vector<double> radii;
    std::optional<DimensionFit> dimension_check;
    std::string note;
};

/// Shared knobs for the harnesses.
struct HarnessOptions {
    double tolerance = 0.1;
    OmDifferenceOptions om;
    PathBackend path_backend = PathBackend::Quadrature;
    McOptions mc;
    std::string config_digest;
};

std::unique_ptr<MassSource> make_mass_source(std::shared_ptr<const SampledSpace> space, MetricSpec metric,
                                             MeasureSpec measure, const HarnessOptions& options);

/// OM of the base measure at the stored points: 0 for Lebesgue cells,
/// -log(mass) for atoms, the discrete Cameron-Martin energy
/// (1/2) sum (dw)^2 / dt for Gaussian paths.
ScalarField base_om_field(const std::shared_ptr<const SampledSpace>& space);

/// [OM0 - pU + V](y) - [OM0 - pU + V](x); null fields count as zero.
double predict_om_delta(const ScalarField* om0, const ScalarField* u, const ScalarField* v, double p, std::size_t x,
                        std::size_t y);

/// OM = OM0 + V under the base metric.
TransformReport verify_fixed_metric(std::shared_ptr<const SampledSpace> space, const ScalarField* v,
                                    const PairList& pairs, std::span<const double> radii,
                                    const HarnessOptions& options);

/// Constant U = c: OM differences must equal those of OM0 + V.
TransformReport verify_part_a(std::shared_ptr<const SampledSpace> space, double c, const ScalarField* v,
                              const PairList& pairs, std::span<const double> radii, const HarnessOptions& options);

/// OM = OM0 - pU + V with true conformal balls. `p` is first confirmed on
/// the untilted base space at the first pair's x (within 0.1) using
/// `multipliers`; an unconfirmed p fails the report.
TransformReport verify_part_b(std::shared_ptr<const SampledSpace> space, const ScalarField& u,
                              const ScalarField* v, double p, const PairList& pairs, std::span<const double> radii,
                              std::span<const double> multipliers, const HarnessOptions& options);

/// Part (c) divergence of the mass ratio for U(x) != U(y).
struct DivergenceReport {
    std::size_t x = 0;
    std::size_t y = 0;
    std::string x_name;
    std::string y_name;
    double u_x = 0.0;
    double u_y = 0.0;
    std::vector<RadiusSample> per_radius;
    double max_abs_log_ratio = 0.0;
    Divergence diverged = Divergence::None;
    std::string direction = "none";  // to-infinity | to-zero | none
    double rate_exponent = 0.0;      // gamma in |log-ratio| ~ kappa r^{-gamma}
    double rate_coefficient = 0.0;   // kappa
    double predicted_coefficient = 0.0;  // C |e^{-alpha U(y)} - e^{-alpha U(x)}|
    double alpha = 0.0;
    double C_const = 0.0;
    bool rate_ok = false;
    bool pass = false;
    std::string note;
};

/// `source` must carry the conformal metric (ball radii scaled by
/// e^{U(center)}); `u_x`, `u_y` are the weights at the two centers.
DivergenceReport divergence_probe_c(const MassSource& source, double u_x, double u_y, std::size_t x, std::size_t y,
                                    std::span<const double> radii, const SmallBallFit& smallball,
                                    const HarnessOptions& options);

/// Conformal weight U = f / n: the metric e^{-f/n} d0 flattens OM to a constant.
MetricSpec uniformize(const ScalarField& f, std::size_t n);

/// Conformal weight U = (f - h) / n: OM becomes h up to a constant.
MetricSpec target_metric_for_om(const ScalarField& f, const ScalarField& h, std::size_t n);

/// Runs the uniformizer (sign = +1) or its sign-flipped variant (sign = -1,
/// U = -f/n) on e^{-f} lambda and compares every OM difference with 0.
TransformReport verify_uniformizer(std::shared_ptr<const SampledSpace> space, const ScalarField& f, double sign,
                                   const PairList& pairs, std::span<const double> radii,
                                   const HarnessOptions& options);

/// Runs target_metric_for_om on e^{-f} lambda and compares with h(y) - h(x).
TransformReport verify_target_om(std::shared_ptr<const SampledSpace> space, const ScalarField& f,
                                 const ScalarField& h, const PairList& pairs, std::span<const double> radii,
                                 const HarnessOptions& options);

struct RigidityArm {
    bool constant = false;
    std::vector<PairResult> differences;      // constant weight
    std::vector<DivergenceReport> probes;     // nonconstant weight
};

struct RigidityReport {
    bool precondition_met = false;
    std::optional<SmallBallFit> law;
    RigidityArm first;
    RigidityArm second;
    bool agree = false;  // both constant: differences match
    bool pass = false;
    double tolerance = 0.0;
    std::string note;
    std::string config_digest;
};

/// Conformal rigidity under a small-ball law: constant weights leave OM
/// differences unchanged, nonconstant weights make the ratios diverge.
/// `smallball_radii` are used to confirm the law at the first pair's x.
RigidityReport rigidity_check(std::shared_ptr<const SampledSpace> space, const ScalarField& u1, const ScalarField& u2,
                              const PairList& pairs, std::span<const double> radii,
                              std::span<const double> smallball_radii, const SmallBallOptions& smallball_options,
                              const HarnessOptions& options);

}  // namespace omlab
