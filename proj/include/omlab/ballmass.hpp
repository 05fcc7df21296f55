#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "omlab/geodesic.hpp"
#include "omlab/spaces.hpp"

namespace omlab {

enum class MassMethod { Quadrature, AtomSum, MonteCarlo, Synthetic };

const char* to_string(MassMethod m);

/// mu(B(r, x)) with its error. `log_mass` is authoritative: path-space
/// quadrature reaches masses far below the double range of `mass`.
struct BallMassEstimate {
    double mass = 0.0;
    double log_mass = 0.0;
    double std_error = 0.0;  // 0 for deterministic methods
    MassMethod method = MassMethod::Quadrature;
    std::size_t sample_count = 0;
    double radius = 0.0;
    std::size_t center = 0;
    std::uint64_t seed = 0;
    bool underflow = false;   // MC saw no sample in the ball
    double upper_bound = 0.0;  // 95% upper bound when underflow is set

    /// Standard error of log_mass (delta method).
    double log_std_error() const { return mass > 0.0 ? std_error / mass : 0.0; }
};

/// Geometric radius schedule r_j = r_max * ratio^j, j = 0..count-1.
struct RadiusSchedule {
    double r_max = 0.1;
    double ratio = 0.8;
    std::size_t count = 6;
    std::vector<double> multipliers{2.0};  // C values for ratio tests
    double outer = 0.0;                    // modulus scope R; 0 means 10 r_max

    std::vector<double> radii() const;
    double outer_radius() const { return outer > 0.0 ? outer : 10.0 * r_max; }
    /// Throws InputError naming the offending field.
    void validate() const;
};

/// Sum of e^{-V} * cell volume over ball members (grids: quadrature,
/// atoms: exact atom sum).
BallMassEstimate ball_mass(const SampledSpace& space, const MeasureSpec& measure, const BallRegion& ball);

struct McOptions {
    std::size_t samples = 100'000;
    std::uint64_t seed = 1;
    std::size_t partitions = 64;  // fixed; results do not depend on `workers`
    std::size_t workers = 1;
};

enum class PathBackend { MonteCarlo, Quadrature };

const char* to_string(PathBackend b);

/// Brownian paths on a uniform lattice drawn through the Cholesky factor of
/// the covariance min(s, t).
class BrownianLattice {
public:
    BrownianLattice(std::size_t steps, double terminal_time);

    std::size_t steps() const { return steps_; }
    double terminal_time() const { return terminal_time_; }

    /// MC masses of the sup-norm balls of the given base radii around
    /// `center`, tilted by e^{-V(path)} when `tilt` is set. One sample set
    /// serves all radii.
    std::vector<BallMassEstimate> ball_masses(std::span<const double> center, std::span<const double> radii,
                                              const ScalarField::Functional* tilt, const McOptions& options) const;

private:
    std::size_t steps_;
    double terminal_time_;
    std::vector<double> chol_;  // lower triangular, row-major
};

/// MC estimate of P(max_i |W_{t_i} - center_i| < r) for Brownian motion on
/// `steps` uniform times in (0, terminal_time].
BallMassEstimate smallball_probability(std::size_t steps, std::span<const double> center, double r,
                                       std::size_t samples, std::uint64_t seed, double terminal_time = 1.0,
                                       std::size_t workers = 1);

/// Deterministic mass of the sup-norm ball of base radius `base_radius`
/// around `center` under the lattice Brownian law: the Markov chain is
/// propagated strip by strip with composite Gauss-Legendre quadrature. The
/// tilt must depend on the path only through its terminal value.
BallMassEstimate quadrature_path_ball_mass(std::size_t steps, double terminal_time, std::span<const double> center,
                                           double base_radius, const ScalarField* tilt);

/// Source of ball masses around indexed centers; the conformal scaling of
/// the metric is applied inside the source.
class MassSource {
public:
    virtual ~MassSource() = default;

    /// Space the centers live on; null for synthetic sources.
    virtual const SampledSpace* space() const = 0;
    virtual std::size_t center_count() const = 0;
    virtual std::string center_name(std::size_t center) const;
    /// mu(B(r, center)) for each radius, in the order given.
    virtual std::vector<BallMassEstimate> masses(std::size_t center, std::span<const double> radii) const = 0;
    virtual bool deterministic() const = 0;
    /// Short description for reports.
    virtual std::string describe() const = 0;
};

/// Grid and atom spaces: one truncated Dijkstra per center, prefix sums of
/// the tilted cell weights in settle order.
class GraphMassSource final : public MassSource {
public:
    GraphMassSource(std::shared_ptr<const SampledSpace> space, MetricSpec metric, MeasureSpec measure);

    const SampledSpace* space() const override { return space_.get(); }
    std::size_t center_count() const override { return space_->size(); }
    std::string center_name(std::size_t center) const override;
    std::vector<BallMassEstimate> masses(std::size_t center, std::span<const double> radii) const override;
    bool deterministic() const override { return true; }
    std::string describe() const override;

    const MetricSpec& metric() const { return metric_; }
    const MeasureSpec& measure() const { return measure_; }

private:
    std::shared_ptr<const SampledSpace> space_;
    MetricSpec metric_;
    MeasureSpec measure_;
};

/// Path lattices: conformal balls are sup-norm balls of base radius
/// r e^{U(center)}; masses by Monte Carlo or by quadrature.
class PathMassSource final : public MassSource {
public:
    PathMassSource(std::shared_ptr<const SampledSpace> space, MetricSpec metric, MeasureSpec measure,
                   PathBackend backend, McOptions options = {});

    const SampledSpace* space() const override { return space_.get(); }
    std::size_t center_count() const override { return space_->size(); }
    std::string center_name(std::size_t center) const override { return space_->label(center); }
    std::vector<BallMassEstimate> masses(std::size_t center, std::span<const double> radii) const override;
    bool deterministic() const override { return backend_ == PathBackend::Quadrature; }
    std::string describe() const override;

    PathBackend backend() const { return backend_; }
    const McOptions& options() const { return options_; }

private:
    std::shared_ptr<const SampledSpace> space_;
    MetricSpec metric_;
    MeasureSpec measure_;
    PathBackend backend_;
    McOptions options_;
    BrownianLattice lattice_;
};

/// Closed-form masses: log mu(B(r, c)) = log_law(r * scale_c).
class SyntheticMassSource final : public MassSource {
public:
    SyntheticMassSource(std::function<double(double)> log_law, std::vector<double> radius_scales,
                        std::string description = "synthetic");

    const SampledSpace* space() const override { return nullptr; }
    std::size_t center_count() const override { return scales_.size(); }
    std::vector<BallMassEstimate> masses(std::size_t center, std::span<const double> radii) const override;
    bool deterministic() const override { return true; }
    std::string describe() const override { return description_; }

private:
    std::function<double(double)> log_law_;
    std::vector<double> scales_;
    std::string description_;
};

/// CSV rows: center_id,radius,mass,log_mass,std_error,method,samples,seed
void write_mass_csv(std::ostream& out, const std::vector<BallMassEstimate>& rows, const MassSource* source = nullptr);

}  // namespace omlab
