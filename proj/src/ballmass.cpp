#include "omlab/ballmass.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "omlab/error.hpp"

namespace omlab {

const char* to_string(MassMethod m) {
    switch (m) {
    case MassMethod::Quadrature: return "quadrature";
    case MassMethod::AtomSum: return "atom-sum";
    case MassMethod::MonteCarlo: return "monte-carlo";
    case MassMethod::Synthetic: return "synthetic";
    }
    return "?";
}

const char* to_string(PathBackend b) { return b == PathBackend::MonteCarlo ? "monte-carlo" : "quadrature"; }

std::vector<double> RadiusSchedule::radii() const {
    std::vector<double> r(count);
    for (std::size_t j = 0; j < count; ++j) r[j] = r_max * std::pow(ratio, static_cast<double>(j));
    return r;
}

void RadiusSchedule::validate() const {
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw InputError("schedule.r_max must be positive");
    if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("schedule.ratio must lie in (0, 1)");
    if (count < 2) throw InputError("schedule.count must be at least 2");
    for (double c : multipliers)
        if (!(c > 0.0) || !std::isfinite(c)) throw InputError("schedule.multipliers must be positive");
    if (outer < 0.0 || (outer > 0.0 && outer < r_max)) throw InputError("schedule.outer must be >= r_max");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

BallMassEstimate finish_deterministic(double mass, MassMethod method, double r, std::size_t center) {
    BallMassEstimate e;
    e.mass = mass;
    e.log_mass = mass > 0.0 ? std::log(mass) : kNegInf;
    e.method = method;
    e.radius = r;
    e.center = center;
    return e;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// 8-point Gauss-Legendre rule on [-1, 1]
constexpr double kGlNodes[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeights[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                                  0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

void gauss_legendre(double lo, double hi, double panel_width, std::vector<double>& x, std::vector<double>& w) {
    x.clear();
    w.clear();
    if (!(hi > lo)) return;
    const auto panels = static_cast<std::size_t>(
        std::clamp(std::ceil((hi - lo) / panel_width), 2.0, 512.0));
    const double h = (hi - lo) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = lo + (static_cast<double>(p) + 0.5) * h;
        for (int k = 0; k < 8; ++k) {
            x.push_back(mid + 0.5 * h * kGlNodes[k]);
            w.push_back(0.5 * h * kGlWeights[k]);
        }
    }
}

}  // namespace

BallMassEstimate ball_mass(const SampledSpace& space, const MeasureSpec& measure, const BallRegion& ball) {
    validate(measure, space);
    if (ball.is_predicate)
        throw InputError("path-lattice balls need a sampling or quadrature backend (use PathMassSource)");
    double mass = 0.0;
    for (auto i : ball.members) {
        const double tilt = measure.tilt ? std::exp(-measure.tilt->value(i)) : 1.0;
        mass += tilt * space.cell_volume(i);
    }
    return finish_deterministic(mass,
                                measure.base == BaseMeasure::AtomMasses ? MassMethod::AtomSum : MassMethod::Quadrature,
                                ball.radius, ball.center);
}

// ---------------------------------------------------------------------------
// Brownian lattice

BrownianLattice::BrownianLattice(std::size_t steps, double terminal_time)
    : steps_(steps), terminal_time_(terminal_time) {
    if (steps < 1) throw InputError("Brownian lattice needs at least one step");
    if (!(terminal_time > 0.0)) throw InputError("terminal_time must be positive");
    const auto n = static_cast<Eigen::Index>(steps);
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            cov(i, j) = terminal_time * static_cast<double>(std::min(i, j) + 1) / static_cast<double>(steps);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw InputError("lattice covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    chol_.resize(steps * steps);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) chol_[static_cast<std::size_t>(i * n + j)] = L(i, j);
}

std::vector<BallMassEstimate> BrownianLattice::ball_masses(std::span<const double> center,
                                                           std::span<const double> radii,
                                                           const ScalarField::Functional* tilt,
                                                           const McOptions& options) const {
    if (center.size() != steps_) throw InputError("center path length does not match the lattice");
    if (options.samples == 0) throw InputError("mc.samples must be positive");
    if (options.partitions == 0) throw InputError("mc.partitions must be positive");
    for (double r : radii)
        if (!(r > 0.0)) throw InputError("ball radius must be positive");

    const std::size_t R = radii.size();
    const std::size_t P = std::min(options.partitions, options.samples);
    struct Partial {
        std::vector<double> sum, sum_sq;
        double max_weight = 0.0;
    };
    std::vector<Partial> partials(P);

    auto run_partition = [&](std::size_t p) {
        const std::size_t n_p = options.samples / P + (p < options.samples % P ? 1 : 0);
        std::mt19937_64 rng(splitmix64(options.seed ^ splitmix64(p + 1)));
        std::normal_distribution<double> normal;
        Partial part;
        part.sum.assign(R, 0.0);
        part.sum_sq.assign(R, 0.0);
        std::vector<double> z(steps_);
        for (std::size_t s = 0; s < n_p; ++s) {
            for (auto& v : z) v = normal(rng);
            double sup = 0.0;
            std::vector<double> w(tilt ? steps_ : 0);
            for (std::size_t i = 0; i < steps_; ++i) {
                const double* row = &chol_[i * steps_];
                double acc = 0.0;
                for (std::size_t j = 0; j <= i; ++j) acc += row[j] * z[j];
                sup = std::max(sup, std::fabs(acc - center[i]));
                if (tilt) w[i] = acc;
            }
            const double weight = tilt ? std::exp(-(*tilt)(w)) : 1.0;
            part.max_weight = std::max(part.max_weight, weight);
            for (std::size_t j = 0; j < R; ++j) {
                if (sup < radii[j]) {
                    part.sum[j] += weight;
                    part.sum_sq[j] += weight * weight;
                }
            }
        }
        partials[p] = std::move(part);
    };

    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, P);
    if (workers == 1) {
        for (std::size_t p = 0; p < P; ++p) run_partition(p);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < workers; ++k)
            pool.emplace_back([&] {
                for (std::size_t p = next++; p < P; p = next++) run_partition(p);
            });
        for (auto& t : pool) t.join();
    }

    std::vector<BallMassEstimate> out(R);
    const double N = static_cast<double>(options.samples);
    double max_weight = 0.0;
    for (const auto& part : partials) max_weight = std::max(max_weight, part.max_weight);
    for (std::size_t j = 0; j < R; ++j) {
        double s = 0.0, s2 = 0.0;
        for (const auto& part : partials) {
            s += part.sum[j];
            s2 += part.sum_sq[j];
        }
        auto& e = out[j];
        e.method = MassMethod::MonteCarlo;
        e.sample_count = options.samples;
        e.radius = radii[j];
        e.seed = options.seed;
        e.mass = s / N;
        const double var = N > 1.0 ? std::max(0.0, (s2 / N - e.mass * e.mass) * N / (N - 1.0)) : 0.0;
        e.std_error = std::sqrt(var / N);
        if (s <= 0.0) {
            e.underflow = true;
            e.log_mass = kNegInf;
            e.upper_bound = 3.0 * max_weight / N;
        } else {
            e.log_mass = std::log(e.mass);
        }
    }
    return out;
}

BallMassEstimate smallball_probability(std::size_t steps, std::span<const double> center, double r,
                                       std::size_t samples, std::uint64_t seed, double terminal_time,
                                       std::size_t workers) {
    const BrownianLattice lattice(steps, terminal_time);
    McOptions opt;
    opt.samples = samples;
    opt.seed = seed;
    opt.workers = workers;
    const double radii[1] = {r};
    return lattice.ball_masses(center, radii, nullptr, opt).front();
}

BallMassEstimate quadrature_path_ball_mass(std::size_t steps, double terminal_time, std::span<const double> center,
                                           double base_radius, const ScalarField* tilt) {
    if (center.size() != steps) throw InputError("center path length does not match the lattice");
    if (!(base_radius > 0.0)) throw InputError("ball radius must be positive");
    if (tilt && !tilt->is_constant()) {
        const auto& e = tilt->expression();
        if (!e || !e->terminal_only())
            throw InputError("the quadrature backend supports tilts that depend only on wT");
    }
    const double dt = terminal_time / static_cast<double>(steps);
    const double sigma = std::sqrt(dt);
    const double panel = 0.5 * sigma;
    double cmax = 0.0;
    for (double c : center) cmax = std::max(cmax, std::fabs(c));
    // the walk essentially never leaves [-L, L]
    const double L = cmax + 12.0 * std::sqrt(terminal_time);
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));

    std::vector<double> x, w, y, v, dens, next;
    auto strip = [&](std::size_t i, std::vector<double>& nodes, std::vector<double>& weights) {
        const double lo = std::max(center[i] - base_radius, -L);
        const double hi = std::min(center[i] + base_radius, L);
        gauss_legendre(lo, hi, panel, nodes, weights);
    };

    BallMassEstimate out;
    out.method = MassMethod::Quadrature;
    out.radius = base_radius;

    strip(0, x, w);
    if (x.empty()) {
        out.log_mass = kNegInf;
        return out;
    }
    dens.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) dens[k] = norm * std::exp(-0.5 * x[k] * x[k] / dt);

    double log_mass = 0.0;
    for (std::size_t i = 1; i < steps; ++i) {
        double total = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) total += dens[k] * w[k];
        if (!(total > 0.0)) {
            out.log_mass = kNegInf;
            return out;
        }
        log_mass += std::log(total);
        for (std::size_t k = 0; k < x.size(); ++k) dens[k] *= w[k] / total;  // dens now carries weights

        strip(i, y, v);
        if (y.empty()) {
            out.log_mass = kNegInf;
            return out;
        }
        next.assign(y.size(), 0.0);
        for (std::size_t a = 0; a < y.size(); ++a) {
            double acc = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double d = y[a] - x[k];
                acc += dens[k] * std::exp(-0.5 * d * d / dt);
            }
            next[a] = norm * acc;
        }
        std::swap(x, y);
        std::swap(w, v);
        std::swap(dens, next);
    }

    double total = 0.0;
    std::vector<double> path(steps, 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        double factor = 1.0;
        if (tilt) {
            path.back() = x[k];
            factor = std::exp(-tilt->evaluate(path));
        }
        total += dens[k] * w[k] * factor;
    }
    out.log_mass = total > 0.0 ? log_mass + std::log(total) : kNegInf;
    out.mass = std::exp(out.log_mass);
    return out;
}

// ---------------------------------------------------------------------------
// mass sources

std::string MassSource::center_name(std::size_t center) const { return std::to_string(center); }

GraphMassSource::GraphMassSource(std::shared_ptr<const SampledSpace> space, MetricSpec metric, MeasureSpec measure)
    : space_(std::move(space)), metric_(std::move(metric)), measure_(std::move(measure)) {
    if (!space_->has_graph()) throw InputError("GraphMassSource needs a grid or atom space");
    validate(metric_, *space_);
    validate(measure_, *space_);
}

std::string GraphMassSource::center_name(std::size_t center) const {
    if (space_->kind() == SpaceKind::AtomSet) return space_->label(center);
    const auto p = space_->point(center);
    std::string s = "(";
    for (std::size_t a = 0; a < p.size(); ++a) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%.6g", a ? ";" : "", p[a]);
        s += buf;
    }
    return s + ")";
}

std::vector<BallMassEstimate> GraphMassSource::masses(std::size_t center, std::span<const double> radii) const {
    if (center >= space_->size()) throw InputError("center index out of range");
    double r_top = 0.0;
    for (double r : radii) {
        if (!(r > 0.0)) throw InputError("ball radius must be positive");
        r_top = std::max(r_top, r);
    }
    const ScalarField* weight = metric_.conformal_weight ? &*metric_.conformal_weight : nullptr;
    const auto map = shortest_distances(*space_, weight, center, r_top * (1.0 + 1e-12));
    std::vector<double> prefix(map.settled.size() + 1, 0.0);
    for (std::size_t k = 0; k < map.settled.size(); ++k) {
        const auto i = map.settled[k];
        const double tilt = measure_.tilt ? std::exp(-measure_.tilt->value(i)) : 1.0;
        prefix[k + 1] = prefix[k] + tilt * space_->cell_volume(i);
    }
    const MassMethod method =
        measure_.base == BaseMeasure::AtomMasses ? MassMethod::AtomSum : MassMethod::Quadrature;
    std::vector<BallMassEstimate> out;
    for (double r : radii) out.push_back(finish_deterministic(prefix[map.count_within(r)], method, r, center));
    return out;
}

std::string GraphMassSource::describe() const {
    std::string s = std::string(to_string(space_->kind())) + ", " + to_string(measure_.base);
    if (measure_.tilt) s += ", tilted";
    if (metric_.conformal_weight) s += ", conformal metric";
    return s;
}

PathMassSource::PathMassSource(std::shared_ptr<const SampledSpace> space, MetricSpec metric, MeasureSpec measure,
                               PathBackend backend, McOptions options)
    : space_(std::move(space)),
      metric_(std::move(metric)),
      measure_(std::move(measure)),
      backend_(backend),
      options_(options),
      lattice_(space_->dimension(), space_->path() ? space_->path()->terminal_time : 1.0) {
    if (space_->kind() != SpaceKind::PathLattice) throw InputError("PathMassSource needs a path lattice");
    validate(metric_, *space_);
    validate(measure_, *space_);
}

std::vector<BallMassEstimate> PathMassSource::masses(std::size_t center, std::span<const double> radii) const {
    if (center >= space_->size()) throw InputError("center index out of range");
    const auto c = space_->point(center);
    std::vector<double> base(radii.size());
    for (std::size_t j = 0; j < radii.size(); ++j) {
        if (!(radii[j] > 0.0)) throw InputError("ball radius must be positive");
        base[j] = conformal_base_radius(*space_, metric_, center, radii[j]);
    }
    const ScalarField* tilt = measure_.tilt ? &*measure_.tilt : nullptr;
    std::vector<BallMassEstimate> out;
    if (backend_ == PathBackend::Quadrature) {
        for (double b : base)
            out.push_back(quadrature_path_ball_mass(space_->dimension(), lattice_.terminal_time(), c, b, tilt));
    } else {
        ScalarField::Functional fn;
        if (tilt) fn = [tilt](std::span<const double> p) { return tilt->evaluate(p); };
        out = lattice_.ball_masses(c, base, tilt ? &fn : nullptr, options_);
    }
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j].radius = radii[j];
        out[j].center = center;
    }
    return out;
}

std::string PathMassSource::describe() const {
    std::string s = "path-lattice(" + std::to_string(space_->dimension()) + " steps), gaussian-path, " +
                    to_string(backend_);
    if (measure_.tilt) s += ", tilted";
    if (metric_.conformal_weight) s += ", conformal metric";
    return s;
}

SyntheticMassSource::SyntheticMassSource(std::function<double(double)> log_law, std::vector<double> radius_scales,
                                         std::string description)
    : log_law_(std::move(log_law)), scales_(std::move(radius_scales)), description_(std::move(description)) {}

std::vector<BallMassEstimate> SyntheticMassSource::masses(std::size_t center, std::span<const double> radii) const {
    if (center >= scales_.size()) throw InputError("center index out of range");
    std::vector<BallMassEstimate> out;
    for (double r : radii) {
        BallMassEstimate e;
        e.method = MassMethod::Synthetic;
        e.radius = r;
        e.center = center;
        e.log_mass = log_law_(r * scales_[center]);
        e.mass = std::exp(e.log_mass);
        out.push_back(e);
    }
    return out;
}

void write_mass_csv(std::ostream& out, const std::vector<BallMassEstimate>& rows, const MassSource* source) {
    out << "center_id,radius,mass,log_mass,std_error,method,samples,seed\n";
    out.precision(17);
    for (const auto& e : rows) {
        out << (source ? source->center_name(e.center) : std::to_string(e.center)) << ',' << e.radius << ',' << e.mass
            << ',' << e.log_mass << ',' << e.std_error << ',' << to_string(e.method) << ',' << e.sample_count << ','
            << e.seed << '\n';
    }
}

}  // namespace omlab
