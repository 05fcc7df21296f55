#include "omlab/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "omlab/error.hpp"

namespace omlab {

const char* to_string(SpaceKind kind) {
    switch (kind) {
    case SpaceKind::EuclideanGrid: return "euclidean-grid";
    case SpaceKind::AtomSet: return "atom-set";
    case SpaceKind::PathLattice: return "path-lattice";
    }
    return "?";
}

const char* to_string(BaseMeasure m) {
    switch (m) {
    case BaseMeasure::LebesgueCells: return "lebesgue-cells";
    case BaseMeasure::AtomMasses: return "atom-masses";
    case BaseMeasure::GaussianPath: return "gaussian-path";
    }
    return "?";
}

namespace {

// 1-D: nearest neighbors. 2-D: king + knight moves (16). Otherwise the
// full {-1,0,1}^n cube (26 in 3-D).
std::vector<std::vector<int>> stencil_deltas(std::size_t dim) {
    std::vector<std::vector<int>> out;
    if (dim == 2) {
        for (int a = -2; a <= 2; ++a)
            for (int b = -2; b <= 2; ++b) {
                if (a == 0 && b == 0) continue;
                const int m = std::max(std::abs(a), std::abs(b));
                const bool king = m == 1;
                const bool knight = (std::abs(a) == 1 && std::abs(b) == 2) || (std::abs(a) == 2 && std::abs(b) == 1);
                if (king || knight) out.push_back({a, b});
            }
        return out;
    }
    std::vector<int> d(dim, -1);
    for (;;) {
        if (std::any_of(d.begin(), d.end(), [](int v) { return v != 0; })) out.push_back(d);
        std::size_t a = 0;
        while (a < dim && d[a] == 1) d[a++] = -1;
        if (a == dim) break;
        ++d[a];
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// SampledSpace

void SampledSpace::point(std::size_t i, std::span<double> out) const {
    if (kind_ == SpaceKind::EuclideanGrid) {
        std::size_t rem = i;
        for (std::size_t a = 0; a < dim_; ++a) {
            const std::size_t k = rem / grid_.strides[a];
            rem %= grid_.strides[a];
            out[a] = k + 1 == grid_.resolution[a] ? grid_.upper[a]
                                                   : grid_.lower[a] + static_cast<double>(k) * grid_.spacing[a];
        }
        return;
    }
    std::copy_n(coords_.begin() + static_cast<std::ptrdiff_t>(i * dim_), dim_, out.begin());
}

std::vector<double> SampledSpace::point(std::size_t i) const {
    std::vector<double> p(dim_);
    point(i, p);
    return p;
}

const std::string& SampledSpace::label(std::size_t i) const {
    static const std::string empty;
    return i < labels_.size() ? labels_[i] : empty;
}

std::size_t SampledSpace::find_label(const std::string& name) const {
    const auto it = std::find(labels_.begin(), labels_.end(), name);
    if (it == labels_.end()) throw InputError("unknown point label '" + name + "'");
    return static_cast<std::size_t>(it - labels_.begin());
}

double SampledSpace::cell_volume(std::size_t i) const {
    if (kind_ == SpaceKind::EuclideanGrid) {
        double v = 1.0;
        std::size_t rem = i;
        for (std::size_t a = 0; a < dim_; ++a) {
            const std::size_t k = rem / grid_.strides[a];
            rem %= grid_.strides[a];
            const bool edge = k == 0 || k + 1 == grid_.resolution[a];
            v *= edge ? 0.5 * grid_.spacing[a] : grid_.spacing[a];
        }
        return v;
    }
    if (kind_ == SpaceKind::AtomSet) return volumes_[i];
    return 0.0;
}

double SampledSpace::total_volume() const {
    if (kind_ == SpaceKind::EuclideanGrid) {
        // sum of trapezoid weights, accumulated per axis
        double v = 1.0;
        for (std::size_t a = 0; a < dim_; ++a) {
            double axis = 0.0;
            for (std::size_t k = 0; k < grid_.resolution[a]; ++k)
                axis += (k == 0 || k + 1 == grid_.resolution[a]) ? 0.5 * grid_.spacing[a] : grid_.spacing[a];
            v *= axis;
        }
        return v;
    }
    return std::accumulate(volumes_.begin(), volumes_.end(), 0.0);
}

double SampledSpace::base_distance(std::span<const double> a, std::span<const double> b) const {
    if (kind_ == SpaceKind::PathLattice) {
        double m = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::fabs(a[k] - b[k]));
        return m;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

std::size_t SampledSpace::nearest(std::span<const double> coords) const {
    if (coords.size() != dim_)
        throw InputError("point has " + std::to_string(coords.size()) + " coordinates, space has dimension " +
                         std::to_string(dim_));
    if (kind_ == SpaceKind::EuclideanGrid) {
        std::size_t i = 0;
        for (std::size_t a = 0; a < dim_; ++a) {
            const double u = (coords[a] - grid_.lower[a]) / grid_.spacing[a];
            const auto k = static_cast<std::size_t>(
                std::clamp(std::llround(u), 0LL, static_cast<long long>(grid_.resolution[a] - 1)));
            i += k * grid_.strides[a];
        }
        return i;
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    std::vector<double> p(dim_);
    for (std::size_t i = 0; i < size_; ++i) {
        point(i, p);
        const double d = base_distance(p, coords);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

double SampledSpace::diameter() const {
    if (kind_ == SpaceKind::EuclideanGrid) {
        double s = 0.0;
        for (std::size_t a = 0; a < dim_; ++a) s += std::pow(grid_.upper[a] - grid_.lower[a], 2);
        return std::sqrt(s);
    }
    double m = 0.0;
    for (std::size_t i = 0; i < size_; ++i)
        for (std::size_t j = i + 1; j < size_; ++j) m = std::max(m, base_distance(point(i), point(j)));
    return m;
}

// ---------------------------------------------------------------------------
// builders

std::shared_ptr<const SampledSpace> build_grid(const Box& domain, std::span<const std::size_t> resolution,
                                               std::size_t point_cap) {
    const std::size_t dim = domain.lower.size();
    if (dim == 0 || dim > 8) throw InputError("grid dimension must be between 1 and 8");
    if (domain.upper.size() != dim || resolution.size() != dim)
        throw InputError("grid box and resolution disagree on dimension");
    double count = 1.0;
    for (std::size_t a = 0; a < dim; ++a) {
        if (!(domain.upper[a] > domain.lower[a])) throw InputError("grid box is degenerate on axis " + std::to_string(a + 1));
        if (resolution[a] < 2) throw InputError("grid resolution must be >= 2 per axis");
        count *= static_cast<double>(resolution[a]);
    }
    if (count > static_cast<double>(point_cap))
        throw InputError("grid would have " + std::to_string(static_cast<long long>(count)) +
                         " points, above the cap of " + std::to_string(point_cap));

    auto s = std::shared_ptr<SampledSpace>(new SampledSpace());
    s->kind_ = SpaceKind::EuclideanGrid;
    s->dim_ = dim;
    s->size_ = static_cast<std::size_t>(count);
    auto& g = s->grid_;
    g.lower = domain.lower;
    g.upper = domain.upper;
    g.resolution.assign(resolution.begin(), resolution.end());
    g.spacing.resize(dim);
    g.strides.resize(dim);
    for (std::size_t a = 0; a < dim; ++a)
        g.spacing[a] = (g.upper[a] - g.lower[a]) / static_cast<double>(g.resolution[a] - 1);
    std::size_t stride = 1;
    for (std::size_t a = dim; a-- > 0;) {
        g.strides[a] = stride;
        stride *= g.resolution[a];
    }
    for (auto& d : stencil_deltas(dim)) {
        double len2 = 0.0;
        std::ptrdiff_t lin = 0;
        for (std::size_t a = 0; a < dim; ++a) {
            len2 += std::pow(d[a] * g.spacing[a], 2);
            lin += d[a] * static_cast<std::ptrdiff_t>(g.strides[a]);
        }
        s->stencil_.push_back({d, std::sqrt(len2)});
        s->stencil_linear_.push_back(static_cast<int>(lin));
    }
    s->eval_set_.resize(s->size_);
    std::iota(s->eval_set_.begin(), s->eval_set_.end(), std::size_t{0});
    return s;
}

std::shared_ptr<const SampledSpace> build_atoms(const std::vector<std::vector<double>>& coords,
                                                const std::vector<double>& masses,
                                                const std::vector<std::string>& labels) {
    if (coords.empty()) throw InputError("atom set is empty");
    if (masses.size() != coords.size()) throw InputError("atom masses and coordinates differ in count");
    if (!labels.empty() && labels.size() != coords.size()) throw InputError("atom labels and coordinates differ in count");
    const std::size_t dim = coords.front().size();
    double total = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (coords[i].size() != dim) throw InputError("atoms have inconsistent dimension");
        if (!(masses[i] > 0.0) || !std::isfinite(masses[i])) throw InputError("atom masses must be positive and finite");
        total += masses[i];
    }
    if (!std::isfinite(total)) throw InputError("atom masses must have finite total");

    auto s = std::shared_ptr<SampledSpace>(new SampledSpace());
    s->kind_ = SpaceKind::AtomSet;
    s->dim_ = dim;
    s->size_ = coords.size();
    for (const auto& c : coords) s->coords_.insert(s->coords_.end(), c.begin(), c.end());
    s->volumes_ = masses;
    s->labels_ = labels;
    if (s->labels_.empty())
        for (std::size_t i = 0; i < coords.size(); ++i) s->labels_.push_back(std::to_string(i));
    s->adjacency_offsets_.push_back(0);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        for (std::size_t j = 0; j < coords.size(); ++j) {
            if (i == j) continue;
            const double d = s->base_distance(coords[i], coords[j]);
            if (!(d > 0.0)) throw InputError("atoms " + s->labels_[i] + " and " + s->labels_[j] + " coincide");
            s->adjacency_.push_back({static_cast<std::uint32_t>(j), d});
        }
        s->adjacency_offsets_.push_back(s->adjacency_.size());
    }
    s->eval_set_.resize(s->size_);
    std::iota(s->eval_set_.begin(), s->eval_set_.end(), std::size_t{0});
    return s;
}

std::shared_ptr<const SampledSpace> build_path_lattice(std::size_t steps, double terminal_time,
                                                       const std::vector<Expression>& centers,
                                                       const std::vector<std::string>& labels) {
    if (steps < 2) throw InputError("path lattice needs steps >= 2");
    if (steps > 4096) throw InputError("path lattice steps above the cap of 4096");
    if (!(terminal_time > 0.0)) throw InputError("terminal_time must be positive");
    if (!labels.empty() && labels.size() != centers.size()) throw InputError("center labels and paths differ in count");

    auto s = std::shared_ptr<SampledSpace>(new SampledSpace());
    s->kind_ = SpaceKind::PathLattice;
    s->dim_ = steps;
    s->path_.steps = steps;
    s->path_.terminal_time = terminal_time;
    for (std::size_t i = 1; i <= steps; ++i)
        s->path_.times.push_back(terminal_time * static_cast<double>(i) / static_cast<double>(steps));
    s->size_ = centers.size();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        EvalContext ctx;
        ctx.terminal_time = terminal_time;
        if (std::fabs(centers[c].evaluate(ctx)) > 1e-12)
            throw InputError("center path '" + centers[c].source() + "' must start at 0");
        for (double t : s->path_.times) {
            ctx.t = t;
            ctx.w = 0.0;
            s->coords_.push_back(centers[c].evaluate(ctx));
        }
        s->labels_.push_back(labels.empty() ? std::to_string(c) : labels[c]);
    }
    s->eval_set_.resize(s->size_);
    std::iota(s->eval_set_.begin(), s->eval_set_.end(), std::size_t{0});
    return s;
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField ScalarField::from_values(std::shared_ptr<const SampledSpace> space, std::vector<double> values) {
    if (values.size() != space->size())
        throw InputError("field has " + std::to_string(values.size()) + " values for " + std::to_string(space->size()) +
                         " points");
    for (double v : values)
        if (!std::isfinite(v)) throw InputError("field values must be finite");
    ScalarField f;
    f.space_ = std::move(space);
    f.values_ = std::move(values);
    f.constant_ = std::adjacent_find(f.values_.begin(), f.values_.end(), std::not_equal_to<>()) == f.values_.end();
    if (f.space_->kind() == SpaceKind::PathLattice)
        throw InputError("path-lattice fields must be functionals (use an expression)");
    return f;
}

ScalarField ScalarField::from_expression(std::shared_ptr<const SampledSpace> space, const Expression& expr) {
    if (space->kind() == SpaceKind::PathLattice) {
        const double T = space->path()->terminal_time;
        auto fn = [expr, T](std::span<const double> path) {
            EvalContext ctx{path};
            ctx.terminal_time = T;
            return expr.evaluate(ctx);
        };
        auto f = from_functional(std::move(space), fn, expr.is_constant());
        f.expression_ = expr;
        return f;
    }
    if (expr.uses_path_primitives()) throw InputError("expression '" + expr.source() + "' uses path primitives on a non-path space");
    if (static_cast<std::size_t>(expr.max_coordinate()) > space->dimension())
        throw InputError("expression '" + expr.source() + "' reads a coordinate beyond the space dimension");
    std::vector<double> vals(space->size());
    std::vector<double> p(space->dimension());
    for (std::size_t i = 0; i < space->size(); ++i) {
        space->point(i, p);
        vals[i] = expr.evaluate(p);
    }
    auto f = from_values(std::move(space), std::move(vals));
    f.expression_ = expr;
    f.constant_ = f.constant_ || expr.is_constant();
    return f;
}

ScalarField ScalarField::from_functional(std::shared_ptr<const SampledSpace> space, Functional fn, bool constant) {
    if (space->kind() != SpaceKind::PathLattice) throw InputError("functional fields are only supported on path lattices");
    ScalarField f;
    f.space_ = std::move(space);
    f.functional_ = std::move(fn);
    f.constant_ = constant;
    f.values_.resize(f.space_->size());
    std::vector<double> p(f.space_->dimension());
    for (std::size_t i = 0; i < f.space_->size(); ++i) {
        f.space_->point(i, p);
        f.values_[i] = f.functional_(p);
        if (!std::isfinite(f.values_[i])) throw InputError("field is not finite at center path " + f.space_->label(i));
    }
    return f;
}

ScalarField ScalarField::constant(std::shared_ptr<const SampledSpace> space, double value) {
    if (space->kind() == SpaceKind::PathLattice) {
        auto f = from_functional(std::move(space), [value](std::span<const double>) { return value; }, true);
        f.expression_ = Expression::constant(value);
        return f;
    }
    auto f = from_values(space, std::vector<double>(space->size(), value));
    f.expression_ = Expression::constant(value);
    f.constant_ = true;
    return f;
}

double ScalarField::evaluate(std::span<const double> coords) const {
    if (functional_) return functional_(coords);
    const auto& s = *space_;
    if (s.kind() == SpaceKind::AtomSet) return values_[s.nearest(coords)];

    // multilinear interpolation over the enclosing cell, clamped to the box
    const auto& g = *s.grid();
    const std::size_t dim = s.dimension();
    std::size_t base = 0;
    double frac[8];
    std::size_t stride[8];
    for (std::size_t a = 0; a < dim; ++a) {
        const double u = std::clamp((coords[a] - g.lower[a]) / g.spacing[a], 0.0,
                                    static_cast<double>(g.resolution[a] - 1));
        auto k = static_cast<std::size_t>(std::floor(u));
        if (k + 1 >= g.resolution[a]) k = g.resolution[a] - 2;
        frac[a] = u - static_cast<double>(k);
        stride[a] = g.strides[a];
        base += k * g.strides[a];
    }
    double acc = 0.0;
    const std::size_t corners = std::size_t{1} << dim;
    for (std::size_t c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t idx = base;
        for (std::size_t a = 0; a < dim; ++a) {
            if (c & (std::size_t{1} << a)) {
                w *= frac[a];
                idx += stride[a];
            } else {
                w *= 1.0 - frac[a];
            }
        }
        if (w != 0.0) acc += w * values_[idx];
    }
    return acc;
}

ScalarField ScalarField::affine(double scale, double shift) const {
    if (functional_) {
        auto fn = functional_;
        return from_functional(space_, [fn, scale, shift](std::span<const double> p) { return scale * fn(p) + shift; },
                               constant_);
    }
    std::vector<double> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [&](double x) { return scale * x + shift; });
    auto f = from_values(space_, std::move(v));
    f.constant_ = f.constant_ || constant_;
    return f;
}

ScalarField ScalarField::combine(double a, const ScalarField& other, double b) const {
    if (other.space_ != space_) throw InputError("cannot combine fields on different spaces");
    if (functional_) {
        auto f1 = functional_;
        auto f2 = other.functional_;
        return from_functional(space_, [=](std::span<const double> p) { return a * f1(p) + b * f2(p); },
                               constant_ && other.constant_);
    }
    std::vector<double> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * values_[i] + b * other.values_[i];
    auto f = from_values(space_, std::move(v));
    f.constant_ = f.constant_ || (constant_ && other.constant_);
    return f;
}

double ScalarField::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

// ---------------------------------------------------------------------------
// modulus

double ContinuityModulus::at(double r) const {
    if (r > scope_radius * (1.0 + 1e-12))
        throw InputError("modulus queried at radius " + std::to_string(r) + " beyond its scope " +
                         std::to_string(scope_radius));
    const auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), r);
    if (it == breakpoints.end()) return bounds.back();
    return bounds[static_cast<std::size_t>(it - breakpoints.begin())];
}

ContinuityModulus ContinuityModulus::scaled(double factor) const {
    ContinuityModulus m = *this;
    for (auto& b : m.bounds) b *= factor;
    return m;
}

ContinuityModulus estimate_modulus(const ScalarField& field, std::size_t center, double scope_radius,
                                   std::size_t sample_count, std::size_t bins) {
    if (!(scope_radius > 0.0)) throw InputError("scope_radius must be positive");
    if (bins < 2) throw InputError("modulus needs at least 2 bins");
    const auto& s = field.space();
    if (center >= s.size()) throw InputError("modulus center out of range");

    const std::vector<double> c = s.point(center);
    const double fc = field.value(center);
    std::vector<std::pair<double, double>> samples;  // (distance, |df|)

    if (s.kind() == SpaceKind::EuclideanGrid) {
        const auto& g = *s.grid();
        const std::size_t dim = s.dimension();
        std::vector<std::size_t> lo(dim), hi(dim), k(dim);
        std::size_t ci = center;
        for (std::size_t a = 0; a < dim; ++a) {
            const std::size_t kc = ci / g.strides[a];
            ci %= g.strides[a];
            const auto reach = static_cast<std::size_t>(std::ceil(scope_radius / g.spacing[a]));
            lo[a] = kc >= reach ? kc - reach : 0;
            hi[a] = std::min(g.resolution[a] - 1, kc + reach);
        }
        k = lo;
        std::vector<double> p(dim);
        for (;;) {
            std::size_t idx = 0;
            for (std::size_t a = 0; a < dim; ++a) idx += k[a] * g.strides[a];
            s.point(idx, p);
            const double d = s.base_distance(c, p);
            if (d <= scope_radius) samples.emplace_back(d, std::fabs(field.value(idx) - fc));
            std::size_t a = dim;
            while (a-- > 0) {
                if (k[a] < hi[a]) {
                    ++k[a];
                    break;
                }
                k[a] = lo[a];
            }
            if (a == static_cast<std::size_t>(-1)) break;
        }
    } else if (s.kind() == SpaceKind::AtomSet) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double d = s.base_distance(c, s.point(i));
            if (d <= scope_radius) samples.emplace_back(d, std::fabs(field.value(i) - fc));
        }
    } else {
        // perturbed paths c + s * z / |z|_inf with z a Brownian sample path
        std::mt19937_64 rng(0x5eedULL + center);
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const std::size_t n = s.dimension();
        std::vector<double> z(n), w(n);
        const std::size_t draws = std::max<std::size_t>(sample_count, 64);
        for (std::size_t m = 0; m < draws; ++m) {
            double acc = 0.0, sup = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += normal(rng);
                z[i] = acc;
                sup = std::max(sup, std::fabs(acc));
            }
            const double radius = scope_radius * unif(rng);
            for (std::size_t i = 0; i < n; ++i) w[i] = c[i] + radius * z[i] / sup;
            samples.emplace_back(s.base_distance(c, w), std::fabs(field.evaluate(w) - fc));
        }
    }

    if (samples.size() > sample_count && sample_count > 0) {
        // keep an evenly strided subset, nearest points first
        std::sort(samples.begin(), samples.end());
        std::vector<std::pair<double, double>> kept;
        const double step = static_cast<double>(samples.size()) / static_cast<double>(sample_count);
        for (std::size_t m = 0; m < sample_count; ++m)
            kept.push_back(samples[static_cast<std::size_t>(static_cast<double>(m) * step)]);
        samples = std::move(kept);
    }

    ContinuityModulus out;
    out.center = c;
    out.scope_radius = scope_radius;
    out.sample_count = samples.size();
    out.breakpoints.resize(bins);
    out.bounds.assign(bins, 0.0);
    std::vector<bool> populated(bins, false);
    for (std::size_t b = 0; b < bins; ++b)
        out.breakpoints[b] = scope_radius * static_cast<double>(b + 1) / static_cast<double>(bins);
    for (const auto& [d, df] : samples) {
        auto b = static_cast<std::size_t>(std::lower_bound(out.breakpoints.begin(), out.breakpoints.end(), d) -
                                          out.breakpoints.begin());
        b = std::min(b, bins - 1);
        populated[b] = true;
        out.bounds[b] = std::max(out.bounds[b], df);
    }
    if (std::count(populated.begin(), populated.end(), true) < 2)
        throw InputError("modulus estimate populated fewer than 2 radius bins; widen the scope or refine the space");
    for (std::size_t b = 1; b < bins; ++b) out.bounds[b] = std::max(out.bounds[b], out.bounds[b - 1]);
    return out;
}

// ---------------------------------------------------------------------------
// specs

MetricSpec default_metric(const SampledSpace& space) {
    MetricSpec m;
    m.base = space.kind() == SpaceKind::PathLattice ? BaseMetric::SupNormPath : BaseMetric::Euclidean;
    return m;
}

MeasureSpec default_measure(const SampledSpace& space) {
    MeasureSpec m;
    switch (space.kind()) {
    case SpaceKind::EuclideanGrid: m.base = BaseMeasure::LebesgueCells; break;
    case SpaceKind::AtomSet: m.base = BaseMeasure::AtomMasses; break;
    case SpaceKind::PathLattice: m.base = BaseMeasure::GaussianPath; break;
    }
    return m;
}

void validate(const MetricSpec& metric, const SampledSpace& space) {
    const bool path = space.kind() == SpaceKind::PathLattice;
    if (path != (metric.base == BaseMetric::SupNormPath))
        throw InputError("metric base does not match the space kind");
    if (metric.conformal_weight) {
        if (&metric.conformal_weight->space() != &space) throw InputError("conformal weight lives on another space");
        for (double v : metric.conformal_weight->values())
            if (!std::isfinite(v)) throw InputError("conformal weight is not finite");
    }
}

void validate(const MeasureSpec& measure, const SampledSpace& space) {
    const bool ok = (measure.base == BaseMeasure::LebesgueCells && space.kind() == SpaceKind::EuclideanGrid) ||
                    (measure.base == BaseMeasure::AtomMasses && space.kind() == SpaceKind::AtomSet) ||
                    (measure.base == BaseMeasure::GaussianPath && space.kind() == SpaceKind::PathLattice);
    if (!ok) throw InputError(std::string("measure base ") + to_string(measure.base) + " does not match a " +
                              to_string(space.kind()) + " space");
    if (measure.tilt && &measure.tilt->space() != &space) throw InputError("measure tilt lives on another space");
}

// ---------------------------------------------------------------------------
// CSV

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(headers.begin(), headers.end(), name);
    if (it == headers.end()) throw InputError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - headers.begin());
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line)[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
        if (t.headers.empty()) {
            t.headers = cells;
            continue;
        }
        if (cells.size() != t.headers.size())
            throw InputError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(t.headers.size()));
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || *end != '\0') throw InputError("CSV line " + std::to_string(line_no) + ": '" + c + "' is not a number");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.headers.empty()) throw InputError("CSV has no header row");
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open CSV file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

namespace {

std::vector<std::size_t> coordinate_columns(const CsvTable& table) {
    std::vector<std::size_t> cols;
    for (std::size_t k = 1;; ++k) {
        const auto it = std::find(table.headers.begin(), table.headers.end(), "x" + std::to_string(k));
        if (it == table.headers.end()) break;
        cols.push_back(static_cast<std::size_t>(it - table.headers.begin()));
    }
    if (cols.empty()) throw InputError("CSV has no coordinate columns x1..xn");
    return cols;
}

}  // namespace

std::shared_ptr<const SampledSpace> atoms_from_csv(const CsvTable& table, const std::string& mass_column) {
    const auto cols = coordinate_columns(table);
    const std::size_t mc = table.column(mass_column);
    std::vector<std::vector<double>> coords;
    std::vector<double> masses;
    for (const auto& row : table.rows) {
        std::vector<double> p;
        for (auto c : cols) p.push_back(row[c]);
        coords.push_back(std::move(p));
        masses.push_back(row[mc]);
    }
    return build_atoms(coords, masses);
}

ScalarField field_from_csv(std::shared_ptr<const SampledSpace> space, const CsvTable& table,
                           const std::string& value_column) {
    const auto cols = coordinate_columns(table);
    if (cols.size() != space->dimension()) throw InputError("CSV coordinate count does not match the space dimension");
    const std::size_t vc = table.column(value_column);
    std::vector<double> vals(space->size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> p(cols.size());
    for (const auto& row : table.rows) {
        for (std::size_t a = 0; a < cols.size(); ++a) p[a] = row[cols[a]];
        const std::size_t i = space->nearest(p);
        if (!std::isnan(vals[i])) throw InputError("CSV assigns node " + std::to_string(i) + " twice");
        vals[i] = row[vc];
    }
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (std::isnan(vals[i])) throw InputError("CSV leaves node " + std::to_string(i) + " without a value");
    return ScalarField::from_values(std::move(space), std::move(vals));
}

}  // namespace omlab
