#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omlab/expr.hpp"

namespace omlab {

enum class SpaceKind { EuclideanGrid, AtomSet, PathLattice };

const char* to_string(SpaceKind kind);

/// Axis-aligned box [lower, upper].
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct GridGeometry {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::size_t> resolution;  // nodes per axis
    std::vector<double> spacing;
    std::vector<std::size_t> strides;  // row-major, axis 0 slowest
};

struct PathGeometry {
    std::size_t steps = 0;
    double terminal_time = 1.0;
    std::vector<double> times;  // t_1 .. t_steps (t_0 = 0 is pinned)
};

/// One step of the grid neighbor stencil.
struct StencilOffset {
    std::vector<int> delta;
    double length;
};

struct Neighbor {
    std::uint32_t index;
    double length;
};

/// A discretized metric measure space.
///
/// Grids are implicit: coordinates and neighbors are computed from the
/// geometry on demand. Atom sets store their points and a complete
/// neighbor graph. Path lattices store only the designated center paths;
/// the continuum of paths is reached through sampling or quadrature.
class SampledSpace {
public:
    SpaceKind kind() const { return kind_; }
    /// Ambient dimension n (grid/atom coordinates, or lattice steps).
    std::size_t dimension() const { return dim_; }
    /// Number of stored points. For path lattices: number of center paths.
    std::size_t size() const { return size_; }

    void point(std::size_t i, std::span<double> out) const;
    std::vector<double> point(std::size_t i) const;
    const std::string& label(std::size_t i) const;

    /// Base-measure weight of the cell around point i.
    double cell_volume(std::size_t i) const;
    double total_volume() const;

    /// Base distance d0 between coordinates (Euclidean, or sup-norm on paths).
    double base_distance(std::span<const double> a, std::span<const double> b) const;

    /// Nearest stored point to `coords`.
    std::size_t nearest(std::span<const double> coords) const;

    /// Index of a point by label; throws InputError if unknown.
    std::size_t find_label(const std::string& name) const;

    const std::vector<std::size_t>& eval_set() const { return eval_set_; }

    bool has_graph() const { return kind_ != SpaceKind::PathLattice; }

    template <typename F>
    void for_each_neighbor(std::size_t i, F&& visit) const;

    const GridGeometry* grid() const { return kind_ == SpaceKind::EuclideanGrid ? &grid_ : nullptr; }
    const PathGeometry* path() const { return kind_ == SpaceKind::PathLattice ? &path_ : nullptr; }
    const std::vector<StencilOffset>& stencil() const { return stencil_; }

    /// Largest base distance between two stored points (graph spaces: box
    /// diagonal for grids).
    double diameter() const;

    friend std::shared_ptr<const SampledSpace> build_grid(const Box&, std::span<const std::size_t>,
                                                          std::size_t);
    friend std::shared_ptr<const SampledSpace> build_atoms(const std::vector<std::vector<double>>&,
                                                           const std::vector<double>&,
                                                           const std::vector<std::string>&);
    friend std::shared_ptr<const SampledSpace> build_path_lattice(std::size_t, double,
                                                                  const std::vector<Expression>&,
                                                                  const std::vector<std::string>&);

private:
    SampledSpace() = default;

    SpaceKind kind_ = SpaceKind::EuclideanGrid;
    std::size_t dim_ = 0;
    std::size_t size_ = 0;
    GridGeometry grid_;
    PathGeometry path_;
    std::vector<StencilOffset> stencil_;
    std::vector<int> stencil_linear_;  // linear index deltas matching stencil_
    std::vector<double> coords_;  // explicit points (atoms, path centers), row-major
    std::vector<double> volumes_;  // explicit cell volumes (atoms)
    std::vector<std::string> labels_;
    std::vector<std::size_t> adjacency_offsets_;
    std::vector<Neighbor> adjacency_;
    std::vector<std::size_t> eval_set_;
};

inline constexpr std::size_t kDefaultPointCap = 10'000'000;

/// Regular grid with `resolution[k]` nodes on axis k. Cell volumes are
/// trapezoidal weights, so they sum to the box volume.
std::shared_ptr<const SampledSpace> build_grid(const Box& domain, std::span<const std::size_t> resolution,
                                               std::size_t point_cap = kDefaultPointCap);

/// Discrete atoms at the given coordinates; cell volumes are the atom masses.
std::shared_ptr<const SampledSpace> build_atoms(const std::vector<std::vector<double>>& coords,
                                                const std::vector<double>& masses,
                                                const std::vector<std::string>& labels = {});

/// Piecewise-linear paths on the uniform time grid t_i = i T / steps,
/// pinned at w(0) = 0, sup-norm base metric. `centers` are expressions in
/// t; they become the stored points and the evaluation set.
std::shared_ptr<const SampledSpace> build_path_lattice(std::size_t steps, double terminal_time,
                                                       const std::vector<Expression>& centers = {},
                                                       const std::vector<std::string>& labels = {});

/// Real-valued function on a space: nodal values with an interpolation
/// rule, or (on path lattices) a functional evaluated on whole paths.
class ScalarField {
public:
    using Functional = std::function<double(std::span<const double>)>;

    static ScalarField from_values(std::shared_ptr<const SampledSpace> space, std::vector<double> values);
    static ScalarField from_expression(std::shared_ptr<const SampledSpace> space, const Expression& expr);
    static ScalarField from_functional(std::shared_ptr<const SampledSpace> space, Functional fn,
                                       bool constant = false);
    static ScalarField constant(std::shared_ptr<const SampledSpace> space, double value);

    /// Value at stored point i.
    double value(std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }

    /// Multilinear on grids, nearest point on atom sets, exact functional
    /// evaluation on path lattices.
    double evaluate(std::span<const double> coords) const;

    const SampledSpace& space() const { return *space_; }
    const std::shared_ptr<const SampledSpace>& space_ptr() const { return space_; }
    bool is_constant() const { return constant_; }
    bool is_functional() const { return static_cast<bool>(functional_); }
    const std::optional<Expression>& expression() const { return expression_; }

    /// scale * this + shift.
    ScalarField affine(double scale, double shift) const;
    /// a * this + b * other (same space).
    ScalarField combine(double a, const ScalarField& other, double b) const;

    double min_value() const;
    double max_value() const;

private:
    std::shared_ptr<const SampledSpace> space_;
    std::vector<double> values_;
    Functional functional_;
    std::optional<Expression> expression_;
    bool constant_ = false;
};

/// Empirical modulus of continuity around one center: bound(r) controls
/// |field(y) - field(center)| for sampled y with d0(center, y) <= r.
struct ContinuityModulus {
    std::vector<double> breakpoints;
    std::vector<double> bounds;
    std::vector<double> center;
    double scope_radius = 0.0;
    std::size_t sample_count = 0;

    /// Bound at radius r (bound of the first breakpoint >= r). Throws if r
    /// exceeds the scope.
    double at(double r) const;
    ContinuityModulus scaled(double factor) const;
};

ContinuityModulus estimate_modulus(const ScalarField& field, std::size_t center, double scope_radius,
                                   std::size_t sample_count, std::size_t bins = 32);

enum class BaseMetric { Euclidean, SupNormPath };
enum class BaseMeasure { LebesgueCells, AtomMasses, GaussianPath };

const char* to_string(BaseMeasure m);

/// d = e^{-U} d0, or d0 when no conformal weight is set.
struct MetricSpec {
    BaseMetric base = BaseMetric::Euclidean;
    std::optional<ScalarField> conformal_weight;
};

/// mu = e^{-V} mu0, or mu0 when no tilt is set.
struct MeasureSpec {
    BaseMeasure base = BaseMeasure::LebesgueCells;
    std::optional<ScalarField> tilt;
};

MetricSpec default_metric(const SampledSpace& space);
MeasureSpec default_measure(const SampledSpace& space);

/// Throws InputError when a spec is inconsistent with the space.
void validate(const MetricSpec& metric, const SampledSpace& space);
void validate(const MeasureSpec& measure, const SampledSpace& space);

/// Plain CSV table with a header row.
struct CsvTable {
    std::vector<std::string> headers;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

/// Atom space from CSV columns x1..xn plus a mass column; optional
/// `label` column is not supported (labels are row numbers).
std::shared_ptr<const SampledSpace> atoms_from_csv(const CsvTable& table, const std::string& mass_column);

/// Field whose node values come from a CSV column, rows matched to nodes
/// by nearest point. Every node must receive exactly one row.
ScalarField field_from_csv(std::shared_ptr<const SampledSpace> space, const CsvTable& table,
                           const std::string& value_column);

// ---------------------------------------------------------------------------

template <typename F>
void SampledSpace::for_each_neighbor(std::size_t i, F&& visit) const {
    if (kind_ == SpaceKind::AtomSet) {
        for (std::size_t k = adjacency_offsets_[i]; k < adjacency_offsets_[i + 1]; ++k) visit(adjacency_[k]);
        return;
    }
    if (kind_ != SpaceKind::EuclideanGrid) return;
    // multi-index of i
    std::size_t idx[8];
    std::size_t rem = i;
    for (std::size_t a = 0; a < dim_; ++a) {
        idx[a] = rem / grid_.strides[a];
        rem %= grid_.strides[a];
    }
    for (std::size_t s = 0; s < stencil_.size(); ++s) {
        const auto& off = stencil_[s].delta;
        bool inside = true;
        for (std::size_t a = 0; a < dim_ && inside; ++a) {
            const auto j = static_cast<std::ptrdiff_t>(idx[a]) + off[a];
            inside = j >= 0 && j < static_cast<std::ptrdiff_t>(grid_.resolution[a]);
        }
        if (!inside) continue;
        const auto j = static_cast<std::ptrdiff_t>(i) + stencil_linear_[s];
        visit(Neighbor{static_cast<std::uint32_t>(j), stencil_[s].length});
    }
}

}  // namespace omlab
