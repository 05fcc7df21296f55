#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "omlab/spaces.hpp"

namespace omlab {

/// A polygonal path through stored points.
struct PolyPath {
    std::vector<std::size_t> vertices;
    double base_length = 0.0;
    double conformal_length = 0.0;
};

/// Output of one truncated single-source Dijkstra run: nodes in settle
/// order (nondecreasing distance) with their distances.
struct DistanceMap {
    std::size_t source = 0;
    double cutoff = 0.0;
    std::vector<std::uint32_t> settled;
    std::vector<double> distance;  // parallel to `settled`
    bool exhausted = false;        // the whole connected component was settled

    /// Number of settled nodes with distance <= r.
    std::size_t count_within(double r) const;
};

/// Edge weight e^{-U(midpoint)} * d0(a, b); plain d0 when `weight` is null.
double edge_weight(const SampledSpace& space, const ScalarField* weight, std::size_t a, std::size_t b, double length);

/// Dijkstra from `source`, stopping once the frontier exceeds `cutoff`.
/// Ties in the heap are broken by point index.
DistanceMap shortest_distances(const SampledSpace& space, const ScalarField* weight, std::size_t source,
                               double cutoff);

/// Graph geodesic distance for d = e^{-U} d0 (U null: graph approximation to
/// d0). Returns +infinity for disconnected points.
double conformal_distance(const SampledSpace& space, const ScalarField* weight, std::size_t x, std::size_t y);

/// A shortest path between x and y with both of its lengths.
PolyPath shortest_path(const SampledSpace& space, const ScalarField* weight, std::size_t x, std::size_t y);

/// Lengths of an explicit vertex sequence (consecutive vertices need not be
/// graph neighbors; segments use their d0 length and midpoint weight).
PolyPath measure_path(const SampledSpace& space, const ScalarField* weight, std::vector<std::size_t> vertices);

/// Metric ball B(r, x). On graph spaces `members` lists the points with
/// d(x, y) <= r. On path lattices membership is a predicate: the sup-norm
/// ball of base radius r e^{U(x)} around the center path, with
/// [r e^{U(x) - w}, r e^{U(x) + w}] reported when a modulus is supplied.
struct BallRegion {
    std::size_t center = 0;
    double radius = 0.0;
    MetricSpec metric;
    std::vector<std::uint32_t> members;  // sorted by distance
    std::vector<double> distances;
    bool saturated = false;

    bool is_predicate = false;
    std::vector<double> center_path;
    double base_radius = 0.0;
    double base_radius_lo = 0.0;
    double base_radius_hi = 0.0;

    bool contains(std::size_t point) const;
    bool contains_path(std::span<const double> path) const;
};

BallRegion metric_ball(const SampledSpace& space, const MetricSpec& metric, std::size_t x, double r,
                       const ContinuityModulus* modulus = nullptr);

/// Ball of radius r <= map.cutoff cut from an existing distance map.
BallRegion ball_from_map(const DistanceMap& map, const MetricSpec& metric, double r, std::size_t space_size);

/// Scales a base radius by e^{U(center)} on a path lattice.
double conformal_base_radius(const SampledSpace& space, const MetricSpec& metric, std::size_t center, double r);

struct SandwichReport {
    bool holds = true;
    double omega = 0.0;          // modulus value used
    double inner_radius = 0.0;   // r e^{U(x) - omega}
    double outer_radius = 0.0;   // r e^{U(x) + omega}
    std::size_t inner_count = 0;
    std::size_t ball_count = 0;
    std::size_t outer_count = 0;
    std::vector<std::uint32_t> inner_witnesses;  // in B0(inner) but not in B
    std::vector<std::uint32_t> outer_witnesses;  // in B but not in B0(outer)
};

/// Checks B0(r e^{U(x)-w}, x) ⊆ B(r, x) ⊆ B0(r e^{U(x)+w}, x) by enumeration.
/// The modulus is read at the largest base distance a conformal path of
/// length r can reach (plus one cell diagonal for midpoint interpolation).
SandwichReport sandwich_check(const SampledSpace& space, const ScalarField& weight, std::size_t x, double r,
                              const ContinuityModulus& modulus);

/// CSV with columns point_id, x1..xn, distance.
void write_ball_csv(std::ostream& out, const SampledSpace& space, const BallRegion& ball);

}  // namespace omlab
