#include "omlab/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <unordered_map>

#include "omlab/error.hpp"

namespace omlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRelTol = 1e-12;

using HeapEntry = std::pair<double, std::uint32_t>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

void require_graph(const SampledSpace& space) {
    if (!space.has_graph()) throw InputError("geodesic queries need a space with a neighbor graph");
}

void require_index(const SampledSpace& space, std::size_t i) {
    if (i >= space.size()) throw InputError("point index " + std::to_string(i) + " out of range");
}

// Runs Dijkstra; `stop` is consulted on every settled node.
template <typename Stop>
DistanceMap dijkstra(const SampledSpace& space, const ScalarField* weight, std::size_t source, double cutoff,
                     std::vector<std::uint32_t>* predecessor, Stop stop) {
    std::vector<double> dist(space.size(), kInf);
    std::vector<std::uint8_t> done(space.size(), 0);
    DistanceMap out;
    out.source = source;
    out.cutoff = cutoff;
    MinHeap heap;
    heap.emplace(0.0, static_cast<std::uint32_t>(source));
    dist[source] = 0.0;
    if (predecessor) predecessor->assign(space.size(), std::numeric_limits<std::uint32_t>::max());

    bool cut = false;
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (done[u]) continue;
        if (d > cutoff) {
            cut = true;
            break;
        }
        done[u] = 1;
        out.settled.push_back(u);
        out.distance.push_back(d);
        if (stop(u)) {
            cut = true;
            break;
        }
        space.for_each_neighbor(u, [&](const Neighbor& nb) {
            if (done[nb.index]) return;
            const double nd = d + edge_weight(space, weight, u, nb.index, nb.length);
            if (nd < dist[nb.index]) {
                dist[nb.index] = nd;
                if (predecessor) (*predecessor)[nb.index] = u;
                heap.emplace(nd, nb.index);
            }
        });
    }
    out.exhausted = !cut;
    return out;
}

}  // namespace

std::size_t DistanceMap::count_within(double r) const {
    return static_cast<std::size_t>(std::upper_bound(distance.begin(), distance.end(), r * (1.0 + kRelTol)) -
                                    distance.begin());
}

double edge_weight(const SampledSpace& space, const ScalarField* weight, std::size_t a, std::size_t b, double length) {
    if (!weight) return length;
    if (weight->is_constant()) return std::exp(-weight->value(a)) * length;
    const std::size_t n = space.dimension();
    double pa[8], pb[8], mid[8];
    space.point(a, std::span<double>(pa, n));
    space.point(b, std::span<double>(pb, n));
    for (std::size_t k = 0; k < n; ++k) mid[k] = 0.5 * (pa[k] + pb[k]);
    return std::exp(-weight->evaluate(std::span<const double>(mid, n))) * length;
}

DistanceMap shortest_distances(const SampledSpace& space, const ScalarField* weight, std::size_t source,
                               double cutoff) {
    require_graph(space);
    require_index(space, source);
    return dijkstra(space, weight, source, cutoff, nullptr, [](std::uint32_t) { return false; });
}

double conformal_distance(const SampledSpace& space, const ScalarField* weight, std::size_t x, std::size_t y) {
    require_graph(space);
    require_index(space, x);
    require_index(space, y);
    const auto map = dijkstra(space, weight, x, kInf, nullptr, [y](std::uint32_t u) { return u == y; });
    if (!map.settled.empty() && map.settled.back() == y) return map.distance.back();
    return kInf;
}

PolyPath measure_path(const SampledSpace& space, const ScalarField* weight, std::vector<std::size_t> vertices) {
    PolyPath p;
    p.vertices = std::move(vertices);
    for (std::size_t k = 1; k < p.vertices.size(); ++k) {
        const double len = space.base_distance(space.point(p.vertices[k - 1]), space.point(p.vertices[k]));
        p.base_length += len;
        p.conformal_length += edge_weight(space, weight, p.vertices[k - 1], p.vertices[k], len);
    }
    return p;
}

PolyPath shortest_path(const SampledSpace& space, const ScalarField* weight, std::size_t x, std::size_t y) {
    require_graph(space);
    require_index(space, x);
    require_index(space, y);
    std::vector<std::uint32_t> pred;
    const auto map = dijkstra(space, weight, x, kInf, &pred, [y](std::uint32_t u) { return u == y; });
    if (map.settled.empty() || map.settled.back() != y) throw InputError("points are disconnected");
    std::vector<std::size_t> verts{y};
    for (std::size_t v = y; v != x;) {
        v = pred[v];
        verts.push_back(v);
    }
    std::reverse(verts.begin(), verts.end());
    return measure_path(space, weight, std::move(verts));
}

bool BallRegion::contains(std::size_t point) const {
    return std::find(members.begin(), members.end(), static_cast<std::uint32_t>(point)) != members.end();
}

bool BallRegion::contains_path(std::span<const double> path) const {
    double sup = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) sup = std::max(sup, std::fabs(path[i] - center_path[i]));
    return sup <= base_radius;
}

double conformal_base_radius(const SampledSpace& space, const MetricSpec& metric, std::size_t center, double r) {
    (void)space;
    if (!metric.conformal_weight) return r;
    return r * std::exp(metric.conformal_weight->value(center));
}

BallRegion ball_from_map(const DistanceMap& map, const MetricSpec& metric, double r, std::size_t space_size) {
    if (r > map.cutoff * (1.0 + kRelTol)) throw InputError("ball radius exceeds the distance map cutoff");
    BallRegion b;
    b.center = map.source;
    b.radius = r;
    b.metric = metric;
    const std::size_t n = map.count_within(r);
    b.members.assign(map.settled.begin(), map.settled.begin() + static_cast<std::ptrdiff_t>(n));
    b.distances.assign(map.distance.begin(), map.distance.begin() + static_cast<std::ptrdiff_t>(n));
    b.saturated = b.members.size() == space_size;
    return b;
}

BallRegion metric_ball(const SampledSpace& space, const MetricSpec& metric, std::size_t x, double r,
                       const ContinuityModulus* modulus) {
    if (!(r > 0.0)) throw InputError("ball radius must be positive");
    require_index(space, x);
    validate(metric, space);
    if (space.kind() == SpaceKind::PathLattice) {
        BallRegion b;
        b.center = x;
        b.radius = r;
        b.metric = metric;
        b.is_predicate = true;
        b.center_path = space.point(x);
        b.base_radius = conformal_base_radius(space, metric, x, r);
        b.base_radius_lo = b.base_radius_hi = b.base_radius;
        if (modulus && metric.conformal_weight) {
            const double w = modulus->at(std::min(modulus->scope_radius, b.base_radius));
            b.base_radius_lo = b.base_radius * std::exp(-w);
            b.base_radius_hi = b.base_radius * std::exp(w);
        }
        return b;
    }
    const ScalarField* weight = metric.conformal_weight ? &*metric.conformal_weight : nullptr;
    const auto map = shortest_distances(space, weight, x, r * (1.0 + kRelTol));
    return ball_from_map(map, metric, r, space.size());
}

SandwichReport sandwich_check(const SampledSpace& space, const ScalarField& weight, std::size_t x, double r,
                              const ContinuityModulus& modulus) {
    require_graph(space);
    if (!(r > 0.0)) throw InputError("ball radius must be positive");
    double cell_diag = 0.0;
    if (const auto* g = space.grid()) {
        for (double h : g->spacing) cell_diag += h * h;
        cell_diag = std::sqrt(cell_diag);
    }
    const double ux = weight.value(x);
    const double reach = r * std::exp(ux + modulus.at(modulus.scope_radius)) + cell_diag;
    if (reach > modulus.scope_radius)
        throw InputError("modulus scope " + std::to_string(modulus.scope_radius) +
                         " does not cover the reach " + std::to_string(reach) + " of B(r, x)");

    SandwichReport rep;
    rep.omega = modulus.at(reach);
    rep.inner_radius = r * std::exp(ux - rep.omega);
    rep.outer_radius = r * std::exp(ux + rep.omega);

    const auto conformal = shortest_distances(space, &weight, x, r * (1.0 + kRelTol));
    const auto base = shortest_distances(space, nullptr, x, std::max(rep.outer_radius, reach) * (1.0 + kRelTol));

    std::unordered_map<std::uint32_t, double> d_conf, d_base;
    for (std::size_t k = 0; k < conformal.settled.size(); ++k) d_conf[conformal.settled[k]] = conformal.distance[k];
    for (std::size_t k = 0; k < base.settled.size(); ++k) d_base[base.settled[k]] = base.distance[k];

    for (std::size_t k = 0; k < base.settled.size(); ++k) {
        const auto u = base.settled[k];
        const double db = base.distance[k];
        if (db <= rep.inner_radius * (1.0 - kRelTol)) {
            ++rep.inner_count;
            const auto it = d_conf.find(u);
            if (it == d_conf.end() || it->second > r * (1.0 + kRelTol)) rep.inner_witnesses.push_back(u);
        }
        if (db <= rep.outer_radius * (1.0 + kRelTol)) ++rep.outer_count;
    }
    for (std::size_t k = 0; k < conformal.settled.size(); ++k) {
        if (conformal.distance[k] > r) continue;
        ++rep.ball_count;
        const auto u = conformal.settled[k];
        const auto it = d_base.find(u);
        if (it == d_base.end() || it->second > rep.outer_radius * (1.0 + kRelTol)) rep.outer_witnesses.push_back(u);
    }
    rep.holds = rep.inner_witnesses.empty() && rep.outer_witnesses.empty();
    return rep;
}

void write_ball_csv(std::ostream& out, const SampledSpace& space, const BallRegion& ball) {
    if (ball.is_predicate) throw InputError("path-lattice balls are predicates and cannot be enumerated");
    out << "point_id";
    for (std::size_t a = 0; a < space.dimension(); ++a) out << ",x" << a + 1;
    out << ",distance\n";
    out.precision(17);
    std::vector<double> p(space.dimension());
    for (std::size_t k = 0; k < ball.members.size(); ++k) {
        space.point(ball.members[k], p);
        out << ball.members[k];
        for (double v : p) out << ',' << v;
        out << ',' << ball.distances[k] << '\n';
    }
}

}  // namespace omlab
