#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rmap/errors.hpp"
#include "rmap/geometry.hpp"

namespace rmap {

// True iff the closed segment p_i - p_j lies inside the region (exact
// segment-edge intersection tests plus midpoint containment).
inline bool segment_in_region(const Vec2& p_i, const Vec2& p_j, const Polygon& region) {
    return region.segment_inside(p_i, p_j);
}

// Cell-centered grid over the region's bounding box, filtered by the
// boundary-inclusive containment test. Row-major: y ascending, x inner.
// Cell k along an axis sits at min + (k + 1/2) * spacing, with
// floor(extent / spacing) cells per axis.
inline std::vector<Vec2> build_nodes(const Polygon& region, double spacing_m) {
    if (!(spacing_m > 0)) throw ConfigError("build_nodes: spacing must be positive");
    Vec2 lo, hi;
    region.bounding_box(lo, hi);
    const int nx = static_cast<int>(std::floor((hi.x() - lo.x()) / spacing_m + 1e-12));
    const int ny = static_cast<int>(std::floor((hi.y() - lo.y()) / spacing_m + 1e-12));
    std::vector<Vec2> nodes;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const Vec2 p(lo.x() + (ix + 0.5) * spacing_m, lo.y() + (iy + 0.5) * spacing_m);
            if (region.contains(p)) nodes.push_back(p);
        }
    }
    return nodes;
}

// Adjacency lists: (i, j) is an edge iff ||p_i - p_j|| <= d_max (inclusive)
// and the connecting segment stays inside the region. Self-loops included;
// the result is symmetric and each list is sorted ascending.
inline std::vector<std::vector<int>> build_edges(const std::vector<Vec2>& nodes, double d_max_m,
                                                 const Polygon& region) {
    const int n = static_cast<int>(nodes.size());
    std::vector<std::vector<int>> adj(n);
    const double d2 = d_max_m * d_max_m;
    for (int i = 0; i < n; ++i) {
        adj[i].push_back(i);
        for (int j = i + 1; j < n; ++j) {
            if ((nodes[i] - nodes[j]).squaredNorm() > d2) continue;
            if (!segment_in_region(nodes[i], nodes[j], region)) continue;
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    for (auto& row : adj) std::sort(row.begin(), row.end());
    return adj;
}

// Walkable-region graph with a truncated Gaussian transition kernel
// P_ij proportional to exp(-||p_i - p_j||^2 / (2 sigma_m^2)) on the edge set.
struct SpatialGraph {
    std::vector<Vec2> nodes;
    std::vector<std::vector<int>> edges;               // adjacency, sorted, incl. self-loop
    std::vector<std::vector<double>> transitions;      // P_ij aligned with edges[i]
    std::vector<std::vector<double>> log_transitions;  // log P_ij aligned with edges[i]
    double d_max_m = 0.0;
    double sigma_m = 0.0;

    int n_nodes() const { return static_cast<int>(nodes.size()); }

    double edge_length(int i, int j) const { return (nodes[i] - nodes[j]).norm(); }

    bool has_edge(int i, int j) const {
        const auto& row = edges[i];
        return std::binary_search(row.begin(), row.end(), j);
    }

    // log P(j | i); -inf when (i, j) is not an edge.
    double log_transition(int i, int j) const {
        const auto& row = edges[i];
        const auto it = std::lower_bound(row.begin(), row.end(), j);
        if (it == row.end() || *it != j) return -std::numeric_limits<double>::infinity();
        return log_transitions[i][static_cast<std::size_t>(it - row.begin())];
    }

    int nearest_node(const Vec2& p) const {
        int best = 0;
        double best_d = std::numeric_limits<double>::max();
        for (int i = 0; i < n_nodes(); ++i) {
            const double d = (nodes[i] - p).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }
};

// Row-stochastic kernel over the existing edge set; each row normalized by
// its own partition sum (self-loops guarantee a positive normalizer).
inline void transition_matrix(SpatialGraph& graph) {
    if (!(graph.sigma_m > 0)) throw ConfigError("transition_matrix: sigma_m must be positive");
    const double inv = 1.0 / (2.0 * graph.sigma_m * graph.sigma_m);
    graph.transitions.assign(graph.n_nodes(), {});
    graph.log_transitions.assign(graph.n_nodes(), {});
    for (int i = 0; i < graph.n_nodes(); ++i) {
        const auto& row = graph.edges[i];
        auto& p = graph.transitions[i];
        auto& lp = graph.log_transitions[i];
        p.resize(row.size());
        lp.resize(row.size());
        double z = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            p[k] = std::exp(-(graph.nodes[i] - graph.nodes[row[k]]).squaredNorm() * inv);
            z += p[k];
        }
        for (std::size_t k = 0; k < row.size(); ++k) {
            p[k] /= z;
            lp[k] = std::log(p[k]);
        }
    }
}

// Convenience builder; sigma_m defaults to d_max / 2 when not given.
inline SpatialGraph build_graph(const Polygon& region, double spacing_m, double d_max_m,
                                double sigma_m = 0.0) {
    SpatialGraph g;
    g.nodes = build_nodes(region, spacing_m);
    if (g.nodes.empty())
        throw DataError("build_graph: grid spacing exceeds the region extent (no nodes)");
    g.edges = build_edges(g.nodes, d_max_m, region);
    g.d_max_m = d_max_m;
    // default sigma_m = d_max / 2; fall back to the grid pitch when d_max is 0
    g.sigma_m = sigma_m > 0 ? sigma_m : (d_max_m > 0 ? 0.5 * d_max_m : 0.5 * spacing_m);
    transition_matrix(g);
    return g;
}

}  // namespace rmap
