/*
 * Copyright 2026 The gmi-select Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gmi/error.hpp"
#include "gmi/random.hpp"

namespace gmi {

/// n points in `dim` dimensions (row-major) with a small-integer group tag per point.
struct PointCloud {
    std::size_t dim = 2;
    std::vector<double> coords;
    std::vector<int> tags;

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
    std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }

    void add(std::span<const double> p, int tag) {
        coords.insert(coords.end(), p.begin(), p.end());
        tags.push_back(tag);
    }
};

struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    double weight = 0.0;
};

struct SpanningTree {
    std::size_t n = 0;
    std::vector<Edge> edges;

    double total_weight() const {
        double sum = 0.0;
        for (const auto& e : edges) sum += e.weight;
        return sum;
    }
};

/// Edge counts between tag groups. Only a <= b is stored, so all entries sum to n - 1.
struct CrossCountMatrix {
    std::size_t groups = 0;
    std::vector<std::size_t> counts;

    explicit CrossCountMatrix(std::size_t g = 0) : groups(g), counts(g * g, 0) {}

    std::size_t at(std::size_t a, std::size_t b) const {
        if (a > b) std::swap(a, b);
        return counts[a * groups + b];
    }
    void add(std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        ++counts[a * groups + b];
    }
    std::size_t total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }
};

namespace detail {

inline double squared_distance(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

// Strict total order on candidate edges: squared length, then (min, max) endpoints.
inline bool edge_less(double wa, std::size_t ua, std::size_t va, double wb, std::size_t ub, std::size_t vb) {
    if (wa != wb) return wa < wb;
    if (ua > va) std::swap(ua, va);
    if (ub > vb) std::swap(ub, vb);
    if (ua != ub) return ua < ub;
    return va < vb;
}

template <std::size_t Dim>
SpanningTree prim_dense(const PointCloud& cloud) {
    const std::size_t n = cloud.size();
    const std::size_t dim = Dim == 0 ? cloud.dim : Dim;
    const double* xs = cloud.coords.data();

    SpanningTree tree;
    tree.n = n;
    if (n <= 1) return tree;
    tree.edges.reserve(n - 1);

    // `open` holds the nodes not yet in the tree; best_* are aligned with it.
    std::vector<std::size_t> open(n - 1);
    std::iota(open.begin(), open.end(), std::size_t{1});
    std::vector<double> best_sq(n - 1);
    std::vector<std::size_t> best_parent(n - 1, 0);
    auto better = [&](std::size_t a, std::size_t b) {
        return best_sq[a] < best_sq[b] ||
               (best_sq[a] == best_sq[b] && edge_less(best_sq[a], best_parent[a], open[a], best_sq[b], best_parent[b], open[b]));
    };
    std::size_t pick = 0;
    for (std::size_t k = 0; k < open.size(); ++k) {
        best_sq[k] = squared_distance(xs, xs + open[k] * dim, dim);
        if (k > 0 && better(k, pick)) pick = k;
    }

    // Each pass attaches the cheapest open node, then relaxes the rest against it
    // while tracking the next pick.
    while (!open.empty()) {
        const std::size_t v = open[pick];
        const std::size_t p = best_parent[pick];
        tree.edges.push_back({std::min(p, v), std::max(p, v), std::sqrt(best_sq[pick])});

        const std::size_t last = open.size() - 1;
        open[pick] = open[last];
        best_sq[pick] = best_sq[last];
        best_parent[pick] = best_parent[last];
        open.pop_back();
        best_sq.pop_back();
        best_parent.pop_back();

        const double* pv = xs + v * dim;
        pick = 0;
        for (std::size_t k = 0; k < open.size(); ++k) {
            const std::size_t w = open[k];
            double sq;
            if constexpr (Dim == 2) {
                const double dx = pv[0] - xs[2 * w];
                const double dy = pv[1] - xs[2 * w + 1];
                sq = dx * dx + dy * dy;
            } else {
                sq = squared_distance(pv, xs + w * dim, dim);
            }
            if (sq < best_sq[k] || (sq == best_sq[k] && edge_less(sq, v, w, best_sq[k], best_parent[k], w))) {
                best_sq[k] = sq;
                best_parent[k] = v;
            }
            if (k > 0 && better(k, pick)) pick = k;
        }
    }
    std::sort(tree.edges.begin(), tree.edges.end(), [](const Edge& a, const Edge& b) {
        if (a.weight != b.weight) return a.weight < b.weight;
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });
    return tree;
}

inline void check_cloud(const PointCloud& cloud) {
    if (cloud.dim == 0) throw UsageError("point cloud dimension must be >= 1");
    if (cloud.coords.size() % cloud.dim != 0) throw UsageError("point cloud coordinate count is not a multiple of its dimension");
    for (std::size_t i = 0; i < cloud.coords.size(); ++i)
        if (!std::isfinite(cloud.coords[i]))
            throw DataError("point " + std::to_string(i / cloud.dim) + ": non-finite coordinate");
}

}  // namespace detail

/// Exact Euclidean MST by dense Prim, O(n^2) time and O(n) memory.
/// Equal-length candidates are ordered by their (min, max) endpoint indices, so the
/// result is the unique MST under that total order even with duplicated points.
/// Edges are returned sorted by (weight, u, v) with u < v.
inline SpanningTree build_mst(const PointCloud& cloud) {
    detail::check_cloud(cloud);
    if (cloud.dim == 2) return detail::prim_dense<2>(cloud);
    return detail::prim_dense<0>(cloud);
}

/// Minimum spanning-tree weight by enumerating all n^(n-2) labeled trees (Prufer codes).
/// Test oracle; 2 <= n <= 8.
inline double brute_force_min_weight(const PointCloud& cloud) {
    detail::check_cloud(cloud);
    const std::size_t n = cloud.size();
    if (n < 2 || n > 8) throw UsageError("brute_force_min_weight: n must lie in [2, 8], got " + std::to_string(n));
    std::vector<double> dist(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            dist[i * n + j] = std::sqrt(detail::squared_distance(cloud.coords.data() + i * cloud.dim, cloud.coords.data() + j * cloud.dim, cloud.dim));
    if (n == 2) return dist[1];

    const std::size_t len = n - 2;
    std::vector<std::size_t> code(len, 0), degree(n);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        std::fill(degree.begin(), degree.end(), 1);
        for (auto c : code) ++degree[c];
        double total = 0.0;
        for (auto c : code) {
            std::size_t leaf = 0;
            while (degree[leaf] != 1) ++leaf;
            total += dist[leaf * n + c];
            --degree[leaf];
            --degree[c];
        }
        std::size_t a = n, b = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (degree[i] == 1) (a == n ? a : b) = i;
        }
        total += dist[a * n + b];
        best = std::min(best, total);

        std::size_t pos = 0;
        while (pos < len && ++code[pos] == n) code[pos++] = 0;
        if (pos == len) break;
    }
    return best;
}

/// counts(a, b) = number of tree edges joining a node tagged a and a node tagged b.
inline CrossCountMatrix cross_edge_counts(const SpanningTree& tree, std::span<const int> tags, std::size_t groups) {
    if (tags.size() != tree.n)
        throw UsageError("cross_edge_counts: " + std::to_string(tags.size()) + " tags for " + std::to_string(tree.n) + " nodes");
    for (int t : tags)
        if (t < 0 || static_cast<std::size_t>(t) >= groups)
            throw UsageError("cross_edge_counts: tag " + std::to_string(t) + " outside [0, " + std::to_string(groups) + ")");
    CrossCountMatrix out(groups);
    for (const auto& e : tree.edges) out.add(static_cast<std::size_t>(tags[e.u]), static_cast<std::size_t>(tags[e.v]));
    return out;
}

inline CrossCountMatrix cross_edge_counts(const SpanningTree& tree, std::span<const int> tags) {
    int top = -1;
    for (int t : tags) top = std::max(top, t);
    return cross_edge_counts(tree, tags, static_cast<std::size_t>(top + 1));
}

/// Copy of `cloud` with each coordinate moved by uniform noise in
/// [-scale * diameter, scale * diameter], diameter being the bounding-box diagonal.
/// Breaks exact duplicates at the price of perturbing the FR statistic.
inline PointCloud jittered(const PointCloud& cloud, std::uint64_t seed, double scale = 1e-9) {
    detail::check_cloud(cloud);
    PointCloud out = cloud;
    const std::size_t n = cloud.size();
    if (n == 0) return out;
    double diag = 0.0;
    for (std::size_t k = 0; k < cloud.dim; ++k) {
        double lo = cloud.coords[k], hi = cloud.coords[k];
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, cloud.coords[i * cloud.dim + k]);
            hi = std::max(hi, cloud.coords[i * cloud.dim + k]);
        }
        diag += (hi - lo) * (hi - lo);
    }
    const double amp = scale * std::sqrt(diag);
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-amp, amp);
    for (auto& c : out.coords) c += u(rng);
    return out;
}

}  // namespace gmi
