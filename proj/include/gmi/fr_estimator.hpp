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

// Global Friedman-Rafsky estimator of the conditional-GMI lower bound.
//
// One call of estimate_once():
//   1. splits the pair sample class by class into an original half Z' and a
//      permutation source Z'' (stratified, shuffled, dealt alternately);
//   2. re-pairs the t-coordinate of Z'' within each class by a uniform random
//      permutation, giving a sample whose class-conditional law is the product
//      of the class marginals;
//   3. builds one Euclidean MST over Z' and the permuted sample, tagging every
//      node with (side, class);
//   4. counts R[j][i], the MST edges joining original class j to permuted class i;
//   5. scales delta[i][j] = n / (2 n'_j n_i) * R[j][i] and reports
//      1 - 2 sum_ij p_i p_j delta[i][j], which collapses to 1 - sum(R) / n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmi/dataset.hpp"
#include "gmi/emst.hpp"
#include "gmi/error.hpp"
#include "gmi/parallel.hpp"
#include "gmi/random.hpp"

namespace gmi {

struct SplitHalves {
    PairSample original_half;
    PairSample permutation_source;
    /// Row indices into the input pair, ascending.
    std::vector<std::size_t> original_rows;
    std::vector<std::size_t> source_rows;
    /// original_counts[j] = n'_j, source_counts[i] = n_i (index = class id - 1).
    std::vector<std::size_t> original_counts;
    std::vector<std::size_t> source_counts;
    /// Size of the permutation source, sum of n_i.
    std::size_t n = 0;
};

struct PermutedSample {
    std::vector<Point2> points;
    std::vector<int> labels;
    int m = 0;
};

/// MST edge tallies of one global run. cross[j * m + i] joins original class j+1
/// to permuted class i+1.
struct CrossRuns {
    int m = 0;
    std::vector<std::size_t> cross;
    std::size_t same_side_original = 0;
    std::size_t same_side_permuted = 0;
    std::size_t mst_edges = 0;

    std::size_t at(int j, int i) const { return cross[static_cast<std::size_t>(j * m + i)]; }
    std::size_t total_cross() const { return std::accumulate(cross.begin(), cross.end(), std::size_t{0}); }
};

/// delta[i * m + j] estimates delta_{y_i, z_j}; cross_counts[j * m + i] is R_{z_j, y_i}.
struct DeltaMatrix {
    int m = 0;
    std::vector<double> delta;
    std::vector<std::size_t> cross_counts;
    std::size_t n = 0;
    std::vector<std::size_t> original_counts;
    std::vector<std::size_t> source_counts;

    double at(int i, int j) const { return delta[static_cast<std::size_t>(i * m + j)]; }
};

struct BoundEstimate {
    /// Mean over repeats of 1 - 2 sum p_y p_z delta_yz.
    double value = 0.0;
    std::vector<double> repeat_values;
    std::uint64_t seed = 0;
    std::size_t repeats = 0;
    bool clamped = false;
    // Diagnostics of the last repeat.
    std::size_t total_cross = 0;
    std::size_t n = 0;
    std::vector<double> priors_permuted;
    std::vector<double> priors_original;
    DeltaMatrix delta;
};

struct EstimateOptions {
    /// Clamp the averaged value into [0, 1]. Off by default; ranking uses raw values.
    bool clamp = false;
    /// Worker threads for repeats (0 = hardware concurrency).
    unsigned workers = 0;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> rows_by_class(const std::vector<int>& labels, int m) {
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(m));
    for (std::size_t r = 0; r < labels.size(); ++r) {
        int y = labels[r];
        if (y < 1 || y > m) throw DataError("row " + std::to_string(r) + ": label " + std::to_string(y) + " outside 1.." + std::to_string(m));
        groups[static_cast<std::size_t>(y - 1)].push_back(r);
    }
    return groups;
}

inline PairSample select_rows(const PairSample& pair, const std::vector<std::size_t>& rows) {
    PairSample out;
    out.s = pair.s;
    out.t = pair.t;
    out.m = pair.m;
    out.points.reserve(rows.size());
    out.labels.reserve(rows.size());
    for (auto r : rows) {
        out.points.push_back(pair.points[r]);
        out.labels.push_back(pair.labels[r]);
    }
    return out;
}

}  // namespace detail

/// Stratified random halving: within each class rows are shuffled and dealt
/// alternately, the first (and any odd extra) row going to the original half.
inline SplitHalves split_stratified(const PairSample& pair, std::uint64_t seed) {
    if (pair.labels.size() != pair.points.size()) throw DataError("pair sample: label count does not match point count");
    auto groups = detail::rows_by_class(pair.labels, pair.m);
    for (std::size_t c = 0; c < groups.size(); ++c)
        if (groups[c].size() < 2)
            throw DataError("class " + std::to_string(c + 1) + " has " + std::to_string(groups[c].size()) + " row(s); the estimator needs at least 2");

    SplitHalves h;
    h.original_counts.assign(groups.size(), 0);
    h.source_counts.assign(groups.size(), 0);
    Rng rng(seed);
    for (std::size_t c = 0; c < groups.size(); ++c) {
        auto rows = groups[c];
        std::shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (k % 2 == 0) {
                h.original_rows.push_back(rows[k]);
                ++h.original_counts[c];
            } else {
                h.source_rows.push_back(rows[k]);
                ++h.source_counts[c];
            }
        }
    }
    std::sort(h.original_rows.begin(), h.original_rows.end());
    std::sort(h.source_rows.begin(), h.source_rows.end());
    h.original_half = detail::select_rows(pair, h.original_rows);
    h.permutation_source = detail::select_rows(pair, h.source_rows);
    h.n = h.source_rows.size();
    return h;
}

/// Applies perms[c][k]: the k-th row of class c+1 (ascending row order) takes the
/// t-coordinate of that class's perms[c][k]-th row. Each perms[c] must be a permutation.
inline PermutedSample apply_class_permutations(const PairSample& source, const std::vector<std::vector<std::size_t>>& perms) {
    auto groups = detail::rows_by_class(source.labels, source.m);
    if (perms.size() != groups.size()) throw UsageError("apply_class_permutations: one permutation per class required");
    PermutedSample out;
    out.points = source.points;
    out.labels = source.labels;
    out.m = source.m;
    for (std::size_t c = 0; c < groups.size(); ++c) {
        const auto& rows = groups[c];
        const auto& perm = perms[c];
        if (perm.size() != rows.size()) throw UsageError("apply_class_permutations: permutation size mismatch for class " + std::to_string(c + 1));
        std::vector<bool> hit(perm.size(), false);
        for (auto p : perm) {
            if (p >= perm.size() || hit[p]) throw UsageError("apply_class_permutations: not a permutation for class " + std::to_string(c + 1));
            hit[p] = true;
        }
        for (std::size_t k = 0; k < rows.size(); ++k) out.points[rows[k]][1] = source.points[rows[perm[k]]][1];
    }
    return out;
}

/// Uniformly re-pairs the t-coordinate within each class; the s-coordinate and the
/// per-class multisets of both coordinates are unchanged.
inline PermutedSample permute_within_class(const PairSample& source, std::uint64_t seed) {
    auto groups = detail::rows_by_class(source.labels, source.m);
    std::vector<std::vector<std::size_t>> perms(groups.size());
    Rng rng(seed);
    for (std::size_t c = 0; c < groups.size(); ++c) {
        perms[c].resize(groups[c].size());
        std::iota(perms[c].begin(), perms[c].end(), std::size_t{0});
        std::shuffle(perms[c].begin(), perms[c].end(), rng);
    }
    return apply_class_permutations(source, perms);
}

/// Builds one MST over the original half (tags 0..m-1) and the permuted sample
/// (tags m..2m-1) and tallies original-to-permuted edges by class pair.
inline CrossRuns count_cross_runs(const SplitHalves& halves, const PermutedSample& permuted) {
    const int m = halves.original_half.m;
    if (permuted.m != m) throw UsageError("count_cross_runs: class sets differ between halves");
    PointCloud cloud;
    cloud.dim = 2;
    const std::size_t total = halves.original_half.size() + permuted.points.size();
    cloud.coords.reserve(2 * total);
    cloud.tags.reserve(total);
    for (std::size_t r = 0; r < halves.original_half.size(); ++r)
        cloud.add(halves.original_half.points[r], halves.original_half.labels[r] - 1);
    for (std::size_t r = 0; r < permuted.points.size(); ++r) cloud.add(permuted.points[r], m + permuted.labels[r] - 1);

    const auto tree = build_mst(cloud);
    const auto counts = cross_edge_counts(tree, cloud.tags, static_cast<std::size_t>(2 * m));

    CrossRuns runs;
    runs.m = m;
    runs.cross.assign(static_cast<std::size_t>(m * m), 0);
    runs.mst_edges = tree.edges.size();
    for (int a = 0; a < 2 * m; ++a) {
        for (int b = a; b < 2 * m; ++b) {
            const std::size_t c = counts.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
            if (b < m) {
                runs.same_side_original += c;
            } else if (a >= m) {
                runs.same_side_permuted += c;
            } else {
                runs.cross[static_cast<std::size_t>(a * m + (b - m))] += c;
            }
        }
    }
    return runs;
}

inline DeltaMatrix make_delta_matrix(const SplitHalves& halves, const CrossRuns& runs) {
    DeltaMatrix d;
    d.m = runs.m;
    d.n = halves.n;
    d.cross_counts = runs.cross;
    d.original_counts = halves.original_counts;
    d.source_counts = halves.source_counts;
    d.delta.assign(static_cast<std::size_t>(d.m * d.m), 0.0);
    const double n = static_cast<double>(d.n);
    for (int i = 0; i < d.m; ++i) {
        for (int j = 0; j < d.m; ++j) {
            const double nj = static_cast<double>(d.original_counts[static_cast<std::size_t>(j)]);
            const double ni = static_cast<double>(d.source_counts[static_cast<std::size_t>(i)]);
            d.delta[static_cast<std::size_t>(i * d.m + j)] = n / (2.0 * nj * ni) * static_cast<double>(runs.at(j, i));
        }
    }
    return d;
}

/// 1 - 2 sum_i sum_j (n_i / n)(n'_j / n) delta[i][j].
inline double bound_from_delta(const DeltaMatrix& d) {
    const double n = static_cast<double>(d.n);
    double acc = 0.0;
    for (int i = 0; i < d.m; ++i) {
        const double py = static_cast<double>(d.source_counts[static_cast<std::size_t>(i)]) / n;
        for (int j = 0; j < d.m; ++j) {
            const double pz = static_cast<double>(d.original_counts[static_cast<std::size_t>(j)]) / n;
            acc += py * pz * d.at(i, j);
        }
    }
    return 1.0 - 2.0 * acc;
}

/// 1 - (total cross count) / n; algebraically identical to bound_from_delta.
inline double bound_from_counts(std::size_t total_cross, std::size_t n) {
    return 1.0 - static_cast<double>(total_cross) / static_cast<double>(n);
}

struct SingleRun {
    SplitHalves halves;
    PermutedSample permuted;
    CrossRuns runs;
    DeltaMatrix delta;
    double value = 0.0;
    double value_via_delta = 0.0;
};

inline std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat) { return derive_seed(seed, {repeat}); }

/// One split/permute/MST pass. Throws std::logic_error if the two routes to the
/// bound disagree by more than 1e-12 or the MST does not span both halves.
inline SingleRun estimate_once(const PairSample& pair, std::uint64_t run_seed) {
    SingleRun run;
    run.halves = split_stratified(pair, derive_seed(run_seed, {1}));
    run.permuted = permute_within_class(run.halves.permutation_source, derive_seed(run_seed, {2}));
    run.runs = count_cross_runs(run.halves, run.permuted);
    run.delta = make_delta_matrix(run.halves, run.runs);
    run.value = bound_from_counts(run.runs.total_cross(), run.halves.n);
    run.value_via_delta = bound_from_delta(run.delta);

    const std::size_t nodes = run.halves.original_half.size() + run.halves.n;
    if (run.runs.mst_edges != nodes - 1 ||
        run.runs.total_cross() + run.runs.same_side_original + run.runs.same_side_permuted != nodes - 1)
        throw std::logic_error("estimator invariant violated: MST over " + std::to_string(nodes) + " nodes has " +
                               std::to_string(run.runs.mst_edges) + " edges");
    if (std::abs(run.value - run.value_via_delta) > 1e-12)
        throw std::logic_error("estimator invariant violated: count route and delta route differ");
    return run;
}

/// Averages `repeats` independent estimate_once() passes with seeds derived from
/// (seed, repeat index). Diagnostics describe the last repeat.
inline BoundEstimate estimate_pair_bound(const PairSample& pair, std::uint64_t seed, std::size_t repeats = 10, EstimateOptions options = {}) {
    if (repeats < 1) throw UsageError("estimate_pair_bound: repeats must be >= 1");
    std::vector<SingleRun> runs(repeats);
    parallel_for(repeats, [&](std::size_t r) { runs[r] = estimate_once(pair, repeat_seed(seed, r)); }, options.workers);

    BoundEstimate est;
    est.seed = seed;
    est.repeats = repeats;
    double sum = 0.0;
    for (const auto& r : runs) {
        est.repeat_values.push_back(r.value);
        sum += r.value;
    }
    est.value = sum / static_cast<double>(repeats);
    if (options.clamp) {
        est.value = std::clamp(est.value, 0.0, 1.0);
        est.clamped = true;
    }
    auto& last = runs.back();
    est.total_cross = last.runs.total_cross();
    est.n = last.halves.n;
    for (int c = 0; c < pair.m; ++c) {
        est.priors_permuted.push_back(static_cast<double>(last.halves.source_counts[static_cast<std::size_t>(c)]) / static_cast<double>(est.n));
        est.priors_original.push_back(static_cast<double>(last.halves.original_counts[static_cast<std::size_t>(c)]) / static_cast<double>(est.n));
    }
    est.delta = std::move(last.delta);
    return est;
}

/// Per-class-pair comparator: one MST per ordered (a, b) over original class a and
/// permuted class b. Only meant for runtime comparison with the global MST.
struct PairwiseBaseline {
    int m = 0;
    /// cross[a * m + b]: edges between original class a+1 and permuted class b+1 in sub-problem (a, b).
    std::vector<std::size_t> cross;
    /// sizes[a * m + b] = n'_a + n_b.
    std::vector<std::size_t> sizes;
    std::size_t subproblems = 0;
    /// Sum over sub-problems of (node count)^2, the dense-Prim work.
    double work_proxy = 0.0;
    /// (n' + n)^2 for the single global MST.
    double global_work = 0.0;
};

inline PairwiseBaseline pairwise_fr_baseline(const SplitHalves& halves, const PermutedSample& permuted) {
    const int m = halves.original_half.m;
    if (m < 2) throw UsageError("pairwise_fr_baseline: needs at least 2 classes");
    auto orig = detail::rows_by_class(halves.original_half.labels, m);
    auto perm = detail::rows_by_class(permuted.labels, m);

    PairwiseBaseline out;
    out.m = m;
    out.cross.assign(static_cast<std::size_t>(m * m), 0);
    out.sizes.assign(static_cast<std::size_t>(m * m), 0);
    const double total = static_cast<double>(halves.original_half.size() + permuted.points.size());
    out.global_work = total * total;
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            PointCloud cloud;
            cloud.dim = 2;
            for (auto r : orig[static_cast<std::size_t>(a)]) cloud.add(halves.original_half.points[r], 0);
            for (auto r : perm[static_cast<std::size_t>(b)]) cloud.add(permuted.points[r], 1);
            const auto tree = build_mst(cloud);
            const auto counts = cross_edge_counts(tree, cloud.tags, 2);
            const std::size_t idx = static_cast<std::size_t>(a * m + b);
            out.cross[idx] = counts.at(0, 1);
            out.sizes[idx] = cloud.size();
            out.work_proxy += static_cast<double>(cloud.size()) * static_cast<double>(cloud.size());
            ++out.subproblems;
        }
    }
    return out;
}

/// Runs on the same split and permutation as repeat 0 of estimate_pair_bound(pair, seed).
inline PairwiseBaseline pairwise_fr_baseline(const PairSample& pair, std::uint64_t seed) {
    const std::uint64_t run_seed = repeat_seed(seed, 0);
    auto halves = split_stratified(pair, derive_seed(run_seed, {1}));
    auto permuted = permute_within_class(halves.permutation_source, derive_seed(run_seed, {2}));
    return pairwise_fr_baseline(halves, permuted);
}

}  // namespace gmi
