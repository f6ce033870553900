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
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "gmi/dataset.hpp"
#include "gmi/error.hpp"
#include "gmi/fr_estimator.hpp"
#include "gmi/parallel.hpp"
#include "gmi/random.hpp"

namespace gmi {

/// Symmetric d x d matrix of pairwise bound estimates with a zero diagonal.
struct BoundMatrix {
    std::size_t d = 0;
    std::vector<double> values;

    explicit BoundMatrix(std::size_t dim = 0) : d(dim), values(dim * dim, 0.0) {}

    double at(std::size_t i, std::size_t j) const { return values[i * d + j]; }
    void set(std::size_t i, std::size_t j, double v) {
        values[i * d + j] = v;
        values[j * d + i] = v;
    }
};

struct FeatureScores {
    std::vector<double> scores;
};

struct TieBreak {
    double score = 0.0;
    /// Every feature carrying `score` across the keep/drop boundary.
    std::vector<std::size_t> tied;
    std::vector<std::size_t> kept;
};

struct SelectionResult {
    std::vector<std::size_t> kept;
    std::vector<std::size_t> dropped;
    std::vector<double> scores;
    std::vector<TieBreak> tie_breaks;
};

/// Seed of the unordered feature pair {i, j}.
inline std::uint64_t pair_seed(std::uint64_t seed, std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return derive_seed(seed, {i, j});
}

/// Estimates every unordered pair once and mirrors it. Pairs run concurrently;
/// repeats inside a pair run sequentially.
inline BoundMatrix compute_bound_matrix(const Dataset& ds, std::uint64_t seed, std::size_t repeats = 10, unsigned workers = 0) {
    if (ds.cols < 2) throw UsageError("compute_bound_matrix: need at least 2 features, got " + std::to_string(ds.cols));
    ds.validate();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < ds.cols; ++i)
        for (std::size_t j = i + 1; j < ds.cols; ++j) pairs.emplace_back(i, j);
    std::vector<double> vals(pairs.size());
    EstimateOptions opts;
    opts.workers = 1;
    parallel_for(
        pairs.size(),
        [&](std::size_t k) {
            auto [i, j] = pairs[k];
            vals[k] = estimate_pair_bound(extract_pair(ds, i, j), pair_seed(seed, i, j), repeats, opts).value;
        },
        workers);
    BoundMatrix b(ds.cols);
    for (std::size_t k = 0; k < pairs.size(); ++k) b.set(pairs[k].first, pairs[k].second, vals[k]);
    return b;
}

inline FeatureScores aggregate_scores(const BoundMatrix& b) {
    FeatureScores s;
    s.scores.assign(b.d, 0.0);
    for (std::size_t i = 0; i < b.d; ++i)
        for (std::size_t j = 0; j < b.d; ++j)
            if (j != i) s.scores[i] += b.at(i, j);
    return s;
}

/// Keeps the k lowest-scoring features; equal scores keep the smaller index.
inline SelectionResult select_k(const FeatureScores& scores, std::size_t k) {
    const std::size_t d = scores.scores.size();
    if (k < 1 || k > d) throw UsageError("select_k: k must lie in [1, " + std::to_string(d) + "], got " + std::to_string(k));
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores.scores[a] < scores.scores[b]; });

    SelectionResult out;
    out.scores = scores.scores;
    out.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    out.dropped.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    if (k < d && scores.scores[order[k - 1]] == scores.scores[order[k]]) {
        TieBreak tie;
        tie.score = scores.scores[order[k]];
        for (std::size_t i = 0; i < d; ++i)
            if (scores.scores[i] == tie.score) tie.tied.push_back(i);
        for (auto i : out.kept)
            if (scores.scores[i] == tie.score) tie.kept.push_back(i);
        std::sort(tie.kept.begin(), tie.kept.end());
        out.tie_breaks.push_back(std::move(tie));
    }
    std::sort(out.kept.begin(), out.kept.end());
    std::sort(out.dropped.begin(), out.dropped.end());
    return out;
}

/// Drops every feature whose score exceeds `threshold`.
inline SelectionResult select_below(const FeatureScores& scores, double threshold) {
    SelectionResult out;
    out.scores = scores.scores;
    for (std::size_t i = 0; i < scores.scores.size(); ++i) (scores.scores[i] > threshold ? out.dropped : out.kept).push_back(i);
    return out;
}

/// Drops the current highest-scoring feature, re-aggregates over the survivors,
/// and repeats until k remain. Ties drop the larger index.
inline SelectionResult select_iterative(const BoundMatrix& b, std::size_t k) {
    const std::size_t d = b.d;
    if (k < 1 || k > d) throw UsageError("select_iterative: k must lie in [1, " + std::to_string(d) + "], got " + std::to_string(k));
    SelectionResult out;
    out.scores = aggregate_scores(b).scores;
    std::vector<bool> alive(d, true);
    for (std::size_t remaining = d; remaining > k; --remaining) {
        std::size_t worst = d;
        double worst_score = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            if (!alive[i]) continue;
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                if (j != i && alive[j]) s += b.at(i, j);
            if (worst == d || s >= worst_score) {
                worst = i;
                worst_score = s;
            }
        }
        alive[worst] = false;
    }
    for (std::size_t i = 0; i < d; ++i) (alive[i] ? out.kept : out.dropped).push_back(i);
    return out;
}

/// Stratified `folds`-fold cross-validated k-NN accuracy on the `kept` columns
/// (Euclidean). Vote ties go to the tied class with the nearest neighbour.
inline double knn_holdout_accuracy(const Dataset& ds, const std::vector<std::size_t>& kept, std::size_t k_neighbors, std::size_t folds,
                                   std::uint64_t seed, unsigned workers = 0) {
    if (folds < 2) throw UsageError("knn_holdout_accuracy: folds must be >= 2");
    if (k_neighbors < 1) throw UsageError("knn_holdout_accuracy: k_neighbors must be >= 1");
    if (kept.empty()) throw UsageError("knn_holdout_accuracy: no feature columns selected");
    for (auto c : kept)
        if (c >= ds.cols) throw UsageError("knn_holdout_accuracy: feature index " + std::to_string(c) + " out of range");
    const auto part = partition_by_class(ds);
    for (int c = 1; c <= part.classes(); ++c)
        if (part.group(c).size() < folds)
            throw DataError("knn_holdout_accuracy: class " + std::to_string(c) + " has " + std::to_string(part.group(c).size()) + " rows, fewer than " +
                            std::to_string(folds) + " folds");

    std::vector<std::size_t> fold_of(ds.rows);
    Rng rng(seed);
    for (const auto& g : part.groups) {
        auto rows = g;
        std::shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t p = 0; p < rows.size(); ++p) fold_of[rows[p]] = p % folds;
    }

    std::vector<double> fold_acc(folds, 0.0);
    parallel_for(
        folds,
        [&](std::size_t f) {
            std::vector<std::size_t> train, test;
            for (std::size_t r = 0; r < ds.rows; ++r) (fold_of[r] == f ? test : train).push_back(r);
            const std::size_t kk = std::min(k_neighbors, train.size());
            std::vector<std::pair<double, std::size_t>> dist(train.size());
            std::vector<std::size_t> votes(static_cast<std::size_t>(ds.m) + 1);
            std::size_t correct = 0;
            for (auto q : test) {
                for (std::size_t a = 0; a < train.size(); ++a) {
                    double s = 0.0;
                    for (auto c : kept) {
                        const double diff = ds.at(q, c) - ds.at(train[a], c);
                        s += diff * diff;
                    }
                    dist[a] = {s, train[a]};
                }
                std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
                std::fill(votes.begin(), votes.end(), 0);
                std::size_t top = 0;
                for (std::size_t a = 0; a < kk; ++a) top = std::max(top, ++votes[static_cast<std::size_t>(ds.labels[dist[a].second])]);
                int predicted = 0;
                for (std::size_t a = 0; a < kk; ++a) {
                    const int y = ds.labels[dist[a].second];
                    if (votes[static_cast<std::size_t>(y)] == top) {
                        predicted = y;
                        break;
                    }
                }
                if (predicted == ds.labels[q]) ++correct;
            }
            fold_acc[f] = test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size());
        },
        workers);
    double sum = 0.0;
    for (double a : fold_acc) sum += a;
    return sum / static_cast<double>(folds);
}

}  // namespace gmi
