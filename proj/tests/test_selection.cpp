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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "gmi/selection.hpp"
#include "test_support.hpp"

using namespace gmi;

namespace {

FeatureScores scores_of(std::vector<double> v) { return FeatureScores{std::move(v)}; }

BoundMatrix matrix_from(std::size_t d, const std::vector<double>& upper) {
    BoundMatrix b(d);
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) b.set(i, j, upper[k++]);
    return b;
}

// Columns 0..3 independent class-shifted Gaussians; column 2 is column 0 plus tiny noise.
Dataset duplicate_dataset(std::uint64_t seed, std::size_t per_class) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::vector<double> f;
    std::vector<int> labels;
    for (int c = 1; c <= 2; ++c)
        for (std::size_t r = 0; r < per_class; ++r) {
            const double x0 = n01(rng) + 0.5 * c, x1 = n01(rng) - 0.5 * c, x3 = n01(rng) + 0.3 * c;
            f.insert(f.end(), {x0, x1, x0 + 1e-3 * n01(rng), x3});
            labels.push_back(c);
        }
    return testkit::make_dataset(4, f, labels);
}

}  // namespace

TEST(AggregateScores, RowSumsWithoutDiagonal) {
    auto b = matrix_from(3, {0.5, 0.4, 0.6});
    b.values[0] = 100.0;  // diagonal is ignored
    auto s = aggregate_scores(b);
    EXPECT_DOUBLE_EQ(s.scores[0], 0.9);
    EXPECT_DOUBLE_EQ(s.scores[1], 1.1);
    EXPECT_DOUBLE_EQ(s.scores[2], 1.0);
}

TEST(SelectK, KeepsLowestScores) {
    auto r = select_k(scores_of({0.9, 1.0, 0.3}), 2);
    EXPECT_EQ(r.kept, (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(r.dropped, (std::vector<std::size_t>{1}));
    EXPECT_TRUE(r.tie_breaks.empty());
    EXPECT_THROW(select_k(scores_of({1, 2}), 0), UsageError);
    EXPECT_THROW(select_k(scores_of({1, 2}), 3), UsageError);
}

TEST(SelectK, TiesKeepSmallerIndexAndAreRecorded) {
    auto r = select_k(scores_of({0.5, 0.2, 0.5, 0.5}), 2);
    EXPECT_EQ(r.kept, (std::vector<std::size_t>{0, 1}));
    ASSERT_EQ(r.tie_breaks.size(), 1u);
    EXPECT_EQ(r.tie_breaks[0].tied, (std::vector<std::size_t>{0, 2, 3}));
    EXPECT_EQ(r.tie_breaks[0].kept, (std::vector<std::size_t>{0}));
}

TEST(SelectK, KeepAllAndSingle) {
    auto all = select_k(scores_of({0.3, 0.1}), 2);
    EXPECT_EQ(all.kept, (std::vector<std::size_t>{0, 1}));
    EXPECT_TRUE(all.dropped.empty());
    EXPECT_EQ(select_k(scores_of({0.3, 0.1}), 1).kept, (std::vector<std::size_t>{1}));
}

TEST(SelectK, InvariantUnderPositiveAffineMaps) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> level(0, 4);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> s(8);
        for (auto& v : s) v = level(rng) * 0.25;  // forces ties
        std::vector<double> t(8);
        for (std::size_t i = 0; i < 8; ++i) t[i] = 3.0 * s[i] + 2.0;
        const std::size_t k = 1 + rng() % 8;
        auto a = select_k(scores_of(s), k), b = select_k(scores_of(t), k);
        EXPECT_EQ(a.kept, b.kept);
        ASSERT_EQ(a.tie_breaks.size(), b.tie_breaks.size());
        for (std::size_t i = 0; i < a.tie_breaks.size(); ++i) {
            EXPECT_EQ(a.tie_breaks[i].tied, b.tie_breaks[i].tied);
            EXPECT_EQ(a.tie_breaks[i].kept, b.tie_breaks[i].kept);
        }
    }
}

TEST(SelectBelow, DropsAboveThreshold) {
    auto r = select_below(scores_of({0.9, 1.0, 0.3}), 0.95);
    EXPECT_EQ(r.kept, (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(r.dropped, (std::vector<std::size_t>{1}));
    EXPECT_EQ(select_below(scores_of({0.5}), 0.5).kept, (std::vector<std::size_t>{0}));
}

TEST(SelectIterative, ReaggregatesAfterEachDrop) {
    // Features 0 and 1 share one large entry; dropping 0 first removes it, so
    // feature 1 falls below 2 and 3 and the second drop is 3 (ties drop the larger index).
    auto b = matrix_from(4, {0.9, 0.1, 0.1,  // (0,1) (0,2) (0,3)
                             0.0, 0.0,       // (1,2) (1,3)
                             0.2});          // (2,3)
    auto one_shot = select_k(aggregate_scores(b), 2);
    EXPECT_EQ(one_shot.kept, (std::vector<std::size_t>{2, 3}));
    auto it = select_iterative(b, 2);
    EXPECT_EQ(it.kept, (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(it.dropped, (std::vector<std::size_t>{0, 3}));
    EXPECT_EQ(select_iterative(b, 4).kept.size(), 4u);
    EXPECT_THROW(select_iterative(b, 0), UsageError);
}

TEST(ComputeBoundMatrix, SymmetricZeroDiagonalAndPairConsistent) {
    auto ds = duplicate_dataset(3, 60);
    auto b = compute_bound_matrix(ds, 9, 3);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(b.at(i, i), 0.0);
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(b.at(i, j), b.at(j, i));
    }
    EXPECT_EQ(b.at(1, 3), estimate_pair_bound(extract_pair(ds, 1, 3), pair_seed(9, 3, 1), 3).value);
    EXPECT_EQ(pair_seed(9, 1, 3), pair_seed(9, 3, 1));
}

TEST(ComputeBoundMatrix, DeterministicAcrossWorkers) {
    auto ds = duplicate_dataset(4, 50);
    auto a = compute_bound_matrix(ds, 1, 2, 1);
    auto b = compute_bound_matrix(ds, 1, 2, 3);
    EXPECT_EQ(a.values, b.values);
}

TEST(ComputeBoundMatrix, TwoFeaturesAndErrors) {
    auto ds = testkit::make_dataset(2, {0, 1, 1, 0, 2, 2, 3, 1}, {1, 1, 2, 2});
    auto b = compute_bound_matrix(ds, 5, 2);
    EXPECT_EQ(b.at(0, 1), b.at(1, 0));
    auto one = testkit::make_dataset(1, {0, 1, 2, 3}, {1, 1, 2, 2});
    EXPECT_THROW(compute_bound_matrix(one, 5), UsageError);
}

TEST(ComputeBoundMatrix, DuplicatePairIsMaximal) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto b = compute_bound_matrix(duplicate_dataset(100 + seed, 300), seed, 10);
        double best = -1e9;
        std::pair<std::size_t, std::size_t> arg{0, 0};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i + 1; j < 4; ++j)
                if (b.at(i, j) > best) {
                    best = b.at(i, j);
                    arg = {i, j};
                }
        if (arg == std::make_pair(std::size_t{0}, std::size_t{2})) ++hits;
    }
    EXPECT_GE(hits, 18);
}

TEST(Knn, SeparableClassesNearPerfect) {
    SyntheticSpec spec;
    spec.m = 2;
    spec.per_class = 150;
    spec.mean_scale = 20.0;
    spec.cov_scale = 0.1;
    spec.seed = 1;
    auto ds = generate_gaussian_mixture(spec);
    EXPECT_GE(knn_holdout_accuracy(ds, {0, 1}, 5, 5, 2), 0.99);
}

TEST(Knn, ShuffledLabelsAtChance) {
    SyntheticSpec spec;
    spec.m = 2;
    spec.per_class = 500;
    spec.seed = 2;
    auto ds = generate_gaussian_mixture(spec);
    std::mt19937_64 rng(3);
    std::shuffle(ds.labels.begin(), ds.labels.end(), rng);
    EXPECT_NEAR(knn_holdout_accuracy(ds, {0, 1}, 5, 5, 4), 0.5, 0.05);
}

TEST(Knn, DeterministicAndValidated) {
    auto ds = duplicate_dataset(5, 40);
    EXPECT_EQ(knn_holdout_accuracy(ds, {0, 1}, 3, 4, 7, 1), knn_holdout_accuracy(ds, {0, 1}, 3, 4, 7, 4));
    EXPECT_THROW(knn_holdout_accuracy(ds, {}, 3, 4, 7), UsageError);
    EXPECT_THROW(knn_holdout_accuracy(ds, {9}, 3, 4, 7), UsageError);
    EXPECT_THROW(knn_holdout_accuracy(ds, {0}, 0, 4, 7), UsageError);
    EXPECT_THROW(knn_holdout_accuracy(ds, {0}, 3, 1, 7), UsageError);
    EXPECT_THROW(knn_holdout_accuracy(ds, {0}, 3, 41, 7), DataError);
}
