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

// Simulation sweeps behind the simulate-mse and bench commands.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gmi/dataset.hpp"
#include "gmi/fr_estimator.hpp"
#include "gmi/oracle.hpp"
#include "gmi/parallel.hpp"
#include "gmi/random.hpp"

namespace gmi {

struct MseConfig {
    std::vector<int> classes{2, 5, 10};
    std::vector<std::size_t> sizes{500, 1000, 2000, 4000};
    std::size_t iters = 50;
    /// Permutation repeats averaged inside each iteration; iterations redraw the data.
    std::size_t repeats = 1;
    double mean_scale = 0.5;
    double cov_scale = 0.1;
    double correlation = 0.9;
    MeanLayout layout = MeanLayout::hypercube;
    std::size_t grid_resolution = 401;
    std::uint64_t seed = 0;
    unsigned workers = 0;
};

struct MseRow {
    int m = 0;
    std::size_t n_total = 0;
    double mse = 0.0;
    double mean_estimate = 0.0;
    double bound_true = 0.0;
    std::size_t iters = 0;
};

/// The two-feature synthetic model of one sweep cell; per_class = N / m.
inline SyntheticSpec sweep_spec(int m, std::size_t n_total, double mean_scale, double cov_scale, double correlation, MeanLayout layout,
                                std::uint64_t seed) {
    SyntheticSpec spec;
    spec.m = m;
    spec.per_class = n_total / static_cast<std::size_t>(m);
    spec.mean_scale = mean_scale;
    spec.cov_scale = cov_scale;
    spec.dim = 2;
    spec.correlation = correlation;
    spec.layout = layout;
    spec.seed = seed;
    spec.validate();
    return spec;
}

/// Mean squared error of the estimator against the quadrature bound for every
/// (m, N) cell. Rows come back sorted by (m, N).
inline std::vector<MseRow> simulate_mse(const MseConfig& cfg) {
    if (cfg.iters < 1) throw UsageError("simulate-mse: iters must be >= 1");
    if (cfg.classes.empty() || cfg.sizes.empty()) throw UsageError("simulate-mse: empty class or size list");
    auto classes = cfg.classes;
    auto sizes = cfg.sizes;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    std::vector<MseRow> rows;
    for (int m : classes) {
        const auto truth_spec = sweep_spec(m, 4 * static_cast<std::size_t>(m), cfg.mean_scale, cfg.cov_scale, cfg.correlation, cfg.layout, 0);
        const auto model = model_for_pair(truth_spec, 0, 1);
        const double truth = bound_true(model, default_grid(model, cfg.grid_resolution));
        for (std::size_t n_total : sizes) {
            std::vector<double> est(cfg.iters);
            EstimateOptions opts;
            opts.workers = 1;
            parallel_for(
                cfg.iters,
                [&](std::size_t it) {
                    const auto key = static_cast<std::uint64_t>(m);
                    auto spec = sweep_spec(m, n_total, cfg.mean_scale, cfg.cov_scale, cfg.correlation, cfg.layout, derive_seed(cfg.seed, {key, n_total, it, 0}));
                    const auto ds = generate_gaussian_mixture(spec);
                    est[it] = estimate_pair_bound(extract_pair(ds, 0, 1), derive_seed(cfg.seed, {key, n_total, it, 1}), cfg.repeats, opts).value;
                },
                cfg.workers);
            MseRow row;
            row.m = m;
            row.n_total = n_total;
            row.bound_true = truth;
            row.iters = cfg.iters;
            double se = 0.0, sum = 0.0;
            for (double v : est) {
                se += (v - truth) * (v - truth);
                sum += v;
            }
            row.mse = se / static_cast<double>(cfg.iters);
            row.mean_estimate = sum / static_cast<double>(cfg.iters);
            rows.push_back(row);
        }
    }
    return rows;
}

struct BenchConfig {
    std::vector<int> classes{2, 5, 10};
    std::vector<std::size_t> sizes{1000, 2000, 5000};
    std::size_t runs = 5;
    std::size_t warmup = 1;
    double mean_scale = 0.5;
    double cov_scale = 0.1;
    std::uint64_t seed = 0;
};

struct BenchRow {
    int m = 0;
    std::size_t n_total = 0;
    double t_global = 0.0;
    double t_pairwise = 0.0;
    double ratio = 0.0;
    double work_global = 0.0;
    double work_pairwise = 0.0;
};

namespace detail {

template <class F>
double median_seconds(F&& f, std::size_t runs, std::size_t warmup) {
    for (std::size_t i = 0; i < warmup; ++i) f();
    std::vector<double> t(runs);
    for (auto& v : t) {
        const auto start = std::chrono::steady_clock::now();
        f();
        v = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    std::sort(t.begin(), t.end());
    return runs % 2 == 1 ? t[runs / 2] : 0.5 * (t[runs / 2 - 1] + t[runs / 2]);
}

}  // namespace detail

/// Wall time of the single global MST estimate against the per-class-pair
/// baseline on identical data (median of `runs` after `warmup`). Sequential on purpose.
inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    if (cfg.runs < 1) throw UsageError("bench: runs must be >= 1");
    auto classes = cfg.classes;
    auto sizes = cfg.sizes;
    std::sort(classes.begin(), classes.end());
    std::sort(sizes.begin(), sizes.end());
    std::vector<BenchRow> rows;
    for (int m : classes) {
        if (m < 2) throw UsageError("bench: every class count must be >= 2");
        for (std::size_t n_total : sizes) {
            const auto spec = sweep_spec(m, n_total, cfg.mean_scale, cfg.cov_scale, 0.0, MeanLayout::hypercube,
                                         derive_seed(cfg.seed, {static_cast<std::uint64_t>(m), n_total}));
            const auto pair = extract_pair(generate_gaussian_mixture(spec), 0, 1);
            const std::uint64_t est_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(m), n_total, 1});
            EstimateOptions opts;
            opts.workers = 1;
            BenchRow row;
            row.m = m;
            row.n_total = pair.size();
            PairwiseBaseline base;
            row.t_global = detail::median_seconds([&] { (void)estimate_pair_bound(pair, est_seed, 1, opts); }, cfg.runs, cfg.warmup);
            row.t_pairwise = detail::median_seconds([&] { base = pairwise_fr_baseline(pair, est_seed); }, cfg.runs, cfg.warmup);
            row.ratio = row.t_pairwise / row.t_global;
            row.work_global = base.global_work;
            row.work_pairwise = base.work_proxy;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace gmi
