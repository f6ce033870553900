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

// Helpers shared by the unit and acceptance suites. Everything here is
// independent of the library's estimation code paths.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "gmi/dataset.hpp"
#include "gmi/emst.hpp"

namespace gmi::testkit {

inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, std::size_t dim = 2, int groups = 1) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> g(0, groups - 1);
    PointCloud c;
    c.dim = dim;
    for (std::size_t i = 0; i < n * dim; ++i) c.coords.push_back(u(rng));
    for (std::size_t i = 0; i < n; ++i) c.tags.push_back(g(rng));
    return c;
}

/// Number of connected components of the edge list over n nodes.
inline std::size_t components(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::size_t comps = n;
    for (const auto& e : edges) {
        auto a = find(e.u), b = find(e.v);
        if (a != b) {
            parent[a] = b;
            --comps;
        }
    }
    return comps;
}

/// Dataset from a row-major feature buffer and labels (1..m).
inline Dataset make_dataset(std::size_t cols, std::vector<double> features, std::vector<int> labels) {
    Dataset ds;
    ds.cols = cols;
    ds.rows = labels.size();
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.m = 0;
    for (int y : ds.labels) ds.m = std::max(ds.m, y);
    for (std::size_t c = 0; c < cols; ++c) ds.feature_names.push_back("x" + std::to_string(c));
    for (int c = 1; c <= ds.m; ++c) ds.label_names.push_back(std::to_string(c));
    return ds;
}

/// Per class: x_s ~ N(mu_c, 1), x_t = rho x_s + sqrt(1 - rho^2) N(0, 1) (+ class offset).
inline PairSample correlated_pair(int m, std::size_t per_class, double rho, double shift, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    PairSample p;
    p.m = m;
    for (int c = 1; c <= m; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const double a = n01(rng);
            const double b = rho * a + std::sqrt(1.0 - rho * rho) * n01(rng);
            p.points.push_back({a + shift * (c - 1), b});
            p.labels.push_back(c);
        }
    }
    return p;
}

}  // namespace gmi::testkit
