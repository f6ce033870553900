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

// Ground truth by tensor-grid composite Simpson quadrature on bivariate Gaussian
// class-conditional models.
//
//   f(x)      = sum_y p_y N(x; mu_y, S_y)                      (mixture joint)
//   pi(x)     = sum_y p_y N(x1; mu_y1, S_y11) N(x2; mu_y2, S_y22)  (conditionally independent joint)
//   delta_yz  = int N(x; mu_y, S_y) g_z(x) / (f(x) + pi(x)) dx,  g_z = product of class-z marginals
//   D(f, g)   = 1 - 2 int f g / (f + g) dx
//   CGMI      = sum_y p_y D(N(mu_y, S_y), g_y)
//   bound     = 1 - 2 sum_y sum_z p_y p_z delta_yz  (= D(f, pi) <= CGMI)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "gmi/dataset.hpp"
#include "gmi/error.hpp"

namespace gmi {

struct ClassJoint {
    double prior = 1.0;
    std::array<double, 2> mean{0.0, 0.0};
    /// Row-major 2x2 covariance.
    std::array<double, 4> cov{1.0, 0.0, 0.0, 1.0};

    double sd(std::size_t axis) const { return std::sqrt(cov[axis * 3]); }
    double correlation() const { return cov[1] / std::sqrt(cov[0] * cov[3]); }
};

struct ConditionalModel {
    std::vector<ClassJoint> classes;

    int m() const { return static_cast<int>(classes.size()); }

    void validate() const {
        if (classes.empty()) throw DataError("model: at least one class required");
        double total = 0.0;
        for (std::size_t c = 0; c < classes.size(); ++c) {
            const auto& k = classes[c];
            const std::string where = "model class " + std::to_string(c + 1) + ": ";
            if (!(k.prior > 0.0) || !std::isfinite(k.prior)) throw DataError(where + "prior must be > 0");
            total += k.prior;
            for (double v : k.mean)
                if (!std::isfinite(v)) throw DataError(where + "non-finite mean");
            for (double v : k.cov)
                if (!std::isfinite(v)) throw DataError(where + "non-finite covariance");
            const double scale = std::max(std::abs(k.cov[1]), std::abs(k.cov[2]));
            if (std::abs(k.cov[1] - k.cov[2]) > 1e-12 * std::max(1.0, scale)) throw DataError(where + "covariance is not symmetric");
            const double tr = k.cov[0] + k.cov[3];
            const double det = k.cov[0] * k.cov[3] - k.cov[1] * k.cov[2];
            const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
            const double lo = tr / 2.0 - disc;
            if (!(lo > 1e-12)) throw DataError(where + "covariance is not positive-definite");
        }
        if (std::abs(total - 1.0) > 1e-9) throw DataError("model: priors sum to " + std::to_string(total) + ", expected 1");
    }
};

/// Composite Simpson tensor grid; resolution = points per axis, odd and >= 3.
struct QuadratureGrid {
    std::array<double, 2> lo{-1.0, -1.0};
    std::array<double, 2> hi{1.0, 1.0};
    std::size_t resolution = 401;

    void validate() const {
        if (resolution < 3 || resolution % 2 == 0)
            throw UsageError("quadrature grid: resolution must be odd and >= 3, got " + std::to_string(resolution));
        for (int a = 0; a < 2; ++a)
            if (!(hi[a] > lo[a])) throw UsageError("quadrature grid: empty axis range");
    }

    /// True when every class mean +/- `sigmas` standard deviations lies inside the box.
    bool covers(const ConditionalModel& model, double sigmas = 6.0) const {
        for (const auto& k : model.classes)
            for (std::size_t a = 0; a < 2; ++a)
                if (k.mean[a] - sigmas * k.sd(a) < lo[a] || k.mean[a] + sigmas * k.sd(a) > hi[a]) return false;
        return true;
    }

    double node(std::size_t axis, std::size_t k) const {
        return lo[axis] + (hi[axis] - lo[axis]) * static_cast<double>(k) / static_cast<double>(resolution - 1);
    }

    std::vector<double> weights(std::size_t axis) const {
        const double h = (hi[axis] - lo[axis]) / static_cast<double>(resolution - 1);
        std::vector<double> w(resolution);
        for (std::size_t k = 0; k < resolution; ++k) w[k] = (k == 0 || k + 1 == resolution) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        for (auto& v : w) v *= h / 3.0;
        return w;
    }
};

/// Bounding box of every class mean +/- 6 sd.
inline QuadratureGrid default_grid(const ConditionalModel& model, std::size_t resolution = 401) {
    model.validate();
    QuadratureGrid g;
    g.resolution = resolution;
    for (std::size_t a = 0; a < 2; ++a) {
        g.lo[a] = model.classes[0].mean[a] - 6.0 * model.classes[0].sd(a);
        g.hi[a] = model.classes[0].mean[a] + 6.0 * model.classes[0].sd(a);
        for (const auto& k : model.classes) {
            g.lo[a] = std::min(g.lo[a], k.mean[a] - 6.0 * k.sd(a));
            g.hi[a] = std::max(g.hi[a], k.mean[a] + 6.0 * k.sd(a));
        }
    }
    g.validate();
    return g;
}

/// Sum over the grid of w_x w_y f(x, y), rows in ascending x then y.
template <class F>
double integrate(const QuadratureGrid& grid, F&& f) {
    grid.validate();
    const auto wx = grid.weights(0);
    const auto wy = grid.weights(1);
    double total = 0.0;
    for (std::size_t i = 0; i < grid.resolution; ++i) {
        const double x = grid.node(0, i);
        double row = 0.0;
        for (std::size_t j = 0; j < grid.resolution; ++j) row += wy[j] * f(Point2{x, grid.node(1, j)});
        total += wx[i] * row;
    }
    return total;
}

inline double normal_pdf(double x, double mean, double var) {
    const double z = x - mean;
    return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double bivariate_normal_pdf(const Point2& x, const ClassJoint& k) {
    const double det = k.cov[0] * k.cov[3] - k.cov[1] * k.cov[2];
    const double dx = x[0] - k.mean[0];
    const double dy = x[1] - k.mean[1];
    const double q = (k.cov[3] * dx * dx - (k.cov[1] + k.cov[2]) * dx * dy + k.cov[0] * dy * dy) / det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

/// Product of the two analytic marginals of class joint k.
inline double marginal_product_pdf(const Point2& x, const ClassJoint& k) {
    return normal_pdf(x[0], k.mean[0], k.cov[0]) * normal_pdf(x[1], k.mean[1], k.cov[3]);
}

inline double mixture_joint(const ConditionalModel& model, const Point2& x) {
    double v = 0.0;
    for (const auto& k : model.classes) v += k.prior * bivariate_normal_pdf(x, k);
    return v;
}

inline double markov_joint(const ConditionalModel& model, const Point2& x) {
    double v = 0.0;
    for (const auto& k : model.classes) v += k.prior * marginal_product_pdf(x, k);
    return v;
}

/// 1 - 2 * integral of f g / (f + g); the integrand is 0 where f + g < 1e-300.
template <class F, class G>
double hp_divergence_half(F&& f, G&& g, const QuadratureGrid& grid) {
    return 1.0 - 2.0 * integrate(grid, [&](const Point2& x) {
               const double a = f(x);
               const double b = g(x);
               const double s = a + b;
               return s < 1e-300 ? 0.0 : a * b / s;
           });
}

/// All delta_yz in one grid pass; result[(y - 1) * m + (z - 1)].
inline std::vector<double> delta_matrix_true(const ConditionalModel& model, const QuadratureGrid& grid) {
    model.validate();
    grid.validate();
    const std::size_t m = model.classes.size();
    const auto wx = grid.weights(0);
    const auto wy = grid.weights(1);
    std::vector<double> out(m * m, 0.0), row(m * m), joint(m), product(m);
    for (std::size_t i = 0; i < grid.resolution; ++i) {
        const double x0 = grid.node(0, i);
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t j = 0; j < grid.resolution; ++j) {
            const Point2 x{x0, grid.node(1, j)};
            double f = 0.0, pi = 0.0;
            for (std::size_t c = 0; c < m; ++c) {
                joint[c] = bivariate_normal_pdf(x, model.classes[c]);
                product[c] = marginal_product_pdf(x, model.classes[c]);
                f += model.classes[c].prior * joint[c];
                pi += model.classes[c].prior * product[c];
            }
            const double denom = f + pi;
            if (denom < 1e-300) continue;
            const double w = wy[j] / denom;
            for (std::size_t y = 0; y < m; ++y)
                for (std::size_t z = 0; z < m; ++z) row[y * m + z] += w * joint[y] * product[z];
        }
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += wx[i] * row[k];
    }
    return out;
}

/// delta_yz for class ids y, z in 1..m.
inline double delta_true(const ConditionalModel& model, int y, int z, const QuadratureGrid& grid) {
    grid.validate();
    model.validate();
    if (y < 1 || y > model.m() || z < 1 || z > model.m()) throw UsageError("delta_true: class id out of range");
    const auto& ky = model.classes[static_cast<std::size_t>(y - 1)];
    const auto& kz = model.classes[static_cast<std::size_t>(z - 1)];
    return integrate(grid, [&](const Point2& x) {
        const double denom = mixture_joint(model, x) + markov_joint(model, x);
        if (denom < 1e-300) return 0.0;
        return bivariate_normal_pdf(x, ky) * marginal_product_pdf(x, kz) / denom;
    });
}

inline double conditional_gmi_true(const ConditionalModel& model, const QuadratureGrid& grid) {
    model.validate();
    double total = 0.0;
    for (const auto& k : model.classes) {
        total += k.prior * hp_divergence_half([&](const Point2& x) { return bivariate_normal_pdf(x, k); },
                                              [&](const Point2& x) { return marginal_product_pdf(x, k); }, grid);
    }
    return total;
}

inline double bound_true(const ConditionalModel& model, const QuadratureGrid& grid) {
    const auto delta = delta_matrix_true(model, grid);
    const std::size_t m = model.classes.size();
    double acc = 0.0;
    for (std::size_t y = 0; y < m; ++y)
        for (std::size_t z = 0; z < m; ++z) acc += model.classes[y].prior * model.classes[z].prior * delta[y * m + z];
    return 1.0 - 2.0 * acc;
}

/// Exact class-conditional law of columns (s, t) of generate_gaussian_mixture(spec),
/// with equal priors.
inline ConditionalModel model_for_pair(const SyntheticSpec& spec, std::size_t s, std::size_t t) {
    spec.validate();
    const std::size_t d = spec.dim;
    const std::size_t cols = d + spec.redundant;
    if (s >= cols || t >= cols || s == t) throw UsageError("model_for_pair: bad column pair");
    const double rho = d > 1 ? spec.correlation : 0.0;
    const double dup_var = spec.redundant_noise * spec.redundant_noise * spec.cov_scale;

    // Column k = coeff[k] . base + noise_k.
    auto coeff = [&](std::size_t k) {
        std::vector<double> a(d, 0.0);
        if (k < d) {
            a[k] = 1.0;
        } else {
            const std::size_t q = k - d;
            a[(2 * q) % d] += 1.0;
            a[(2 * q + 1) % d] += 1.0;
        }
        return a;
    };
    auto covariance = [&](std::size_t k, std::size_t l) {
        const auto a = coeff(k);
        const auto b = coeff(l);
        double v = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) v += a[i] * b[j] * spec.cov_scale * (i == j ? 1.0 : rho);
        if (k == l && k >= d) v += dup_var;
        return v;
    };
    const auto means = class_means(spec);
    ConditionalModel model;
    const auto as = coeff(s), at = coeff(t);
    for (int c = 0; c < spec.m; ++c) {
        ClassJoint k;
        k.prior = 1.0 / static_cast<double>(spec.m);
        double ms = 0.0, mt = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            ms += as[i] * means[static_cast<std::size_t>(c)][i];
            mt += at[i] * means[static_cast<std::size_t>(c)][i];
        }
        k.mean = {ms, mt};
        const double cst = covariance(s, t);
        k.cov = {covariance(s, s), cst, cst, covariance(t, t)};
        model.classes.push_back(k);
    }
    return model;
}

}  // namespace gmi
