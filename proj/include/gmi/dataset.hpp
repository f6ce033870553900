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
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gmi/error.hpp"
#include "gmi/random.hpp"

namespace gmi {

/// Feature matrix (row-major, rows = samples) with class labels re-encoded to 1..m.
struct Dataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> features;
    std::vector<int> labels;
    int m = 0;
    std::vector<std::string> feature_names;
    /// label_names[c - 1] is the original spelling of class id c.
    std::vector<std::string> label_names;

    double at(std::size_t r, std::size_t c) const { return features[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return features[r * cols + c]; }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
        return out;
    }

    std::vector<std::size_t> class_sizes() const {
        std::vector<std::size_t> sizes(static_cast<std::size_t>(m), 0);
        for (int y : labels) ++sizes[static_cast<std::size_t>(y - 1)];
        return sizes;
    }

    /// Throws DataError on any invariant violation.
    void validate() const {
        if (features.size() != rows * cols) throw DataError("feature buffer size does not match rows x cols");
        if (labels.size() != rows) throw DataError("label count does not match row count");
        if (m < 1 && rows > 0) throw DataError("class count must be at least 1");
        std::vector<bool> seen(static_cast<std::size_t>(std::max(m, 0)), false);
        for (std::size_t r = 0; r < rows; ++r) {
            int y = labels[r];
            if (y < 1 || y > m) throw DataError("row " + std::to_string(r) + ": label " + std::to_string(y) + " outside 1.." + std::to_string(m));
            seen[static_cast<std::size_t>(y - 1)] = true;
            for (std::size_t c = 0; c < cols; ++c)
                if (!std::isfinite(at(r, c)))
                    throw DataError("row " + std::to_string(r) + ", column " + std::to_string(c) + ": non-finite feature value");
        }
        for (int c = 1; c <= m; ++c)
            if (!seen[static_cast<std::size_t>(c - 1)]) throw DataError("class " + std::to_string(c) + " has no rows");
    }
};

/// Row indices of each class; groups[c - 1] belongs to class id c.
struct ClassPartition {
    std::vector<std::vector<std::size_t>> groups;

    const std::vector<std::size_t>& group(int c) const { return groups.at(static_cast<std::size_t>(c - 1)); }
    int classes() const { return static_cast<int>(groups.size()); }
};

using Point2 = std::array<double, 2>;

/// The (x^(s), x^(t), y) rows of one feature pair.
struct PairSample {
    std::size_t s = 0;
    std::size_t t = 1;
    std::vector<Point2> points;
    std::vector<int> labels;
    int m = 0;

    std::size_t size() const { return points.size(); }
};

enum class MeanLayout {
    /// Class c sits at mean_scale * (digits of c - 1 in base b), b = 2 whenever m <= 2^dim.
    hypercube,
    /// Class c sits at mean_scale * ((c - 1 + k) mod 2) on coordinate k.
    alternating,
};

inline std::string to_string(MeanLayout layout) {
    return layout == MeanLayout::hypercube ? "hypercube" : "alternating";
}

inline MeanLayout parse_mean_layout(std::string_view text) {
    if (text == "hypercube") return MeanLayout::hypercube;
    if (text == "alternating") return MeanLayout::alternating;
    throw UsageError("unknown mean layout '" + std::string(text) + "' (expected hypercube or alternating)");
}

/// Per-class Gaussian blobs N(mu_c, cov_scale * R) where R is the equicorrelation
/// matrix with off-diagonal `correlation`. Optional redundant columns are appended:
/// redundant column r is x[2r mod dim] + x[(2r+1) mod dim] + redundant_noise * sqrt(cov_scale) * N(0,1).
struct SyntheticSpec {
    int m = 2;
    std::size_t per_class = 100;
    double mean_scale = 0.5;
    double cov_scale = 0.1;
    std::size_t dim = 2;
    std::uint64_t seed = 0;
    double correlation = 0.0;
    MeanLayout layout = MeanLayout::hypercube;
    std::size_t redundant = 0;
    double redundant_noise = 0.01;

    void validate() const {
        if (m < 1) throw UsageError("synthetic: class count must be >= 1");
        if (per_class < 4) throw UsageError("synthetic: per_class must be >= 4");
        if (!(cov_scale > 0.0) || !std::isfinite(cov_scale)) throw UsageError("synthetic: cov_scale must be > 0");
        if (dim < 1) throw UsageError("synthetic: dim must be >= 1");
        if (!std::isfinite(mean_scale)) throw UsageError("synthetic: mean_scale must be finite");
        double lo = dim > 1 ? -1.0 / static_cast<double>(dim - 1) : -1.0;
        if (dim > 1 && !(correlation > lo && correlation < 1.0))
            throw UsageError("synthetic: correlation must lie in (" + std::to_string(lo) + ", 1) for positive-definite covariance");
        if (redundant > 0 && dim < 2) throw UsageError("synthetic: redundant columns need dim >= 2");
        if (!(redundant_noise >= 0.0)) throw UsageError("synthetic: redundant_noise must be >= 0");
    }
};

/// Smallest base b >= 2 with b^dim >= m.
inline std::size_t lattice_base(int m, std::size_t dim) {
    for (std::size_t b = 2;; ++b) {
        double cap = std::pow(static_cast<double>(b), static_cast<double>(dim));
        if (cap >= static_cast<double>(m)) return b;
    }
}

/// Class means (m rows of `dim` coordinates) for the configured layout.
inline std::vector<std::vector<double>> class_means(const SyntheticSpec& spec) {
    std::vector<std::vector<double>> means(static_cast<std::size_t>(spec.m), std::vector<double>(spec.dim, 0.0));
    if (spec.layout == MeanLayout::alternating) {
        for (std::size_t c = 0; c < means.size(); ++c)
            for (std::size_t k = 0; k < spec.dim; ++k) means[c][k] = spec.mean_scale * static_cast<double>((c + k) % 2);
        return means;
    }
    const std::size_t base = lattice_base(spec.m, spec.dim);
    for (std::size_t c = 0; c < means.size(); ++c) {
        std::size_t code = c;
        for (std::size_t k = 0; k < spec.dim; ++k) {
            means[c][k] = spec.mean_scale * static_cast<double>(code % base);
            code /= base;
        }
    }
    return means;
}

namespace detail {

// Lower Cholesky factor of cov_scale * ((1 - rho) I + rho 11^T).
inline std::vector<double> equicorrelation_cholesky(std::size_t dim, double cov_scale, double rho) {
    std::vector<double> a(dim * dim), l(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) a[i * dim + j] = cov_scale * (i == j ? 1.0 : rho);
    for (std::size_t j = 0; j < dim; ++j) {
        double diag = a[j * dim + j];
        for (std::size_t k = 0; k < j; ++k) diag -= l[j * dim + k] * l[j * dim + k];
        if (!(diag > 0.0)) throw UsageError("synthetic: covariance is not positive-definite");
        l[j * dim + j] = std::sqrt(diag);
        for (std::size_t i = j + 1; i < dim; ++i) {
            double v = a[i * dim + j];
            for (std::size_t k = 0; k < j; ++k) v -= l[i * dim + k] * l[j * dim + k];
            l[i * dim + j] = v / l[j * dim + j];
        }
    }
    return l;
}

inline bool parse_double(std::string_view cell, double& out) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size();
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

inline std::string trim(std::string s) {
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && ws(s.back())) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && ws(s[b])) ++b;
    return s.substr(b);
}

}  // namespace detail

/// Draws per_class rows per class, class 1 first. Deterministic given spec.seed.
inline Dataset generate_gaussian_mixture(const SyntheticSpec& spec) {
    spec.validate();
    const auto means = class_means(spec);
    const auto chol = detail::equicorrelation_cholesky(spec.dim, spec.cov_scale, spec.dim > 1 ? spec.correlation : 0.0);
    const std::size_t d = spec.dim;
    const std::size_t cols = d + spec.redundant;
    const double dup_sd = spec.redundant_noise * std::sqrt(spec.cov_scale);

    Dataset ds;
    ds.m = spec.m;
    ds.cols = cols;
    ds.rows = spec.per_class * static_cast<std::size_t>(spec.m);
    ds.features.resize(ds.rows * cols);
    ds.labels.resize(ds.rows);
    for (std::size_t k = 0; k < cols; ++k) ds.feature_names.push_back("x" + std::to_string(k));
    for (int c = 1; c <= spec.m; ++c) ds.label_names.push_back(std::to_string(c));

    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(d);
    std::size_t r = 0;
    for (int c = 0; c < spec.m; ++c) {
        for (std::size_t i = 0; i < spec.per_class; ++i, ++r) {
            for (auto& v : z) v = normal(rng);
            for (std::size_t a = 0; a < d; ++a) {
                double v = means[static_cast<std::size_t>(c)][a];
                for (std::size_t b = 0; b <= a; ++b) v += chol[a * d + b] * z[b];
                ds.at(r, a) = v;
            }
            for (std::size_t q = 0; q < spec.redundant; ++q) {
                double noise = normal(rng);
                ds.at(r, d + q) = ds.at(r, (2 * q) % d) + ds.at(r, (2 * q + 1) % d) + dup_sd * noise;
            }
            ds.labels[r] = c + 1;
        }
    }
    return ds;
}

/// Reads a header-first CSV. Every column except `label_column` must be numeric.
/// Labels are re-encoded to 1..m following the sorted order of the original
/// values (numeric order when every label parses as a number).
inline Dataset read_csv(std::istream& in, const std::string& label_column = "label", const std::string& source = "<input>") {
    std::string line;
    if (!std::getline(in, line) || detail::trim(line).empty()) throw DataError(source + ": empty file (no header row)");
    auto header = detail::split_csv_line(line);
    for (auto& h : header) h = detail::trim(h);
    auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) throw DataError(source + ": missing label column '" + label_column + "'");
    const std::size_t label_idx = static_cast<std::size_t>(it - header.begin());

    Dataset ds;
    ds.cols = header.size() - 1;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_idx) ds.feature_names.push_back(header[c]);

    std::vector<std::string> raw_labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError(source + ": line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " cells, found " +
                            std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) {
                raw_labels.push_back(detail::trim(cells[c]));
                continue;
            }
            double v = 0.0;
            if (!detail::parse_double(cells[c], v))
                throw DataError(source + ": line " + std::to_string(line_no) + ", column '" + header[c] + "': non-numeric cell '" + cells[c] + "'");
            if (!std::isfinite(v))
                throw DataError(source + ": line " + std::to_string(line_no) + ", column '" + header[c] + "': non-finite value '" + cells[c] + "'");
            ds.features.push_back(v);
        }
    }
    if (raw_labels.empty()) throw DataError(source + ": empty file (no data rows)");
    ds.rows = raw_labels.size();

    std::vector<std::string> distinct = raw_labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    bool numeric = std::all_of(distinct.begin(), distinct.end(), [](const std::string& s) {
        double v = 0.0;
        return detail::parse_double(s, v);
    });
    if (numeric) {
        std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
            double x = 0.0, y = 0.0;
            detail::parse_double(a, x);
            detail::parse_double(b, y);
            return x < y;
        });
    }
    std::map<std::string, int> code;
    for (std::size_t i = 0; i < distinct.size(); ++i) code[distinct[i]] = static_cast<int>(i + 1);
    ds.m = static_cast<int>(distinct.size());
    ds.label_names = distinct;
    ds.labels.reserve(ds.rows);
    for (const auto& l : raw_labels) ds.labels.push_back(code[l]);
    ds.validate();
    return ds;
}

inline Dataset load_csv(const std::string& path, const std::string& label_column = "label") {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open file");
    return read_csv(in, label_column, path);
}

/// Writes features at 17 significant digits and labels by their original names.
inline void write_csv(const Dataset& ds, std::ostream& out, const std::string& label_column = "label") {
    std::ostringstream buf;
    buf << std::setprecision(17);
    for (std::size_t c = 0; c < ds.cols; ++c) buf << (c < ds.feature_names.size() ? ds.feature_names[c] : "x" + std::to_string(c)) << ',';
    buf << label_column << '\n';
    for (std::size_t r = 0; r < ds.rows; ++r) {
        for (std::size_t c = 0; c < ds.cols; ++c) buf << ds.at(r, c) << ',';
        int y = ds.labels[r];
        buf << (static_cast<std::size_t>(y - 1) < ds.label_names.size() ? ds.label_names[static_cast<std::size_t>(y - 1)] : std::to_string(y)) << '\n';
    }
    out << buf.str();
}

inline void save_csv(const Dataset& ds, const std::string& path, const std::string& label_column = "label") {
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    write_csv(ds, out, label_column);
}

inline ClassPartition partition_by_class(const Dataset& ds) {
    ClassPartition part;
    part.groups.resize(static_cast<std::size_t>(ds.m));
    for (std::size_t r = 0; r < ds.rows; ++r) part.groups[static_cast<std::size_t>(ds.labels[r] - 1)].push_back(r);
    return part;
}

inline PairSample extract_pair(const Dataset& ds, std::size_t s, std::size_t t) {
    if (s >= t) throw UsageError("extract_pair: need s < t, got (" + std::to_string(s) + ", " + std::to_string(t) + ")");
    if (t >= ds.cols) throw UsageError("extract_pair: feature index " + std::to_string(t) + " out of range (d = " + std::to_string(ds.cols) + ")");
    PairSample pair;
    pair.s = s;
    pair.t = t;
    pair.m = ds.m;
    pair.labels = ds.labels;
    pair.points.resize(ds.rows);
    for (std::size_t r = 0; r < ds.rows; ++r) pair.points[r] = {ds.at(r, s), ds.at(r, t)};
    return pair;
}

}  // namespace gmi
