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

// Command implementations shared by the `gmi` executable and the tests. Every
// command is a pure function from a JSON config to a JSON payload, so an
// envelope's config echo can be fed back through run() to reproduce it.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gmi/gmi.hpp"

namespace gmi::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, usage = 2, data = 3, internal = 4 };

inline std::uint64_t default_seed() {
    if (const char* env = std::getenv("GMI_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return v;
        throw UsageError(std::string("GMI_SEED is not an unsigned integer: '") + env + "'");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Synthetic spec and model (de)serialisation

inline json to_json(const SyntheticSpec& s) {
    return json{{"m", s.m},
                {"per_class", s.per_class},
                {"mu", s.mean_scale},
                {"cov", s.cov_scale},
                {"d", s.dim},
                {"seed", s.seed},
                {"rho", s.correlation},
                {"layout", to_string(s.layout)},
                {"redundant", s.redundant},
                {"redundant_noise", s.redundant_noise}};
}

inline SyntheticSpec synthetic_from_json(const json& j) {
    SyntheticSpec s;
    s.m = j.value("m", s.m);
    s.per_class = j.value("per_class", s.per_class);
    s.mean_scale = j.value("mu", s.mean_scale);
    s.cov_scale = j.value("cov", s.cov_scale);
    s.dim = j.value("d", s.dim);
    s.seed = j.value("seed", s.seed);
    s.correlation = j.value("rho", s.correlation);
    s.layout = parse_mean_layout(j.value("layout", std::string("hypercube")));
    s.redundant = j.value("redundant", s.redundant);
    s.redundant_noise = j.value("redundant_noise", s.redundant_noise);
    s.validate();
    return s;
}

/// Parses "m=2,per_class=100,mu=0.5,cov=0.1,d=2,seed=7,rho=0,layout=hypercube,redundant=0".
inline SyntheticSpec parse_synthetic(std::string_view text) {
    json j = json::object();
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string item(text.substr(pos, end - pos));
        pos = end + 1;
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("--synthetic: expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        auto number = [&](auto& out) {
            std::istringstream in(val);
            in >> out;
            if (!in || !in.eof()) throw UsageError("--synthetic: bad value for " + key + ": '" + val + "'");
        };
        if (key == "layout") {
            j[key] = val;
        } else if (key == "m") {
            int v = 0;
            number(v);
            j[key] = v;
        } else if (key == "per_class" || key == "d" || key == "redundant") {
            long long v = 0;
            number(v);
            if (v < 0) throw UsageError("--synthetic: " + key + " must be non-negative");
            j[key] = static_cast<std::size_t>(v);
        } else if (key == "seed") {
            std::uint64_t v = 0;
            number(v);
            j[key] = v;
        } else if (key == "mu" || key == "cov" || key == "rho" || key == "redundant_noise") {
            double v = 0.0;
            number(v);
            j[key] = v;
        } else {
            throw UsageError("--synthetic: unknown key '" + key + "'");
        }
    }
    return synthetic_from_json(j);
}

inline json to_json(const ConditionalModel& model) {
    json classes = json::array();
    for (const auto& k : model.classes)
        classes.push_back({{"prior", k.prior}, {"mean", {k.mean[0], k.mean[1]}}, {"cov", {{k.cov[0], k.cov[1]}, {k.cov[2], k.cov[3]}}}});
    return json{{"classes", classes}};
}

/// Accepts {"classes": [...]} or a bare array of {prior, mean: [2], cov: [[2,2]]}.
inline ConditionalModel model_from_json(const json& j) {
    const json& arr = j.is_object() ? j.at("classes") : j;
    if (!arr.is_array()) throw DataError("model: expected an array of classes");
    ConditionalModel model;
    try {
        for (const auto& c : arr) {
            ClassJoint k;
            k.prior = c.at("prior").get<double>();
            const auto& mean = c.at("mean");
            const auto& cov = c.at("cov");
            if (mean.size() != 2 || cov.size() != 2 || cov[0].size() != 2 || cov[1].size() != 2)
                throw DataError("model: mean must have 2 entries and cov must be 2x2");
            k.mean = {mean[0].get<double>(), mean[1].get<double>()};
            k.cov = {cov[0][0].get<double>(), cov[0][1].get<double>(), cov[1][0].get<double>(), cov[1][1].get<double>()};
            model.classes.push_back(k);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    }
    model.validate();
    return model;
}

inline ConditionalModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open model file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return model_from_json(j);
}

// ---------------------------------------------------------------------------
// Inputs

/// cfg["input"] is {"path", "label_column"} or {"synthetic": {...}}.
inline Dataset load_input(const json& input) {
    const bool has_path = input.contains("path");
    const bool has_synth = input.contains("synthetic");
    if (has_path == has_synth) throw UsageError("exactly one of --input or --synthetic is required");
    if (has_path) return load_csv(input.at("path").get<std::string>(), input.value("label_column", std::string("label")));
    return generate_gaussian_mixture(synthetic_from_json(input.at("synthetic")));
}

inline json matrix_json(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
    json out = json::array();
    for (std::size_t r = 0; r < rows; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < cols; ++c) row.push_back(v[r * cols + c]);
        out.push_back(row);
    }
    return out;
}

inline json matrix_json(const std::vector<std::size_t>& v, std::size_t rows, std::size_t cols) {
    json out = json::array();
    for (std::size_t r = 0; r < rows; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < cols; ++c) row.push_back(v[r * cols + c]);
        out.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Commands

inline json run_estimate(const json& cfg) {
    const auto ds = load_input(cfg.at("input"));
    const auto pair_idx = cfg.at("pair").get<std::vector<std::size_t>>();
    if (pair_idx.size() != 2) throw UsageError("--pair expects two indices s,t");
    const std::size_t s = pair_idx[0], t = pair_idx[1];
    if (s >= ds.cols || t >= ds.cols)
        throw UsageError("--pair " + std::to_string(s) + "," + std::to_string(t) + " out of range for " + std::to_string(ds.cols) + " features");
    EstimateOptions opts;
    opts.clamp = cfg.value("clamp", false);
    const auto est = estimate_pair_bound(extract_pair(ds, s, t), cfg.at("seed").get<std::uint64_t>(), cfg.at("repeats").get<std::size_t>(), opts);
    const auto& d = est.delta;
    const auto m = static_cast<std::size_t>(d.m);
    return json{{"pair", {s, t}},
                {"features", {ds.feature_names[s], ds.feature_names[t]}},
                {"class_labels", ds.label_names},
                {"value", est.value},
                {"clamped", est.clamped},
                {"repeat_values", est.repeat_values},
                {"total_cross", est.total_cross},
                {"n", est.n},
                {"original_counts", d.original_counts},
                {"source_counts", d.source_counts},
                {"priors_permuted", est.priors_permuted},
                {"priors_original", est.priors_original},
                {"cross_counts", matrix_json(d.cross_counts, m, m)},
                {"delta", matrix_json(d.delta, m, m)}};
}

inline json run_select(const json& cfg) {
    const auto ds = load_input(cfg.at("input"));
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    const auto bm = compute_bound_matrix(ds, seed, cfg.at("repeats").get<std::size_t>());
    const auto scores = aggregate_scores(bm);

    SelectionResult sel;
    std::string mode;
    if (!cfg.at("drop_above").is_null()) {
        mode = "drop-above";
        sel = select_below(scores, cfg.at("drop_above").get<double>());
    } else {
        const auto k = cfg.at("keep").get<std::size_t>();
        if (cfg.value("iterative", false)) {
            mode = "iterative";
            sel = select_iterative(bm, k);
        } else {
            mode = "keep";
            sel = select_k(scores, k);
        }
    }
    json ties = json::array();
    for (const auto& t : sel.tie_breaks) ties.push_back({{"score", t.score}, {"tied", t.tied}, {"kept", t.kept}});

    json payload{{"feature_names", ds.feature_names},
                 {"mode", mode},
                 {"bound_matrix", matrix_json(bm.values, bm.d, bm.d)},
                 {"scores", scores.scores},
                 {"kept", sel.kept},
                 {"dropped", sel.dropped},
                 {"tie_breaks", ties},
                 {"knn", nullptr}};
    if (cfg.value("eval_knn", false)) {
        const auto k = cfg.value("knn_k", std::size_t{5});
        const auto folds = cfg.value("folds", std::size_t{5});
        const auto knn_seed = derive_seed(seed, {0x6b6e6eULL});
        std::vector<std::size_t> all(ds.cols);
        for (std::size_t i = 0; i < ds.cols; ++i) all[i] = i;
        json knn{{"k", k}, {"folds", folds}, {"kept", nullptr}, {"all", knn_holdout_accuracy(ds, all, k, folds, knn_seed)}, {"dropped", nullptr}};
        if (!sel.kept.empty()) knn["kept"] = knn_holdout_accuracy(ds, sel.kept, k, folds, knn_seed);
        if (!sel.dropped.empty()) knn["dropped"] = knn_holdout_accuracy(ds, sel.dropped, k, folds, knn_seed);
        payload["knn"] = knn;
    }
    return payload;
}

inline MseConfig mse_config(const json& cfg) {
    MseConfig c;
    c.classes = cfg.at("classes").get<std::vector<int>>();
    c.sizes = cfg.at("sizes").get<std::vector<std::size_t>>();
    c.iters = cfg.at("iters").get<std::size_t>();
    c.repeats = cfg.at("repeats").get<std::size_t>();
    c.mean_scale = cfg.at("mu").get<double>();
    c.cov_scale = cfg.at("cov").get<double>();
    c.correlation = cfg.at("rho").get<double>();
    c.layout = parse_mean_layout(cfg.at("layout").get<std::string>());
    c.grid_resolution = cfg.at("resolution").get<std::size_t>();
    c.seed = cfg.at("seed").get<std::uint64_t>();
    return c;
}

inline json run_simulate_mse(const json& cfg) {
    json rows = json::array();
    for (const auto& r : simulate_mse(mse_config(cfg)))
        rows.push_back({{"m", r.m}, {"N", r.n_total}, {"mse", r.mse}, {"mean_estimate", r.mean_estimate}, {"bound_true", r.bound_true}, {"iters", r.iters}});
    return json{{"rows", rows}};
}

inline json run_bench(const json& cfg) {
    BenchConfig c;
    c.classes = cfg.at("classes").get<std::vector<int>>();
    c.sizes = cfg.at("sizes").get<std::vector<std::size_t>>();
    c.runs = cfg.at("runs").get<std::size_t>();
    c.warmup = cfg.at("warmup").get<std::size_t>();
    c.seed = cfg.at("seed").get<std::uint64_t>();
    json rows = json::array();
    for (const auto& r : run_bench(c))
        rows.push_back({{"m", r.m},
                        {"N", r.n_total},
                        {"t_global", r.t_global},
                        {"t_pairwise", r.t_pairwise},
                        {"ratio", r.ratio},
                        {"work_global", r.work_global},
                        {"work_pairwise", r.work_pairwise}});
    return json{{"rows", rows}};
}

inline json run_oracle(const json& cfg) {
    const auto model = cfg.contains("model_path") ? load_model(cfg.at("model_path").get<std::string>()) : model_from_json(cfg.at("model"));
    const auto grid = default_grid(model, cfg.at("resolution").get<std::size_t>());
    const auto delta = delta_matrix_true(model, grid);
    const auto m = static_cast<std::size_t>(model.m());
    return json{{"model", to_json(model)},
                {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"resolution", grid.resolution}}},
                {"delta", matrix_json(delta, m, m)},
                {"conditional_gmi", conditional_gmi_true(model, grid)},
                {"bound", bound_true(model, grid)}};
}

/// Dispatches on cfg["command"].
inline json run(const json& cfg) {
    const auto cmd = cfg.at("command").get<std::string>();
    if (cmd == "estimate") return run_estimate(cfg);
    if (cmd == "select") return run_select(cfg);
    if (cmd == "simulate-mse") return run_simulate_mse(cfg);
    if (cmd == "bench") return run_bench(cfg);
    if (cmd == "oracle") return run_oracle(cfg);
    throw UsageError("unknown command '" + cmd + "'");
}

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

inline json make_envelope(const json& cfg, const json& payload, const std::string& started, const std::string& finished) {
    return json{{"tool", "gmi"}, {"version", GMI_VERSION}, {"config", cfg}, {"timestamps", {{"started", started}, {"finished", finished}}}, {"payload", payload}};
}

/// Runs cfg and wraps the payload in an envelope.
inline json execute(const json& cfg) {
    const auto started = utc_now();
    auto payload = run(cfg);
    return make_envelope(cfg, payload, started, utc_now());
}

// ---------------------------------------------------------------------------
// CSV rendering of payloads (long-format tables, 17 significant digits)

namespace detail {

inline std::string csv_cell(const json& v) {
    std::ostringstream out;
    out << std::setprecision(17);
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_number_float()) {
        out << v.get<double>();
    } else if (v.is_number_unsigned()) {
        out << v.get<std::uint64_t>();
    } else if (v.is_number_integer()) {
        out << v.get<std::int64_t>();
    } else if (v.is_string()) {
        out << v.get<std::string>();
    } else {
        out << v.dump();
    }
    return out.str();
}

inline std::string rows_csv(const json& rows, const std::vector<std::string>& columns) {
    std::ostringstream out;
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << csv_cell(r.at(columns[c]));
        out << '\n';
    }
    return out.str();
}

}  // namespace detail

inline std::string payload_csv(const std::string& cmd, const json& p) {
    if (cmd == "estimate") {
        json rows = json::array();
        const auto m = p.at("delta").size();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                rows.push_back({{"y", i + 1},
                                {"z", j + 1},
                                {"cross_count", p["cross_counts"][j][i]},
                                {"delta", p["delta"][i][j]},
                                {"value", p["value"]},
                                {"total_cross", p["total_cross"]},
                                {"n", p["n"]}});
        return detail::rows_csv(rows, {"y", "z", "cross_count", "delta", "value", "total_cross", "n"});
    }
    if (cmd == "select") {
        json rows = json::array();
        const auto& kept = p.at("kept");
        for (std::size_t i = 0; i < p.at("scores").size(); ++i) {
            bool is_kept = std::find(kept.begin(), kept.end(), json(i)) != kept.end();
            rows.push_back({{"feature", i}, {"name", p["feature_names"][i]}, {"score", p["scores"][i]}, {"kept", is_kept}});
        }
        return detail::rows_csv(rows, {"feature", "name", "score", "kept"});
    }
    if (cmd == "simulate-mse") return detail::rows_csv(p.at("rows"), {"m", "N", "mse", "mean_estimate", "bound_true", "iters"});
    if (cmd == "bench") return detail::rows_csv(p.at("rows"), {"m", "N", "t_global", "t_pairwise", "ratio", "work_global", "work_pairwise"});
    if (cmd == "oracle") {
        json rows = json::array();
        const auto m = p.at("delta").size();
        for (std::size_t y = 0; y < m; ++y)
            for (std::size_t z = 0; z < m; ++z)
                rows.push_back({{"y", y + 1}, {"z", z + 1}, {"delta", p["delta"][y][z]}, {"conditional_gmi", p["conditional_gmi"]}, {"bound", p["bound"]}});
        return detail::rows_csv(rows, {"y", "z", "delta", "conditional_gmi", "bound"});
    }
    throw UsageError("unknown command '" + cmd + "'");
}

}  // namespace gmi::cli
