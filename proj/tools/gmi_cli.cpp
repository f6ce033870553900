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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gmi/cli.hpp"

using gmi::cli::json;

namespace {

struct InputFlags {
    std::string path;
    std::string label_column = "label";
    std::string synthetic;
};

void add_input_flags(CLI::App* cmd, InputFlags& in) {
    auto* path = cmd->add_option("--input", in.path, "CSV file with a header row");
    auto* synth = cmd->add_option("--synthetic", in.synthetic, "Synthetic data spec, e.g. m=2,per_class=2000,mu=0.5,cov=0.1,d=2,rho=0.9,seed=1");
    path->excludes(synth);
    cmd->add_option("--label-column", in.label_column, "Name of the label column")->capture_default_str();
}

json input_json(const InputFlags& in) {
    if (in.path.empty() == in.synthetic.empty()) throw gmi::UsageError("exactly one of --input or --synthetic is required");
    if (!in.path.empty()) return json{{"path", in.path}, {"label_column", in.label_column}};
    return json{{"synthetic", gmi::cli::to_json(gmi::cli::parse_synthetic(in.synthetic))}};
}

std::vector<std::size_t> parse_pair(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        long long v = -1;
        try {
            v = std::stoll(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size() || v < 0) throw gmi::UsageError("--pair expects two non-negative indices s,t; got '" + text + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.size() != 2) throw gmi::UsageError("--pair expects two indices s,t; got '" + text + "'");
    if (out[0] > out[1]) std::swap(out[0], out[1]);
    if (out[0] == out[1]) throw gmi::UsageError("--pair needs two distinct features");
    return out;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw gmi::DataError(path + ": cannot open for writing");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geometric conditional mutual information: global Friedman-Rafsky estimation and feature filtering"};
    app.require_subcommand(1);
    app.set_version_flag("--version", GMI_VERSION);

    std::optional<std::uint64_t> seed;
    std::string format = "json";
    std::string output;
    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Master seed (default: $GMI_SEED or 0)");
        cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
        cmd->add_option("-o,--output", output, "Output path (default: stdout)");
    };

    InputFlags input;
    std::size_t repeats = 10;

    auto* est = app.add_subcommand("estimate", "Estimate the conditional-GMI lower bound for one feature pair");
    std::string pair_text;
    bool clamp = false;
    add_input_flags(est, input);
    est->add_option("--pair", pair_text, "Feature indices s,t (0-based)")->required();
    est->add_option("--repeats", repeats, "Split/permutation repeats to average")->capture_default_str()->check(CLI::PositiveNumber);
    est->add_flag("--clamp", clamp, "Clamp the averaged value into [0, 1]");
    common(est);

    auto* sel = app.add_subcommand("select", "Drop the features with the highest total pairwise bound");
    std::optional<std::size_t> keep;
    std::optional<double> drop_above;
    bool iterative = false, eval_knn = false;
    std::size_t knn_k = 5, folds = 5;
    add_input_flags(sel, input);
    auto* keep_opt = sel->add_option("--keep", keep, "Number of features to keep");
    auto* drop_opt = sel->add_option("--drop-above", drop_above, "Drop every feature whose score exceeds this threshold");
    keep_opt->excludes(drop_opt);
    sel->add_option("--repeats", repeats, "Repeats per pair estimate")->capture_default_str()->check(CLI::PositiveNumber);
    sel->add_flag("--iterative", iterative, "Re-aggregate scores after every drop");
    sel->add_flag("--eval-knn", eval_knn, "Report cross-validated k-NN accuracy of kept, dropped and all features");
    sel->add_option("--knn-k", knn_k, "Neighbours for --eval-knn")->capture_default_str()->check(CLI::PositiveNumber);
    sel->add_option("--folds", folds, "Folds for --eval-knn")->capture_default_str()->check(CLI::Range(2, 1000));
    common(sel);

    auto* sim = app.add_subcommand("simulate-mse", "MSE of the estimator against the quadrature bound over an (m, N) sweep");
    gmi::MseConfig mse;
    std::string layout = "hypercube";
    sim->add_option("--classes", mse.classes, "Class counts")->delimiter(',')->capture_default_str();
    sim->add_option("--sizes", mse.sizes, "Total sample sizes N")->delimiter(',')->capture_default_str();
    sim->add_option("--iters", mse.iters, "Data draws per cell")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--repeats", mse.repeats, "Permutation repeats per draw")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--mu", mse.mean_scale, "Mean spacing")->capture_default_str();
    sim->add_option("--cov", mse.cov_scale, "Isotropic variance scale")->capture_default_str();
    sim->add_option("--rho", mse.correlation, "Within-class correlation of the two features")->capture_default_str();
    sim->add_option("--layout", layout, "Class mean layout")->check(CLI::IsMember({"hypercube", "alternating"}))->capture_default_str();
    sim->add_option("--resolution", mse.grid_resolution, "Quadrature points per axis (odd)")->capture_default_str();
    common(sim);

    auto* bench = app.add_subcommand("bench", "Wall time of the global MST estimator against the per-class-pair baseline");
    gmi::BenchConfig bc;
    bench->add_option("--classes", bc.classes, "Class counts")->delimiter(',')->capture_default_str();
    bench->add_option("--sizes", bc.sizes, "Total sample sizes N")->delimiter(',')->capture_default_str();
    bench->add_option("--runs", bc.runs, "Timed runs (median reported)")->capture_default_str()->check(CLI::PositiveNumber);
    bench->add_option("--warmup", bc.warmup, "Untimed warm-up runs")->capture_default_str();
    common(bench);

    auto* orc = app.add_subcommand("oracle", "Quadrature ground truth for a Gaussian class-conditional model file");
    std::string model_path;
    std::size_t resolution = 401;
    orc->add_option("--model", model_path, "Model JSON: {\"classes\": [{prior, mean: [2], cov: [[2,2]]}, ...]}")->required()->check(CLI::ExistingFile);
    orc->add_option("--resolution", resolution, "Quadrature points per axis (odd)")->capture_default_str();
    common(orc);

    auto* gen = app.add_subcommand("generate", "Write a synthetic Gaussian-mixture dataset as CSV");
    std::string gen_spec;
    std::string gen_label = "label";
    gen->add_option("--synthetic", gen_spec, "Synthetic data spec")->required();
    gen->add_option("--label-column", gen_label, "Name of the label column")->capture_default_str();
    gen->add_option("-o,--output", output, "Output path (default: stdout)");

    auto* replay = app.add_subcommand("replay", "Re-run the config echo of a JSON envelope");
    std::string envelope_path;
    replay->add_option("envelope", envelope_path, "Envelope written by an earlier run")->required()->check(CLI::ExistingFile);
    replay->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    replay->add_option("-o,--output", output, "Output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? gmi::cli::ok : gmi::cli::usage;
    }

    try {
        if (gen->parsed()) {
            std::ostringstream out;
            gmi::write_csv(gmi::generate_gaussian_mixture(gmi::cli::parse_synthetic(gen_spec)), out, gen_label);
            emit(out.str(), output);
            return gmi::cli::ok;
        }

        json cfg;
        if (replay->parsed()) {
            std::ifstream in(envelope_path);
            json env;
            try {
                env = json::parse(in);
            } catch (const json::exception& e) {
                throw gmi::DataError(envelope_path + ": " + e.what());
            }
            if (!env.contains("config")) throw gmi::DataError(envelope_path + ": no config echo");
            cfg = env.at("config");
        } else {
            const std::uint64_t s = seed ? *seed : gmi::cli::default_seed();
            if (est->parsed()) {
                cfg = {{"command", "estimate"}, {"input", input_json(input)}, {"pair", parse_pair(pair_text)}, {"seed", s}, {"repeats", repeats}, {"clamp", clamp}};
            } else if (sel->parsed()) {
                if (!keep && !drop_above) throw gmi::UsageError("select needs --keep k or --drop-above threshold");
                cfg = {{"command", "select"},
                       {"input", input_json(input)},
                       {"seed", s},
                       {"repeats", repeats},
                       {"keep", keep ? json(*keep) : json(nullptr)},
                       {"drop_above", drop_above ? json(*drop_above) : json(nullptr)},
                       {"iterative", iterative},
                       {"eval_knn", eval_knn},
                       {"knn_k", knn_k},
                       {"folds", folds}};
            } else if (sim->parsed()) {
                cfg = {{"command", "simulate-mse"}, {"classes", mse.classes}, {"sizes", mse.sizes},   {"iters", mse.iters},
                       {"repeats", mse.repeats},    {"mu", mse.mean_scale},   {"cov", mse.cov_scale}, {"rho", mse.correlation},
                       {"layout", layout},          {"resolution", mse.grid_resolution}, {"seed", s}};
            } else if (bench->parsed()) {
                cfg = {{"command", "bench"}, {"classes", bc.classes}, {"sizes", bc.sizes}, {"runs", bc.runs}, {"warmup", bc.warmup}, {"seed", s}};
            } else if (orc->parsed()) {
                cfg = {{"command", "oracle"}, {"model", gmi::cli::to_json(gmi::cli::load_model(model_path))}, {"resolution", resolution}, {"seed", s}};
            }
        }

        const auto envelope = gmi::cli::execute(cfg);
        if (format == "csv") {
            emit(gmi::cli::payload_csv(cfg.at("command").get<std::string>(), envelope.at("payload")), output);
        } else {
            emit(envelope.dump(2) + "\n", output);
        }
        return gmi::cli::ok;
    } catch (const gmi::UsageError& e) {
        std::cerr << "gmi: usage error: " << e.what() << '\n';
        return gmi::cli::usage;
    } catch (const gmi::DataError& e) {
        std::cerr << "gmi: data error: " << e.what() << '\n';
        return gmi::cli::data;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "gmi: bad config: " << e.what() << '\n';
        return gmi::cli::usage;
    } catch (const std::exception& e) {
        std::cerr << "gmi: internal error: " << e.what() << '\n';
        return gmi::cli::internal;
    }
}
