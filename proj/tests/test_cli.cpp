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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "gmi/cli.hpp"

using namespace gmi;
using cli::json;

namespace {

namespace fs = std::filesystem;

struct Result {
    int code = -1;
    std::string out;
};

Result run_tool(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + std::string(GMI_CLI_PATH) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    fs::path dir = fs::path(GMI_TEST_TMP) / "cli_scratch";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

json estimate_cfg(std::uint64_t seed) {
    return json{{"command", "estimate"},
                {"input", {{"synthetic", cli::to_json(cli::parse_synthetic("m=2,per_class=80,rho=0.5,seed=3"))}}},
                {"pair", {0, 1}},
                {"seed", seed},
                {"repeats", 3},
                {"clamp", false}};
}

}  // namespace

TEST(ParseSynthetic, KeysAndDefaults) {
    auto s = cli::parse_synthetic("m=5,per_class=40,mu=1.5,cov=0.2,d=3,seed=9,rho=0.3,layout=alternating,redundant=1,redundant_noise=0.05");
    EXPECT_EQ(s.m, 5);
    EXPECT_EQ(s.per_class, 40u);
    EXPECT_EQ(s.mean_scale, 1.5);
    EXPECT_EQ(s.cov_scale, 0.2);
    EXPECT_EQ(s.dim, 3u);
    EXPECT_EQ(s.seed, 9u);
    EXPECT_EQ(s.correlation, 0.3);
    EXPECT_EQ(s.layout, MeanLayout::alternating);
    EXPECT_EQ(s.redundant, 1u);
    EXPECT_EQ(s.redundant_noise, 0.05);
    auto d = cli::parse_synthetic("");
    EXPECT_EQ(d.m, SyntheticSpec{}.m);
    auto back = cli::synthetic_from_json(cli::to_json(s));
    EXPECT_EQ(cli::to_json(back), cli::to_json(s));
}

TEST(ParseSynthetic, Rejects) {
    EXPECT_THROW(cli::parse_synthetic("m"), UsageError);
    EXPECT_THROW(cli::parse_synthetic("colour=red"), UsageError);
    EXPECT_THROW(cli::parse_synthetic("m=two"), UsageError);
    EXPECT_THROW(cli::parse_synthetic("per_class=-3"), UsageError);
    EXPECT_THROW(cli::parse_synthetic("m=0"), UsageError);
    EXPECT_THROW(cli::parse_synthetic("layout=spiral"), UsageError);
}

TEST(CliInProcess, EstimateDeterministicAndConsistent) {
    auto a = cli::run(estimate_cfg(4));
    auto b = cli::run(estimate_cfg(4));
    EXPECT_EQ(a.dump(), b.dump());
    const double n = a.at("n").get<double>();
    EXPECT_EQ(a.at("value").get<double>(), [&] {
        double s = 0;
        for (const auto& v : a.at("repeat_values")) s += v.get<double>();
        return s / 3.0;
    }());
    EXPECT_NEAR(a.at("repeat_values")[2].get<double>(), 1.0 - a.at("total_cross").get<double>() / n, 1e-15);
    EXPECT_NE(a.dump(), cli::run(estimate_cfg(5)).dump());
}

TEST(CliInProcess, EnvelopeShape) {
    auto env = cli::execute(estimate_cfg(1));
    EXPECT_EQ(env.at("tool"), "gmi");
    EXPECT_EQ(env.at("version"), GMI_VERSION);
    EXPECT_EQ(env.at("config"), estimate_cfg(1));
    EXPECT_TRUE(env.at("timestamps").contains("started"));
    EXPECT_TRUE(env.at("timestamps").contains("finished"));
    EXPECT_EQ(cli::run(env.at("config")).dump(), env.at("payload").dump());
}

TEST(CliInProcess, UnknownCommandAndBadPair) {
    EXPECT_THROW(cli::run(json{{"command", "frobnicate"}}), UsageError);
    auto cfg = estimate_cfg(1);
    cfg["pair"] = {0, 7};
    EXPECT_THROW(cli::run(cfg), UsageError);
}

TEST(CliInProcess, SelectPayload) {
    json cfg{{"command", "select"},
             {"input", {{"synthetic", cli::to_json(cli::parse_synthetic("m=2,per_class=60,d=3,redundant=1,seed=2"))}}},
             {"seed", 3},
             {"repeats", 2},
             {"keep", 2},
             {"drop_above", nullptr},
             {"iterative", false},
             {"eval_knn", true},
             {"knn_k", 3},
             {"folds", 3}};
    auto p = cli::run(cfg);
    EXPECT_EQ(p.at("mode"), "keep");
    EXPECT_EQ(p.at("kept").size(), 2u);
    EXPECT_EQ(p.at("dropped").size(), 2u);
    EXPECT_EQ(p.at("bound_matrix").size(), 4u);
    EXPECT_TRUE(p.at("knn").at("kept").is_number());
    EXPECT_EQ(p.dump(), cli::run(cfg).dump());
    cfg["keep"] = 4;
    EXPECT_TRUE(cli::run(cfg).at("knn").at("dropped").is_null());
}

TEST(CliInProcess, OraclePayload) {
    json model = json::parse(R"({"classes": [{"prior": 1.0, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]})");
    auto p = cli::run(json{{"command", "oracle"}, {"model", model}, {"resolution", 201}, {"seed", 0}});
    EXPECT_NEAR(p.at("delta")[0][0].get<double>(), 0.5, 1e-6);
    EXPECT_NEAR(p.at("bound").get<double>(), 0.0, 1e-6);
}

TEST(CliCsv, SeventeenDigitsRoundTrip) {
    auto p = cli::run(estimate_cfg(8));
    const auto csv = cli::payload_csv("estimate", p);
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    EXPECT_EQ(header, "y,z,cross_count,delta,value,total_cross,n");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        auto cells = detail::split_csv_line(line);
        ASSERT_EQ(cells.size(), 7u);
        const auto y = std::stoul(cells[0]) - 1, z = std::stoul(cells[1]) - 1;
        EXPECT_EQ(std::stod(cells[3]), p.at("delta")[y][z].get<double>());
        EXPECT_EQ(std::stod(cells[4]), p.at("value").get<double>());
        ++rows;
    }
    EXPECT_EQ(rows, 4u);
    EXPECT_THROW(cli::payload_csv("nope", p), UsageError);
}

TEST(CliProcess, VersionAndUsage) {
    auto v = run_tool("--version");
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find(GMI_VERSION), std::string::npos);
    EXPECT_EQ(run_tool("").code, 2);
    EXPECT_EQ(run_tool("estimate --synthetic m=2").code, 2);                     // --pair missing
    EXPECT_EQ(run_tool("estimate --synthetic m=2,d=2 --pair 0,5").code, 2);      // out of range
    EXPECT_EQ(run_tool("estimate --synthetic m=2 --pair 0,1 --format xml").code, 2);
    EXPECT_EQ(run_tool("select --synthetic m=2,d=3").code, 2);                   // no --keep
    EXPECT_EQ(run_tool("select --synthetic m=2,d=3 --keep 1 --drop-above 0.5").code, 2);
}

TEST(CliProcess, DataErrors) {
    const auto bad = scratch("bad.csv");
    write_file(bad, "a,b,label\n1,2,x\n1,nan,y\n");
    EXPECT_EQ(run_tool("estimate --input " + bad.string() + " --pair 0,1").code, 3);
    EXPECT_EQ(run_tool("estimate --input " + scratch("missing.csv").string() + " --pair 0,1").code, 3);
    const auto model = scratch("bad_model.json");
    write_file(model, R"({"classes": [{"prior": 0.5, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}]})");
    EXPECT_EQ(run_tool("oracle --model " + model.string()).code, 3);
}

TEST(CliProcess, CsvInputEstimateAndReplay) {
    const auto data = scratch("data.csv");
    auto gen = run_tool("generate --synthetic m=3,per_class=30,d=3,rho=0.4,seed=5 -o " + data.string());
    ASSERT_EQ(gen.code, 0);
    const auto env_path = scratch("env.json");
    auto first = run_tool("estimate --input " + data.string() + " --pair 2,0 --seed 11 --repeats 4 -o " + env_path.string());
    ASSERT_EQ(first.code, 0);
    std::ifstream in(env_path);
    auto env = json::parse(in);
    EXPECT_EQ(env.at("config").at("pair"), json({0, 2}));
    EXPECT_EQ(env.at("payload").at("class_labels").size(), 3u);
    auto again = run_tool("replay " + env_path.string());
    ASSERT_EQ(again.code, 0);
    auto env2 = json::parse(again.out);
    EXPECT_EQ(env2.at("payload").dump(), env.at("payload").dump());
    EXPECT_EQ(env2.at("config").dump(), env.at("config").dump());
}

TEST(CliProcess, SeedFromEnvironment) {
    const std::string args = "estimate --synthetic m=2,per_class=40,seed=1 --pair 0,1 --repeats 2 --format csv";
    auto a = run_tool(args, "GMI_SEED=17");
    ASSERT_EQ(a.code, 0);
    auto b = run_tool(args + " --seed 17");
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(CliProcess, CsvFormats) {
    auto sel = run_tool("select --synthetic m=2,per_class=40,d=3,seed=1 --keep 2 --repeats 2 --format csv");
    ASSERT_EQ(sel.code, 0);
    EXPECT_EQ(sel.out.substr(0, sel.out.find('\n')), "feature,name,score,kept");
    auto sim = run_tool("simulate-mse --classes 2 --sizes 100 --iters 2 --resolution 101 --format csv");
    ASSERT_EQ(sim.code, 0);
    EXPECT_EQ(sim.out.substr(0, sim.out.find('\n')), "m,N,mse,mean_estimate,bound_true,iters");
    auto bench = run_tool("bench --classes 2 --sizes 200 --runs 1 --warmup 0 --format csv");
    ASSERT_EQ(bench.code, 0);
    EXPECT_EQ(bench.out.substr(0, bench.out.find('\n')), "m,N,t_global,t_pairwise,ratio,work_global,work_pairwise");
}
