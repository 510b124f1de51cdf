/*
 Copyright 2026 The stc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "stc/cli.hpp"
#include "test_support.hpp"

using namespace stc;
using stc::testing::Gen;
namespace fs = std::filesystem;

namespace {

fs::path freshDir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("stc-exp-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Two-node network with a short horizon so CLI round trips take milliseconds.
ExperimentConfig smallConfig(const fs::path& out)
{
    ExperimentConfig c;
    c.network.subsystemCount = 2;
    c.network.side = 2.0;
    c.run.kMax = 4;
    c.run.gridHorizonSeconds = 2.0;
    c.run.tailHorizonSeconds = 2.0;
    c.output.directory = out.string();
    return c;
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "stc");
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = runCli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

ExperimentConfig randomConfig(Gen& g)
{
    ExperimentConfig c;
    c.network.subsystemCount = g.integer(1, 6);
    c.network.side = g.uniform(1.0, 20.0);
    c.network.decayRate = g.uniform(0.1, 4.0);
    c.network.seed = static_cast<std::uint64_t>(g.integer(0, 1 << 30));
    c.network.stateWeight = g.uniform(0.1, 3.0);
    c.network.inputWeight = g.uniform(0.1, 3.0);
    if (g.integer(0, 1) == 1) {
        for (int i = 0; i < c.network.subsystemCount; ++i) {
            c.network.typeAssignment.push_back(g.integer(0, 1) == 1 ? NodeType::Square : NodeType::Circle);
            c.network.positions.push_back({g.uniform(0.0, c.network.side), g.uniform(0.0, c.network.side)});
        }
    }
    c.run.alpha = g.uniform(1.01, 2.0);
    c.run.gamma = g.uniform(0.0, 0.1);
    c.run.eta = g.uniform(0.0, 0.1);
    c.run.kMax = g.integer(1, 200);
    if (g.integer(0, 1) == 1) {
        std::vector<double> x0;
        for (int i = 0; i < 2 * c.network.subsystemCount; ++i) {
            x0.push_back(g.uniform(-1.0, 1.0));
        }
        c.run.x0 = x0;
    }
    c.run.gridStepSeconds = g.uniform(0.001, 0.1);
    c.run.gridHorizonSeconds = c.run.gridStepSeconds * g.integer(1, 1000);
    c.run.tailHorizonSeconds = g.uniform(1.0, 100.0);
    if (g.integer(0, 1) == 1) {
        c.run.zeroThreshold = g.uniform(0.0, 1e-3);
    }
    c.run.muDenominator = g.integer(0, 1) == 1 ? MuDenominator::InputCount : MuDenominator::BenchmarkInput;
    if (g.integer(0, 1) == 1) {
        SweepSettings s;
        const char* params[] = {"alpha", "beta", "gamma", "eta"};
        s.parameter = params[g.integer(0, 3)];
        double v = s.parameter == "alpha" ? 1.0 : 0.0;
        for (int i = g.integer(1, 5); i > 0; --i) {
            v += g.uniform(0.01, 1.0);
            s.values.push_back(v);
        }
        s.seedsPerPoint = g.integer(1, 10);
        c.sweep = s;
    }
    if (g.integer(0, 3) == 0 && !(c.sweep && c.sweep->parameter == "beta")) {
        const int n = 2 * c.network.subsystemCount;
        const int m = g.integer(1, 3);
        c.system = LtiSystem(g.normalMatrix(n, n), g.normalMatrix(n, m), g.spd(n, 0.5, 2.0), g.spd(m, 0.5, 2.0));
    }
    c.output.directory = "out-" + std::to_string(g.integer(0, 999));
    if (g.integer(0, 1) == 1) {
        c.output.tableCacheDirectory = "cache, \"quoted\"";
    }
    c.output.raw = g.integer(0, 1) == 1;
    return c;
}

std::string expectConfigError(const std::string& text)
{
    try {
        parseConfig(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ConfigError for:\n" << text;
    return {};
}

}  // namespace

// --- configuration -------------------------------------------------------------------

TEST(Config, EmitParseRoundTrip)
{
    Gen g(61);
    for (int trial = 0; trial < 200; ++trial) {
        const ExperimentConfig c = randomConfig(g);
        const std::string text = emitConfig(c);
        const ExperimentConfig back = parseConfig(text);
        EXPECT_TRUE(back == c) << "trial " << trial << "\n" << text;
        EXPECT_EQ(emitConfig(back), text);
    }
}

TEST(Config, EmptyDocumentGivesDefaults)
{
    const ExperimentConfig c = parseConfig("{}");
    EXPECT_TRUE(c == ExperimentConfig{});
    EXPECT_EQ(c.network.subsystemCount, 10);
    EXPECT_EQ(c.run.alpha, 1.15);
    EXPECT_EQ(c.run.kMax, 49);
}

TEST(Config, ShippedConfigsParse)
{
    for (const char* name : {"network.json", "sweep_alpha.json", "sweep_beta.json", "sweep_gamma.json",
                             "sweep_eta.json"}) {
        const fs::path path = fs::path(STC_SOURCE_DIR) / "configs" / name;
        EXPECT_NO_THROW(loadConfig(path)) << path;
    }
}

TEST(Config, UnknownKeyReportsItsLine)
{
    const std::string msg = expectConfigError("{\n  \"run\": {\n    \"alpha\": 1.2,\n    \"alhpa\": 1.3\n  }\n}\n");
    EXPECT_EQ(msg.rfind("line 4:", 0), 0u) << msg;
    EXPECT_NE(msg.find("alhpa"), std::string::npos);
}

TEST(Config, InvalidValueReportsItsLine)
{
    const std::string msg = expectConfigError("{\n  \"network\": {\"N\": 3},\n  \"run\": {\n    \"alpha\": 0.9\n  }\n}\n");
    EXPECT_EQ(msg.rfind("line 4:", 0), 0u) << msg;
}

TEST(Config, SyntaxErrorReportsItsLine)
{
    const std::string msg = expectConfigError("{\n  \"run\": {\n    \"alpha\": 1.2,\n  }\n}\n");
    EXPECT_EQ(msg.rfind("line 4:", 0), 0u) << msg;
}

TEST(Config, SweepValidation)
{
    expectConfigError(R"({"sweep": {"parameter": "alpha", "values": [1.2, 1.1]}})");
    expectConfigError(R"({"sweep": {"parameter": "alpha", "values": [1.2, 1.2]}})");
    expectConfigError(R"({"sweep": {"parameter": "alpha", "values": [0.9, 1.1]}})");
    expectConfigError(R"({"sweep": {"parameter": "delta", "values": [1.0]}})");
    expectConfigError(R"({"sweep": {"parameter": "eta", "values": [0.1], "seedsPerPoint": 0}})");
    expectConfigError(R"({"sweep": {"parameter": "eta", "values": []}})");
}

TEST(Config, TypeAndShapeErrors)
{
    expectConfigError(R"({"run": {"kMax": 2.5}})");
    expectConfigError(R"({"run": {"kMax": "3"}})");
    expectConfigError(R"({"network": {"N": 2}, "run": {"x0": [1, 2, 3]}})");
    expectConfigError(R"({"network": {"types": ["square", "triangle"]}})");
    expectConfigError(R"({"schemaVersion": 2})");
    expectConfigError(R"({"system": {"n": 1, "m": 1, "A": [1], "B": [1], "Q": [-1], "R": [1]}})");
    expectConfigError(R"([1, 2])");
}

// --- CSV ---------------------------------------------------------------------------------

TEST(Csv, QuotingRoundTrip)
{
    CsvTable t({"name", "value"});
    t.addRow({"plain", "1"});
    t.addRow({"with, comma", "2"});
    t.addRow({"with \"quote\"", "3"});
    t.addRow({"multi\r\nline", "4"});
    t.addRow({"", "5"});
    const std::string text = t.str();
    EXPECT_EQ(text.substr(0, 12), "name,value\r\n");
    EXPECT_NE(text.find("\"with, comma\",2\r\n"), std::string::npos);
    EXPECT_NE(text.find("\"with \"\"quote\"\"\",3\r\n"), std::string::npos);
    const CsvTable back = CsvTable::parse(text);
    EXPECT_EQ(back.header(), t.header());
    EXPECT_EQ(back.rows(), t.rows());
}

TEST(Csv, TwelveSignificantDigits)
{
    EXPECT_EQ(formatNumber(1.0), "1");
    EXPECT_EQ(formatNumber(0.1), "0.1");
    EXPECT_EQ(formatNumber(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(formatNumber(123456789012345.0), "1.23456789012e+14");
    EXPECT_EQ(formatNumber(-2.5e-7), "-2.5e-07");
}

TEST(Csv, ParseAcceptsBareNewlinesAndMissingFinalBreak)
{
    const CsvTable t = CsvTable::parse("a,b\n1,2\n3,4");
    ASSERT_EQ(t.rows().size(), 2u);
    EXPECT_EQ(t.numbers("b"), (std::vector<double>{2.0, 4.0}));
    EXPECT_THROW(CsvTable::parse("a,b\n1"), InputError);
    EXPECT_THROW(CsvTable::parse("a\n\"open"), InputError);
    EXPECT_THROW(t.column("c"), InputError);
}

// --- runs and files ----------------------------------------------------------------------

TEST(RunSingle, WritesDocumentedFiles)
{
    const fs::path dir = freshDir("single");
    const ExperimentConfig c = smallConfig(dir);
    const SingleRunOutput res = runSingle(c, dir);

    const CsvTable rec = readCsv(dir / "records.csv");
    EXPECT_EQ(rec.header(),
              (std::vector<std::string>{"k", "t_k", "delta_k", "kappa_k", "mu_k", "intervalCost", "converged"}));
    EXPECT_EQ(rec.rows().size(), 4u);

    const CsvTable traj = readCsv(dir / "trajectory.csv");
    EXPECT_EQ(traj.header(), (std::vector<std::string>{"t", "x1", "x2", "x3", "x4", "norm"}));
    std::size_t samples = 1;
    for (const auto& r : res.result.records) {
        samples += r.gridIndex;
    }
    EXPECT_EQ(traj.rows().size(), samples);

    const Json metrics = Json::parse(readTextFile(dir / "metrics.json"));
    EXPECT_EQ(metrics["schemaVersion"], kConfigSchemaVersion);
    EXPECT_DOUBLE_EQ(metrics["metrics"]["RF"].get<double>(), res.result.metrics.rF);
    EXPECT_TRUE(parseConfig(metrics["config"].dump()) == c);
    EXPECT_TRUE(fs::exists(dir / "network.json"));
    EXPECT_TRUE(fs::exists(dir / "benchmark.csv"));
    fs::remove_all(dir);
}

TEST(RunSingle, SingleTriggerGivesOneRow)
{
    const fs::path dir = freshDir("kmax1");
    ExperimentConfig c = smallConfig(dir);
    c.run.kMax = 1;
    runSingle(c, dir);
    EXPECT_EQ(readCsv(dir / "records.csv").rows().size(), 1u);
    fs::remove_all(dir);
}

TEST(RunSingle, OriginInitialState)
{
    const fs::path dir = freshDir("origin");
    ExperimentConfig c = smallConfig(dir);
    c.run.x0 = std::vector<double>(4, 0.0);
    runSingle(c, dir);
    const CsvTable rec = readCsv(dir / "records.csv");
    for (double v : rec.numbers("intervalCost")) {
        EXPECT_EQ(v, 0.0);
    }
    for (double v : rec.numbers("mu_k")) {
        EXPECT_EQ(v, 0.0);
    }
    for (double v : rec.numbers("kappa_k")) {
        EXPECT_TRUE(std::isfinite(v));
    }
    fs::remove_all(dir);
}

TEST(RunSingle, DefaultNetworkLossWithinBound)
{
    const fs::path dir = freshDir("default");
    ExperimentConfig c;
    const SingleRunOutput res = runSingle(c, dir);
    const Json m = Json::parse(readTextFile(dir / "metrics.json"))["metrics"];
    EXPECT_LE(m["nu"].get<double>(), 0.15 + m["truncationTolerance"].get<double>());
    EXPECT_EQ(res.result.records.size(), 49u);
    fs::remove_all(dir);
}

TEST(Sweep, AggregatesSeedsAndIgnoresThreadCount)
{
    const fs::path dir = freshDir("sweep");
    ExperimentConfig c = smallConfig(dir);
    c.sweep = SweepSettings{"alpha", {1.1, 1.3}, 3};
    c.output.raw = true;
    const SweepOutput one = runSweep(c, dir / "one", 1);
    const SweepOutput two = runSweep(c, dir / "two", 3);
    ASSERT_EQ(one.rows.size(), 2u);
    EXPECT_EQ(one.rows[0].runs, 3);
    EXPECT_EQ(readTextFile(dir / "one" / "sweep.csv"), readTextFile(dir / "two" / "sweep.csv"));
    EXPECT_EQ(readTextFile(dir / "one" / "sweep_raw.csv"), readTextFile(dir / "two" / "sweep_raw.csv"));
    const CsvTable sweep = readCsv(dir / "one" / "sweep.csv");
    EXPECT_EQ(sweep.header(), (std::vector<std::string>{"alpha", "RF", "RU", "D", "nu", "runs"}));
    EXPECT_EQ(readCsv(dir / "one" / "sweep_raw.csv").rows().size(), 6u);

    double mean = 0.0;
    for (const auto& p : one.points) {
        if (p.value == 1.3) {
            mean += p.metrics.rF / 3.0;
        }
    }
    EXPECT_NEAR(one.rows[1].rF, mean, 1e-12);
    fs::remove_all(dir);
}

TEST(Sweep, ThreadCountFromEnvironment)
{
    setenv("STC_THREADS", "3", 1);
    EXPECT_EQ(threadCount(), 3u);
    setenv("STC_THREADS", "zero", 1);
    EXPECT_GE(threadCount(), 1u);
    unsetenv("STC_THREADS");
}

TEST(ParallelFor, RethrowsLowestIndexFailure)
{
    std::vector<int> hits(20, 0);
    try {
        parallelFor(20, 4, [&](std::size_t i) {
            hits[i] = 1;
            if (i == 7 || i == 13) {
                throw InputError("task " + std::to_string(i));
            }
        });
        FAIL() << "expected an exception";
    } catch (const InputError& e) {
        EXPECT_STREQ(e.what(), "task 7");
    }
    EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 20);
}

// --- plot data ---------------------------------------------------------------------------

TEST(PlotData, AfterSingleRun)
{
    const fs::path dir = freshDir("plot-run");
    const SingleRunOutput res = runSingle(smallConfig(dir), dir);
    emitPlotData(dir);
    for (const char* f : {"fig1.csv", "fig2.csv", "fig3.csv", "fig4a.csv", "fig4b.csv", "fig5.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const CsvTable fig5 = readCsv(dir / "fig5.csv");
    EXPECT_EQ(fig5.header(), (std::vector<std::string>{"series", "x", "y"}));
    ASSERT_EQ(fig5.rows().size(), res.result.records.size());
    for (std::size_t k = 0; k < fig5.rows().size(); ++k) {
        EXPECT_EQ(fig5.rows()[k][0], "delta");
        EXPECT_EQ(fig5.rows()[k][1], formatNumber(res.result.records[k].t));
        EXPECT_EQ(fig5.rows()[k][2], formatNumber(res.result.records[k].delta));
    }
    const CsvTable fig4a = readCsv(dir / "fig4a.csv");
    std::set<std::string> series;
    for (const auto& r : fig4a.rows()) {
        series.insert(r[0]);
    }
    EXPECT_EQ(series, (std::set<std::string>{"self-triggered", "periodic-lqr"}));
    fs::remove_all(dir);
}

TEST(PlotData, AlphaSweepGivesTable)
{
    const fs::path dir = freshDir("plot-alpha");
    ExperimentConfig c = smallConfig(dir);
    c.sweep = SweepSettings{"alpha", {1.1, 1.2}, 1};
    runSweep(c, dir, 1);
    emitPlotData(dir);
    EXPECT_EQ(readTextFile(dir / "table1.csv"), readTextFile(dir / "sweep.csv"));
    fs::remove_all(dir);
}

TEST(PlotData, BetaSweepGivesThreeFigures)
{
    const fs::path dir = freshDir("plot-beta");
    ExperimentConfig c = smallConfig(dir);
    c.sweep = SweepSettings{"beta", {0.5, 2.0}, 1};
    runSweep(c, dir, 1);
    emitPlotData(dir);
    const CsvTable sweep = readCsv(dir / "sweep.csv");
    const CsvTable fig7b = readCsv(dir / "fig7b.csv");
    ASSERT_EQ(fig7b.rows().size(), 2u);
    EXPECT_EQ(fig7b.rows()[1][0], "D");
    EXPECT_EQ(fig7b.rows()[1][2], sweep.rows()[1][sweep.column("D")]);
    EXPECT_TRUE(fs::exists(dir / "fig6.csv"));
    EXPECT_TRUE(fs::exists(dir / "fig7a.csv"));
    fs::remove_all(dir);
}

TEST(PlotData, EmptyDirectoryWritesNothing)
{
    const fs::path dir = freshDir("plot-empty");
    EXPECT_THROW(emitPlotData(dir), IoError);
    EXPECT_TRUE(fs::is_empty(dir));
    const CliResult r = cli({"--out", dir.string(), "plotdata"});
    EXPECT_EQ(r.code, kExitIo);
    EXPECT_NE(r.err.find("records.csv"), std::string::npos);
    EXPECT_TRUE(fs::is_empty(dir));
    fs::remove_all(dir);
}

// --- command line ------------------------------------------------------------------------

TEST(Cli, RunWritesFilesAndSeedOverrides)
{
    const fs::path dir = freshDir("cli-run");
    writeTextFile(dir / "c.json", emitConfig(smallConfig(dir / "out")));
    const CliResult r = cli({"--config", (dir / "c.json").string(), "--seed", "9", "run"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("R_F"), std::string::npos);
    const Json m = Json::parse(readTextFile(dir / "out" / "metrics.json"));
    EXPECT_EQ(m["config"]["network"]["seed"], 9);
    fs::remove_all(dir);
}

TEST(Cli, FlagsAfterSubcommand)
{
    const fs::path dir = freshDir("cli-gen");
    const CliResult r = cli({"gen-network", "--out", dir.string(), "--seed", "3"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const Json net = Json::parse(readTextFile(dir / "network.json"));
    EXPECT_EQ(net["seed"], 3);
    EXPECT_EQ(net["nodes"].size(), 10u);
    fs::remove_all(dir);
}

TEST(Cli, SweepWithRawFlag)
{
    const fs::path dir = freshDir("cli-sweep");
    ExperimentConfig c = smallConfig(dir / "out");
    c.sweep = SweepSettings{"gamma", {1e-4, 1e-3}, 1};
    writeTextFile(dir / "c.json", emitConfig(c));
    const CliResult r = cli({"--config", (dir / "c.json").string(), "--raw", "sweep"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "out" / "sweep.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "sweep_raw.csv"));
    fs::remove_all(dir);
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = freshDir("cli-codes");
    EXPECT_EQ(cli({}).code, kExitConfig);
    EXPECT_EQ(cli({"launch"}).code, kExitConfig);
    EXPECT_EQ(cli({"--config", (dir / "absent.json").string(), "run"}).code, kExitConfig);

    writeTextFile(dir / "bad.json", "{\n  \"run\": {\"alpha\": -1}\n}\n");
    const CliResult bad = cli({"--config", (dir / "bad.json").string(), "run"});
    EXPECT_EQ(bad.code, kExitConfig);
    EXPECT_NE(bad.err.find("line 2:"), std::string::npos) << bad.err;

    writeTextFile(dir / "nosweep.json", emitConfig(smallConfig(dir / "o")));
    EXPECT_EQ(cli({"--config", (dir / "nosweep.json").string(), "sweep"}).code, kExitConfig);

    // Unstable scalar plant on a 5 s grid: the first grid point already violates the bound.
    writeTextFile(dir / "coarse.json", R"({
  "system": {"n": 1, "m": 1, "A": [2], "B": [1], "Q": [1], "R": [1]},
  "network": {"N": 1},
  "run": {"gridStepSeconds": 5, "gridHorizonSeconds": 10, "kMax": 2},
  "output": {"directory": ")" + (dir / "coarse").string() + R"("}
})");
    const CliResult coarse = cli({"--config", (dir / "coarse.json").string(), "run"});
    EXPECT_EQ(coarse.code, kExitNumerical) << coarse.err;

    writeTextFile(dir / "blocker", "a file, not a directory");
    writeTextFile(dir / "io.json", emitConfig(smallConfig(dir / "blocker" / "sub")));
    EXPECT_EQ(cli({"--config", (dir / "io.json").string(), "run"}).code, kExitIo);
    fs::remove_all(dir);
}

TEST(Cli, InstalledBinaryReportsExitStatus)
{
    const fs::path dir = freshDir("cli-bin");
    writeTextFile(dir / "bad.json", "{ \"run\": ");
    const std::string cmd = std::string(STC_CLI_PATH) + " --config " + (dir / "bad.json").string() + " run 2>/dev/null";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), kExitConfig);
    fs::remove_all(dir);
}

TEST(ExitCodeFor, Taxonomy)
{
    EXPECT_EQ(exitCodeFor(ConfigError("x")), kExitConfig);
    EXPECT_EQ(exitCodeFor(InputError("x")), kExitConfig);
    EXPECT_EQ(exitCodeFor(IoError("x")), kExitIo);
    EXPECT_EQ(exitCodeFor(DesignError("x")), kExitNumerical);
    EXPECT_EQ(exitCodeFor(GridTooCoarseError("x")), kExitNumerical);
    EXPECT_EQ(exitCodeFor(NumericalError("x")), kExitNumerical);
}
