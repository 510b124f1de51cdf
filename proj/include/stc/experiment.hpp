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
#ifndef STC_EXPERIMENT_HPP
#define STC_EXPERIMENT_HPP

// Experiment configuration, single runs, parameter sweeps and plot-ready series.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "stc/engine.hpp"
#include "stc/io.hpp"
#include "stc/table_cache.hpp"

namespace stc {

inline constexpr int kConfigSchemaVersion = 1;

struct RunSettings {
    double alpha = 1.15;
    double gamma = 0.001;
    double eta = 0.001;
    int kMax = 49;
    /// Initial state; drawn uniformly from [-1, 1]^n with the network seed when absent.
    std::optional<std::vector<double>> x0;
    double gridStepSeconds = 0.01;
    double gridHorizonSeconds = 5.0;
    double tailHorizonSeconds = 40.0;
    std::optional<double> zeroThreshold;
    MuDenominator muDenominator = MuDenominator::BenchmarkInput;

    friend bool operator==(const RunSettings&, const RunSettings&) = default;
};

struct SweepSettings {
    std::string parameter;
    std::vector<double> values;
    int seedsPerPoint = 5;

    friend bool operator==(const SweepSettings&, const SweepSettings&) = default;
};

struct OutputSettings {
    std::string directory = "results";
    /// Binary integral-table cache; disabled when empty.
    std::string tableCacheDirectory;
    bool raw = false;

    friend bool operator==(const OutputSettings&, const OutputSettings&) = default;
};

struct ExperimentConfig {
    int schemaVersion = kConfigSchemaVersion;
    NetworkSpec network;
    /// Explicit plant; replaces the generated network when present.
    std::optional<LtiSystem> system;
    RunSettings run;
    std::optional<SweepSettings> sweep;
    OutputSettings output;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    Eigen::Index stateDim() const { return system ? system->stateDim() : 2 * network.subsystemCount; }
};

namespace detail {

inline int lineAt(const std::string& text, std::size_t offset)
{
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Reads typed fields out of the parsed document and reports failures with source lines.
class ConfigReader {
public:
    explicit ConfigReader(const std::string& text) : text_(text) {}

    /// Line of the last key on `path`, searched in document order.
    int lineOf(const std::vector<std::string>& path) const
    {
        std::size_t pos = 0;
        std::size_t found = std::string::npos;
        for (const auto& key : path) {
            const std::size_t p = text_.find("\"" + key + "\"", pos);
            if (p == std::string::npos) {
                break;
            }
            found = p;
            pos = p + key.size() + 2;
        }
        return found == std::string::npos ? 1 : lineAt(text_, found);
    }

    [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const
    {
        std::string name;
        for (const auto& k : path) {
            name += name.empty() ? k : "." + k;
        }
        throw ConfigError("line " + std::to_string(lineOf(path)) + ": " + (name.empty() ? "" : name + ": ") + message);
    }

    void requireKeys(const Json& obj, const std::vector<std::string>& path,
                     std::initializer_list<const char*> allowed) const
    {
        if (!obj.is_object()) {
            fail(path, "must be an object");
        }
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& item : obj.items()) {
            if (ok.count(item.key()) == 0) {
                auto p = path;
                p.push_back(item.key());
                fail(p, "unknown key");
            }
        }
    }

    double number(const Json& obj, std::vector<std::string> path, double fallback) const
    {
        const std::string key = path.back();
        if (!obj.contains(key)) {
            return fallback;
        }
        const Json& v = obj[key];
        if (!v.is_number()) {
            fail(path, "must be a number");
        }
        return v.get<double>();
    }

    long long integer(const Json& obj, std::vector<std::string> path, long long fallback) const
    {
        const std::string key = path.back();
        if (!obj.contains(key)) {
            return fallback;
        }
        const Json& v = obj[key];
        if (!v.is_number_integer()) {
            fail(path, "must be an integer");
        }
        return v.get<long long>();
    }

    std::string string(const Json& obj, std::vector<std::string> path, const std::string& fallback) const
    {
        const std::string key = path.back();
        if (!obj.contains(key)) {
            return fallback;
        }
        const Json& v = obj[key];
        if (!v.is_string()) {
            fail(path, "must be a string");
        }
        return v.get<std::string>();
    }

    bool boolean(const Json& obj, std::vector<std::string> path, bool fallback) const
    {
        const std::string key = path.back();
        if (!obj.contains(key)) {
            return fallback;
        }
        const Json& v = obj[key];
        if (!v.is_boolean()) {
            fail(path, "must be true or false");
        }
        return v.get<bool>();
    }

    std::vector<double> numbers(const Json& obj, std::vector<std::string> path) const
    {
        const Json& v = obj[path.back()];
        if (!v.is_array()) {
            fail(path, "must be an array of numbers");
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) {
                fail(path, "must be an array of numbers");
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

private:
    const std::string& text_;
};

inline const char* muDenominatorName(MuDenominator d)
{
    return d == MuDenominator::BenchmarkInput ? "benchmarkInput" : "inputCount";
}

inline void validateConfig(const ExperimentConfig& c, const ConfigReader& rd)
{
    if (c.schemaVersion != kConfigSchemaVersion) {
        rd.fail({"schemaVersion"}, "unsupported schema version " + std::to_string(c.schemaVersion));
    }
    try {
        c.network.validate();
    } catch (const Error& e) {
        rd.fail({"network"}, e.what());
    }
    const RunSettings& r = c.run;
    if (!(std::isfinite(r.alpha) && r.alpha > 1.0)) {
        rd.fail({"run", "alpha"}, "must exceed 1");
    }
    if (!(r.gamma >= 0.0)) {
        rd.fail({"run", "gamma"}, "must be nonnegative");
    }
    if (!(r.eta >= 0.0)) {
        rd.fail({"run", "eta"}, "must be nonnegative");
    }
    if (r.kMax < 1) {
        rd.fail({"run", "kMax"}, "must be at least 1");
    }
    if (!(std::isfinite(r.gridStepSeconds) && r.gridStepSeconds > 0.0)) {
        rd.fail({"run", "gridStepSeconds"}, "must be positive");
    }
    if (!(std::isfinite(r.gridHorizonSeconds) && r.gridHorizonSeconds >= r.gridStepSeconds)) {
        rd.fail({"run", "gridHorizonSeconds"}, "must be at least one grid step");
    }
    if (!(std::isfinite(r.tailHorizonSeconds) && r.tailHorizonSeconds > 0.0)) {
        rd.fail({"run", "tailHorizonSeconds"}, "must be positive");
    }
    if (r.zeroThreshold && !(*r.zeroThreshold >= 0.0)) {
        rd.fail({"run", "zeroThreshold"}, "must be nonnegative");
    }
    if (r.x0) {
        if (static_cast<Eigen::Index>(r.x0->size()) != c.stateDim()) {
            rd.fail({"run", "x0"}, "must have " + std::to_string(c.stateDim()) + " entries");
        }
        for (double v : *r.x0) {
            if (!std::isfinite(v)) {
                rd.fail({"run", "x0"}, "entries must be finite");
            }
        }
    }
    if (c.sweep) {
        const SweepSettings& s = *c.sweep;
        static const std::set<std::string> params{"alpha", "beta", "gamma", "eta"};
        if (params.count(s.parameter) == 0) {
            rd.fail({"sweep", "parameter"}, "must be one of alpha, beta, gamma, eta");
        }
        if (s.parameter == "beta" && c.system) {
            rd.fail({"sweep", "parameter"}, "beta sweeps need a generated network, not an explicit system");
        }
        if (s.values.empty()) {
            rd.fail({"sweep", "values"}, "must not be empty");
        }
        for (std::size_t i = 1; i < s.values.size(); ++i) {
            if (!(s.values[i] > s.values[i - 1])) {
                rd.fail({"sweep", "values"}, "must be strictly increasing");
            }
        }
        for (double v : s.values) {
            const bool ok = std::isfinite(v) && (s.parameter == "alpha"  ? v > 1.0
                                                 : s.parameter == "beta" ? v > 0.0
                                                                         : v >= 0.0);
            if (!ok) {
                rd.fail({"sweep", "values"}, "value " + formatNumber(v) + " is out of range for " + s.parameter);
            }
        }
        if (s.seedsPerPoint < 1) {
            rd.fail({"sweep", "seedsPerPoint"}, "must be at least 1");
        }
    }
    if (c.output.directory.empty()) {
        rd.fail({"output", "directory"}, "must not be empty");
    }
}

}  // namespace detail

/**
 * Parses a JSON experiment document. Every error is a ConfigError whose message
 * starts with "line L:" pointing at the offending key (or the syntax error).
 */
inline ExperimentConfig parseConfig(const std::string& text)
{
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("line " + std::to_string(detail::lineAt(text, e.byte > 0 ? e.byte - 1 : 0)) +
                          ": JSON syntax error: " + e.what());
    }
    const detail::ConfigReader rd(text);
    rd.requireKeys(doc, {}, {"schemaVersion", "network", "system", "run", "sweep", "output"});

    ExperimentConfig c;
    c.schemaVersion = static_cast<int>(rd.integer(doc, {"schemaVersion"}, kConfigSchemaVersion));

    if (doc.contains("network")) {
        const Json& nj = doc["network"];
        rd.requireKeys(nj, {"network"}, {"N", "side", "beta", "seed", "stateWeight", "inputWeight", "types", "positions"});
        NetworkSpec& ns = c.network;
        ns.subsystemCount = static_cast<int>(rd.integer(nj, {"network", "N"}, ns.subsystemCount));
        ns.side = rd.number(nj, {"network", "side"}, ns.side);
        ns.decayRate = rd.number(nj, {"network", "beta"}, ns.decayRate);
        const long long seed = rd.integer(nj, {"network", "seed"}, static_cast<long long>(ns.seed));
        if (seed < 0) {
            rd.fail({"network", "seed"}, "must be nonnegative");
        }
        ns.seed = static_cast<std::uint64_t>(seed);
        ns.stateWeight = rd.number(nj, {"network", "stateWeight"}, ns.stateWeight);
        ns.inputWeight = rd.number(nj, {"network", "inputWeight"}, ns.inputWeight);
        if (nj.contains("types")) {
            if (!nj["types"].is_array()) {
                rd.fail({"network", "types"}, "must be an array of \"square\" / \"circle\"");
            }
            for (const auto& t : nj["types"]) {
                try {
                    ns.typeAssignment.push_back(nodeTypeFromName(t.is_string() ? t.get<std::string>() : ""));
                } catch (const InputError& e) {
                    rd.fail({"network", "types"}, e.what());
                }
            }
        }
        if (nj.contains("positions")) {
            if (!nj["positions"].is_array()) {
                rd.fail({"network", "positions"}, "must be an array of [x, y] pairs");
            }
            for (const auto& p : nj["positions"]) {
                if (!(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number())) {
                    rd.fail({"network", "positions"}, "must be an array of [x, y] pairs");
                }
                ns.positions.push_back({p[0].get<double>(), p[1].get<double>()});
            }
        }
    }

    if (doc.contains("system")) {
        rd.requireKeys(doc["system"], {"system"}, {"n", "m", "A", "B", "Q", "R"});
        try {
            c.system = systemFromJson(doc["system"]);
        } catch (const Error& e) {
            rd.fail({"system"}, e.what());
        }
    }

    if (doc.contains("run")) {
        const Json& rj = doc["run"];
        rd.requireKeys(rj, {"run"},
                       {"alpha", "gamma", "eta", "kMax", "x0", "gridStepSeconds", "gridHorizonSeconds",
                        "tailHorizonSeconds", "zeroThreshold", "muDenominator"});
        RunSettings& r = c.run;
        r.alpha = rd.number(rj, {"run", "alpha"}, r.alpha);
        r.gamma = rd.number(rj, {"run", "gamma"}, r.gamma);
        r.eta = rd.number(rj, {"run", "eta"}, r.eta);
        r.kMax = static_cast<int>(rd.integer(rj, {"run", "kMax"}, r.kMax));
        if (rj.contains("x0")) {
            r.x0 = rd.numbers(rj, {"run", "x0"});
        }
        r.gridStepSeconds = rd.number(rj, {"run", "gridStepSeconds"}, r.gridStepSeconds);
        r.gridHorizonSeconds = rd.number(rj, {"run", "gridHorizonSeconds"}, r.gridHorizonSeconds);
        r.tailHorizonSeconds = rd.number(rj, {"run", "tailHorizonSeconds"}, r.tailHorizonSeconds);
        if (rj.contains("zeroThreshold")) {
            r.zeroThreshold = rd.number(rj, {"run", "zeroThreshold"}, 0.0);
        }
        const std::string mu = rd.string(rj, {"run", "muDenominator"}, "benchmarkInput");
        if (mu == "benchmarkInput") {
            r.muDenominator = MuDenominator::BenchmarkInput;
        } else if (mu == "inputCount") {
            r.muDenominator = MuDenominator::InputCount;
        } else {
            rd.fail({"run", "muDenominator"}, "must be \"benchmarkInput\" or \"inputCount\"");
        }
    }

    if (doc.contains("sweep")) {
        const Json& sj = doc["sweep"];
        rd.requireKeys(sj, {"sweep"}, {"parameter", "values", "seedsPerPoint"});
        SweepSettings s;
        s.parameter = rd.string(sj, {"sweep", "parameter"}, "");
        if (!sj.contains("values")) {
            rd.fail({"sweep"}, "values is required");
        }
        s.values = rd.numbers(sj, {"sweep", "values"});
        s.seedsPerPoint = static_cast<int>(rd.integer(sj, {"sweep", "seedsPerPoint"}, s.seedsPerPoint));
        c.sweep = s;
    }

    if (doc.contains("output")) {
        const Json& oj = doc["output"];
        rd.requireKeys(oj, {"output"}, {"directory", "tableCacheDirectory", "raw"});
        c.output.directory = rd.string(oj, {"output", "directory"}, c.output.directory);
        c.output.tableCacheDirectory = rd.string(oj, {"output", "tableCacheDirectory"}, "");
        c.output.raw = rd.boolean(oj, {"output", "raw"}, false);
    }

    detail::validateConfig(c, rd);
    return c;
}

inline Json configToJson(const ExperimentConfig& c)
{
    Json doc;
    doc["schemaVersion"] = c.schemaVersion;
    Json nj;
    nj["N"] = c.network.subsystemCount;
    nj["side"] = c.network.side;
    nj["beta"] = c.network.decayRate;
    nj["seed"] = c.network.seed;
    nj["stateWeight"] = c.network.stateWeight;
    nj["inputWeight"] = c.network.inputWeight;
    if (!c.network.typeAssignment.empty()) {
        Json types = Json::array();
        for (auto t : c.network.typeAssignment) {
            types.push_back(nodeTypeName(t));
        }
        nj["types"] = types;
    }
    if (!c.network.positions.empty()) {
        Json pos = Json::array();
        for (const auto& p : c.network.positions) {
            pos.push_back(Json::array({p.x, p.y}));
        }
        nj["positions"] = pos;
    }
    doc["network"] = nj;
    if (c.system) {
        doc["system"] = systemToJson(*c.system);
    }
    Json rj;
    rj["alpha"] = c.run.alpha;
    rj["gamma"] = c.run.gamma;
    rj["eta"] = c.run.eta;
    rj["kMax"] = c.run.kMax;
    if (c.run.x0) {
        rj["x0"] = *c.run.x0;
    }
    rj["gridStepSeconds"] = c.run.gridStepSeconds;
    rj["gridHorizonSeconds"] = c.run.gridHorizonSeconds;
    rj["tailHorizonSeconds"] = c.run.tailHorizonSeconds;
    if (c.run.zeroThreshold) {
        rj["zeroThreshold"] = *c.run.zeroThreshold;
    }
    rj["muDenominator"] = detail::muDenominatorName(c.run.muDenominator);
    doc["run"] = rj;
    if (c.sweep) {
        doc["sweep"] = {{"parameter", c.sweep->parameter},
                        {"values", c.sweep->values},
                        {"seedsPerPoint", c.sweep->seedsPerPoint}};
    }
    Json oj;
    oj["directory"] = c.output.directory;
    if (!c.output.tableCacheDirectory.empty()) {
        oj["tableCacheDirectory"] = c.output.tableCacheDirectory;
    }
    oj["raw"] = c.output.raw;
    doc["output"] = oj;
    return doc;
}

inline std::string emitConfig(const ExperimentConfig& c)
{
    return configToJson(c).dump(2) + "\n";
}

inline ExperimentConfig loadConfig(const std::filesystem::path& path)
{
    return parseConfig(readTextFile(path));
}

// --- run preparation ----------------------------------------------------------------

/// Plant, layout (for generated networks) and initial state for one seed.
struct PreparedRun {
    NetworkSpec spec;
    std::optional<NetworkLayout> layout;
    LtiSystem system;
    Vector x0;
};

/// Uniform [-1, 1]^n initial state; the stream is decorrelated from the placement stream.
inline Vector randomInitialState(std::uint64_t seed, Eigen::Index n)
{
    std::mt19937_64 gen(seed ^ 0x9E3779B97F4A7C15ULL);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i) = 2.0 * detail::unitUniform(gen) - 1.0;
    }
    return x;
}

inline PreparedRun prepareRun(const ExperimentConfig& c, std::uint64_t seed, std::optional<double> beta = std::nullopt)
{
    NetworkSpec spec = c.network;
    spec.seed = seed;
    if (beta) {
        spec.decayRate = *beta;
    }
    std::optional<NetworkLayout> layout;
    std::optional<LtiSystem> sys = c.system;
    if (!sys) {
        layout = drawLayout(spec);
        sys = assembleNetwork(*layout, spec.decayRate, spec.stateWeight, spec.inputWeight);
    }
    Vector x0;
    if (c.run.x0) {
        x0 = Eigen::Map<const Vector>(c.run.x0->data(), static_cast<Eigen::Index>(c.run.x0->size()));
    } else {
        x0 = randomInitialState(seed, sys->stateDim());
    }
    return PreparedRun{spec, layout, *sys, x0};
}

inline TimeGrid runGrid(const RunSettings& r)
{
    return TimeGrid::fromHorizon(r.gridStepSeconds, r.gridHorizonSeconds);
}

inline RunConfig makeRunConfig(const RunSettings& r, const Vector& x0)
{
    RunConfig rc;
    rc.alpha = r.alpha;
    rc.gamma = r.gamma;
    rc.eta = r.eta;
    rc.kMax = r.kMax;
    rc.x0 = x0;
    rc.grid = runGrid(r);
    rc.tailHorizon = r.tailHorizonSeconds;
    rc.zeroThreshold = r.zeroThreshold;
    rc.muDenominator = r.muDenominator;
    return rc;
}

inline IntegralTable tableFor(const ExperimentConfig& c, const LtiSystem& sys)
{
    const TimeGrid grid = runGrid(c.run);
    if (c.output.tableCacheDirectory.empty()) {
        return buildTable(sys, grid);
    }
    return cachedTable(c.output.tableCacheDirectory, sys, grid);
}

// --- single run -----------------------------------------------------------------------

struct SingleRunOutput {
    RunResult result;
    BenchmarkRun benchmark;
    std::vector<std::filesystem::path> files;
};

inline CsvTable recordsTable(const RunResult& r)
{
    CsvTable t({"k", "t_k", "delta_k", "kappa_k", "mu_k", "intervalCost", "converged"});
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const TriggerRecord& rec = r.records[i];
        t.addNumbers({static_cast<double>(rec.k), rec.t, rec.delta, r.metrics.kappa[i], r.metrics.mu[i],
                      rec.intervalCost, rec.converged ? 1.0 : 0.0});
    }
    return t;
}

inline CsvTable trajectoryTable(const std::vector<TrajectorySample>& samples, Eigen::Index n)
{
    std::vector<std::string> header{"t"};
    for (Eigen::Index i = 0; i < n; ++i) {
        header.push_back("x" + std::to_string(i + 1));
    }
    header.push_back("norm");
    CsvTable t(header);
    for (const auto& s : samples) {
        std::vector<double> row{s.t};
        for (Eigen::Index i = 0; i < n; ++i) {
            row.push_back(s.x(i));
        }
        row.push_back(s.x.norm());
        t.addNumbers(row);
    }
    return t;
}

inline Json metricsToJson(const RunMetrics& m, const std::vector<TriggerRecord>& records)
{
    int notConverged = 0;
    int fellBack = 0;
    for (const auto& r : records) {
        notConverged += r.converged ? 0 : 1;
        fellBack += r.fellBack ? 1 : 0;
    }
    Json j;
    j["RF"] = m.rF;
    j["RU"] = m.rU;
    j["D"] = m.d;
    j["nu"] = m.nu;
    j["totalCost"] = m.totalCost;
    j["benchmarkCost"] = m.benchmarkCost;
    j["intervalCostSum"] = m.intervalCostSum;
    j["truncationTolerance"] = m.truncationTolerance;
    j["meanKappa"] = m.meanKappa;
    j["meanMu"] = m.meanMu;
    j["zeroThreshold"] = m.zeroThreshold;
    j["records"] = records.size();
    j["notConverged"] = notConverged;
    j["fellBack"] = fellBack;
    return j;
}

/// Runs the configuration once (network seed as configured) and writes the run files into `outDir`.
inline SingleRunOutput runSingle(const ExperimentConfig& c, const std::filesystem::path& outDir)
{
    const PreparedRun prep = prepareRun(c, c.network.seed);
    const Benchmark bench = buildBenchmark(prep.system);
    const IntegralTable table = tableFor(c, prep.system);
    SingleRunOutput out;
    out.result = runAlgorithm(prep.system, bench, table, makeRunConfig(c.run, prep.x0));
    out.benchmark = benchmarkRun(prep.system, bench, prep.x0, c.run.tailHorizonSeconds, c.run.gridStepSeconds);

    std::error_code ec;
    std::filesystem::create_directories(outDir, ec);
    if (ec) {
        throw IoError("cannot create " + outDir.string() + ": " + ec.message());
    }
    auto emit = [&](const std::string& name, const std::string& text) {
        writeTextFile(outDir / name, text);
        out.files.push_back(outDir / name);
    };
    emit("records.csv", recordsTable(out.result).str());
    emit("trajectory.csv",
         trajectoryTable(sampleTrajectory(table, out.result.records), prep.system.stateDim()).str());
    CsvTable bench_csv({"t", "norm"});
    for (std::size_t i = 0; i < out.benchmark.times.size(); ++i) {
        bench_csv.addNumbers({out.benchmark.times[i], out.benchmark.stateNorms[i]});
    }
    emit("benchmark.csv", bench_csv.str());
    if (prep.layout) {
        emit("network.json", networkToJson(prep.spec, *prep.layout, prep.system).dump(2) + "\n");
    }
    Json metrics;
    metrics["schemaVersion"] = kConfigSchemaVersion;
    metrics["metrics"] = metricsToJson(out.result.metrics, out.result.records);
    metrics["benchmarkQuadratureCost"] = out.benchmark.cost;
    metrics["config"] = configToJson(c);
    emit("metrics.json", metrics.dump(2) + "\n");
    return out;
}

// --- sweeps ---------------------------------------------------------------------------

/// Fan-out width: STC_THREADS when set to a positive integer, else the hardware concurrency.
inline unsigned threadCount()
{
    if (const char* env = std::getenv("STC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls task(i) for i in [0, count) on `threads` workers; rethrows the first failure by index.
template <class Task>
void parallelFor(std::size_t count, unsigned threads, Task task)
{
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned width = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < width; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

struct SweepPoint {
    double value = 0.0;
    std::uint64_t seed = 0;
    RunMetrics metrics;
};

struct SweepRow {
    double value = 0.0;
    double rF = 0.0;
    double rU = 0.0;
    double d = 0.0;
    double nu = 0.0;
    int runs = 0;
};

struct SweepOutput {
    std::vector<SweepPoint> points;
    std::vector<SweepRow> rows;
    std::vector<std::filesystem::path> files;
};

/// Metrics for one (sweep value, seed) pair.
inline RunMetrics sweepRun(const ExperimentConfig& c, const std::string& parameter, double value, std::uint64_t seed)
{
    RunSettings run = c.run;
    std::optional<double> beta;
    if (parameter == "alpha") {
        run.alpha = value;
    } else if (parameter == "gamma") {
        run.gamma = value;
    } else if (parameter == "eta") {
        run.eta = value;
    } else {
        beta = value;
    }
    const PreparedRun prep = prepareRun(c, seed, beta);
    const Benchmark bench = buildBenchmark(prep.system);
    const IntegralTable table = tableFor(c, prep.system);
    return runAlgorithm(prep.system, bench, table, makeRunConfig(run, prep.x0)).metrics;
}

inline std::vector<SweepRow> aggregateSweep(const std::vector<SweepPoint>& points, const std::vector<double>& values)
{
    std::vector<SweepRow> rows;
    for (double v : values) {
        SweepRow row;
        row.value = v;
        for (const auto& p : points) {
            if (p.value != v) {
                continue;
            }
            row.rF += p.metrics.rF;
            row.rU += p.metrics.rU;
            row.d += p.metrics.d;
            row.nu += p.metrics.nu;
            ++row.runs;
        }
        if (row.runs > 0) {
            const double k = row.runs;
            row.rF /= k;
            row.rU /= k;
            row.d /= k;
            row.nu /= k;
        }
        rows.push_back(row);
    }
    return rows;
}

/// Seeds network.seed + j for j < seedsPerPoint at every sweep value; writes sweep.csv (and sweep_raw.csv).
inline SweepOutput runSweep(const ExperimentConfig& c, const std::filesystem::path& outDir,
                            unsigned threads = threadCount())
{
    detail::require<ConfigError>(c.sweep.has_value(), "sweep: configuration has no sweep section");
    const SweepSettings& s = *c.sweep;
    SweepOutput out;
    for (double v : s.values) {
        for (int j = 0; j < s.seedsPerPoint; ++j) {
            out.points.push_back({v, c.network.seed + static_cast<std::uint64_t>(j), {}});
        }
    }
    parallelFor(out.points.size(), threads, [&](std::size_t i) {
        SweepPoint& p = out.points[i];
        p.metrics = sweepRun(c, s.parameter, p.value, p.seed);
    });
    out.rows = aggregateSweep(out.points, s.values);

    std::error_code ec;
    std::filesystem::create_directories(outDir, ec);
    if (ec) {
        throw IoError("cannot create " + outDir.string() + ": " + ec.message());
    }
    CsvTable table({s.parameter, "RF", "RU", "D", "nu", "runs"});
    for (const auto& r : out.rows) {
        table.addNumbers({r.value, r.rF, r.rU, r.d, r.nu, static_cast<double>(r.runs)});
    }
    writeCsv(outDir / "sweep.csv", table);
    out.files.push_back(outDir / "sweep.csv");
    if (c.output.raw) {
        CsvTable raw({s.parameter, "seed", "RF", "RU", "D", "nu", "totalCost", "benchmarkCost", "truncationTolerance"});
        for (const auto& p : out.points) {
            raw.addNumbers({p.value, static_cast<double>(p.seed), p.metrics.rF, p.metrics.rU, p.metrics.d,
                            p.metrics.nu, p.metrics.totalCost, p.metrics.benchmarkCost,
                            p.metrics.truncationTolerance});
        }
        writeCsv(outDir / "sweep_raw.csv", raw);
        out.files.push_back(outDir / "sweep_raw.csv");
    }
    return out;
}

// --- plot data --------------------------------------------------------------------------

namespace detail {

inline CsvTable seriesTable()
{
    return CsvTable({"series", "x", "y"});
}

inline void addSeries(CsvTable& t, const std::string& name, const std::vector<double>& x, const std::vector<double>& y)
{
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        t.addRow({name, formatNumber(x[i]), formatNumber(y[i])});
    }
}

}  // namespace detail

/**
 * Long-format (series, x, y) CSVs for every figure the results directory supports.
 *
 * Single runs give fig1 (layout, when network.json exists), fig2 (kappa), fig3 (mu),
 * fig4a (state norm against the periodic benchmark), fig4b (states) and fig5 (dwell
 * times). A sweep.csv gives table1 for alpha, fig6/fig7a/fig7b for beta, fig8a for
 * gamma and fig8b for eta. Missing inputs raise IoError listing them; nothing is
 * written in that case.
 */
inline std::vector<std::filesystem::path> emitPlotData(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    const bool haveRecords = fs::exists(dir / "records.csv");
    const bool haveSweep = fs::exists(dir / "sweep.csv");
    std::vector<std::string> missing;
    if (!haveRecords && !haveSweep) {
        missing = {"records.csv", "sweep.csv"};
    }
    if (haveRecords) {
        for (const char* f : {"trajectory.csv", "benchmark.csv"}) {
            if (!fs::exists(dir / f)) {
                missing.emplace_back(f);
            }
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) {
            list += (list.empty() ? "" : ", ") + (dir / m).string();
        }
        throw IoError("plotdata: missing inputs: " + list);
    }

    std::vector<std::pair<std::string, CsvTable>> outputs;
    if (haveRecords) {
        const CsvTable rec = readCsv(dir / "records.csv");
        const CsvTable traj = readCsv(dir / "trajectory.csv");
        const CsvTable bench = readCsv(dir / "benchmark.csv");
        const auto tk = rec.numbers("t_k");

        if (fs::exists(dir / "network.json")) {
            const NetworkLayout layout = layoutFromJson(Json::parse(readTextFile(dir / "network.json")));
            CsvTable fig1 = detail::seriesTable();
            for (std::size_t i = 0; i < layout.positions.size(); ++i) {
                fig1.addRow({nodeTypeName(layout.types[i]), formatNumber(layout.positions[i].x),
                             formatNumber(layout.positions[i].y)});
            }
            outputs.emplace_back("fig1.csv", fig1);
        }
        CsvTable fig2 = detail::seriesTable();
        detail::addSeries(fig2, "kappa", tk, rec.numbers("kappa_k"));
        outputs.emplace_back("fig2.csv", fig2);
        CsvTable fig3 = detail::seriesTable();
        detail::addSeries(fig3, "mu", tk, rec.numbers("mu_k"));
        outputs.emplace_back("fig3.csv", fig3);
        CsvTable fig4a = detail::seriesTable();
        detail::addSeries(fig4a, "self-triggered", traj.numbers("t"), traj.numbers("norm"));
        detail::addSeries(fig4a, "periodic-lqr", bench.numbers("t"), bench.numbers("norm"));
        outputs.emplace_back("fig4a.csv", fig4a);
        CsvTable fig4b = detail::seriesTable();
        const auto tt = traj.numbers("t");
        for (const auto& col : traj.header()) {
            if (col != "t" && col != "norm") {
                detail::addSeries(fig4b, col, tt, traj.numbers(col));
            }
        }
        outputs.emplace_back("fig4b.csv", fig4b);
        CsvTable fig5 = detail::seriesTable();
        detail::addSeries(fig5, "delta", tk, rec.numbers("delta_k"));
        outputs.emplace_back("fig5.csv", fig5);
    }
    if (haveSweep) {
        const CsvTable sweep = readCsv(dir / "sweep.csv");
        detail::require<InputError>(!sweep.header().empty(), "plotdata: sweep.csv has no header");
        const std::string param = sweep.header().front();
        const auto xs = sweep.numbers(param);
        auto figure = [&](const std::string& name, const std::string& column) {
            CsvTable t = detail::seriesTable();
            detail::addSeries(t, column, xs, sweep.numbers(column));
            outputs.emplace_back(name, t);
        };
        if (param == "alpha") {
            outputs.emplace_back("table1.csv", sweep);
        } else if (param == "beta") {
            figure("fig6.csv", "RF");
            figure("fig7a.csv", "RU");
            figure("fig7b.csv", "D");
        } else if (param == "gamma") {
            figure("fig8a.csv", "RF");
        } else if (param == "eta") {
            figure("fig8b.csv", "RU");
        } else {
            throw InputError("plotdata: sweep.csv parameter column \"" + param + "\" is not a sweep parameter");
        }
    }

    std::vector<fs::path> written;
    for (const auto& [name, table] : outputs) {
        writeCsv(dir / name, table);
        written.push_back(dir / name);
    }
    return written;
}

// --- network generation ------------------------------------------------------------------

inline std::filesystem::path generateNetworkFile(const ExperimentConfig& c, const std::filesystem::path& outDir)
{
    const NetworkLayout layout = drawLayout(c.network);
    const LtiSystem sys = assembleNetwork(layout, c.network.decayRate, c.network.stateWeight, c.network.inputWeight);
    const auto path = outDir / "network.json";
    writeTextFile(path, networkToJson(c.network, layout, sys).dump(2) + "\n");
    return path;
}

}  // namespace stc

#endif  // STC_EXPERIMENT_HPP
