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
#ifndef STC_CLI_HPP
#define STC_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "stc/experiment.hpp"

namespace stc {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitIo = 4,
};

/// 2 for configuration/input problems, 3 for numerical or design failures, 4 for I/O.
inline int exitCodeFor(const std::exception& e)
{
    if (dynamic_cast<const IoError*>(&e) != nullptr) {
        return kExitIo;
    }
    if (dynamic_cast<const ConfigError*>(&e) != nullptr || dynamic_cast<const InputError*>(&e) != nullptr ||
        dynamic_cast<const DimensionError*>(&e) != nullptr || dynamic_cast<const RangeError*>(&e) != nullptr) {
        return kExitConfig;
    }
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e) != nullptr) {
        return kExitIo;
    }
    return kExitNumerical;
}

/**
 * Entry point of the `stc` tool.
 *
 *   stc [--config PATH] [--out DIR] [--seed N] [--raw] run|sweep|plotdata|gen-network
 *
 * Without --config the built-in defaults (10-node network, alpha 1.15) are used.
 */
inline int runCli(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Self-triggered sparse optimal control experiments", "stc"};
    std::string configPath;
    std::string outDir;
    std::int64_t seed = -1;
    bool raw = false;
    app.add_option("--config", configPath, "JSON experiment configuration");
    app.add_option("--out", outDir, "Output directory (overrides output.directory)");
    app.add_option("--seed", seed, "Network seed (overrides network.seed)")->check(CLI::NonNegativeNumber);
    app.add_flag("--raw", raw, "Also write per-seed sweep rows");
    app.require_subcommand(1);
    auto* runCmd = app.add_subcommand("run", "Single closed-loop run: records, trajectory, metrics");
    auto* sweepCmd = app.add_subcommand("sweep", "Parameter sweep over seeds: sweep.csv");
    auto* plotCmd = app.add_subcommand("plotdata", "Plot-ready series from an output directory");
    auto* genCmd = app.add_subcommand("gen-network", "Write a generated network layout and system");
    for (auto* sub : {runCmd, sweepCmd, plotCmd, genCmd}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "stc: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        ExperimentConfig config;
        if (!configPath.empty()) {
            std::string text;
            try {
                text = readTextFile(configPath);
            } catch (const IoError&) {
                throw ConfigError("cannot read config file " + configPath);
            }
            config = parseConfig(text);
        }
        if (seed >= 0) {
            config.network.seed = static_cast<std::uint64_t>(seed);
        }
        if (raw) {
            config.output.raw = true;
        }
        if (!outDir.empty()) {
            config.output.directory = outDir;
        }
        const std::filesystem::path dir = config.output.directory;

        if (runCmd->parsed()) {
            const SingleRunOutput res = runSingle(config, dir);
            const RunMetrics& m = res.result.metrics;
            out << "R_F " << formatNumber(m.rF) << "  R_u " << formatNumber(m.rU) << "  D " << formatNumber(m.d)
                << "  nu " << formatNumber(m.nu) << "\n";
            for (const auto& f : res.files) {
                out << "wrote " << f.string() << "\n";
            }
        } else if (sweepCmd->parsed()) {
            if (!config.sweep) {
                throw ConfigError("sweep: the configuration has no sweep section");
            }
            const SweepOutput res = runSweep(config, dir);
            for (const auto& r : res.rows) {
                out << config.sweep->parameter << " " << formatNumber(r.value) << "  R_F " << formatNumber(r.rF)
                    << "  R_u " << formatNumber(r.rU) << "  D " << formatNumber(r.d) << "  nu "
                    << formatNumber(r.nu) << "\n";
            }
            for (const auto& f : res.files) {
                out << "wrote " << f.string() << "\n";
            }
        } else if (plotCmd->parsed()) {
            for (const auto& f : emitPlotData(dir)) {
                out << "wrote " << f.string() << "\n";
            }
        } else if (genCmd->parsed()) {
            out << "wrote " << generateNetworkFile(config, dir).string() << "\n";
        }
    } catch (const std::exception& e) {
        err << "stc: " << e.what() << "\n";
        return exitCodeFor(e);
    }
    return kExitOk;
}

}  // namespace stc

#endif  // STC_CLI_HPP
