// Copyright 2026 The qcorridor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// qcorridor: run, validate or cross-check a measured-system experiment.
//
// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 suite failure.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qcorridor/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericFailure = 3;
constexpr int kSuiteFailure = 4;

int exitCodeFor(const qcorridor::Error& e) {
    using qcorridor::ErrorKind;
    switch (e.kind()) {
    case ErrorKind::NumericFailure:
    case ErrorKind::DegenerateEnsemble:
    case ErrorKind::InvalidMeasure:
        return kNumericFailure;
    default:
        return kConfigError;
    }
}

void printSummary(const qcorridor::RunOutcome& out) {
    for (const auto& [k, v] : out.summary) {
        std::cout << k << ": " << v << '\n';
    }
    std::cout << "artifacts: " << out.directory.string() << '\n';
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const qcorridor::Error& e) {
        std::cerr << "qcorridor: " << e.what() << '\n';
        return exitCodeFor(e);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "qcorridor: cannot write output: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "qcorridor: internal error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate continuously measured quantum systems"};
    app.set_version_flag("--version", std::string(QCORRIDOR_VERSION));
    app.require_subcommand(1);

    std::string configPath;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;

    auto addOverrides = [&](CLI::App* sub) {
        sub->add_option("config", configPath, "Experiment config (JSON)")->required();
        sub->add_option("--out", out, "Output directory (overrides the config)");
        sub->add_option("--threads", threads, "Worker threads (fallback: QCORRIDOR_THREADS)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "Master seed (overrides the config)");
    };

    auto* run = app.add_subcommand("run", "Run the configured experiment and write its artifacts");
    addOverrides(run);
    auto* validate = app.add_subcommand("validate", "Check a config without running anything");
    validate->add_option("config", configPath, "Experiment config (JSON)")->required();
    auto* suite = app.add_subcommand("suite", "Run the cross-formalism consistency checks");
    addOverrides(suite);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    const qcorridor::RunOverrides overrides{out, threads, seed};

    if (*validate) {
        return guarded([&] {
            const auto cfg = qcorridor::loadConfig(configPath);
            std::cout << configPath << ": valid " << qcorridor::to_string(cfg.kind) << " config\n";
            return kOk;
        });
    }
    if (*suite) {
        return guarded([&] {
            auto cfg = qcorridor::loadConfig(configPath);
            cfg.kind = qcorridor::ExperimentKind::ConsistencySuite;
            if (!overrides.out && !cfg.output) {
                qcorridor::SuiteOptions so;
                so.nSamples = cfg.sampling.nSamples;
                so.seed = seed.value_or(cfg.sampling.seed);
                so.threads = qcorridor::resolveThreads(threads.value_or(0));
                const auto rep = qcorridor::runConsistencySuite(cfg.sys(), cfg.meas(), cfg.initialState(), so);
                std::cout << qcorridor::toJson(rep).dump(2) << '\n';
                return rep.pass ? kOk : kSuiteFailure;
            }
            const auto res = qcorridor::runExperiment(cfg, overrides);
            printSummary(res);
            return res.exitCode;
        });
    }
    return guarded([&] {
        const auto res = qcorridor::runExperiment(qcorridor::loadConfig(configPath), overrides);
        printSummary(res);
        return res.exitCode;
    });
}
