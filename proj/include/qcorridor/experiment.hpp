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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcorridor/qcorridor.hpp"
#include "qcorridor/io.hpp"

#ifndef QCORRIDOR_VERSION
#define QCORRIDOR_VERSION "0.0.0-unknown"
#endif

namespace qcorridor {

enum class ExperimentKind {
    Selective,
    Sse,
    Lindblad,
    Monitor,
    ZenoScan,
    Diffusion,
    Superselection,
    SoftMeter,
    ConsistencySuite,
};

inline const char* to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::Selective: return "selective";
    case ExperimentKind::Sse: return "sse";
    case ExperimentKind::Lindblad: return "lindblad";
    case ExperimentKind::Monitor: return "monitor";
    case ExperimentKind::ZenoScan: return "zeno-scan";
    case ExperimentKind::Diffusion: return "diffusion";
    case ExperimentKind::Superselection: return "superselection";
    case ExperimentKind::SoftMeter: return "soft-meter";
    case ExperimentKind::ConsistencySuite: return "consistency-suite";
    }
    return "unknown";
}

struct SamplingConfig {
    std::size_t nSamples = 1000;
    std::uint64_t seed = 1;
    std::optional<double> smoothingWindow;
    std::optional<double> dwell;
    std::optional<std::size_t> seriesLength;
    Proposal proposal = Proposal::Guided;
};

struct ZenoScanConfig {
    std::vector<double> kappas;
    std::vector<std::size_t> nProj;
    std::size_t projectiveRuns = 4000;
};

struct DiffusionConfig {
    double kappa = 1.0;
    std::optional<double> mass;
    double duration = 1.0;
    std::size_t points = 64;
    double lo = -8.0;
    double hi = 8.0;
    std::vector<double> centers{-1.0, 1.0};
    std::size_t snapshots = 20;
};

struct SuperselectionConfig {
    std::size_t nBits = 100;
    double couplingAngle = 0.1;
};

struct SoftMeterConfig {
    std::optional<std::vector<double>> pPositive;
    std::optional<double> kappaEff;
    double pBar = 0.5;
    std::optional<double> stepInterval;
    std::size_t seriesLength = 50;
    std::optional<std::size_t> nRuns;
    bool compare = true;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Monitor;
    Json raw;
    std::optional<SystemSpec> system;
    std::optional<MeasurementSpec> measurement;
    std::optional<QuantumState> initial;
    SamplingConfig sampling;
    std::optional<std::string> output;
    ZenoScanConfig zenoScan;
    DiffusionConfig diffusion;
    SuperselectionConfig superselection;
    SoftMeterConfig softMeter;
    std::optional<double> constantReadout;

    const SystemSpec& sys() const {
        if (!system) {
            throw ConfigError("/system", "required for this experiment");
        }
        return *system;
    }
    const MeasurementSpec& meas() const {
        if (!measurement) {
            throw ConfigError("/measurement", "required for this experiment");
        }
        return *measurement;
    }
    QuantumState initialState() const {
        return initial ? *initial : QuantumState::basis(sys().dim(), 0);
    }
};

namespace detail {

inline std::size_t count(const Json& obj, const std::string& path, const char* key, std::size_t fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const Json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(path + "/" + key, "expected a nonnegative integer");
    }
    return v.get<std::size_t>();
}

inline std::vector<std::size_t> counts(const Json& v, const std::string& path) {
    if (!v.is_array()) {
        throw ConfigError(path, "expected an array of integers");
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer() || v[i].get<long long>() < 1) {
            throw ConfigError(path + "/" + std::to_string(i), "expected a positive integer");
        }
        out.push_back(v[i].get<std::size_t>());
    }
    return out;
}

inline QuantumState initialFromJson(const Json& j, const std::string& path) {
    requireKeys(j, path, {"populations", "amplitudesRe", "amplitudesIm"});
    if (j.contains("populations")) {
        const auto p = numbers(j.at("populations"), path + "/populations");
        Vector c(static_cast<Eigen::Index>(p.size()));
        double total = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!(p[i] >= 0.0)) {
                throw ConfigError(path + "/populations", "populations must be nonnegative");
            }
            c[static_cast<Eigen::Index>(i)] = std::sqrt(p[i]);
            total += p[i];
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ConfigError(path + "/populations", "populations must sum to 1");
        }
        return atPath(path, [&] { return QuantumState::fromAmplitudes(c); });
    }
    if (!j.contains("amplitudesRe")) {
        throw ConfigError(path, "expected populations or amplitudesRe");
    }
    const auto re = numbers(j.at("amplitudesRe"), path + "/amplitudesRe");
    std::vector<double> im(re.size(), 0.0);
    if (j.contains("amplitudesIm")) {
        im = numbers(j.at("amplitudesIm"), path + "/amplitudesIm");
        if (im.size() != re.size()) {
            throw ConfigError(path + "/amplitudesIm", "length differs from amplitudesRe");
        }
    }
    Vector c(static_cast<Eigen::Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i) {
        c[static_cast<Eigen::Index>(i)] = Complex(re[i], im[i]);
    }
    if (std::abs(c.squaredNorm() - 1.0) > 1e-9) {
        throw ConfigError(path, "amplitudes must be normalized");
    }
    return atPath(path, [&] { return QuantumState::fromAmplitudes(c); });
}

} // namespace detail

/// Validates a configuration document. Every key is checked; unknown keys and
/// invalid physical parameters are rejected before anything runs.
inline ExperimentConfig parseConfig(const Json& j) {
    detail::requireKeys(j, "", {"experiment", "system", "measurement", "initial", "sampling", "output",
                                "zenoScan", "diffusion", "superselection", "softMeter", "selective"});
    ExperimentConfig cfg;
    cfg.raw = j;
    if (!j.contains("experiment") || !j.at("experiment").is_string()) {
        throw ConfigError("/experiment", "missing experiment name");
    }
    const std::string name = j.at("experiment").get<std::string>();
    bool known = false;
    for (auto k : {ExperimentKind::Selective, ExperimentKind::Sse, ExperimentKind::Lindblad,
                   ExperimentKind::Monitor, ExperimentKind::ZenoScan, ExperimentKind::Diffusion,
                   ExperimentKind::Superselection, ExperimentKind::SoftMeter,
                   ExperimentKind::ConsistencySuite}) {
        if (name == to_string(k)) {
            cfg.kind = k;
            known = true;
        }
    }
    if (!known) {
        throw ConfigError("/experiment", "unknown experiment '" + name + "'");
    }
    if (j.contains("system")) {
        cfg.system = systemFromJson(j.at("system"));
    }
    if (j.contains("measurement")) {
        cfg.measurement = measurementFromJson(j.at("measurement"));
    }
    if (j.contains("initial")) {
        cfg.initial = detail::initialFromJson(j.at("initial"), "/initial");
    }
    if (j.contains("output")) {
        if (!j.at("output").is_string()) {
            throw ConfigError("/output", "expected a directory path");
        }
        cfg.output = j.at("output").get<std::string>();
    }
    if (j.contains("sampling")) {
        const Json& s = j.at("sampling");
        const std::string p = "/sampling";
        detail::requireKeys(s, p, {"nSamples", "seed", "smoothingWindow", "dwell", "seriesLength", "proposal"});
        cfg.sampling.nSamples = detail::count(s, p, "nSamples", cfg.sampling.nSamples);
        if (cfg.sampling.nSamples < 1) {
            throw ConfigError(p + "/nSamples", "must be at least 1");
        }
        cfg.sampling.seed = detail::count(s, p, "seed", cfg.sampling.seed);
        if (s.contains("smoothingWindow")) {
            cfg.sampling.smoothingWindow = detail::number(s, p, "smoothingWindow");
        }
        if (s.contains("dwell")) {
            cfg.sampling.dwell = detail::number(s, p, "dwell");
        }
        if (s.contains("seriesLength")) {
            cfg.sampling.seriesLength = detail::count(s, p, "seriesLength", 1);
        }
        if (s.contains("proposal")) {
            const Json& v = s.at("proposal");
            if (v == "guided") {
                cfg.sampling.proposal = Proposal::Guided;
            } else if (v == "iid-gaussian") {
                cfg.sampling.proposal = Proposal::IidGaussian;
            } else {
                throw ConfigError(p + "/proposal", "expected \"guided\" or \"iid-gaussian\"");
            }
        }
    }
    if (j.contains("zenoScan")) {
        const Json& z = j.at("zenoScan");
        const std::string p = "/zenoScan";
        detail::requireKeys(z, p, {"kappas", "nProj", "projectiveRuns"});
        if (z.contains("kappas")) {
            cfg.zenoScan.kappas = detail::numbers(z.at("kappas"), p + "/kappas");
        }
        if (z.contains("nProj")) {
            cfg.zenoScan.nProj = detail::counts(z.at("nProj"), p + "/nProj");
        }
        cfg.zenoScan.projectiveRuns = detail::count(z, p, "projectiveRuns", cfg.zenoScan.projectiveRuns);
    }
    if (j.contains("diffusion")) {
        const Json& d = j.at("diffusion");
        const std::string p = "/diffusion";
        detail::requireKeys(d, p, {"kappa", "mass", "duration", "points", "box", "centers", "snapshots"});
        auto& c = cfg.diffusion;
        c.kappa = detail::number(d, p, "kappa", c.kappa);
        if (d.contains("mass")) {
            c.mass = detail::number(d, p, "mass");
        }
        c.duration = detail::number(d, p, "duration", c.duration);
        c.points = detail::count(d, p, "points", c.points);
        c.snapshots = detail::count(d, p, "snapshots", c.snapshots);
        if (d.contains("box")) {
            const auto b = detail::numbers(d.at("box"), p + "/box");
            if (b.size() != 2 || !(b[0] < b[1])) {
                throw ConfigError(p + "/box", "expected [lo, hi] with lo < hi");
            }
            c.lo = b[0];
            c.hi = b[1];
        }
        if (d.contains("centers")) {
            c.centers = detail::numbers(d.at("centers"), p + "/centers");
        }
        if (c.points < 4 || c.centers.empty() || !(c.kappa >= 0.0) || !(c.duration > 0.0) ||
            c.snapshots < 2) {
            throw ConfigError(p, "needs points >= 4, snapshots >= 2, kappa >= 0, duration > 0 and centers");
        }
    }
    if (j.contains("superselection")) {
        const Json& s = j.at("superselection");
        const std::string p = "/superselection";
        detail::requireKeys(s, p, {"nBits", "couplingAngle"});
        cfg.superselection.nBits = detail::count(s, p, "nBits", cfg.superselection.nBits);
        cfg.superselection.couplingAngle =
            detail::number(s, p, "couplingAngle", cfg.superselection.couplingAngle);
        detail::atPath(p, [&] {
            return EnvironmentModel::make(cfg.superselection.nBits, cfg.superselection.couplingAngle);
        });
    }
    if (j.contains("softMeter")) {
        const Json& s = j.at("softMeter");
        const std::string p = "/softMeter";
        detail::requireKeys(s, p, {"pPositive", "kappaEff", "pBar", "stepInterval", "seriesLength", "nRuns", "compare"});
        auto& c = cfg.softMeter;
        if (s.contains("pPositive")) {
            c.pPositive = detail::numbers(s.at("pPositive"), p + "/pPositive");
        }
        if (s.contains("kappaEff")) {
            c.kappaEff = detail::number(s, p, "kappaEff");
        }
        c.pBar = detail::number(s, p, "pBar", c.pBar);
        if (s.contains("stepInterval")) {
            c.stepInterval = detail::number(s, p, "stepInterval");
        }
        c.seriesLength = detail::count(s, p, "seriesLength", c.seriesLength);
        if (s.contains("nRuns")) {
            c.nRuns = detail::count(s, p, "nRuns", 1);
        }
        if (s.contains("compare")) {
            if (!s.at("compare").is_boolean()) {
                throw ConfigError(p + "/compare", "expected a boolean");
            }
            c.compare = s.at("compare").get<bool>();
        }
        if (c.seriesLength < 1) {
            throw ConfigError(p + "/seriesLength", "must be at least 1");
        }
    }
    if (j.contains("selective")) {
        const Json& s = j.at("selective");
        detail::requireKeys(s, "/selective", {"readout"});
        if (s.contains("readout")) {
            const Json& r = s.at("readout");
            if (r.is_number()) {
                cfg.constantReadout = r.get<double>();
            } else if (r != "sampled") {
                throw ConfigError("/selective/readout", "expected a number or \"sampled\"");
            }
        }
    }

    // Per-experiment requirements.
    const bool needsSpecs = cfg.kind != ExperimentKind::Diffusion &&
                            cfg.kind != ExperimentKind::Superselection;
    if (needsSpecs) {
        cfg.sys();
        cfg.meas();
        if (cfg.initial && cfg.initial->dim() != cfg.system->dim()) {
            throw ConfigError("/initial", "dimension does not match the system levels");
        }
        detail::atPath("/measurement/dt", [&] { checkResolution(*cfg.system, *cfg.measurement); });
    }
    const bool twoLevel = cfg.system && cfg.system->dim() == 2;
    if ((cfg.kind == ExperimentKind::Monitor || cfg.kind == ExperimentKind::ZenoScan ||
         cfg.kind == ExperimentKind::SoftMeter || cfg.kind == ExperimentKind::ConsistencySuite) &&
        !twoLevel) {
        throw ConfigError("/system", "this experiment needs a two-level system");
    }
    if ((cfg.kind == ExperimentKind::Monitor || cfg.kind == ExperimentKind::ZenoScan ||
         cfg.kind == ExperimentKind::SoftMeter) &&
        !cfg.system->hasCoupling()) {
        throw ConfigError("/system/v0", "this experiment needs a nonzero drive");
    }
    if (cfg.kind == ExperimentKind::ZenoScan && cfg.zenoScan.kappas.empty()) {
        throw ConfigError("/zenoScan/kappas", "at least one kappa required");
    }
    if (cfg.kind == ExperimentKind::Superselection) {
        const QuantumState s = cfg.initial ? *cfg.initial : QuantumState::twoLevel(0.5);
        if (s.dim() != 2) {
            throw ConfigError("/initial", "superselection needs a two-level state");
        }
    }
    if (cfg.kind == ExperimentKind::SoftMeter) {
        const auto& c = cfg.softMeter;
        const double dt = c.stepInterval.value_or(cfg.meas().dt());
        detail::atPath("/softMeter", [&] {
            if (c.pPositive) {
                return SoftMeter::make(*c.pPositive, dt);
            }
            return SoftMeter::forKappa(c.kappaEff.value_or(cfg.meas().kappa()), dt,
                                       cfg.sys().deltaE(), c.pBar);
        });
    }
    return cfg;
}

inline ExperimentConfig loadConfig(const std::filesystem::path& path) {
    return parseConfig(readJsonFile(path));
}

struct RunOverrides {
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
};

struct ArrowResult {
    std::string name;
    double deviation = 0.0;
    /// Deviation in the arrow's own unit: standard errors for the ensemble
    /// arrows, state distance for the change of variables.
    double statistic = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

struct SuiteReport {
    std::vector<ArrowResult> arrows;
    bool pass = false;
};

struct SuiteOptions {
    std::size_t nSamples = 2000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::size_t changeOfVariablesSeeds = 8;
    double zTolerance = 3.0;
    double distanceTolerance = 0.05;
};

/// The three cross-formalism checks: weighted selective ensemble vs master
/// equation, stochastic ensemble vs master equation, and the stochastic
/// equation vs the selective one under the change of variables.
inline SuiteReport runConsistencySuite(const SystemSpec& sys, const MeasurementSpec& meas,
                                       const QuantumState& initial, SuiteOptions options = {}) {
    if (sys.dim() != 2) {
        throw PreconditionViolation("consistency suite needs a two-level system");
    }
    SuiteReport rep;
    const auto lindblad = propagateLindblad(sys, meas, DensityMatrix::fromState(initial));
    const double zeroFloor = 1e-8;

    {
        ArrowResult a;
        a.name = "selective-average = lindblad";
        SampleOptions so;
        so.keepReadouts = false;
        so.keepP2History = false;
        so.threads = options.threads;
        const auto ens = sampleReadouts(sys, meas, options.nSamples, deriveSeed(options.seed, 1), initial, so);
        const auto r = averageSelectiveToLindblad(sys, meas, ens, initial);
        a.deviation = r.maxDeviation;
        a.statistic = r.rho.maxZ(r.lindblad, zeroFloor);
        a.tolerance = options.zTolerance;
        a.pass = a.statistic <= a.tolerance;
        a.detail = "elementwise at T, " + std::to_string(options.nSamples) + " weighted readouts";
        rep.arrows.push_back(a);
    }
    {
        ArrowResult a;
        a.name = "sse-ensemble = lindblad";
        const std::size_t n = meas.steps();
        std::vector<std::size_t> idx{n / 4, n / 2, n};
        const auto avg = averageStochasticEnsemble(sys, meas, initial, options.nSamples,
                                                   deriveSeed(options.seed, 2), idx, options.threads);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const Matrix& ref = lindblad.series[idx[k]].elements();
            a.deviation = std::max(a.deviation, avg.rho[k].maxDeviation(ref));
            a.statistic = std::max(a.statistic, avg.rho[k].maxZ(ref, zeroFloor));
        }
        a.tolerance = options.zTolerance;
        a.pass = a.statistic <= a.tolerance;
        a.detail = "elementwise at T/4, T/2, T, " + std::to_string(options.nSamples) + " noise paths";
        rep.arrows.push_back(a);
    }
    {
        ArrowResult a;
        a.name = "sse = selective (change of variables)";
        const MeasurementSpec m = meas.withDt(std::min(meas.dt(), 1e-3));
        double coarse = 0.0;
        double fine = 0.0;
        const std::size_t seeds = options.changeOfVariablesSeeds;
        for (std::size_t s = 0; s < seeds; ++s) {
            const auto d = changeOfVariablesConvergence(sys, m, deriveSeed(options.seed, 100 + s), 2, initial);
            coarse += d[0] / static_cast<double>(seeds);
            fine += d[1] / static_cast<double>(seeds);
        }
        a.deviation = coarse;
        a.statistic = coarse;
        a.tolerance = options.distanceTolerance;
        a.pass = coarse < 1e-10 || (coarse < a.tolerance && fine < coarse);
        a.detail = "mean max distance " + formatDouble(coarse) + " at dt=" + formatDouble(m.dt()) +
                   ", " + formatDouble(fine) + " at dt/2";
        rep.arrows.push_back(a);
    }
    if (!sys.hasCoupling()) {
        // Pure dephasing has a closed form; the master equation must match it.
        ArrowResult a;
        a.name = "lindblad = dephasing closed form";
        const double rate = 0.5 * meas.kappa() * sys.deltaE() * sys.deltaE();
        const Complex r0 = lindblad.series.front()(0, 1);
        for (std::size_t i = 0; i < lindblad.series.size(); ++i) {
            const Complex exact = r0 * std::exp(-rate * meas.grid().time(i));
            a.deviation = std::max(a.deviation, std::abs(lindblad.series[i](0, 1) - exact));
        }
        a.statistic = a.deviation;
        a.tolerance = 1e-9;
        a.pass = a.deviation <= a.tolerance;
        a.detail = "off-diagonal against exp(-kappa dE^2 t / 2)";
        rep.arrows.push_back(a);
    }
    rep.pass = std::all_of(rep.arrows.begin(), rep.arrows.end(), [](const auto& x) { return x.pass; });
    return rep;
}

inline Json toJson(const SuiteReport& rep) {
    Json arrows = Json::array();
    for (const auto& a : rep.arrows) {
        arrows.push_back(Json{{"arrow", a.name},
                              {"deviation", a.deviation},
                              {"statistic", a.statistic},
                              {"tolerance", a.tolerance},
                              {"pass", a.pass},
                              {"detail", a.detail}});
    }
    return Json{{"pass", rep.pass}, {"arrows", arrows}};
}

struct RunOutcome {
    int exitCode = 0;
    std::filesystem::path directory;
    std::vector<std::pair<std::string, std::string>> summary;
};

namespace detail {

class Summary {
public:
    void add(const std::string& key, double v) { lines_.emplace_back(key, formatDouble(v)); }
    void add(const std::string& key, const std::string& v) { lines_.emplace_back(key, v); }
    void add(const std::string& key, const Estimate& e) {
        add(key, e.value);
        add(key + "_se", e.se);
    }
    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        for (const auto& [k, v] : lines_) {
            out << k << ": " << v << '\n';
        }
    }
    const auto& lines() const { return lines_; }

private:
    std::vector<std::pair<std::string, std::string>> lines_;
};

inline void writeDensity(const std::filesystem::path& path, const DensityDiagram& dd) {
    CsvWriter csv(path, {"t_lo", "t_hi", "y_lo", "y_hi", "mass"});
    for (std::size_t t = 0; t < dd.mass.size(); ++t) {
        for (std::size_t y = 0; y < dd.mass[t].size(); ++y) {
            csv.row(std::vector<double>{dd.timeEdges[t], dd.timeEdges[t + 1], dd.valueEdges[y],
                                        dd.valueEdges[y + 1], dd.mass[t][y]});
        }
    }
}

inline Json monitorJson(const MonitorReport& r) {
    return Json{{"regime", to_string(r.regime.label)},
                {"tlrOverTr", r.regime.tlrOverTr},
                {"tOverTr", r.regime.tOverTr},
                {"pTransition", r.pTransition.value},
                {"pTransitionSe", r.pTransition.se},
                {"fidelity", r.fidelity.value},
                {"fidelitySe", r.fidelity.se},
                {"ambiguousFraction", r.ambiguousFraction.value},
                {"ambiguousFractionSe", r.ambiguousFraction.se},
                {"transitionClass", r.transitionClass.value},
                {"noTransitionClass", r.noTransitionClass.value},
                {"nEffective", r.nEffective},
                {"unambiguousEffective", r.unambiguousEffective},
                {"nSamples", r.nSamples}};
}

inline void addMonitor(Summary& s, const std::string& prefix, const MonitorReport& r) {
    s.add(prefix + "regime", to_string(r.regime.label));
    s.add(prefix + "p_transition", r.pTransition);
    s.add(prefix + "fidelity", r.fidelity);
    s.add(prefix + "ambiguous_fraction", r.ambiguousFraction);
    s.add(prefix + "n_effective", r.nEffective);
}

} // namespace detail

/// Runs one experiment and writes its artifacts into the output directory.
/// Returns exit code 0, or 4 when a consistency suite fails; errors propagate
/// as exceptions.
inline RunOutcome runExperiment(const ExperimentConfig& cfgIn, const RunOverrides& overrides = {}) {
    ExperimentConfig cfg = cfgIn;
    if (overrides.seed) {
        cfg.sampling.seed = *overrides.seed;
    }
    const unsigned threads = resolveThreads(overrides.threads.value_or(0));
    const std::optional<std::string> outPath = overrides.out ? overrides.out : cfg.output;
    if (!outPath) {
        throw ConfigError("/output", "no output directory (set output or pass --out)");
    }
    namespace fs = std::filesystem;
    RunOutcome outcome;
    outcome.directory = fs::path(*outPath);
    const fs::path dir = outcome.directory;
    fs::create_directories(dir);

    Json manifest{{"tool", "qcorridor"},
                  {"version", QCORRIDOR_VERSION},
                  {"experiment", to_string(cfg.kind)},
                  {"seed", cfg.sampling.seed},
                  {"config", cfg.raw}};
    writeJson(dir / "manifest.json", manifest);

    detail::Summary summary;
    summary.add("experiment", to_string(cfg.kind));
    summary.add("seed", std::to_string(cfg.sampling.seed));
    const std::uint64_t seed = cfg.sampling.seed;

    switch (cfg.kind) {
    case ExperimentKind::Selective: {
        const auto& sys = cfg.sys();
        const auto& meas = cfg.meas();
        const QuantumState init = cfg.initialState();
        ReadoutTrajectory readout;
        if (cfg.constantReadout) {
            readout = ReadoutTrajectory::constant(meas, *cfg.constantReadout);
        } else {
            Rng rng = makeRng(seed, 0);
            readout = drawWeightedReadout(sys, meas, init, rng, cfg.sampling.proposal).readout;
        }
        const auto run = propagateSelective(sys, meas, readout, init, {.storeStates = true});
        writeTrajectoryCsv(dir / "readout.csv", readout, "E");
        std::vector<std::string> header{"t"};
        for (std::size_t n = 1; n <= sys.dim(); ++n) {
            header.push_back("re_c" + std::to_string(n));
            header.push_back("im_c" + std::to_string(n));
        }
        header.push_back("log_norm2");
        header.push_back("p2");
        CsvWriter csv(dir / "history.csv", header);
        for (std::size_t i = 0; i < run.p2History.size(); ++i) {
            std::vector<double> row{meas.grid().time(i)};
            const double scale = std::exp(0.5 * run.logNormHistory[i]);
            for (std::size_t n = 0; n < sys.dim(); ++n) {
                const Complex c = (*run.stateHistory)[i].amplitude(n) * scale;
                row.push_back(c.real());
                row.push_back(c.imag());
            }
            row.push_back(run.logNormHistory[i]);
            row.push_back(run.p2History[i]);
            csv.row(row);
        }
        summary.add("log_probability_density", run.logNormSquared);
        summary.add("probability_density", run.normSquared);
        summary.add("final_p2", run.p2History.back());
        break;
    }
    case ExperimentKind::Sse: {
        const auto& sys = cfg.sys();
        const auto& meas = cfg.meas();
        const auto noise = sampleNoisePath(meas, seed);
        const auto run = propagateStochastic(sys, meas, noise, cfg.initialState());
        writeNoiseCsv(dir / "noise.csv", noise);
        CsvWriter csv(dir / "trajectory.csv", {"t", "c", "p1", "p2", "norm2_before_renorm"});
        for (std::size_t i = 0; i < run.p2History.size(); ++i) {
            csv.row(std::vector<double>{meas.grid().time(i), run.expectationHistory[i],
                                        1.0 - run.p2History[i], run.p2History[i],
                                        i == 0 ? 1.0 : run.preRenormNorm[i - 1]});
        }
        const auto cov = verifyChangeOfVariables(sys, meas, noise, cfg.initialState());
        summary.add("final_p2", run.p2History.back());
        summary.add("final_expectation", run.expectationHistory.back());
        summary.add("change_of_variables_max_distance", cov.maxDistance);
        break;
    }
    case ExperimentKind::Lindblad: {
        const auto& sys = cfg.sys();
        const auto& meas = cfg.meas();
        const auto res = propagateLindblad(sys, meas, DensityMatrix::fromState(cfg.initialState()));
        std::vector<std::string> header{"t"};
        const std::size_t d = sys.dim();
        for (std::size_t a = 0; a < d; ++a) {
            header.push_back("rho" + std::to_string(a + 1) + std::to_string(a + 1));
        }
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a + 1; b < d; ++b) {
                header.push_back("re_rho" + std::to_string(a + 1) + std::to_string(b + 1));
                header.push_back("im_rho" + std::to_string(a + 1) + std::to_string(b + 1));
            }
        }
        header.push_back("purity");
        CsvWriter csv(dir / "series.csv", header);
        for (std::size_t i = 0; i < res.series.size(); ++i) {
            const auto& r = res.series[i];
            std::vector<double> row{meas.grid().time(i)};
            for (std::size_t a = 0; a < d; ++a) {
                row.push_back(r(a, a).real());
            }
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = a + 1; b < d; ++b) {
                    row.push_back(r(a, b).real());
                    row.push_back(r(a, b).imag());
                }
            }
            row.push_back(r.purity());
            csv.row(row);
        }
        summary.add("final_rho22", res.final()(1, 1).real());
        summary.add("final_purity", res.final().purity());
        break;
    }
    case ExperimentKind::Monitor: {
        const auto& sys = cfg.sys();
        const auto& meas = cfg.meas();
        MonitorOptions mo;
        mo.smoothingWindow = cfg.sampling.smoothingWindow;
        mo.dwell = cfg.sampling.dwell;
        mo.seriesLength = cfg.sampling.seriesLength;
        mo.proposal = cfg.sampling.proposal;
        mo.threads = threads;
        mo.keepCurves = true;
        const auto rep = runMonitoringExperiment(sys, meas, cfg.sampling.nSamples, seed, mo);
        writeJson(dir / "report.json", detail::monitorJson(rep));
        CsvWriter csv(dir / "mean_p2.csv", {"t", "mean_p2"});
        for (std::size_t i = 0; i < rep.meanP2.size(); ++i) {
            csv.row(std::vector<double>{meas.grid().time(i), rep.meanP2[i]});
        }
        const TimeGrid strided{0.0, meas.dt() * static_cast<double>(rep.curveStride),
                               rep.p2Curves.front().size() - 1};
        const double lo = sys.levels()[0] - 1.5 * sys.deltaE();
        const double hi = sys.levels()[1] + 1.5 * sys.deltaE();
        detail::writeDensity(dir / "density_readout.csv",
                             densityDiagram(strided, rep.smoothedCurves, rep.weights, 50, 40, lo, hi));
        detail::writeDensity(dir / "density_p2.csv",
                             densityDiagram(strided, rep.p2Curves, rep.weights, 50, 20, 0.0, 1.0));
        detail::addMonitor(summary, "", rep);
        break;
    }
    case ExperimentKind::ZenoScan: {
        const auto& sys = cfg.sys();
        ZenoScanOptions zo;
        zo.monitor.threads = threads;
        zo.monitor.proposal = cfg.sampling.proposal;
        zo.monitor.smoothingWindow = cfg.sampling.smoothingWindow;
        zo.nProj = cfg.zenoScan.nProj;
        zo.projectiveRuns = cfg.zenoScan.projectiveRuns;
        const auto table = zenoScan(sys, cfg.meas(), cfg.zenoScan.kappas, cfg.sampling.nSamples, seed, zo);
        CsvWriter csv(dir / "zeno_scan.csv",
                      {"kappa", "dt", "tlr_over_tr", "p_transition", "se", "lindblad_p2", "n_effective"});
        for (const auto& r : table.rows) {
            csv.row(std::vector<double>{r.kappa, r.dt, r.tlrOverTr, r.pTransition.value,
                                        r.pTransition.se, r.lindbladP2, r.nEffective});
        }
        if (!table.projective.empty()) {
            CsvWriter pc(dir / "projective.csv", {"n_measurements", "survival", "se", "exact"});
            for (const auto& r : table.projective) {
                pc.row(std::vector<double>{static_cast<double>(r.nMeasurements), r.survival.value,
                                           r.survival.se, r.exact});
            }
        }
        summary.add("rows", std::to_string(table.rows.size()));
        summary.add("first_p_transition", table.rows.front().pTransition.value);
        summary.add("last_p_transition", table.rows.back().pTransition.value);
        summary.add("monotone_within_3se", monotoneNonIncreasing(table.rows) ? "yes" : "no");
        break;
    }
    case ExperimentKind::Diffusion: {
        const auto& c = cfg.diffusion;
        auto x = GridDensityMatrix::uniformGrid(c.points, c.lo, c.hi);
        const auto init = GridDensityMatrix::superposition(x, c.centers);
        DiffusionOptions o;
        o.mass = c.mass;
        for (std::size_t k = 1; k < c.snapshots; ++k) {
            o.snapshotTimes.push_back(c.duration * static_cast<double>(k) / static_cast<double>(c.snapshots));
        }
        const auto res = diffusionSeries(init, c.kappa, c.duration, o);
        const double a = c.centers.front();
        const double b = c.centers.back();
        CsvWriter dc(dir / "decay.csv", {"t", "abs_rho_sq"});
        std::vector<double> ts{0.0};
        std::vector<double> ms{std::abs(init.at(a, b))};
        dc.row(std::vector<double>{0.0, std::norm(init.at(a, b))});
        for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
            ts.push_back(res.snapshotTimes[k]);
            ms.push_back(std::abs(res.snapshots[k].at(a, b)));
            dc.row(std::vector<double>{res.snapshotTimes[k], std::norm(res.snapshots[k].at(a, b))});
        }
        ts.push_back(c.duration);
        ms.push_back(std::abs(res.final.at(a, b)));
        dc.row(std::vector<double>{c.duration, std::norm(res.final.at(a, b))});
        CsvWriter hc(dir / "rho_abs.csv", {"x", "x_prime", "abs_rho"});
        const auto& xs = res.final.positions();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t k = 0; k < xs.size(); ++k) {
                hc.row(std::vector<double>{xs[i], xs[k],
                                           std::abs(res.final.elements()(static_cast<Eigen::Index>(i),
                                                                         static_cast<Eigen::Index>(k)))});
            }
        }
        const double dx = xs[GridDensityMatrix::nearest(xs, a)] - xs[GridDensityMatrix::nearest(xs, b)];
        const double rate = 2.0 * fitDecayRate(ts, ms);
        summary.add("separation", std::abs(dx));
        summary.add("fitted_rate_abs_rho_sq", rate);
        summary.add("predicted_rate_abs_rho_sq", c.kappa * dx * dx);
        summary.add("final_trace", res.final.trace());
        break;
    }
    case ExperimentKind::Superselection: {
        const auto model = EnvironmentModel::make(cfg.superselection.nBits, cfg.superselection.couplingAngle);
        const QuantumState s = cfg.initial ? *cfg.initial : QuantumState::twoLevel(0.5);
        const auto rep = superselectionToy(model, s);
        const double predicted = std::pow(std::cos(model.couplingAngle()), static_cast<double>(model.nBits()));
        const auto& r = rep.reduced;
        writeJson(dir / "report.json",
                  Json{{"nBits", model.nBits()},
                       {"couplingAngle", model.couplingAngle()},
                       {"overlap", rep.overlap},
                       {"suppression", rep.suppression},
                       {"predicted", predicted},
                       {"explicitState", rep.explicitState},
                       {"rho", {{r(0, 0).real(), r(0, 1).real(), r(0, 1).imag()},
                                {r(1, 1).real()}}}});
        summary.add("suppression", rep.suppression);
        summary.add("predicted_cos_pow_n", predicted);
        break;
    }
    case ExperimentKind::SoftMeter: {
        const auto& sys = cfg.sys();
        const auto& meas = cfg.meas();
        const auto& c = cfg.softMeter;
        const double dt = c.stepInterval.value_or(meas.dt());
        const SoftMeter meter = c.pPositive ? SoftMeter::make(*c.pPositive, dt)
                                            : SoftMeter::forKappa(c.kappaEff.value_or(meas.kappa()), dt,
                                                                  sys.deltaE(), c.pBar);
        const std::size_t nRuns = c.nRuns.value_or(cfg.sampling.nSamples);
        const double kEff = meter.kappaEffective(sys.deltaE());

        Rng rng = makeRng(seed, 0);
        auto run = softObservationRun(sys, meter.instrument(), meas.duration(),
                                      QuantumState::basis(2, 0), rng);
        run.record.seriesLength = c.seriesLength;
        CsvWriter oc(dir / "outcomes.csv", {"step", "outcome", "p1", "p2"});
        for (std::size_t i = 0; i < run.record.outcomes.size(); ++i) {
            const double p2 = run.p2History[i + 1];
            oc.row(std::vector<double>{static_cast<double>(i), static_cast<double>(run.record.outcomes[i]),
                                       1.0 - p2, p2});
        }
        writeTrajectoryCsv(dir / "estimates.csv", reconstructReadout(run.record, meter, sys, c.seriesLength),
                           "E_hat");

        SoftMonitorOptions so;
        so.seriesLength = c.seriesLength;
        so.smoothingWindow = cfg.sampling.smoothingWindow;
        so.dwell = cfg.sampling.dwell;
        so.threads = threads;
        auto soft = runSoftMeterMonitoring(sys, meter, meas.duration(), nRuns, deriveSeed(seed, 1), so);
        soft.regime = classifyRegime(meas.withKappa(kEff), sys);
        Json report{{"pPositive", meter.pPositive()},
                    {"stepInterval", meter.stepInterval()},
                    {"kappaEff", kEff},
                    {"softMeter", detail::monitorJson(soft)}};
        summary.add("kappa_eff", kEff);
        detail::addMonitor(summary, "soft_", soft);
        if (c.compare) {
            MonitorOptions mo;
            mo.smoothingWindow = cfg.sampling.smoothingWindow;
            mo.dwell = cfg.sampling.dwell;
            mo.seriesLength = c.seriesLength;
            mo.threads = threads;
            const MeasurementSpec pm = MeasurementSpec::make(kEff, meas.duration(), dt, meas.deltaE());
            const auto phen = runMonitoringExperiment(sys, pm, nRuns, deriveSeed(seed, 2), mo);
            report["phenomenological"] = detail::monitorJson(phen);
            report["pTransitionZ"] = zScore(soft.pTransition, phen.pTransition);
            report["fidelityZ"] = zScore(soft.fidelity, phen.fidelity);
            detail::addMonitor(summary, "phenomenological_", phen);
            summary.add("p_transition_z", zScore(soft.pTransition, phen.pTransition));
            summary.add("fidelity_z", zScore(soft.fidelity, phen.fidelity));
        }
        writeJson(dir / "report.json", report);
        break;
    }
    case ExperimentKind::ConsistencySuite: {
        SuiteOptions so;
        so.nSamples = cfg.sampling.nSamples;
        so.seed = seed;
        so.threads = threads;
        const auto rep = runConsistencySuite(cfg.sys(), cfg.meas(), cfg.initialState(), so);
        writeJson(dir / "suite.json", toJson(rep));
        for (const auto& a : rep.arrows) {
            summary.add(a.name, std::string(a.pass ? "pass" : "FAIL") + " (" + formatDouble(a.statistic) +
                                    " vs " + formatDouble(a.tolerance) + ")");
        }
        summary.add("suite", rep.pass ? "pass" : "FAIL");
        outcome.exitCode = rep.pass ? 0 : 4;
        break;
    }
    }
    summary.write(dir / "summary.txt");
    outcome.summary = summary.lines();
    return outcome;
}

} // namespace qcorridor
