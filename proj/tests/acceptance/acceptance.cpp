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


// Acceptance checks. One line per criterion; exit status is the number of
// failed criteria (capped at 1).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qcorridor/experiment.hpp"
#include "qcorridor/qcorridor.hpp"

namespace qc = qcorridor;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budgetSeconds;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Shared setup: resonant drive v = 1/2, dE = 1, so T_R = 2 pi.
constexpr double kV = 0.5;
const double kTr = 2.0 * qc::kPi / (2.0 * kV);

double kappaFor(double tlrOverTr) { return 1.0 / (tlrOverTr * kTr); }

Outcome rabiBaseline() {
    const auto sys = qc::makePiPulseSystem(1.0, kV);
    const auto meas = qc::MeasurementSpec::make(0.0, kTr, 0.01);
    const auto rep = qc::runMonitoringExperiment(sys, meas, 100, 1);
    const double err = std::abs(rep.pTransition.value - 1.0);
    return {err <= 1e-6, fmt("pTransition=%.12f |1-p|=%.2e (tol 1e-6)", rep.pTransition.value, err)};
}

Outcome freeClosedForm() {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.0, {0.0, qc::kInf});
    const double kappa = 0.5;
    const auto meas = qc::MeasurementSpec::make(kappa, 5.0, 0.01);
    const auto init = qc::QuantumState::twoLevel(0.3);
    std::mt19937_64 rng(2026);
    std::normal_distribution<double> readoutValue(0.0, 2.0);
    double worst = 0.0;
    for (int r = 0; r < 100; ++r) {
        std::vector<double> e(meas.grid().points());
        for (double& x : e) {
            x = readoutValue(rng);
        }
        const qc::ReadoutTrajectory readout(meas.grid(), e);
        const auto got = qc::propagateSelective(sys, meas, readout, init).finalState;
        for (std::size_t n = 0; n < 2; ++n) {
            // C_n(T) = C_n(0) exp(-kappa sum_i (E_n - E_i)^2 dt)
            double s = 0.0;
            for (std::size_t i = 0; i < meas.steps(); ++i) {
                s += (sys.levels()[n] - e[i]) * (sys.levels()[n] - e[i]);
            }
            const double logExpect = std::log(std::abs(init.amplitude(n))) - kappa * s * meas.dt();
            const double logGot = std::log(std::abs(got.amplitude(n)));
            worst = std::max(worst, std::abs(std::expm1(logGot - logExpect)));
        }
    }
    return {worst <= 1e-8, fmt("max relative deviation %.2e over 100 readouts (tol 1e-8)", worst)};
}

Outcome levelResolution() {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.0, {0.0, qc::kInf});
    const double kappa = 1.0;
    const auto meas = qc::MeasurementSpec::make(kappa, 10.0 / kappa, 0.01);
    qc::SampleOptions o;
    o.keepP2History = false;
    const auto ens = qc::sampleReadouts(sys, meas, 4000, 3, qc::QuantumState::twoLevel(0.3), o);
    std::vector<double> near1;
    for (const auto& s : ens.samples) {
        near1.push_back(qc::timeAverage(s.readout) < sys.midpoint() ? 1.0 : 0.0);
    }
    const auto p = qc::weightedProportion(ens.weights(), near1);
    return {std::abs(p.value - 0.3) <= 0.03,
            fmt("near-E1 mass %.4f +- %.4f, ESS %.0f (target 0.30 +- 0.03)", p.value, p.se, ens.ess)};
}

Outcome zenoSuppression() {
    const auto sys = qc::makePiPulseSystem(1.0, kV);
    const double kappa = kappaFor(0.02);
    const auto meas = qc::MeasurementSpec::make(kappa, kTr, std::min(0.01, 1.0 / kappa / 20.0));
    const auto rep = qc::runMonitoringExperiment(sys, meas, 1000, 4);
    qc::ZenoScanOptions zo;
    const auto scan = qc::zenoScan(sys, qc::MeasurementSpec::make(0.0, kTr, 0.01),
                                   {0.0, 0.5, 1.0, 2.0, 5.0, kappa}, 500, 5, zo);
    const bool monotone = qc::monotoneNonIncreasing(scan.rows);
    const bool suppressed = rep.pTransition.value < 0.05;
    std::string rows;
    for (const auto& r : scan.rows) {
        rows += fmt(" %.3g:%.3f", r.kappa, r.pTransition.value);
    }
    return {suppressed && monotone,
            fmt("pTransition=%.4f +- %.4f at T_lr=0.02 T_R (need < 0.05); scan monotone=%s [kappa:p%s]",
                rep.pTransition.value, rep.pTransition.se, monotone ? "yes" : "no", rows.c_str())};
}

Outcome rabiTransparency() {
    const auto sys = qc::makeTwoLevelSystem(1.0, kV, {0.0, qc::kInf});
    const auto meas = qc::MeasurementSpec::make(kappaFor(50.0), 5.0 * kTr, 0.01);
    const auto rep = qc::runMonitoringExperiment(sys, meas, 1000, 6);
    const double dev = qc::supDeviationFromRabi(rep.meanP2, meas.grid(), kV);
    return {dev <= 0.05, fmt("sup |mean P2 - sin^2(vt)| = %.4f (tol 0.05)", dev)};
}

Outcome monitoringHeadline() {
    const auto sys = qc::makePiPulseSystem(1.0, kV);
    const std::vector<double> ratios{0.5, 1.0, 2.0};
    bool any = false;
    std::string best;
    double bestScore = qc::kInf;
    for (double tt : ratios) {
        for (double tl : ratios) {
            if (tt / tl > 2.0 || tl / tt > 2.0) {
                continue;
            }
            const double kappa = kappaFor(tl);
            const auto meas = qc::MeasurementSpec::make(kappa, tt * kTr, std::min(0.005, 1.0 / kappa / 20.0));
            const auto rep = qc::runMonitoringExperiment(sys, meas, 4000, 7);
            const bool ok = rep.nEffective >= 4000.0 * (1.0 - 1e-6) &&
                            std::abs(rep.fidelity.value - 0.8) <= 0.1 &&
                            std::abs(rep.pTransition.value - 0.5) <= 0.1;
            const double score = std::abs(rep.fidelity.value - 0.8) / 0.1 + std::abs(rep.pTransition.value - 0.5) / 0.1;
            if (ok || score < bestScore) {
                bestScore = score;
                best = fmt("T=%.1f T_R, T_lr=%.1f T_R: fidelity %.3f, pTransition %.3f, ambiguous %.3f, ESS %.0f",
                           tt, tl, rep.fidelity.value, rep.pTransition.value, rep.ambiguousFraction.value,
                           rep.nEffective);
            }
            any = any || ok;
            if (ok) {
                break;
            }
        }
        if (any) {
            break;
        }
    }
    return {any, (any ? "" : "no box point meets fidelity 0.80+-0.10 and pTransition 0.5+-0.1; closest ") + best};
}

Outcome crossFormalism() {
    const auto sys = qc::makePiPulseSystem(1.0, kV);
    const auto meas = qc::MeasurementSpec::make(kappaFor(1.0), kTr, 0.01);
    qc::SuiteOptions so;
    so.nSamples = 2000;
    so.seed = 8;
    const auto rep = qc::runConsistencySuite(sys, meas, qc::QuantumState::basis(2, 0), so);
    std::string d;
    for (const auto& a : rep.arrows) {
        d += fmt("[%s %s %.3g/%.3g] ", a.name.c_str(), a.pass ? "ok" : "FAIL", a.statistic, a.tolerance);
    }
    return {rep.pass, d};
}

Outcome generalizedUnitarity() {
    const auto sys = qc::makeTwoLevelSystem(1.0, kV, {0.0, qc::kInf});
    const double oneStep = qc::oneStepCompleteness(sys, 1.0, 1e-3);
    const auto mc = qc::checkGeneralizedUnitarity(sys, qc::MeasurementSpec::make(1.0, 2.0, 0.01), 2000, 9);
    return {oneStep <= 1e-10 && mc.maxZ <= 3.0,
            fmt("one-step %.2e (tol 1e-10); Monte Carlo max z %.2f (tol 3), deviation %.4f",
                oneStep, mc.maxZ, mc.maxDeviation)};
}

Outcome decoherenceLaw() {
    const double kappa = 0.5;
    const auto x = qc::GridDensityMatrix::uniformGrid(64, -8.0, 8.0);
    std::vector<double> seps;
    std::vector<double> logTd;
    std::vector<double> logSep;
    double worst = 0.0;
    for (double sep : {1.0, 2.0, 3.0, 4.0}) {
        const auto init = qc::GridDensityMatrix::superposition(x, {-sep / 2.0, sep / 2.0});
        const double duration = 2.0 / (kappa * sep * sep);
        qc::DiffusionOptions o;
        for (int k = 1; k < 20; ++k) {
            o.snapshotTimes.push_back(duration * k / 20.0);
        }
        const auto res = qc::diffusionSeries(init, kappa, duration, o);
        std::vector<double> t{0.0};
        std::vector<double> m2{std::norm(init.at(-sep / 2.0, sep / 2.0))};
        for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
            t.push_back(res.snapshotTimes[k]);
            m2.push_back(std::norm(res.snapshots[k].at(-sep / 2.0, sep / 2.0)));
        }
        const double rate = qc::fitDecayRate(t, m2);
        worst = std::max(worst, std::abs(rate / (kappa * sep * sep) - 1.0));
        logSep.push_back(std::log(sep));
        logTd.push_back(std::log(1.0 / rate));
    }
    const double power = -qc::linearFit(logSep, logTd).second;
    return {worst <= 0.01 && std::abs(power - 2.0) <= 0.1,
            fmt("|rho|^2 rate / kappa dx^2 within %.2e of 1 (tol 1e-2); t_d ~ dx^-%.4f (2.0 +- 0.1)",
                worst, power)};
}

Outcome projectiveChain() {
    const auto sys = qc::makeTwoLevelSystem(1.0, kV, {0.0, qc::kInf});
    bool ok = true;
    std::string d;
    double prev = -1.0;
    for (std::size_t n : {2u, 5u, 10u, 50u}) {
        const auto e = qc::projectiveSurvival(sys, n, 4000, 1000 + n);
        const double exact = qc::projectiveSurvivalExact(n);
        const double z = std::abs(e.value - exact) / e.se;
        ok = ok && z <= 3.0 && e.value > prev;
        prev = e.value;
        d += fmt("N=%zu %.4f vs %.4f (z %.2f) ", n, e.value, exact, z);
    }
    const bool trend = qc::projectiveSurvivalExact(10000) > 0.999;
    return {ok && trend, d + (trend ? "increasing toward 1" : "trend not confirmed")};
}

Outcome microscopicAgreement() {
    const auto sys = qc::makePiPulseSystem(1.0, kV);
    const double kappa = kappaFor(1.0);
    const double dt = 0.01;
    const std::size_t series = 20;
    const std::size_t n = 4000;
    const auto meter = qc::SoftMeter::forKappa(kappa, dt, sys.deltaE());
    qc::SoftMonitorOptions so;
    so.seriesLength = series;
    const auto soft = qc::runSoftMeterMonitoring(sys, meter, kTr, n, 11, so);
    qc::MonitorOptions mo;
    mo.seriesLength = series;
    const auto phen = qc::runMonitoringExperiment(
        sys, qc::MeasurementSpec::make(meter.kappaEffective(sys.deltaE()), kTr, dt), n, 12, mo);
    const double zp = qc::zScore(soft.pTransition, phen.pTransition);
    const double zf = qc::zScore(soft.fidelity, phen.fidelity);
    return {std::abs(zp) <= 3.0 && std::abs(zf) <= 3.0,
            fmt("pTransition %.4f vs %.4f (z %.2f); fidelity %.4f vs %.4f (z %.2f)", soft.pTransition.value,
                phen.pTransition.value, zp, soft.fidelity.value, phen.fidelity.value, zf)};
}

Outcome superselection() {
    double worst = 0.0;
    for (std::size_t n : {1u, 2u, 5u, 10u, 12u, 13u, 50u, 100u, 500u, 1000u}) {
        for (double theta : {0.01, 0.1, 0.5, 1.0, 1.5}) {
            const auto rep = qc::superselectionToy(qc::EnvironmentModel::make(n, theta),
                                                   qc::QuantumState::twoLevel(0.5));
            // Per-bit product, accumulated independently.
            double expect = 1.0;
            for (std::size_t k = 0; k < n; ++k) {
                expect *= std::cos(theta);
            }
            const double scale = std::max(expect, 1e-300);
            worst = std::max(worst, std::abs(rep.suppression - expect) / scale);
        }
    }
    return {worst <= 1e-12, fmt("max relative deviation from cos^n(theta) %.2e (tol 1e-12)", worst)};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "rabi-baseline", 1.0, rabiBaseline},
        {2, "free-closed-form", 5.0, freeClosedForm},
        {3, "level-resolution", 120.0, levelResolution},
        {4, "zeno-suppression", 120.0, zenoSuppression},
        {5, "rabi-transparency", 60.0, rabiTransparency},
        {6, "monitoring-headline", 600.0, monitoringHeadline},
        {7, "cross-formalism", 300.0, crossFormalism},
        {8, "generalized-unitarity", 60.0, generalizedUnitarity},
        {9, "decoherence-law", 60.0, decoherenceLaw},
        {10, "projective-chain", 60.0, projectiveChain},
        {11, "microscopic-agreement", 600.0, microscopicAgreement},
        {12, "superselection", 1.0, superselection},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool inTime = secs <= c.budgetSeconds;
        const bool pass = o.pass && inTime;
        failed += pass ? 0 : 1;
        std::printf("%s C%-2d %-22s %7.2fs/%.0fs%s  %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    c.budgetSeconds, inTime ? "" : " (over budget)", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
