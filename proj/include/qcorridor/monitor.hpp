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
#include <optional>
#include <string>
#include <vector>

#include "qcorridor/core.hpp"
#include "qcorridor/ensemble.hpp"
#include "qcorridor/nonselective.hpp"
#include "qcorridor/parallel.hpp"
#include "qcorridor/projective.hpp"
#include "qcorridor/stats.hpp"

namespace qcorridor {

enum class Regime { Zeno, Rabi, Intermediate, Unclassified };

inline const char* to_string(Regime r) {
    switch (r) {
    case Regime::Zeno: return "zeno";
    case Regime::Rabi: return "rabi";
    case Regime::Intermediate: return "intermediate";
    case Regime::Unclassified: return "unclassified";
    }
    return "unclassified";
}

struct RegimeLabel {
    Regime label = Regime::Unclassified;
    double tlrOverTr = 0.0;
    double tOverTr = 0.0;
};

/// "a << b" means a/b <= 0.1; "a ~ b" means a/b in [0.5, 2].
inline RegimeLabel classifyRegime(const MeasurementSpec& meas, const SystemSpec& sys) {
    if (sys.dim() != 2) {
        throw PreconditionViolation("regime classification needs a two-level system");
    }
    const double tlr = meas.levelResolutionTime();
    const double tr = sys.rabiPeriod();
    const double t = meas.duration();
    RegimeLabel out;
    out.tlrOverTr = tlr / tr;
    out.tOverTr = t / tr;
    if (!std::isfinite(tlr) && !std::isfinite(tr)) {
        return out;
    }
    constexpr double slack = 1.0 + 1e-9;
    auto much = [&](double a, double b) { return a <= 0.1 * b * slack; };
    auto near = [&](double a, double b) {
        return std::isfinite(a) && std::isfinite(b) && a <= 2.0 * b * slack && b <= 2.0 * a * slack;
    };
    if (std::isfinite(tr) && much(tlr, tr) && much(tr, t)) {
        out.label = Regime::Zeno;
    } else if (std::isfinite(tr) && much(tr, t) && much(t, tlr)) {
        out.label = Regime::Rabi;
    } else if (near(t, tr) && near(tr, tlr) && near(t, tlr)) {
        out.label = Regime::Intermediate;
    }
    return out;
}

enum class ReadoutClass { Transition, NoTransition, Ambiguous };

struct ClassificationRule {
    double lower = -0.5;
    double upper = 0.5;
    /// Half-width of each level band.
    double band = 0.25;
    /// Consecutive points that must lie in the upper band.
    std::size_t dwellPoints = 1;
};

/// Transition: the curve visits the lower band, later stays in the upper band
/// for the dwell and never re-enters the lower band. No transition: the final
/// dwell window lies in the lower band. Anything else is ambiguous.
inline ReadoutClass classifyReadout(const std::vector<double>& s, const ClassificationRule& r) {
    auto inLower = [&](double x) { return std::abs(x - r.lower) <= r.band; };
    auto inUpper = [&](double x) { return std::abs(x - r.upper) <= r.band; };
    const std::size_t need = r.dwellPoints + 1;

    std::optional<std::size_t> lastLower;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (inLower(s[i])) {
            lastLower = i;
        }
    }
    if (lastLower) {
        std::size_t run = 0;
        for (std::size_t i = *lastLower + 1; i < s.size(); ++i) {
            run = inUpper(s[i]) ? run + 1 : 0;
            if (run >= need) {
                return ReadoutClass::Transition;
            }
        }
    }
    if (s.size() >= need &&
        std::all_of(s.end() - static_cast<std::ptrdiff_t>(need), s.end(), inLower)) {
        return ReadoutClass::NoTransition;
    }
    return ReadoutClass::Ambiguous;
}

/// Mean of the readout over consecutive series of N steps, clamped to
/// [E1 - dE, E2 + dE]. Points sit at the left edge of each series.
inline ReadoutTrajectory binReadout(const ReadoutTrajectory& readout, std::size_t seriesLength,
                                    double lower, double upper) {
    const TimeGrid g = readout.grid();
    if (seriesLength < 1 || g.steps < seriesLength) {
        throw PreconditionViolation("readout is shorter than one series");
    }
    const double de = upper - lower;
    const std::size_t k = g.steps / seriesLength;
    std::vector<double> est(k, 0.0);
    for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t j = 0; j < seriesLength; ++j) {
            est[s] += readout[s * seriesLength + j];
        }
        est[s] = std::clamp(est[s] / static_cast<double>(seriesLength), lower - de, upper + de);
    }
    return ReadoutTrajectory(TimeGrid{g.t0, g.dt * static_cast<double>(seriesLength), k - 1},
                             std::move(est));
}

struct MonitorOptions {
    /// Defaults to 0.4 T_R.
    std::optional<double> smoothingWindow;
    /// Defaults to 0.2 T_R.
    std::optional<double> dwell;
    Proposal proposal = Proposal::Guided;
    unsigned threads = 0;
    /// Keep smoothed readouts (strided) for density diagrams.
    bool keepCurves = false;
    std::size_t maxCurvePoints = 400;
    /// When set, readouts are first averaged over series of this many steps
    /// and clamped, like the soft-meter estimates.
    std::optional<std::size_t> seriesLength;
};

struct MonitorReport {
    RegimeLabel regime;
    /// Weighted mean of P_2(T).
    Estimate pTransition;
    /// Fraction of unambiguous readouts whose class matches P_2(T) > 1/2.
    Estimate fidelity;
    Estimate ambiguousFraction;
    Estimate transitionClass;
    Estimate noTransitionClass;
    /// Weighted fraction with P_2(T) > 1/2.
    Estimate verdictTransition;
    double nEffective = 0.0;
    std::size_t nSamples = 0;
    double unambiguousEffective = 0.0;
    Estimate totalMass;
    /// Weighted mean of P_2(t) on the full grid.
    std::vector<double> meanP2;
    /// Strided curve data for density diagrams.
    std::size_t curveStride = 1;
    std::vector<std::vector<double>> smoothedCurves;
    std::vector<std::vector<double>> p2Curves;
    std::vector<double> weights;
};

namespace detail {

/// Weighted headline statistics from final populations and readout classes.
inline MonitorReport summarizeMonitor(const std::vector<double>& w, const std::vector<double>& p2,
                                      const std::vector<ReadoutClass>& cls) {
    const std::size_t n = w.size();
    std::vector<double> verdict(n), amb(n), up(n), no(n);
    std::vector<double> uw;
    std::vector<double> match;
    for (std::size_t i = 0; i < n; ++i) {
        verdict[i] = p2[i] > 0.5 ? 1.0 : 0.0;
        amb[i] = cls[i] == ReadoutClass::Ambiguous ? 1.0 : 0.0;
        up[i] = cls[i] == ReadoutClass::Transition ? 1.0 : 0.0;
        no[i] = cls[i] == ReadoutClass::NoTransition ? 1.0 : 0.0;
        if (cls[i] != ReadoutClass::Ambiguous) {
            uw.push_back(w[i]);
            match.push_back((cls[i] == ReadoutClass::Transition) == (p2[i] > 0.5) ? 1.0 : 0.0);
        }
    }
    MonitorReport rep;
    rep.nEffective = effectiveSampleSize(w);
    rep.pTransition = weightedMean(w, p2);
    rep.verdictTransition = weightedProportion(w, verdict);
    rep.ambiguousFraction = weightedProportion(w, amb);
    rep.transitionClass = weightedProportion(w, up);
    rep.noTransitionClass = weightedProportion(w, no);
    if (!uw.empty()) {
        double total = 0.0;
        for (double x : uw) {
            total += x;
        }
        for (double& x : uw) {
            x /= total;
        }
        rep.fidelity = weightedProportion(uw, match);
        rep.unambiguousEffective = effectiveSampleSize(uw);
    } else {
        rep.fidelity = Estimate{0.0, 0.5};
    }
    return rep;
}

} // namespace detail

struct MonitorSample {
    double logWeight = 0.0;
    double p2Final = 0.0;
    ReadoutClass cls = ReadoutClass::Ambiguous;
    std::vector<double> p2;
    std::vector<double> smoothed;
};

inline MonitorReport runMonitoringExperiment(const SystemSpec& sys, const MeasurementSpec& meas,
                                             std::size_t nSamples, std::uint64_t seed,
                                             MonitorOptions options = {}) {
    if (sys.dim() != 2 || !sys.hasCoupling()) {
        throw PreconditionViolation("monitoring needs a driven two-level system");
    }
    if (nSamples < 1) {
        throw PreconditionViolation("nSamples must be at least 1");
    }
    checkResolution(sys, meas);
    const double tr = sys.rabiPeriod();
    const double window = options.smoothingWindow.value_or(0.4 * tr);
    const double dwell = options.dwell.value_or(0.2 * tr);
    const TimeGrid grid = meas.grid();
    ClassificationRule rule;
    rule.lower = sys.levels()[0];
    rule.upper = sys.levels()[1];
    rule.band = 0.25 * sys.deltaE();
    const double coarseDt = grid.dt * static_cast<double>(options.seriesLength.value_or(1));
    rule.dwellPoints = static_cast<std::size_t>(std::llround(dwell / coarseDt));
    const std::size_t stride = std::max<std::size_t>(
        1, (grid.points() + options.maxCurvePoints - 1) / options.maxCurvePoints);
    const QuantumState initial = QuantumState::basis(2, 0);

    std::vector<MonitorSample> samples(nSamples);
    parallelFor(nSamples, resolveThreads(options.threads), [&](std::size_t i) {
        Rng rng = makeRng(seed, i);
        auto w = drawWeightedReadout(sys, meas, initial, rng, options.proposal, true, true);
        const auto smooth = options.seriesLength
                                ? smoothReadout(binReadout(w.readout, *options.seriesLength,
                                                           rule.lower, rule.upper),
                                                window)
                                : smoothReadout(w.readout, window);
        MonitorSample& out = samples[i];
        out.logWeight = w.logImportanceWeight;
        out.p2Final = w.p2History.back();
        out.cls = classifyReadout(smooth.values(), rule);
        out.p2 = std::move(w.p2History);
        if (options.keepCurves) {
            for (std::size_t k = 0; k < grid.points(); k += stride) {
                out.smoothed.push_back(smooth[std::min(k / options.seriesLength.value_or(1),
                                                       smooth.size() - 1)]);
            }
        }
    });

    std::vector<double> logw(nSamples);
    for (std::size_t i = 0; i < nSamples; ++i) {
        logw[i] = samples[i].logWeight;
    }
    const auto w = normalizeLogWeights(logw);
    MonitorReport rep;
    rep.regime = classifyRegime(meas, sys);
    rep.nSamples = nSamples;
    rep.nEffective = effectiveSampleSize(w);
    if (nSamples > 1 && rep.nEffective < 2.0) {
        throw InvalidMeasure("degenerate ensemble (effective sample size below 2)");
    }
    std::vector<double> raw(nSamples);
    for (std::size_t i = 0; i < nSamples; ++i) {
        raw[i] = std::exp(logw[i]);
    }
    rep.totalMass = sampleMean(raw);

    std::vector<double> p2(nSamples);
    std::vector<ReadoutClass> cls(nSamples);
    for (std::size_t i = 0; i < nSamples; ++i) {
        p2[i] = samples[i].p2Final;
        cls[i] = samples[i].cls;
    }
    const MonitorReport summary = detail::summarizeMonitor(w, p2, cls);
    rep.pTransition = summary.pTransition;
    rep.verdictTransition = summary.verdictTransition;
    rep.ambiguousFraction = summary.ambiguousFraction;
    rep.transitionClass = summary.transitionClass;
    rep.noTransitionClass = summary.noTransitionClass;
    rep.fidelity = summary.fidelity;
    rep.unambiguousEffective = summary.unambiguousEffective;

    rep.meanP2.assign(grid.points(), 0.0);
    for (std::size_t i = 0; i < nSamples; ++i) {
        for (std::size_t k = 0; k < grid.points(); ++k) {
            rep.meanP2[k] += w[i] * samples[i].p2[k];
        }
    }
    if (options.keepCurves) {
        rep.curveStride = stride;
        rep.weights = w;
        for (auto& s : samples) {
            std::vector<double> p2s;
            for (std::size_t k = 0; k < grid.points(); k += stride) {
                p2s.push_back(s.p2[k]);
            }
            rep.p2Curves.push_back(std::move(p2s));
            rep.smoothedCurves.push_back(std::move(s.smoothed));
        }
    }
    return rep;
}

/// sup_t |curve(t) - sin^2(v t)| with the drive on throughout.
inline double supDeviationFromRabi(const std::vector<double>& curve, const TimeGrid& grid, double v) {
    double m = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double s = std::sin(v * grid.time(i));
        m = std::max(m, std::abs(curve[i] - s * s));
    }
    return m;
}

/// Oscillation period of a P_2(t) curve starting at zero: twice the time of
/// its first maximum, refined by a parabola through the peak samples.
inline double fitOscillationPeriod(const std::vector<double>& curve, const TimeGrid& grid) {
    for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
        if (curve[i] >= curve[i - 1] && curve[i] > curve[i + 1]) {
            const double a = curve[i - 1];
            const double b = curve[i];
            const double c = curve[i + 1];
            const double denom = a - 2.0 * b + c;
            const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
            return 2.0 * (grid.time(i) + shift * grid.dt);
        }
    }
    throw PreconditionViolation("curve has no interior maximum");
}

struct ZenoRow {
    double kappa = 0.0;
    double dt = 0.0;
    double tlrOverTr = 0.0;
    Estimate pTransition;
    /// rho_22(T) of the master equation on the same grid.
    double lindbladP2 = 0.0;
    double nEffective = 0.0;
};

struct ProjectiveRow {
    std::size_t nMeasurements = 0;
    Estimate survival;
    double exact = 0.0;
};

struct ZenoScanTable {
    std::vector<ZenoRow> rows;
    std::vector<ProjectiveRow> projective;
};

/// Each row's step is min(dt, T_lr/20) so the guard holds for every kappa.
inline MeasurementSpec scanMeasurement(const MeasurementSpec& meas, double kappa) {
    double dt = meas.dt();
    if (kappa > 0.0) {
        dt = std::min(dt, 1.0 / (kappa * meas.deltaE() * meas.deltaE()) / 20.0);
    }
    return MeasurementSpec::make(kappa, meas.duration(), dt, meas.deltaE());
}

/// Adjacent rows satisfy p[k+1] <= p[k] + z * combined SE.
inline bool monotoneNonIncreasing(const std::vector<ZenoRow>& rows, double z = 3.0) {
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double se = std::hypot(rows[k].pTransition.se, rows[k - 1].pTransition.se);
        if (rows[k].pTransition.value > rows[k - 1].pTransition.value + z * se + 1e-12) {
            return false;
        }
    }
    return true;
}

struct ZenoScanOptions {
    MonitorOptions monitor;
    /// Chain lengths for the projective rows; none when empty.
    std::vector<std::size_t> nProj;
    std::size_t projectiveRuns = 4000;
};

/// pTransition of the pi-pulse for each kappa, plus optional rows for chains
/// of instantaneous projective measurements.
inline ZenoScanTable zenoScan(const SystemSpec& sys, const MeasurementSpec& meas,
                              const std::vector<double>& kappas, std::size_t nSamples,
                              std::uint64_t seed, ZenoScanOptions options = {}) {
    ZenoScanTable table;
    const QuantumState ground = QuantumState::basis(2, 0);
    for (std::size_t k = 0; k < kappas.size(); ++k) {
        const MeasurementSpec m = scanMeasurement(meas, kappas[k]);
        const auto rep = runMonitoringExperiment(sys, m, nSamples, deriveSeed(seed, k), options.monitor);
        ZenoRow row;
        row.kappa = kappas[k];
        row.dt = m.dt();
        row.tlrOverTr = m.levelResolutionTime() / sys.rabiPeriod();
        row.pTransition = rep.pTransition;
        row.nEffective = rep.nEffective;
        row.lindbladP2 =
            propagateLindblad(sys, m, DensityMatrix::fromState(ground)).final()(1, 1).real();
        table.rows.push_back(row);
    }
    for (std::size_t k = 0; k < options.nProj.size(); ++k) {
        ProjectiveRow row;
        row.nMeasurements = options.nProj[k];
        row.survival = projectiveSurvival(sys, row.nMeasurements, options.projectiveRuns,
                                          deriveSeed(seed, 1000 + k), options.monitor.threads);
        row.exact = projectiveSurvivalExact(row.nMeasurements);
        table.projective.push_back(row);
    }
    return table;
}

} // namespace qcorridor
