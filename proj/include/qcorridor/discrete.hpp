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
#include <vector>

#include "qcorridor/core.hpp"
#include "qcorridor/monitor.hpp"
#include "qcorridor/nonselective.hpp"
#include "qcorridor/parallel.hpp"
#include "qcorridor/projective.hpp"
#include "qcorridor/random.hpp"
#include "qcorridor/selective.hpp"
#include "qcorridor/stats.hpp"

namespace qcorridor {

/// Diagonal two-outcome instrument, M+ = diag(sqrt p_n), M- = diag(sqrt(1-p_n)),
/// applied once per interval dt. p_n in [0,1], so the projective limit is allowed.
class TwoOutcomeInstrument {
public:
    static TwoOutcomeInstrument make(std::vector<double> pPositive, double stepInterval) {
        if (pPositive.size() < 2) {
            throw InvalidSpec("instrument needs one probability per level");
        }
        for (double p : pPositive) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw InvalidSpec("outcome probabilities must lie in [0,1]");
            }
        }
        if (!(stepInterval > 0.0) || !std::isfinite(stepInterval)) {
            throw InvalidSpec("step interval must be positive");
        }
        TwoOutcomeInstrument m;
        m.p_ = std::move(pPositive);
        m.dt_ = stepInterval;
        return m;
    }

    const std::vector<double>& pPositive() const noexcept { return p_; }
    double stepInterval() const noexcept { return dt_; }

    /// Branch overlap sqrt(p1 p2) + sqrt((1-p1)(1-p2)) of levels 1 and 2.
    double overlap() const {
        return std::sqrt(p_[0] * p_[1]) + std::sqrt((1.0 - p_[0]) * (1.0 - p_[1]));
    }

    /// kappa_eff such that the master-equation rate kappa_eff dE^2 / 2 equals
    /// the exact per-step dephasing -ln(overlap)/dt.
    double kappaEffective(double deltaE) const {
        return -2.0 * std::log(overlap()) / (dt_ * deltaE * deltaE);
    }

private:
    std::vector<double> p_;
    double dt_ = 1.0;
};

/// A weak instrument: p_n in (0,1) and |p1 - p2| < min(pbar, 1 - pbar).
class SoftMeter {
public:
    static SoftMeter make(std::vector<double> pPositive, double stepInterval) {
        for (double p : pPositive) {
            if (!(p > 0.0 && p < 1.0)) {
                throw InvalidSpec("soft meter probabilities must lie in (0,1)");
            }
        }
        auto inst = TwoOutcomeInstrument::make(std::move(pPositive), stepInterval);
        const auto& p = inst.pPositive();
        const double bar = 0.5 * (p[0] + p[1]);
        if (!(std::abs(p[0] - p[1]) < std::min(bar, 1.0 - bar))) {
            throw InvalidSpec("soft meter violates the weakness condition");
        }
        SoftMeter m;
        m.inst_ = std::move(inst);
        return m;
    }

    /// Two-level meter centered on pbar whose kappa_eff equals `kappa`.
    static SoftMeter forKappa(double kappa, double stepInterval, double deltaE = 1.0,
                              double pBar = 0.5) {
        if (!(kappa >= 0.0)) {
            throw InvalidSpec("kappa must be nonnegative");
        }
        const double target = std::exp(-0.5 * kappa * deltaE * deltaE * stepInterval);
        auto overlapFor = [&](double dp) {
            const double p1 = pBar - 0.5 * dp;
            const double p2 = pBar + 0.5 * dp;
            return std::sqrt(p1 * p2) + std::sqrt((1.0 - p1) * (1.0 - p2));
        };
        double lo = 0.0;
        double hi = std::min(pBar, 1.0 - pBar);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (overlapFor(mid) > target ? lo : hi) = mid;
        }
        const double dp = 0.5 * (lo + hi);
        return make({pBar - 0.5 * dp, pBar + 0.5 * dp}, stepInterval);
    }

    const TwoOutcomeInstrument& instrument() const noexcept { return inst_; }
    const std::vector<double>& pPositive() const noexcept { return inst_.pPositive(); }
    double stepInterval() const noexcept { return inst_.stepInterval(); }
    double overlap() const { return inst_.overlap(); }
    double kappaEffective(double deltaE) const { return inst_.kappaEffective(deltaE); }

private:
    TwoOutcomeInstrument inst_;
};

/// Outcome-averaged action of the instrument, sum over M rho M^dagger.
inline Matrix applyInstrumentChannel(const Matrix& rho, const TwoOutcomeInstrument& inst) {
    const auto& p = inst.pPositive();
    Matrix out = rho;
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
        for (Eigen::Index j = 0; j < rho.cols(); ++j) {
            const auto a = static_cast<std::size_t>(i);
            const auto b = static_cast<std::size_t>(j);
            out(i, j) *= std::sqrt(p[a] * p[b]) + std::sqrt((1.0 - p[a]) * (1.0 - p[b]));
        }
    }
    return out;
}

struct ObservationRecord {
    /// 1 for a positive outcome, 0 for a negative one.
    std::vector<std::uint8_t> outcomes;
    std::size_t seriesLength = 0;
    ReadoutTrajectory estimates;
};

struct SoftRunResult {
    ObservationRecord record;
    QuantumState finalState;
    /// P_2 after each step, starting with the initial value.
    std::vector<double> p2History;
};

/// Repeated soft observation: per step the instrument acts on the current
/// state (outcome sampled with P(+) = sum p_n |C_n|^2), then the drive acts for
/// one interval.
inline SoftRunResult softObservationRun(const SystemSpec& sys, const TwoOutcomeInstrument& inst,
                                        double duration, const QuantumState& initial, Rng& rng,
                                        bool keepP2 = true) {
    if (inst.pPositive().size() != sys.dim() || initial.dim() != sys.dim()) {
        throw ShapeError("instrument, state and system dimensions differ");
    }
    const double dt = inst.stepInterval();
    const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
    const Matrix u = unitaryPropagator(sys.coupling(), dt);
    const auto& p = inst.pPositive();
    RealVector sqrtPlus(static_cast<Eigen::Index>(p.size()));
    RealVector sqrtMinus(static_cast<Eigen::Index>(p.size()));
    for (std::size_t n = 0; n < p.size(); ++n) {
        sqrtPlus[static_cast<Eigen::Index>(n)] = std::sqrt(p[n]);
        sqrtMinus[static_cast<Eigen::Index>(n)] = std::sqrt(1.0 - p[n]);
    }

    SoftRunResult out;
    out.record.outcomes.reserve(steps);
    if (keepP2) {
        out.p2History.reserve(steps + 1);
    }
    Vector psi = initial.amplitudes().normalized();
    Vector next(psi.size());
    if (keepP2) {
        out.p2History.push_back(std::norm(psi[1]));
    }
    for (std::size_t i = 0; i < steps; ++i) {
        double pPlus = 0.0;
        for (Eigen::Index n = 0; n < psi.size(); ++n) {
            pPlus += p[static_cast<std::size_t>(n)] * std::norm(psi[n]);
        }
        const bool positive = uniform01(rng) < pPlus;
        out.record.outcomes.push_back(positive ? 1 : 0);
        psi = psi.cwiseProduct((positive ? sqrtPlus : sqrtMinus).cast<Complex>());
        const double n2 = psi.squaredNorm();
        if (!(n2 > 0.0)) {
            throw NumericFailure("discrete-realization", i, "outcome of zero probability");
        }
        psi /= std::sqrt(n2);
        const double driven = sys.drivenTime(static_cast<double>(i) * dt, dt);
        if (driven == dt) {
            next.noalias() = u * psi;
            psi.swap(next);
        } else if (driven > 0.0) {
            next.noalias() = unitaryPropagator(sys.coupling(), driven) * psi;
            psi.swap(next);
        }
        if (keepP2) {
            out.p2History.push_back(std::norm(psi[1]));
        }
    }
    out.finalState = QuantumState::fromAmplitudes(psi);
    return out;
}

inline SoftRunResult softObservationRun(const SystemSpec& sys, const SoftMeter& meter,
                                        double duration, std::uint64_t seed,
                                        const QuantumState& initial) {
    Rng rng = makeRng(seed);
    return softObservationRun(sys, meter.instrument(), duration, initial, rng);
}

/// E-hat per N-series: E1 + (n - p1)/(p2 - p1) dE with n = N+/N, clamped to
/// [E1 - dE, E2 + dE]. Points sit at the left edge of each series.
inline ReadoutTrajectory reconstructReadout(const ObservationRecord& record,
                                            const TwoOutcomeInstrument& inst, const SystemSpec& sys,
                                            std::size_t seriesLength) {
    const auto& p = inst.pPositive();
    if (p[0] == p[1]) {
        throw NonInvertibleMeter("p1 = p2 carries no information about the level");
    }
    if (seriesLength < 1 || record.outcomes.size() < seriesLength) {
        throw PreconditionViolation("record is shorter than one series");
    }
    const double e1 = sys.levels()[0];
    const double e2 = sys.levels()[1];
    const double de = e2 - e1;
    const std::size_t k = record.outcomes.size() / seriesLength;
    std::vector<double> est(k);
    for (std::size_t s = 0; s < k; ++s) {
        std::size_t plus = 0;
        for (std::size_t j = 0; j < seriesLength; ++j) {
            plus += record.outcomes[s * seriesLength + j];
        }
        const double n = static_cast<double>(plus) / static_cast<double>(seriesLength);
        est[s] = std::clamp(e1 + (n - p[0]) / (p[1] - p[0]) * de, e1 - de, e2 + de);
    }
    const double tau = inst.stepInterval() * static_cast<double>(seriesLength);
    return ReadoutTrajectory(TimeGrid{0.0, tau, k - 1}, std::move(est));
}

inline ReadoutTrajectory reconstructReadout(const ObservationRecord& record, const SoftMeter& meter,
                                            const SystemSpec& sys, std::size_t seriesLength) {
    return reconstructReadout(record, meter.instrument(), sys, seriesLength);
}

struct KappaMatchReport {
    double kappaEffective = 0.0;
    /// kappa_eff dE^2 / 2.
    double predictedRate = 0.0;
    double measuredRate = 0.0;
    double relativeDeviation = 0.0;
};

/// Ensemble-averaged off-diagonal decay of the soft-observation model with
/// V = 0 against the master-equation rate for kappa_eff.
inline KappaMatchReport matchEffectiveKappa(const SoftMeter& meter, const SystemSpec& sys,
                                            std::size_t nRuns, std::uint64_t seed,
                                            unsigned threads = 0) {
    if (meter.overlap() < 0.5) {
        throw OutsideWeakRegime("per-step branch overlap below 0.5");
    }
    KappaMatchReport rep;
    rep.kappaEffective = meter.kappaEffective(sys.deltaE());
    rep.predictedRate = 0.5 * rep.kappaEffective * sys.deltaE() * sys.deltaE();
    if (rep.predictedRate == 0.0) {
        return rep;
    }
    const double dt = meter.stepInterval();
    const auto steps = static_cast<std::size_t>(std::ceil(1.5 / rep.predictedRate / dt));
    const std::size_t samplesAt = std::max<std::size_t>(1, steps / 20);
    const std::size_t nPoints = steps / samplesAt + 1;
    std::vector<std::vector<Complex>> coherence(nRuns, std::vector<Complex>(nPoints));
    const QuantumState plus = QuantumState::twoLevel(0.5);
    const auto& p = meter.pPositive();
    parallelFor(nRuns, resolveThreads(threads), [&](std::size_t r) {
        Rng rng = makeRng(seed, r);
        Complex c1 = plus.amplitude(0);
        Complex c2 = plus.amplitude(1);
        for (std::size_t i = 0; i <= steps; ++i) {
            if (i % samplesAt == 0) {
                coherence[r][i / samplesAt] = c1 * std::conj(c2);
            }
            if (i == steps) {
                break;
            }
            const double pPlus = p[0] * std::norm(c1) + p[1] * std::norm(c2);
            const bool positive = uniform01(rng) < pPlus;
            c1 *= std::sqrt(positive ? p[0] : 1.0 - p[0]);
            c2 *= std::sqrt(positive ? p[1] : 1.0 - p[1]);
            const double n = std::sqrt(std::norm(c1) + std::norm(c2));
            c1 /= n;
            c2 /= n;
        }
    });
    std::vector<double> times;
    std::vector<double> mags;
    for (std::size_t k = 0; k < nPoints; ++k) {
        Complex mean = 0.0;
        for (std::size_t r = 0; r < nRuns; ++r) {
            mean += coherence[r][k];
        }
        mean /= static_cast<double>(nRuns);
        times.push_back(static_cast<double>(k * samplesAt) * dt);
        mags.push_back(std::abs(mean));
    }
    rep.measuredRate = fitDecayRate(times, mags);
    rep.relativeDeviation = std::abs(rep.measuredRate - rep.predictedRate) / rep.predictedRate;
    return rep;
}

struct SoftMonitorOptions {
    std::size_t seriesLength = 50;
    /// Defaults to 0.4 T_R.
    std::optional<double> smoothingWindow;
    /// Defaults to 0.2 T_R.
    std::optional<double> dwell;
    unsigned threads = 0;
};

/// Monitoring statistics from the soft-observation model: the N-series
/// estimates are smoothed and classified with the same rule as the continuous
/// readouts. Runs are Born-sampled, so every run has equal weight.
inline MonitorReport runSoftMeterMonitoring(const SystemSpec& sys, const SoftMeter& meter,
                                            double duration, std::size_t nRuns, std::uint64_t seed,
                                            SoftMonitorOptions options = {}) {
    if (sys.dim() != 2 || !sys.hasCoupling()) {
        throw PreconditionViolation("monitoring needs a driven two-level system");
    }
    const double tr = sys.rabiPeriod();
    const double tau = meter.stepInterval() * static_cast<double>(options.seriesLength);
    ClassificationRule rule;
    rule.lower = sys.levels()[0];
    rule.upper = sys.levels()[1];
    rule.band = 0.25 * sys.deltaE();
    rule.dwellPoints = static_cast<std::size_t>(std::llround(options.dwell.value_or(0.2 * tr) / tau));
    const double window = options.smoothingWindow.value_or(0.4 * tr);
    const QuantumState ground = QuantumState::basis(2, 0);

    std::vector<double> p2(nRuns);
    std::vector<ReadoutClass> cls(nRuns);
    parallelFor(nRuns, resolveThreads(options.threads), [&](std::size_t r) {
        Rng rng = makeRng(seed, r);
        auto run = softObservationRun(sys, meter.instrument(), duration, ground, rng, false);
        run.record.seriesLength = options.seriesLength;
        const auto est = reconstructReadout(run.record, meter, sys, options.seriesLength);
        const auto smooth = smoothReadout(est, window);
        p2[r] = std::norm(run.finalState.amplitude(1));
        cls[r] = classifyReadout(smooth.values(), rule);
    });
    MonitorReport rep = detail::summarizeMonitor(std::vector<double>(nRuns, 1.0 / static_cast<double>(nRuns)), p2, cls);
    rep.nSamples = nRuns;
    rep.totalMass = Estimate{1.0, 0.0};
    return rep;
}

} // namespace qcorridor
