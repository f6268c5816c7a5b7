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
#include <string>
#include <vector>

#include "qcorridor/core.hpp"
#include "qcorridor/parallel.hpp"
#include "qcorridor/random.hpp"
#include "qcorridor/selective.hpp"
#include "qcorridor/stats.hpp"

namespace qcorridor {

/// Readout measure: the product over steps of sqrt(2 kappa dt / pi) dE(t_i).
struct InstrumentMeasure {
    double kappa = 0.0;
    double dt = 0.0;

    double perStepNormalizer() const { return std::sqrt(2.0 * kappa * dt / kPi); }
    double logPerStep() const { return 0.5 * std::log(2.0 * kappa * dt / kPi); }
    /// Standard deviation of a readout value about a level, 1/sqrt(4 kappa dt).
    double levelSpread() const { return 1.0 / std::sqrt(4.0 * kappa * dt); }
};

enum class Proposal {
    /// E_i drawn from the one-step instrument law of the current conditional
    /// state: a mixture of N(E_n, 1/(4 kappa dt)) weighted by |C_n|^2.
    Guided,
    /// E_i i.i.d. N(midpoint, max(dE, 1/sqrt(2 kappa dt))^2).
    IidGaussian,
};

inline const char* to_string(Proposal p) {
    return p == Proposal::Guided ? "guided" : "iid-gaussian";
}

struct WeightedReadout {
    ReadoutTrajectory readout;
    /// P[E] = |psi_T|^2 (underflows for long grids; see the log form).
    double probabilityDensity = 0.0;
    double logProbabilityDensity = 0.0;
    /// log of P[E] times the measure-to-proposal density ratio.
    double logImportanceWeight = 0.0;
    /// Self-normalized weight within its ensemble.
    double importanceWeight = 0.0;
    /// Normalized conditional state at T.
    QuantumState finalState;
    std::vector<double> p2History;
};

struct SampleOptions {
    Proposal proposal = Proposal::Guided;
    bool keepReadouts = true;
    bool keepP2History = true;
    unsigned threads = 0;
};

struct WeightedEnsemble {
    std::vector<WeightedReadout> samples;
    double ess = 0.0;
    double maxLogWeight = 0.0;
    /// Set when the effective sample size fell below 2.
    bool degenerate = false;
    /// Mean of the unnormalized weights; one for a normalized measure.
    Estimate totalMass;

    std::vector<double> weights() const {
        std::vector<double> w;
        w.reserve(samples.size());
        for (const auto& s : samples) {
            w.push_back(s.importanceWeight);
        }
        return w;
    }

    void requireNormalized() const {
        double total = 0.0;
        for (const auto& s : samples) {
            if (!(s.importanceWeight >= 0.0)) {
                throw InvalidMeasure("negative or NaN importance weight");
            }
            total += s.importanceWeight;
        }
        if (samples.empty() || std::abs(total - 1.0) > 1e-9) {
            throw InvalidMeasure("ensemble weights do not sum to one");
        }
        if (degenerate) {
            throw InvalidMeasure("degenerate ensemble (effective sample size below 2)");
        }
    }
};

namespace detail {

struct GuidedRunOutput {
    double logNorm = 0.0;
    double logRatio = 0.0;
};

/// Draws one readout while propagating the columns of `c` (unit Frobenius
/// norm on entry). The guide populations are the row norms of `c`.
inline GuidedRunOutput guidedRun(const SystemSpec& sys, const MeasurementSpec& meas, Matrix& c,
                                 Rng& rng, Proposal proposal, std::vector<double>* readout,
                                 std::vector<double>* p2) {
    const TimeGrid grid = meas.grid();
    const double kappa = meas.kappa();
    const RealVector e = sys.energies();
    const auto d = e.size();
    const double mid = sys.midpoint();
    SelectiveStepper stepper(sys, kappa, grid.dt);
    const InstrumentMeasure measure{kappa, grid.dt};
    const double sigma = kappa > 0.0 ? measure.levelSpread() : 0.0;
    const double iidSd = kappa > 0.0 ? std::max(meas.deltaE(), 1.0 / std::sqrt(2.0 * kappa * grid.dt))
                                     : meas.deltaE();
    std::vector<double> pop(static_cast<std::size_t>(d));
    std::vector<double> logTerms(static_cast<std::size_t>(d));

    GuidedRunOutput out;
    if (readout) {
        readout->assign(grid.points(), 0.0);
    }
    if (p2) {
        p2->assign(grid.points(), 0.0);
    }

    auto populations = [&] {
        double total = 0.0;
        for (Eigen::Index n = 0; n < d; ++n) {
            pop[static_cast<std::size_t>(n)] = c.row(n).squaredNorm();
            total += pop[static_cast<std::size_t>(n)];
        }
        for (auto& p : pop) {
            p /= total;
        }
    };

    // Returns the drawn value and log(measure / proposal) for it.
    auto draw = [&]() -> std::pair<double, double> {
        if (kappa == 0.0) {
            return {mid + iidSd * standardNormal(rng), 0.0};
        }
        if (proposal == Proposal::IidGaussian) {
            const double z = standardNormal(rng);
            const double value = mid + iidSd * z;
            const double logQ = -0.5 * std::log(2.0 * kPi * iidSd * iidSd) - 0.5 * z * z;
            return {value, measure.logPerStep() - logQ};
        }
        populations();
        double u = uniform01(rng);
        Eigen::Index level = d - 1;
        for (Eigen::Index n = 0; n < d; ++n) {
            u -= pop[static_cast<std::size_t>(n)];
            if (u < 0.0) {
                level = n;
                break;
            }
        }
        const double value = e[level] + sigma * standardNormal(rng);
        // log m - log q collapses to -logsumexp(log p_n - (E-E_n)^2 / (2 sigma^2)).
        double maxTerm = -kInf;
        for (Eigen::Index n = 0; n < d; ++n) {
            const double x = (value - e[n]) / sigma;
            const double p = pop[static_cast<std::size_t>(n)];
            logTerms[static_cast<std::size_t>(n)] = p > 0.0 ? std::log(p) - 0.5 * x * x : -kInf;
            maxTerm = std::max(maxTerm, logTerms[static_cast<std::size_t>(n)]);
        }
        double s = 0.0;
        for (double t : logTerms) {
            s += std::exp(t - maxTerm);
        }
        return {value, -(maxTerm + std::log(s))};
    };

    for (std::size_t i = 0; i < grid.steps; ++i) {
        if (p2) {
            (*p2)[i] = c.row(1).squaredNorm() / c.squaredNorm();
        }
        const auto [value, logRatio] = draw();
        out.logRatio += logRatio;
        if (readout) {
            (*readout)[i] = value;
        }
        const double dl = stepper.step(c, grid.time(i), value);
        if (!std::isfinite(dl)) {
            throw NumericFailure("readout-ensemble", i, "non-finite or growing amplitude");
        }
        out.logNorm += dl;
    }
    if (p2) {
        (*p2)[grid.steps] = c.row(1).squaredNorm() / c.squaredNorm();
    }
    // The endpoint value carries no measure; it is drawn only for display.
    const auto last = draw();
    if (readout) {
        (*readout)[grid.steps] = last.first;
    }
    if (kappa == 0.0) {
        out.logRatio = 0.0;
    }
    return out;
}

} // namespace detail

/// One weighted readout from the given stream.
inline WeightedReadout drawWeightedReadout(const SystemSpec& sys, const MeasurementSpec& meas,
                                           const QuantumState& initial, Rng& rng,
                                           Proposal proposal = Proposal::Guided,
                                           bool keepReadout = true, bool keepP2 = true) {
    Matrix c = initial.amplitudes();
    c /= c.norm();
    std::vector<double> values;
    std::vector<double> p2;
    const auto run = detail::guidedRun(sys, meas, c, rng, proposal, &values, keepP2 ? &p2 : nullptr);
    WeightedReadout w;
    w.logProbabilityDensity = run.logNorm;
    w.probabilityDensity = std::exp(run.logNorm);
    w.logImportanceWeight = run.logNorm + run.logRatio;
    w.finalState = QuantumState::fromAmplitudes(Vector(c.col(0)));
    w.p2History = std::move(p2);
    if (keepReadout) {
        w.readout = ReadoutTrajectory(meas.grid(), std::move(values));
    }
    return w;
}

/// Fills in self-normalized weights and the ensemble diagnostics.
inline void finalizeEnsemble(WeightedEnsemble& ens) {
    std::vector<double> logw;
    logw.reserve(ens.samples.size());
    for (const auto& s : ens.samples) {
        logw.push_back(s.logImportanceWeight);
    }
    const auto w = normalizeLogWeights(logw);
    ens.maxLogWeight = *std::max_element(logw.begin(), logw.end());
    std::vector<double> raw(logw.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        ens.samples[i].importanceWeight = w[i];
        raw[i] = std::exp(logw[i]);
    }
    ens.ess = effectiveSampleSize(w);
    ens.degenerate = ens.samples.size() > 1 && ens.ess < 2.0;
    ens.totalMass = sampleMean(raw);
}

inline WeightedEnsemble sampleReadouts(const SystemSpec& sys, const MeasurementSpec& meas,
                                       std::size_t nSamples, std::uint64_t seed,
                                       const QuantumState& initial, SampleOptions options = {}) {
    if (nSamples < 1) {
        throw PreconditionViolation("nSamples must be at least 1");
    }
    if (initial.dim() != sys.dim()) {
        throw ShapeError("initial state dimension does not match the system");
    }
    checkResolution(sys, meas);
    WeightedEnsemble ens;
    ens.samples.resize(nSamples);
    parallelFor(nSamples, resolveThreads(options.threads), [&](std::size_t i) {
        Rng rng = makeRng(seed, i);
        ens.samples[i] = drawWeightedReadout(sys, meas, initial, rng, options.proposal,
                                             options.keepReadouts, options.keepP2History);
    });
    finalizeEnsemble(ens);
    return ens;
}

struct UnitarityReport {
    MatrixEstimate estimate;
    double maxDeviation = 0.0;
    double maxZ = 0.0;
    double ess = 0.0;
    bool pass = false;
};

/// Monte Carlo estimate of the integral of U^dagger U over readouts, with the
/// columns of the identity as initial states.
inline UnitarityReport checkGeneralizedUnitarity(const SystemSpec& sys, const MeasurementSpec& meas,
                                                 std::size_t nSamples, std::uint64_t seed,
                                                 SampleOptions options = {}) {
    if (nSamples < 2) {
        throw PreconditionViolation("nSamples must be at least 2");
    }
    checkResolution(sys, meas);
    const auto d = static_cast<Eigen::Index>(sys.dim());
    const Matrix identity = Matrix::Identity(d, d);
    std::vector<Matrix> terms(nSamples);
    std::vector<double> logw(nSamples);
    std::vector<Matrix> shapes(nSamples);
    parallelFor(nSamples, resolveThreads(options.threads), [&](std::size_t i) {
        Rng rng = makeRng(seed, i);
        Matrix c = identity / std::sqrt(static_cast<double>(d));
        const auto run = detail::guidedRun(sys, meas, c, rng, options.proposal, nullptr, nullptr);
        logw[i] = run.logNorm + run.logRatio;
        shapes[i] = static_cast<double>(d) * (c.adjoint() * c);
    });
    const auto w = normalizeLogWeights(logw);
    UnitarityReport rep;
    rep.ess = effectiveSampleSize(w);
    if (rep.ess < 2.0) {
        throw InvalidMeasure("degenerate ensemble in the unitarity check");
    }
    for (std::size_t i = 0; i < nSamples; ++i) {
        terms[i] = std::exp(logw[i]) * shapes[i];
    }
    rep.estimate = averageMatrices(terms);
    rep.maxDeviation = rep.estimate.maxDeviation(identity);
    rep.maxZ = rep.estimate.maxZ(identity);
    rep.pass = rep.maxZ <= 3.0;
    return rep;
}

/// max |integral dE m U(E)^dagger U(E) - I| for a single step starting at
/// time t, by trapezoid quadrature over the readout value.
inline double oneStepCompleteness(const SystemSpec& sys, double kappa, double dt, double t = 0.0) {
    const auto d = static_cast<Eigen::Index>(sys.dim());
    const Matrix identity = Matrix::Identity(d, d);
    SelectiveStepper stepper(sys, kappa, dt);
    auto gram = [&](double e) {
        Matrix c = identity / std::sqrt(static_cast<double>(d));
        const double lf = stepper.step(c, t, e);
        return Matrix(static_cast<double>(d) * std::exp(lf) * (c.adjoint() * c));
    };
    if (kappa == 0.0) {
        return (gram(0.0) - identity).cwiseAbs().maxCoeff();
    }
    const InstrumentMeasure measure{kappa, dt};
    const double sigma = measure.levelSpread();
    const double lo = sys.levels().front() - 16.0 * sigma;
    const double hi = sys.levels().back() + 16.0 * sigma;
    const double h = sigma / 32.0;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / h));
    const double step = (hi - lo) / static_cast<double>(n);
    Matrix total = Matrix::Zero(d, d);
    for (std::size_t i = 0; i <= n; ++i) {
        const double f = (i == 0 || i == n) ? 0.5 : 1.0;
        total += f * gram(lo + step * static_cast<double>(i));
    }
    total *= step * measure.perStepNormalizer();
    return (total - identity).cwiseAbs().maxCoeff();
}

/// Centered moving average with reflective boundaries.
inline ReadoutTrajectory smoothReadout(const ReadoutTrajectory& readout, double window) {
    const TimeGrid g = readout.grid();
    if (!(window >= 2.0 * g.dt * (1.0 - 1e-12))) {
        throw PreconditionViolation("smoothing window must be at least 2 dt");
    }
    const auto half = static_cast<std::ptrdiff_t>(std::llround(0.5 * window / g.dt));
    const auto last = static_cast<std::ptrdiff_t>(g.steps);
    auto reflect = [last](std::ptrdiff_t j) {
        if (last == 0) {
            return std::ptrdiff_t{0};
        }
        const std::ptrdiff_t period = 2 * last;
        j %= period;
        if (j < 0) {
            j += period;
        }
        return j <= last ? j : period - j;
    };
    const auto& v = readout.values();
    std::vector<double> out(v.size());
    const double norm = 1.0 / static_cast<double>(2 * half + 1);
    // Running sum over the reflected window.
    double sum = 0.0;
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
        sum += v[static_cast<std::size_t>(reflect(j))];
    }
    for (std::ptrdiff_t i = 0; i <= last; ++i) {
        out[static_cast<std::size_t>(i)] = sum * norm;
        sum += v[static_cast<std::size_t>(reflect(i + half + 1))] -
               v[static_cast<std::size_t>(reflect(i - half))];
    }
    return ReadoutTrajectory(g, std::move(out));
}

/// Time average of the readout over its measured steps.
inline double timeAverage(const ReadoutTrajectory& readout) {
    const auto& v = readout.values();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        s += v[i];
    }
    return s / static_cast<double>(v.size() - 1);
}

/// Weighted mean of P_2(t) across the ensemble.
inline std::vector<double> meanTransitionCurve(const WeightedEnsemble& ens) {
    if (ens.samples.empty() || ens.samples.front().p2History.empty()) {
        throw PreconditionViolation("ensemble carries no P_2 histories");
    }
    std::vector<double> m(ens.samples.front().p2History.size(), 0.0);
    for (const auto& s : ens.samples) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] += s.importanceWeight * s.p2History[i];
        }
    }
    return m;
}

/// Weighted 2-D histogram of (t, y) over a set of curves sharing one grid.
struct DensityDiagram {
    std::vector<double> timeEdges;
    std::vector<double> valueEdges;
    /// mass[t][y], normalized per time bin.
    std::vector<std::vector<double>> mass;
};

inline DensityDiagram densityDiagram(const TimeGrid& grid,
                                     const std::vector<std::vector<double>>& curves,
                                     const std::vector<double>& weights, std::size_t timeBins,
                                     std::size_t valueBins, double lo, double hi) {
    DensityDiagram dd;
    const double t0 = grid.t0;
    const double t1 = grid.end();
    for (std::size_t k = 0; k <= timeBins; ++k) {
        dd.timeEdges.push_back(t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(timeBins));
    }
    for (std::size_t k = 0; k <= valueBins; ++k) {
        dd.valueEdges.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(valueBins));
    }
    dd.mass.assign(timeBins, std::vector<double>(valueBins, 0.0));
    for (std::size_t s = 0; s < curves.size(); ++s) {
        for (std::size_t i = 0; i < curves[s].size(); ++i) {
            const double t = grid.time(i);
            auto tb = static_cast<std::size_t>((t - t0) / (t1 - t0) * static_cast<double>(timeBins));
            tb = std::min(tb, timeBins - 1);
            const double y = std::clamp(curves[s][i], lo, hi);
            auto yb = static_cast<std::size_t>((y - lo) / (hi - lo) * static_cast<double>(valueBins));
            yb = std::min(yb, valueBins - 1);
            dd.mass[tb][yb] += weights[s];
        }
    }
    for (auto& row : dd.mass) {
        double total = 0.0;
        for (double x : row) {
            total += x;
        }
        if (total > 0.0) {
            for (double& x : row) {
                x /= total;
            }
        }
    }
    return dd;
}

} // namespace qcorridor
