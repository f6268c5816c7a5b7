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
#include "qcorridor/parallel.hpp"
#include "qcorridor/random.hpp"
#include "qcorridor/selective.hpp"
#include "qcorridor/stats.hpp"

namespace qcorridor {

struct StochasticRunResult {
    QuantumState finalState;
    /// c(t_i) = <psi|A|psi> at every grid point.
    std::vector<double> expectationHistory;
    /// |C_2(t_i)|^2 at every grid point.
    std::vector<double> p2History;
    /// Squared norm just before the renormalization of step i.
    std::vector<double> preRenormNorm;
    NoisePath noise;
    std::optional<std::vector<QuantumState>> stateHistory;
};

struct StochasticOptions {
    bool storeStates = false;
};

/// Stochastic Schroedinger equation with A = H0,
///   dpsi = [-iV - kappa/2 (A-c)^2] psi dt + sqrt(kappa) (A-c) psi dw,
/// c = <A>. Each step applies the measurement terms by Euler-Maruyama at the
/// pre-point, renormalizes, then applies exp(-iV dt) exactly.
inline StochasticRunResult propagateStochastic(const SystemSpec& sys, const MeasurementSpec& meas,
                                               const NoisePath& noise, const QuantumState& initial,
                                               StochasticOptions options = {}) {
    if (!sameGrid(noise.grid(), meas.grid())) {
        throw ShapeError("noise grid does not match the measurement grid");
    }
    if (initial.dim() != sys.dim()) {
        throw ShapeError("initial state dimension does not match the system");
    }
    if (std::abs(initial.normSquared() - 1.0) > 1e-9) {
        throw PreconditionViolation("initial state must be normalized");
    }
    checkResolution(sys, meas);

    const TimeGrid grid = meas.grid();
    const double kappa = meas.kappa();
    const double dt = meas.dt();
    const double sk = std::sqrt(kappa);
    const RealVector e = sys.energies();
    const Matrix u = unitaryPropagator(sys.coupling(), dt);

    StochasticRunResult out;
    out.noise = noise;
    out.expectationHistory.reserve(grid.points());
    out.p2History.reserve(grid.points());
    out.preRenormNorm.reserve(grid.steps);
    if (options.storeStates) {
        out.stateHistory.emplace();
        out.stateHistory->reserve(grid.points());
    }

    Vector psi = initial.amplitudes();
    Vector next(psi.size());
    auto expectation = [&] { return (e.array() * psi.array().abs2()).sum(); };
    auto record = [&](double c) {
        out.expectationHistory.push_back(c);
        out.p2History.push_back(std::norm(psi[1]));
        if (options.storeStates) {
            out.stateHistory->push_back(QuantumState::fromAmplitudes(psi));
        }
    };

    double c = expectation();
    record(c);
    for (std::size_t i = 0; i < grid.steps; ++i) {
        if (kappa > 0.0) {
            const double dw = noise[i];
            for (Eigen::Index n = 0; n < psi.size(); ++n) {
                const double a = e[n] - c;
                psi[n] *= 1.0 - 0.5 * kappa * a * a * dt + sk * a * dw;
            }
            const double n2 = psi.squaredNorm();
            out.preRenormNorm.push_back(n2);
            if (!(n2 > 0.0) || !std::isfinite(n2)) {
                throw NumericFailure("stochastic-dynamics", i, "state norm collapsed or is not finite");
            }
            psi /= std::sqrt(n2);
        } else {
            out.preRenormNorm.push_back(1.0);
        }
        const double driven = sys.drivenTime(grid.time(i), dt);
        if (driven == dt) {
            next.noalias() = u * psi;
            psi.swap(next);
        } else if (driven > 0.0) {
            next.noalias() = unitaryPropagator(sys.coupling(), driven) * psi;
            psi.swap(next);
        }
        if (!detail::allFinite(psi)) {
            throw NumericFailure("stochastic-dynamics", i, "non-finite amplitude");
        }
        c = expectation();
        record(c);
    }
    out.finalState = QuantumState::fromAmplitudes(psi);
    return out;
}

/// Phase-insensitive distance sqrt(1 - |<a|b>|^2) between states, each
/// normalized first. Evaluated through the Lagrange identity
/// |a|^2|b|^2 - |<a|b>|^2 = sum_{i<j} |a_i b_j - a_j b_i|^2, which does not
/// cancel when the states agree.
inline double stateDistance(const Vector& a, const Vector& b) {
    double cross = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        for (Eigen::Index j = i + 1; j < a.size(); ++j) {
            cross += std::norm(a[i] * b[j] - a[j] * b[i]);
        }
    }
    return std::sqrt(cross / (a.squaredNorm() * b.squaredNorm()));
}

struct ChangeOfVariablesReport {
    /// max over grid points of the distance between the renormalized selective
    /// state and the stochastic state.
    double maxDistance = 0.0;
    std::vector<double> distances;
    ReadoutTrajectory readout;
};

/// Readout a_i = c_i + dw_i / (2 sqrt(kappa) dt) generated by a stochastic run.
inline ReadoutTrajectory readoutFromNoise(const MeasurementSpec& meas,
                                          const StochasticRunResult& run) {
    const TimeGrid grid = meas.grid();
    std::vector<double> a(grid.points());
    for (std::size_t i = 0; i < grid.points(); ++i) {
        a[i] = run.expectationHistory[i];
        if (i < grid.steps && meas.kappa() > 0.0) {
            a[i] += run.noise[i] / (2.0 * std::sqrt(meas.kappa()) * grid.dt);
        }
    }
    return ReadoutTrajectory(grid, std::move(a));
}

inline ChangeOfVariablesReport verifyChangeOfVariables(const SystemSpec& sys,
                                                       const MeasurementSpec& meas,
                                                       const NoisePath& noise,
                                                       const QuantumState& initial) {
    const auto sse = propagateStochastic(sys, meas, noise, initial, {.storeStates = true});
    ChangeOfVariablesReport rep;
    rep.readout = readoutFromNoise(meas, sse);
    const auto sel = propagateSelective(sys, meas, rep.readout, initial, {.storeStates = true});
    rep.distances.resize(meas.grid().points());
    for (std::size_t i = 0; i < rep.distances.size(); ++i) {
        rep.distances[i] = stateDistance((*sel.stateHistory)[i].amplitudes(),
                                         (*sse.stateHistory)[i].amplitudes());
        rep.maxDistance = std::max(rep.maxDistance, rep.distances[i]);
    }
    return rep;
}

inline ChangeOfVariablesReport verifyChangeOfVariables(const SystemSpec& sys,
                                                       const MeasurementSpec& meas,
                                                       std::uint64_t seed) {
    return verifyChangeOfVariables(sys, meas, sampleNoisePath(meas, seed),
                                   QuantumState::basis(sys.dim(), 0));
}

/// Sums groups of `factor` consecutive increments onto the coarser grid.
inline NoisePath coarsenNoise(const NoisePath& fine, std::size_t factor) {
    if (factor == 0 || fine.size() % factor != 0) {
        throw ShapeError("noise path length is not divisible by the coarsening factor");
    }
    std::vector<double> dw(fine.size() / factor, 0.0);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        dw[i / factor] += fine[i];
    }
    const TimeGrid g = fine.grid();
    const TimeGrid coarse{g.t0, g.dt * static_cast<double>(factor), dw.size()};
    return NoisePath(coarse, std::move(dw));
}

/// Max distances of the change of variables at dt, dt/2, ... dt/2^(levels-1),
/// all driven by one Brownian path sampled on the finest grid.
inline std::vector<double> changeOfVariablesConvergence(const SystemSpec& sys,
                                                        const MeasurementSpec& meas,
                                                        std::uint64_t seed, std::size_t levels,
                                                        const QuantumState& initial) {
    const std::size_t finest = std::size_t{1} << (levels - 1);
    const MeasurementSpec fineMeas = meas.withDt(meas.dt() / static_cast<double>(finest));
    const NoisePath fine = sampleNoisePath(fineMeas, seed);
    std::vector<double> out;
    for (std::size_t k = 0; k < levels; ++k) {
        const std::size_t factor = finest >> k;
        const MeasurementSpec m = meas.withDt(meas.dt() / static_cast<double>(std::size_t{1} << k));
        NoisePath coarse = coarsenNoise(fine, factor);
        coarse = NoisePath(m.grid(), coarse.increments());
        out.push_back(verifyChangeOfVariables(sys, m, coarse, initial).maxDistance);
    }
    return out;
}

/// Ensemble average of |psi><psi| over independent noise paths at the given
/// grid indices.
struct StochasticEnsembleAverage {
    std::vector<std::size_t> indices;
    std::vector<MatrixEstimate> rho;
    std::size_t nTrajectories = 0;
};

inline StochasticEnsembleAverage averageStochasticEnsemble(const SystemSpec& sys,
                                                           const MeasurementSpec& meas,
                                                           const QuantumState& initial,
                                                           std::size_t nTrajectories,
                                                           std::uint64_t seed,
                                                           std::vector<std::size_t> indices,
                                                           unsigned threads = 0) {
    for (auto i : indices) {
        if (i > meas.steps()) {
            throw ShapeError("sample index beyond the grid");
        }
    }
    std::vector<std::vector<Matrix>> samples(indices.size(), std::vector<Matrix>(nTrajectories));
    parallelFor(nTrajectories, resolveThreads(threads), [&](std::size_t s) {
        const auto noise = sampleNoisePath(meas.grid(), deriveSeed(seed, s));
        const auto run = propagateStochastic(sys, meas, noise, initial, {.storeStates = true});
        for (std::size_t k = 0; k < indices.size(); ++k) {
            const Vector& c = (*run.stateHistory)[indices[k]].amplitudes();
            samples[k][s] = c * c.adjoint();
        }
    });
    StochasticEnsembleAverage out;
    out.indices = std::move(indices);
    out.nTrajectories = nTrajectories;
    for (auto& set : samples) {
        out.rho.push_back(averageMatrices(set));
    }
    return out;
}

} // namespace qcorridor
