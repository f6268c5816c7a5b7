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

#include <cmath>
#include <cstdint>
#include <vector>

#include "qcorridor/core.hpp"
#include "qcorridor/parallel.hpp"
#include "qcorridor/random.hpp"
#include "qcorridor/selective.hpp"
#include "qcorridor/stats.hpp"

namespace qcorridor {

struct ProjectiveChainResult {
    /// Level index found by each measurement.
    std::vector<std::size_t> outcomes;
    QuantumState finalState;
};

/// Splits the pi-pulse T_R/2 into n intervals of free Rabi evolution, each
/// followed by a projective measurement of H0 with Born-rule sampling.
inline ProjectiveChainResult projectiveChain(const SystemSpec& sys, std::size_t nMeasurements,
                                             const QuantumState& initial, Rng& rng) {
    if (nMeasurements < 1) {
        throw PreconditionViolation("nMeasurements must be at least 1");
    }
    if (!sys.hasCoupling()) {
        throw PreconditionViolation("projective chain needs a drive");
    }
    if (initial.dim() != sys.dim()) {
        throw ShapeError("initial state dimension does not match the system");
    }
    const double tau = 0.5 * sys.rabiPeriod() / static_cast<double>(nMeasurements);
    const Matrix u = unitaryPropagator(sys.coupling(), tau);
    Vector psi = initial.amplitudes().normalized();
    ProjectiveChainResult out;
    out.outcomes.reserve(nMeasurements);
    for (std::size_t k = 0; k < nMeasurements; ++k) {
        psi = u * psi;
        double r = uniform01(rng);
        Eigen::Index level = psi.size() - 1;
        for (Eigen::Index n = 0; n < psi.size(); ++n) {
            r -= std::norm(psi[n]);
            if (r < 0.0) {
                level = n;
                break;
            }
        }
        psi.setZero();
        psi[level] = 1.0;
        out.outcomes.push_back(static_cast<std::size_t>(level));
    }
    out.finalState = QuantumState::fromAmplitudes(psi);
    return out;
}

inline ProjectiveChainResult projectiveChain(const SystemSpec& sys, std::size_t nMeasurements,
                                             const QuantumState& initial, std::uint64_t seed) {
    Rng rng = makeRng(seed);
    return projectiveChain(sys, nMeasurements, initial, rng);
}

/// Probability that every measurement of the chain finds level 1.
inline double projectiveSurvivalExact(std::size_t n) {
    return std::pow(std::cos(kPi / (2.0 * static_cast<double>(n))), 2.0 * static_cast<double>(n));
}

/// Monte Carlo frequency of chains that never leave level 1.
inline Estimate projectiveSurvival(const SystemSpec& sys, std::size_t nMeasurements,
                                   std::size_t nRuns, std::uint64_t seed, unsigned threads = 0) {
    std::vector<char> survived(nRuns, 0);
    const QuantumState ground = QuantumState::basis(sys.dim(), 0);
    parallelFor(nRuns, resolveThreads(threads), [&](std::size_t i) {
        Rng rng = makeRng(seed, i);
        const auto run = projectiveChain(sys, nMeasurements, ground, rng);
        bool all = true;
        for (auto o : run.outcomes) {
            all = all && o == 0;
        }
        survived[i] = all ? 1 : 0;
    });
    std::size_t hits = 0;
    for (char s : survived) {
        hits += static_cast<std::size_t>(s);
    }
    return proportion(hits, nRuns);
}

} // namespace qcorridor
