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

#include <cstdint>
#include <random>

namespace qcorridor {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mixBits(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
}

/// Seed of the independent stream for one trajectory. Depends only on the
/// master seed and the trajectory index, never on scheduling.
constexpr std::uint64_t deriveSeed(std::uint64_t masterSeed, std::uint64_t index) noexcept {
    return mixBits(mixBits(masterSeed) ^ mixBits(index + 0x632be59bd9b4e019ULL));
}

inline Rng makeRng(std::uint64_t masterSeed, std::uint64_t index) {
    return Rng(deriveSeed(masterSeed, index));
}

inline Rng makeRng(std::uint64_t seed) { return Rng(mixBits(seed)); }

inline double standardNormal(Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return normal(rng);
}

inline double uniform01(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng);
}

} // namespace qcorridor
