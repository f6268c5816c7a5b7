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


#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "qcorridor/qcorridor.hpp"

namespace qc = qcorridor;

TEST(SystemSpec, RejectsNonpositiveSpacing) {
    EXPECT_THROW(qc::makeTwoLevelSystem(0.0, 0.5, {0.0, qc::kInf}), qc::InvalidSpec);
    EXPECT_THROW(qc::makeTwoLevelSystem(-1.0, 0.5, {0.0, qc::kInf}), qc::InvalidSpec);
}

TEST(SystemSpec, RejectsUnorderedLevels) {
    qc::Matrix v = qc::Matrix::Zero(2, 2);
    EXPECT_THROW(qc::SystemSpec::make({0.5, -0.5}, v), qc::InvalidSpec);
}

TEST(SystemSpec, RejectsNonHermitianCoupling) {
    qc::Matrix v = qc::Matrix::Zero(2, 2);
    v(0, 1) = 0.3;
    EXPECT_THROW(qc::SystemSpec::make({-0.5, 0.5}, v), qc::InvalidSpec);
}

TEST(SystemSpec, RejectsCouplingShape) {
    qc::Matrix v = qc::Matrix::Zero(3, 3);
    EXPECT_THROW(qc::SystemSpec::make({-0.5, 0.5}, v), qc::ShapeError);
}

TEST(SystemSpec, PiPulseWindowAndDerivedTimes) {
    const auto sys = qc::makePiPulseSystem(2.0, 0.25);
    EXPECT_DOUBLE_EQ(sys.deltaE(), 2.0);
    EXPECT_DOUBLE_EQ(sys.rabiFrequency(), 0.25);
    EXPECT_NEAR(sys.rabiPeriod(), 4.0 * M_PI, 1e-12);
    ASSERT_TRUE(sys.window().has_value());
    EXPECT_NEAR(sys.window()->off, 2.0 * M_PI, 1e-12);
    EXPECT_TRUE(sys.couplingActive(0.0));
    EXPECT_FALSE(sys.couplingActive(2.0 * M_PI));
}

TEST(SystemSpec, DriveSegmentsSplitAtEdges) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.5, {1.0, 2.0});
    auto s = sys.driveSegments(0.9, 0.2);
    EXPECT_NEAR(s[0], 0.1, 1e-15);
    EXPECT_NEAR(s[1], 0.1, 1e-15);
    EXPECT_EQ(s[2], 0.0);
    s = sys.driveSegments(1.95, 0.1);
    EXPECT_EQ(s[0], 0.0);
    EXPECT_NEAR(s[1], 0.05, 1e-15);
    EXPECT_NEAR(s[2], 0.05, 1e-15);
    s = sys.driveSegments(3.0, 0.1);
    EXPECT_EQ(s[1], 0.0);
    EXPECT_DOUBLE_EQ(sys.drivenTime(1.2, 0.1), 0.1);
}

TEST(QuantumState, RejectsOverNormalizedAndTooSmall) {
    qc::Vector c(2);
    c << 1.0, 0.5;
    EXPECT_THROW(qc::QuantumState::fromAmplitudes(c), qc::InvalidSpec);
    qc::Vector one(1);
    one << 1.0;
    EXPECT_THROW(qc::QuantumState::fromAmplitudes(one), qc::InvalidSpec);
}

TEST(QuantumState, TwoLevelPopulations) {
    const auto s = qc::QuantumState::twoLevel(0.3);
    EXPECT_NEAR(s.population(0), 0.3, 1e-15);
    EXPECT_NEAR(s.population(1), 0.7, 1e-15);
    EXPECT_NEAR(s.normSquared(), 1.0, 1e-15);
}

TEST(DensityMatrix, ValidatesTracePositivityHermiticity) {
    qc::Matrix rho = qc::Matrix::Zero(2, 2);
    rho(0, 0) = 0.5;
    rho(1, 1) = 0.7;
    EXPECT_THROW(qc::DensityMatrix::fromMatrix(rho), qc::InvalidSpec);
    rho(1, 1) = 0.5;
    rho(0, 1) = 0.7;
    rho(1, 0) = 0.7;
    EXPECT_THROW(qc::DensityMatrix::fromMatrix(rho), qc::InvalidSpec);
    rho(0, 1) = 0.2;
    rho(1, 0) = 0.1;
    EXPECT_THROW(qc::DensityMatrix::fromMatrix(rho), qc::InvalidSpec);
}

TEST(DensityMatrix, PureStatePurity) {
    const auto r = qc::DensityMatrix::fromState(qc::QuantumState::twoLevel(0.5));
    EXPECT_NEAR(r.purity(), 1.0, 1e-14);
    EXPECT_NEAR(r.trace(), 1.0, 1e-14);
    EXPECT_NEAR(r(0, 1).real(), 0.5, 1e-14);
}

TEST(MeasurementSpec, GridShrinksStepToDivideDuration) {
    const auto m = qc::MeasurementSpec::make(0.1, 1.0, 0.003);
    EXPECT_EQ(m.steps(), 334u);
    EXPECT_NEAR(m.dt() * static_cast<double>(m.steps()), 1.0, 1e-14);
    EXPECT_NEAR(m.levelResolutionTime(), 10.0, 1e-12);
}

TEST(MeasurementSpec, ResolutionGuards) {
    EXPECT_THROW(qc::MeasurementSpec::make(0.1, 1.0, 0.02), qc::ResolutionError);
    EXPECT_THROW(qc::MeasurementSpec::make(10.0, 10.0, 0.01), qc::ResolutionError);
    EXPECT_THROW(qc::MeasurementSpec::make(-1.0, 10.0, 0.01), qc::InvalidSpec);
    const auto sys = qc::makeTwoLevelSystem(1.0, 5.0, {0.0, qc::kInf});
    const auto m = qc::MeasurementSpec::make(0.0, 10.0, 0.05);
    EXPECT_THROW(qc::checkResolution(sys, m), qc::ResolutionError);
}

TEST(ReadoutTrajectory, LengthMustMatchGrid) {
    const auto m = qc::MeasurementSpec::make(0.0, 1.0, 0.01);
    EXPECT_THROW(qc::ReadoutTrajectory(m.grid(), std::vector<double>(50, 0.0)), qc::ShapeError);
    EXPECT_NO_THROW(qc::ReadoutTrajectory(m.grid(), std::vector<double>(101, 0.0)));
}

TEST(NoisePath, IncrementStatistics) {
    const auto m = qc::MeasurementSpec::make(0.0, 100.0, 0.001);
    const auto w = qc::sampleNoisePath(m, 42);
    double mean = 0.0;
    double var = 0.0;
    for (double x : w.increments()) {
        mean += x;
        var += x * x;
    }
    const double n = static_cast<double>(w.size());
    mean /= n;
    var = var / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 5.0 * std::sqrt(0.001 / n));
    // Var of the sample variance of N(0, dt) is 2 dt^2 / n.
    EXPECT_NEAR(var, 0.001, 5.0 * 0.001 * std::sqrt(2.0 / n));
}

TEST(NoisePath, SameSeedSameDrawsDifferentSeedDifferent) {
    const auto m = qc::MeasurementSpec::make(0.0, 1.0, 0.01);
    EXPECT_EQ(qc::sampleNoisePath(m, 9).increments(), qc::sampleNoisePath(m, 9).increments());
    EXPECT_NE(qc::sampleNoisePath(m, 9).increments(), qc::sampleNoisePath(m, 10).increments());
    EXPECT_THROW(qc::sampleNoisePath(qc::TimeGrid{0.0, 0.0, 10}, 1), qc::PreconditionViolation);
}

TEST(Random, DerivedSeedsAreDistinct) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seen.insert(qc::deriveSeed(7, i));
    }
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_NE(qc::deriveSeed(7, 0), qc::deriveSeed(8, 0));
}

TEST(Parallel, ThreadCountDoesNotChangeResults) {
    std::vector<double> a(57), b(57);
    auto body = [](std::vector<double>& out) {
        return [&out](std::size_t i) {
            auto rng = qc::makeRng(3, i);
            out[i] = qc::standardNormal(rng);
        };
    };
    qc::parallelFor(a.size(), 1, body(a));
    qc::parallelFor(b.size(), 4, body(b));
    EXPECT_EQ(a, b);
}

TEST(Parallel, LowestIndexErrorIsRethrown) {
    try {
        qc::parallelFor(20, 3, [](std::size_t i) {
            if (i == 5 || i == 11) {
                throw qc::NumericFailure("test", i, "boom");
            }
        });
        FAIL() << "expected a throw";
    } catch (const qc::NumericFailure& e) {
        EXPECT_EQ(e.step(), 5u);
    }
}

TEST(Stats, WeightedMeanAgainstDirectFormula) {
    const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const auto e = qc::weightedMean(w, x);
    EXPECT_NEAR(e.value, 3.0, 1e-15);
    const double se2 = 0.01 * 4 + 0.04 * 1 + 0.09 * 0 + 0.16 * 1;
    EXPECT_NEAR(e.se, std::sqrt(se2), 1e-15);
    EXPECT_NEAR(qc::effectiveSampleSize(w), 1.0 / 0.3, 1e-12);
}

TEST(Stats, DegenerateLogWeightsThrow) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_THROW(qc::normalizeLogWeights({-inf, -inf}), qc::DegenerateEnsemble);
    const auto w = qc::normalizeLogWeights({-1000.0, -999.0});
    EXPECT_NEAR(w[0], 1.0 / (1.0 + std::exp(1.0)), 1e-15);
    EXPECT_NEAR(w[1], std::exp(1.0) / (1.0 + std::exp(1.0)), 1e-15);
}

TEST(Stats, LinearFitRecoversLine) {
    const auto [a, b] = qc::linearFit({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
    EXPECT_NEAR(a, 1.0, 1e-14);
    EXPECT_NEAR(b, 2.0, 1e-14);
}
