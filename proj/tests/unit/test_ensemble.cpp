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


#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qcorridor/qcorridor.hpp"

namespace qc = qcorridor;

TEST(Ensemble, InstrumentMeasureNormalizesOneStepProbability) {
    // integral m exp(-2 k (E_n - E)^2 dt) dE = 1 for each level.
    const double kappa = 0.7;
    const double dt = 0.01;
    const qc::InstrumentMeasure m{kappa, dt};
    const double integral = oracle::simpson(
        [&](double e) { return m.perStepNormalizer() * std::exp(-2.0 * kappa * e * e * dt); }, -200.0,
        200.0, 20000);
    EXPECT_NEAR(integral, 1.0, 1e-12);
    EXPECT_NEAR(m.levelSpread(), 1.0 / std::sqrt(4.0 * kappa * dt), 1e-15);
}

TEST(Ensemble, OneStepCompletenessHolds) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.5, {0.0, qc::kInf});
    EXPECT_LT(qc::oneStepCompleteness(sys, 1.0, 1e-3), 1e-10);
    EXPECT_LT(qc::oneStepCompleteness(sys, 0.0, 1e-3), 1e-12);
    const auto three = qc::SystemSpec::make({-1.0, 0.0, 1.0}, qc::Matrix::Zero(3, 3));
    EXPECT_LT(qc::oneStepCompleteness(three, 2.0, 1e-3), 1e-10);
}

TEST(Ensemble, BornRuleFromTimeAverages) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.0, {0.0, qc::kInf});
    const auto meas = qc::MeasurementSpec::make(1.0, 10.0, 0.01);
    qc::SampleOptions opts;
    opts.keepP2History = false;
    opts.threads = 2;
    const auto ens = qc::sampleReadouts(sys, meas, 1500, 21, qc::QuantumState::twoLevel(0.3), opts);
    std::vector<double> near1;
    for (const auto& s : ens.samples) {
        near1.push_back(qc::timeAverage(s.readout) < 0.0 ? 1.0 : 0.0);
    }
    const auto p = qc::weightedProportion(ens.weights(), near1);
    EXPECT_LT(std::abs(p.value - 0.3), 4.0 * p.se);
    EXPECT_LT(std::abs(ens.totalMass.value - 1.0), 4.0 * ens.totalMass.se + 1e-9);
}

TEST(Ensemble, IidProposalWeightsMatchDirectFormula) {
    // log w = log P[E] + sum_i [log m - log q(E_i)] with q the fixed Gaussian
    // proposal centred between the levels.
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.5, {0.0, qc::kInf});
    const double kappa = 1.0;
    const auto meas = qc::MeasurementSpec::make(kappa, 1.0, 0.01);
    qc::SampleOptions opts;
    opts.proposal = qc::Proposal::IidGaussian;
    const auto init = qc::QuantumState::basis(2, 0);
    const auto ens = qc::sampleReadouts(sys, meas, 20, 5, init, opts);
    const double dt = meas.dt();
    const double sd = std::max(1.0, 1.0 / std::sqrt(2.0 * kappa * dt));
    const double logM = 0.5 * std::log(2.0 * kappa * dt / M_PI);
    for (const auto& s : ens.samples) {
        const auto sel = qc::propagateSelective(sys, meas, s.readout, init);
        double logw = sel.logNormSquared;
        for (std::size_t i = 0; i < meas.steps(); ++i) {
            const double z = s.readout[i] / sd;
            logw += logM + 0.5 * std::log(2.0 * M_PI * sd * sd) + 0.5 * z * z;
        }
        EXPECT_NEAR(s.logImportanceWeight, logw, 1e-9 * std::max(1.0, std::abs(logw)));
        EXPECT_NEAR(s.logProbabilityDensity, sel.logNormSquared, 1e-9);
    }
}

TEST(Ensemble, GeneralizedUnitarityMonteCarlo) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.5, {0.0, qc::kInf});
    const auto meas = qc::MeasurementSpec::make(1.0, 2.0, 0.01);
    const auto rep = qc::checkGeneralizedUnitarity(sys, meas, 2000, 13, {.threads = 2});
    EXPECT_TRUE(rep.pass) << "maxZ " << rep.maxZ;
    EXPECT_LT(rep.maxDeviation, 0.1);
}

TEST(Ensemble, SeedAndThreadsDetermineSamples) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.5, {0.0, qc::kInf});
    const auto meas = qc::MeasurementSpec::make(0.5, 2.0, 0.01);
    qc::SampleOptions a;
    a.threads = 1;
    qc::SampleOptions b;
    b.threads = 3;
    const auto e1 = qc::sampleReadouts(sys, meas, 20, 77, qc::QuantumState::basis(2, 0), a);
    const auto e2 = qc::sampleReadouts(sys, meas, 20, 77, qc::QuantumState::basis(2, 0), b);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(e1.samples[i].readout.values(), e2.samples[i].readout.values());
        EXPECT_EQ(e1.samples[i].logImportanceWeight, e2.samples[i].logImportanceWeight);
    }
}

TEST(Ensemble, SmoothingPreservesLinesAndConstants) {
    const qc::TimeGrid g{0.0, 0.01, 200};
    std::vector<double> lin(g.points());
    for (std::size_t i = 0; i < lin.size(); ++i) {
        lin[i] = 2.0 + 3.0 * g.time(i);
    }
    const auto s = qc::smoothReadout(qc::ReadoutTrajectory(g, lin), 0.2);
    for (std::size_t i = 10; i + 10 < lin.size(); ++i) {
        EXPECT_NEAR(s[i], lin[i], 1e-12);
    }
    const auto c = qc::smoothReadout(qc::ReadoutTrajectory(g, std::vector<double>(g.points(), 1.5)), 0.5);
    for (double x : c.values()) {
        EXPECT_NEAR(x, 1.5, 1e-12);
    }
    EXPECT_THROW(qc::smoothReadout(qc::ReadoutTrajectory(g, lin), 0.01), qc::PreconditionViolation);
}

TEST(Ensemble, DensityDiagramColumnsSumToOne) {
    const qc::TimeGrid g{0.0, 0.1, 10};
    std::vector<std::vector<double>> curves{std::vector<double>(11, 0.2), std::vector<double>(11, 0.8)};
    const auto dd = qc::densityDiagram(g, curves, {0.25, 0.75}, 5, 4, 0.0, 1.0);
    ASSERT_EQ(dd.mass.size(), 5u);
    for (const auto& col : dd.mass) {
        double s = 0.0;
        for (double x : col) {
            s += x;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
        EXPECT_NEAR(col[0], 0.25, 1e-12);
        EXPECT_NEAR(col[3], 0.75, 1e-12);
    }
}
