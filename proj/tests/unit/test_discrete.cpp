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

#include <gtest/gtest.h>

#include "qcorridor/qcorridor.hpp"

namespace qc = qcorridor;

TEST(Instrument, Validation) {
    EXPECT_THROW(qc::TwoOutcomeInstrument::make({0.2}, 0.1), qc::InvalidSpec);
    EXPECT_THROW(qc::TwoOutcomeInstrument::make({0.2, 1.2}, 0.1), qc::InvalidSpec);
    EXPECT_THROW(qc::TwoOutcomeInstrument::make({0.2, 0.4}, 0.0), qc::InvalidSpec);
    EXPECT_THROW(qc::SoftMeter::make({0.0, 0.4}, 0.1), qc::InvalidSpec);
    EXPECT_THROW(qc::SoftMeter::make({0.1, 0.9}, 0.1), qc::InvalidSpec);
    EXPECT_NO_THROW(qc::SoftMeter::make({0.45, 0.55}, 0.1));
}

TEST(Instrument, ChannelDephasesByOverlap) {
    const auto inst = qc::TwoOutcomeInstrument::make({0.3, 0.6}, 0.05);
    const qc::Matrix rho = qc::DensityMatrix::fromState(qc::QuantumState::twoLevel(0.5)).elements();
    // Kraus sum by hand: M+ = diag(sqrt p), M- = diag(sqrt(1-p)).
    qc::Matrix mp = qc::Matrix::Zero(2, 2);
    qc::Matrix mm = qc::Matrix::Zero(2, 2);
    mp(0, 0) = std::sqrt(0.3);
    mp(1, 1) = std::sqrt(0.6);
    mm(0, 0) = std::sqrt(0.7);
    mm(1, 1) = std::sqrt(0.4);
    const qc::Matrix expect = mp * rho * mp.adjoint() + mm * rho * mm.adjoint();
    const qc::Matrix got = qc::applyInstrumentChannel(rho, inst);
    EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(std::abs(got(0, 1)) / std::abs(rho(0, 1)), inst.overlap(), 1e-15);
    EXPECT_NEAR(inst.kappaEffective(1.0), -2.0 * std::log(inst.overlap()) / 0.05, 1e-12);
}

TEST(SoftMeter, ForKappaRoundTrip) {
    for (double kappa : {0.05, 0.5, 2.0}) {
        for (double pBar : {0.3, 0.5, 0.7}) {
            const auto m = qc::SoftMeter::forKappa(kappa, 0.01, 1.0, pBar);
            EXPECT_NEAR(m.kappaEffective(1.0), kappa, 1e-9 * kappa);
            EXPECT_NEAR(0.5 * (m.pPositive()[0] + m.pPositive()[1]), pBar, 1e-12);
        }
    }
}

TEST(SoftMeter, MatchesMasterEquationRate) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.0, {0.0, qc::kInf});
    const auto meter = qc::SoftMeter::forKappa(1.0, 0.01);
    const auto rep = qc::matchEffectiveKappa(meter, sys, 4000, 12, 2);
    EXPECT_NEAR(rep.predictedRate, 0.5, 1e-9);
    EXPECT_LT(rep.relativeDeviation, 0.05);
}

TEST(SoftMeter, NonInvertibleWhenBlind) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.5, {0.0, qc::kInf});
    const auto blind = qc::TwoOutcomeInstrument::make({0.4, 0.4}, 0.01);
    qc::Rng rng = qc::makeRng(3);
    const auto run = qc::softObservationRun(sys, blind, 2.0, qc::QuantumState::basis(2, 0), rng);
    EXPECT_THROW(qc::reconstructReadout(run.record, blind, sys, 10), qc::NonInvertibleMeter);
}

TEST(SoftMeter, EstimatesTrackTheLevel) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.0, {0.0, qc::kInf});
    const auto meter = qc::SoftMeter::make({0.3, 0.7}, 0.01);
    qc::Rng rng = qc::makeRng(5);
    const auto run = qc::softObservationRun(sys, meter.instrument(), 40.0, qc::QuantumState::basis(2, 1), rng);
    ASSERT_EQ(run.record.outcomes.size(), 4000u);
    double plus = 0.0;
    for (auto o : run.record.outcomes) {
        plus += o;
    }
    EXPECT_NEAR(plus / 4000.0, 0.7, 4.0 * std::sqrt(0.21 / 4000.0));
    const auto est = qc::reconstructReadout(run.record, meter, sys, 100);
    double mean = 0.0;
    for (double x : est.values()) {
        mean += x;
    }
    mean /= static_cast<double>(est.size());
    EXPECT_NEAR(mean, 0.5, 0.15);
}

TEST(SoftMeter, UnmeasuredLimitIsRabi) {
    const auto sys = qc::makePiPulseSystem(1.0, 0.5);
    const auto blind = qc::TwoOutcomeInstrument::make({0.5, 0.5}, 0.0123);
    qc::Rng rng = qc::makeRng(1);
    const auto run = qc::softObservationRun(sys, blind, sys.rabiPeriod(), qc::QuantumState::basis(2, 0), rng);
    EXPECT_NEAR(run.finalState.population(1), 1.0, 1e-12);
}

TEST(SoftMeter, MonitoringIsThreadInvariant) {
    const auto sys = qc::makePiPulseSystem(1.0, 0.5);
    const auto meter = qc::SoftMeter::forKappa(0.3, 0.01);
    qc::SoftMonitorOptions a;
    a.seriesLength = 20;
    a.threads = 1;
    qc::SoftMonitorOptions b = a;
    b.threads = 3;
    const auto r1 = qc::runSoftMeterMonitoring(sys, meter, sys.rabiPeriod(), 50, 4, a);
    const auto r2 = qc::runSoftMeterMonitoring(sys, meter, sys.rabiPeriod(), 50, 4, b);
    EXPECT_EQ(r1.pTransition.value, r2.pTransition.value);
    EXPECT_EQ(r1.ambiguousFraction.value, r2.ambiguousFraction.value);
}
