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

#include "oracles.hpp"
#include "qcorridor/qcorridor.hpp"

namespace qc = qcorridor;

namespace {

qc::ClassificationRule rule() {
    qc::ClassificationRule r;
    r.lower = -0.5;
    r.upper = 0.5;
    r.band = 0.25;
    r.dwellPoints = 5;
    return r;
}

} // namespace

TEST(Classify, StepUpIsTransition) {
    std::vector<double> s(40, -0.5);
    for (std::size_t i = 20; i < 40; ++i) {
        s[i] = 0.5;
    }
    EXPECT_EQ(qc::classifyReadout(s, rule()), qc::ReadoutClass::Transition);
}

TEST(Classify, StayingLowIsNoTransition) {
    EXPECT_EQ(qc::classifyReadout(std::vector<double>(40, -0.45), rule()), qc::ReadoutClass::NoTransition);
}

TEST(Classify, ExcursionThatReturnsIsNoTransition) {
    std::vector<double> s(40, -0.5);
    for (std::size_t i = 10; i < 20; ++i) {
        s[i] = 0.5;
    }
    EXPECT_EQ(qc::classifyReadout(s, rule()), qc::ReadoutClass::NoTransition);
}

TEST(Classify, ShortVisitOrMiddleIsAmbiguous) {
    std::vector<double> s(40, 0.0);
    EXPECT_EQ(qc::classifyReadout(s, rule()), qc::ReadoutClass::Ambiguous);
    std::vector<double> blip(40, -0.5);
    for (std::size_t i = 36; i < 40; ++i) {
        blip[i] = 0.5;
    }
    EXPECT_EQ(qc::classifyReadout(blip, rule()), qc::ReadoutClass::Ambiguous);
}

TEST(Classify, NeverLowButHighIsAmbiguous) {
    // A transition needs the lower band to be visited first.
    EXPECT_EQ(qc::classifyReadout(std::vector<double>(40, 0.5), rule()), qc::ReadoutClass::Ambiguous);
}

TEST(Regime, LabelsFollowTimeScales) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.5, {0.0, qc::kInf});
    const double tr = sys.rabiPeriod();
    auto label = [&](double tlr, double t) {
        const double kappa = 1.0 / tlr;
        return qc::classifyRegime(qc::MeasurementSpec::make(kappa, t, std::min(tlr / 20.0, t / 100.0)), sys).label;
    };
    EXPECT_EQ(label(0.05 * tr, 20.0 * tr), qc::Regime::Zeno);
    EXPECT_EQ(label(50.0 * tr, 5.0 * tr), qc::Regime::Unclassified);
    EXPECT_EQ(label(200.0 * tr, 15.0 * tr), qc::Regime::Rabi);
    EXPECT_EQ(label(tr, tr), qc::Regime::Intermediate);
    EXPECT_EQ(label(1.9 * tr, 0.6 * tr), qc::Regime::Unclassified);
}

TEST(Bin, AveragesAndClamps) {
    const qc::TimeGrid g{0.0, 0.1, 8};
    const qc::ReadoutTrajectory r(g, {1.0, 3.0, 10.0, 10.0, -0.5, -0.5, 0.2, 0.4, 9.0});
    const auto b = qc::binReadout(r, 2, -0.5, 0.5);
    ASSERT_EQ(b.size(), 4u);
    EXPECT_NEAR(b[0], 1.5, 1e-15);
    EXPECT_NEAR(b[1], 1.5, 1e-15);
    EXPECT_NEAR(b[2], -0.5, 1e-15);
    EXPECT_NEAR(b[3], 0.3, 1e-15);
    EXPECT_NEAR(b.grid().dt, 0.2, 1e-15);
}

TEST(Monitor, UnmeasuredPiPulseAlwaysTransfers) {
    const auto sys = qc::makePiPulseSystem(1.0, 0.5);
    const auto meas = qc::MeasurementSpec::make(0.0, sys.rabiPeriod(), 0.01);
    const auto rep = qc::runMonitoringExperiment(sys, meas, 20, 1);
    EXPECT_NEAR(rep.pTransition.value, 1.0, 1e-9);
    EXPECT_NEAR(rep.verdictTransition.value, 1.0, 1e-12);
}

TEST(Monitor, WeakMeasurementLeavesRabiCurve) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.5, {0.0, qc::kInf});
    const double tr = sys.rabiPeriod();
    const double kappa = 1.0 / (50.0 * tr);
    const auto meas = qc::MeasurementSpec::make(kappa, 5.0 * tr, 0.01);
    qc::MonitorOptions o;
    o.threads = 2;
    const auto rep = qc::runMonitoringExperiment(sys, meas, 300, 8, o);
    EXPECT_LT(qc::supDeviationFromRabi(rep.meanP2, meas.grid(), 0.5), 0.05);
    EXPECT_NEAR(qc::fitOscillationPeriod(rep.meanP2, meas.grid()), tr, 0.02 * tr);
}

TEST(Monitor, ThreadCountDoesNotChangeReport) {
    const auto sys = qc::makePiPulseSystem(1.0, 0.5);
    const auto meas = qc::MeasurementSpec::make(0.5, sys.rabiPeriod(), 0.01);
    qc::MonitorOptions a;
    a.threads = 1;
    qc::MonitorOptions b;
    b.threads = 4;
    const auto r1 = qc::runMonitoringExperiment(sys, meas, 40, 9, a);
    const auto r2 = qc::runMonitoringExperiment(sys, meas, 40, 9, b);
    EXPECT_EQ(r1.pTransition.value, r2.pTransition.value);
    EXPECT_EQ(r1.fidelity.value, r2.fidelity.value);
    EXPECT_EQ(r1.meanP2, r2.meanP2);
}

TEST(Monitor, RequiresDrivenTwoLevelSystem) {
    const auto sys = qc::makeTwoLevelSystem(1.0, 0.0, {0.0, qc::kInf});
    const auto meas = qc::MeasurementSpec::make(0.5, 5.0, 0.01);
    EXPECT_THROW(qc::runMonitoringExperiment(sys, meas, 10, 1), qc::PreconditionViolation);
}

TEST(Monitor, OscillationPeriodOfSineSquared) {
    const qc::TimeGrid g{0.0, 0.01, 1000};
    std::vector<double> c(g.points());
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = oracle::rabiP2(0.8, g.time(i));
    }
    EXPECT_NEAR(qc::fitOscillationPeriod(c, g), M_PI / 0.8, 1e-4);
}

TEST(ZenoScan, UnmeasuredRowIsCertainAndScanDecreases) {
    const auto sys = qc::makePiPulseSystem(1.0, 0.5);
    const auto meas = qc::MeasurementSpec::make(0.0, sys.rabiPeriod(), 0.01);
    qc::ZenoScanOptions o;
    o.monitor.threads = 2;
    o.nProj = {2, 10};
    o.projectiveRuns = 2000;
    const auto t = qc::zenoScan(sys, meas, {0.0, 1.0, 5.0, 20.0}, 200, 3, o);
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_NEAR(t.rows[0].pTransition.value, 1.0, 1e-9);
    EXPECT_TRUE(qc::monotoneNonIncreasing(t.rows));
    EXPECT_LT(t.rows.back().pTransition.value, 0.2);
    EXPECT_LE(t.rows.back().dt, 1.0 / 20.0 / 20.0 + 1e-12);
    ASSERT_EQ(t.projective.size(), 2u);
    EXPECT_NEAR(t.projective[0].exact, 0.25, 1e-15);
}

TEST(ZenoScan, MonotoneCheckUsesStandardErrors) {
    std::vector<qc::ZenoRow> rows(3);
    rows[0].pTransition = {0.9, 0.01};
    rows[1].pTransition = {0.92, 0.01};
    rows[2].pTransition = {0.5, 0.01};
    EXPECT_TRUE(qc::monotoneNonIncreasing(rows));
    rows[1].pTransition = {0.99, 0.01};
    EXPECT_FALSE(qc::monotoneNonIncreasing(rows));
}
