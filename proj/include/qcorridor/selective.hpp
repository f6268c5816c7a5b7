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
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcorridor/core.hpp"

namespace qcorridor {

/// exp(-i V t) for Hermitian V.
inline Matrix unitaryPropagator(const Matrix& v, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (v + v.adjoint()));
    const Matrix& q = eig.eigenvectors();
    Vector phases(eig.eigenvalues().size());
    for (Eigen::Index i = 0; i < phases.size(); ++i) {
        phases[i] = std::exp(Complex(0.0, -eig.eigenvalues()[i] * t));
    }
    return q * phases.asDiagonal() * q.adjoint();
}

/// One-step propagator of dC/dt = -kappa (E_n - E)^2 C - i V C with the readout
/// E held constant over the step.
///
/// The scalar part kappa (E_ref - E)^2 of the penalty is applied exactly and
/// RK4 integrates the remainder, which stays O(kappa |E| dt) even for the
/// wide readout excursions produced by the sampler. Columns are kept at unit
/// Frobenius norm and the log of the squared-norm factor is returned, so the
/// readout probability never underflows.
class SelectiveStepper {
public:
    static constexpr double kGrowthTolerance = 1e-12;
    static constexpr int kMaxRefinement = 8;

    SelectiveStepper(const SystemSpec& sys, double kappa, double dt)
        : sys_(&sys), kappa_(kappa), dt_(dt), energies_(sys.energies()),
          eRef_(sys.midpoint()) {
        if (kappa_ == 0.0) {
            unitary_ = unitaryPropagator(sys.coupling(), dt_);
        }
    }

    double kappa() const noexcept { return kappa_; }
    double dt() const noexcept { return dt_; }

    /// Advances `c` from t to t + dt with readout value e. `c` must have unit
    /// Frobenius norm on entry and has it again on exit. Returns the log of
    /// the squared-norm factor, or NaN if the step produced non-finite values.
    double step(Matrix& c, double t, double e) {
        const auto seg = sys_->driveSegments(t, dt_);
        if (kappa_ == 0.0) {
            if (seg[1] == dt_) {
                work_.noalias() = unitary_ * c;
                c.swap(work_);
            } else if (seg[1] > 0.0) {
                work_.noalias() = unitaryPropagator(sys_->coupling(), seg[1]) * c;
                c.swap(work_);
            }
            return renormalize(c, 0.0);
        }

        const double scalarLog = -2.0 * kappa_ * (eRef_ - e) * (eRef_ - e) * dt_;
        const auto d = static_cast<Eigen::Index>(energies_.size());
        free_.setZero(d, d);
        for (Eigen::Index n = 0; n < d; ++n) {
            const double en = energies_[n];
            free_(n, n) = -kappa_ * (en - eRef_) * (en + eRef_ - 2.0 * e);
        }
        if (seg[1] > 0.0) {
            driven_ = free_ + Complex(0.0, -1.0) * sys_->coupling();
        }
        const bool coupled = sys_->hasCoupling();

        start_ = c;
        for (int k = 0; k <= kMaxRefinement; ++k) {
            const int sub = 1 << k;
            c = start_;
            for (int j = 0; j < 3; ++j) {
                if (seg[j] <= 0.0) {
                    continue;
                }
                if (j != 1 || !coupled) {
                    // Undriven: the generator is diagonal, so exponentiate it.
                    for (Eigen::Index n = 0; n < d; ++n) {
                        c.row(n) *= std::exp(free_(n, n).real() * seg[j]);
                    }
                    continue;
                }
                const double h = seg[j] / sub;
                for (int s = 0; s < sub; ++s) {
                    taylor4(driven_, c, h);
                }
            }
            const double grown = c.squaredNorm();
            if (!std::isfinite(grown)) {
                return std::numeric_limits<double>::quiet_NaN();
            }
            // The exact step never increases the norm; RK4 truncation may.
            if (std::log(grown) + scalarLog <= std::log1p(kGrowthTolerance)) {
                return renormalize(c, scalarLog);
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

private:
    // Classic RK4 for a constant linear generator, in Horner form.
    void taylor4(const Matrix& gen, Matrix& c, double h) {
        work_ = c;
        for (double f : {0.25, 1.0 / 3.0, 0.5, 1.0}) {
            tmp_.noalias() = gen * work_;
            work_ = c + (f * h) * tmp_;
        }
        c.swap(work_);
    }

    static double renormalize(Matrix& c, double logFactor) {
        const double n2 = c.squaredNorm();
        if (!(n2 > 0.0) || !std::isfinite(n2)) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        c /= std::sqrt(n2);
        return logFactor + std::log(n2);
    }

    const SystemSpec* sys_;
    double kappa_;
    double dt_;
    RealVector energies_;
    double eRef_;
    Matrix unitary_;
    Matrix free_;
    Matrix driven_;
    Matrix start_;
    Matrix work_;
    Matrix tmp_;
};

struct SelectiveRunResult {
    QuantumState finalState;
    /// P[E] = |psi_T|^2.
    double normSquared = 1.0;
    /// log P[E], finite even when P[E] underflows.
    double logNormSquared = 0.0;
    /// P_2(t) = |C_2|^2 / sum |C_n|^2 at every grid point.
    std::vector<double> p2History;
    /// log |psi(t_i)|^2 at every grid point.
    std::vector<double> logNormHistory;
    /// Normalized conditional states; their norms are in logNormHistory.
    std::optional<std::vector<QuantumState>> stateHistory;
};

struct SelectiveOptions {
    bool storeStates = false;
};

namespace detail {

inline void checkSelectiveInputs(const SystemSpec& sys, const MeasurementSpec& meas,
                                 const ReadoutTrajectory& readout,
                                 const QuantumState& initial) {
    if (!readout.matches(meas)) {
        throw ShapeError("readout grid does not match the measurement grid");
    }
    if (initial.dim() != sys.dim()) {
        throw ShapeError("initial state dimension does not match the system");
    }
    if (std::abs(initial.normSquared() - 1.0) > 1e-9) {
        throw PreconditionViolation("initial state must be normalized");
    }
    checkResolution(sys, meas);
}

inline QuantumState scaledState(const Matrix& unit, double logNorm2) {
    return QuantumState::fromAmplitudes(Vector(unit.col(0) * std::exp(0.5 * logNorm2)));
}

} // namespace detail

inline SelectiveRunResult propagateSelective(const SystemSpec& sys, const MeasurementSpec& meas,
                                             const ReadoutTrajectory& readout,
                                             const QuantumState& initial,
                                             SelectiveOptions options = {}) {
    detail::checkSelectiveInputs(sys, meas, readout, initial);

    SelectiveStepper stepper(sys, meas.kappa(), meas.dt());
    const TimeGrid grid = meas.grid();
    Matrix c = initial.amplitudes();
    double logNorm2 = std::log(c.squaredNorm());
    c /= c.norm();

    SelectiveRunResult out;
    out.p2History.reserve(grid.points());
    out.logNormHistory.reserve(grid.points());
    if (options.storeStates) {
        out.stateHistory.emplace();
        out.stateHistory->reserve(grid.points());
    }
    auto record = [&] {
        out.p2History.push_back(std::norm(c(1, 0)));
        out.logNormHistory.push_back(logNorm2);
        if (options.storeStates) {
            out.stateHistory->push_back(QuantumState::fromAmplitudes(Vector(c.col(0))));
        }
    };

    record();
    for (std::size_t i = 0; i < grid.steps; ++i) {
        const double dl = stepper.step(c, grid.time(i), readout[i]);
        if (!std::isfinite(dl)) {
            throw NumericFailure("selective-dynamics", i, "non-finite or growing amplitude");
        }
        logNorm2 += dl;
        record();
    }

    out.logNormSquared = logNorm2;
    out.normSquared = std::exp(logNorm2);
    out.finalState = detail::scaledState(c, logNorm2);
    return out;
}

/// Closed-form Rabi solution of the unmeasured resonant two-level system.
inline std::pair<Complex, Complex> rabiSolution(double v, double t,
                                                std::pair<Complex, Complex> c0) {
    const double cs = std::cos(v * t);
    const Complex is(0.0, std::sin(v * t));
    return {c0.first * cs - is * c0.second, c0.second * cs - is * c0.first};
}

/// Exact solution for V = 0. The exponent integrates the piecewise-constant
/// readout exactly, matching the convention of the propagator.
inline QuantumState freeSystemClosedForm(const SystemSpec& sys, const MeasurementSpec& meas,
                                         const ReadoutTrajectory& readout,
                                         const QuantumState& initial) {
    if (sys.hasCoupling()) {
        throw PreconditionViolation("closed form requires V = 0");
    }
    if (!readout.matches(meas)) {
        throw ShapeError("readout grid does not match the measurement grid");
    }
    if (initial.dim() != sys.dim()) {
        throw ShapeError("initial state dimension does not match the system");
    }
    Vector c = initial.amplitudes();
    const auto& e = sys.levels();
    for (std::size_t n = 0; n < e.size(); ++n) {
        double integral = 0.0;
        for (std::size_t i = 0; i < meas.steps(); ++i) {
            const double d = e[n] - readout[i];
            integral += d * d;
        }
        c[static_cast<Eigen::Index>(n)] *= std::exp(-meas.kappa() * integral * meas.dt());
    }
    return QuantumState::fromAmplitudes(std::move(c));
}

} // namespace qcorridor
