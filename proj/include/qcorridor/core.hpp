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
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcorridor/errors.hpp"
#include "qcorridor/random.hpp"

namespace qcorridor {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Uniform grid t_i = t0 + i*dt, i = 0..steps.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;

    std::size_t points() const noexcept { return steps + 1; }
    double time(std::size_t i) const noexcept { return t0 + dt * static_cast<double>(i); }
    double end() const noexcept { return time(steps); }
    double duration() const noexcept { return dt * static_cast<double>(steps); }
};

inline bool sameGrid(const TimeGrid& a, const TimeGrid& b) noexcept {
    const double scale = std::max(std::abs(a.dt), std::abs(b.dt));
    return a.steps == b.steps && std::abs(a.dt - b.dt) <= 1e-12 * scale &&
           std::abs(a.t0 - b.t0) <= 1e-12 * std::max(1.0, scale);
}

namespace detail {

inline bool allFinite(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) {
            return false;
        }
    }
    return true;
}

inline bool allFinite(const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) {
                return false;
            }
        }
    }
    return true;
}

inline double hermiticityError(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

} // namespace detail

/// Pure state in the interaction-picture energy basis. The squared norm may
/// be below one: under selective evolution it is the readout probability.
class QuantumState {
public:
    static constexpr double kNormSlack = 1e-9;

    QuantumState() = default;

    static QuantumState fromAmplitudes(Vector amplitudes) {
        if (amplitudes.size() < 2) {
            throw InvalidSpec("state dimension must be at least 2");
        }
        if (!detail::allFinite(amplitudes)) {
            throw InvalidSpec("state amplitudes must be finite");
        }
        if (amplitudes.squaredNorm() > 1.0 + kNormSlack) {
            throw InvalidSpec("state squared norm exceeds 1");
        }
        QuantumState s;
        s.amps_ = std::move(amplitudes);
        return s;
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    static QuantumState normalizedFrom(const Vector& amplitudes) {
        const double n = amplitudes.norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw InvalidSpec("cannot normalize a zero or non-finite vector");
        }
        return fromAmplitudes(amplitudes / n);
    }

    static QuantumState basis(std::size_t dim, std::size_t level) {
        if (level >= dim) {
            throw InvalidSpec("basis level out of range");
        }
        Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
        v[static_cast<Eigen::Index>(level)] = 1.0;
        return fromAmplitudes(std::move(v));
    }

    /// sqrt(p1)|1> + sqrt(1-p1)|2>.
    static QuantumState twoLevel(double p1) {
        if (!(p1 >= 0.0 && p1 <= 1.0)) {
            throw InvalidSpec("population must lie in [0,1]");
        }
        Vector v(2);
        v << std::sqrt(p1), std::sqrt(1.0 - p1);
        return fromAmplitudes(std::move(v));
    }

    const Vector& amplitudes() const noexcept { return amps_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
    double normSquared() const { return amps_.squaredNorm(); }
    Complex amplitude(std::size_t n) const { return amps_[static_cast<Eigen::Index>(n)]; }

    /// |C_n|^2 / sum |C_m|^2.
    double population(std::size_t n) const {
        return std::norm(amps_[static_cast<Eigen::Index>(n)]) / amps_.squaredNorm();
    }

    QuantumState normalized() const { return normalizedFrom(amps_); }

private:
    Vector amps_;
};

struct DensityTolerance {
    double hermitian = 1e-10;
    double eigenvalue = 1e-9;
    double trace = 1e-9;
};

class DensityMatrix {
public:
    DensityMatrix() = default;

    static DensityMatrix fromMatrix(Matrix rho, DensityTolerance tol = {}) {
        if (rho.rows() != rho.cols() || rho.rows() < 2) {
            throw InvalidSpec("density matrix must be square with dimension >= 2");
        }
        if (!detail::allFinite(rho)) {
            throw InvalidSpec("density matrix must be finite");
        }
        if (detail::hermiticityError(rho) > tol.hermitian) {
            throw InvalidSpec("density matrix is not Hermitian");
        }
        const Matrix h = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -tol.eigenvalue) {
            throw InvalidSpec("density matrix has a negative eigenvalue");
        }
        const double tr = rho.trace().real();
        if (tr < -tol.trace || tr > 1.0 + tol.trace) {
            throw InvalidSpec("density matrix trace outside [0,1]");
        }
        DensityMatrix d;
        d.rho_ = std::move(rho);
        return d;
    }

    static DensityMatrix fromState(const QuantumState& psi) {
        const Vector& c = psi.amplitudes();
        return fromMatrix(c * c.adjoint());
    }

    const Matrix& elements() const noexcept { return rho_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(rho_.rows()); }
    Complex operator()(std::size_t i, std::size_t j) const {
        return rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    double trace() const { return rho_.trace().real(); }
    double purity() const { return (rho_ * rho_).trace().real(); }
    double minEigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (rho_ + rho_.adjoint()),
                                                  Eigen::EigenvaluesOnly);
        return eig.eigenvalues().minCoeff();
    }

private:
    Matrix rho_;
};

/// Interval during which the coupling is switched on. Half-open.
struct PulseWindow {
    double on = 0.0;
    double off = kInf;

    bool contains(double t) const noexcept { return t >= on && t < off; }
    double length() const noexcept { return off - on; }
};

class SystemSpec {
public:
    SystemSpec() = default;

    /// General spec; the coupling is active inside `window` (always when absent).
    static SystemSpec make(std::vector<double> levels, Matrix coupling,
                           std::optional<PulseWindow> window = std::nullopt) {
        if (levels.size() < 2) {
            throw InvalidSpec("at least two levels required");
        }
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (!std::isfinite(levels[i])) {
                throw InvalidSpec("levels must be finite");
            }
            if (i > 0 && !(levels[i] > levels[i - 1])) {
                throw InvalidSpec("levels must be strictly increasing");
            }
        }
        const auto d = static_cast<Eigen::Index>(levels.size());
        if (coupling.rows() != d || coupling.cols() != d) {
            throw ShapeError("coupling dimension does not match levels");
        }
        if (!detail::allFinite(coupling)) {
            throw InvalidSpec("coupling must be finite");
        }
        if (detail::hermiticityError(coupling) > 1e-12) {
            throw InvalidSpec("coupling must be Hermitian");
        }
        if (window && !(window->on <= window->off)) {
            throw InvalidSpec("pulse window must satisfy on <= off");
        }
        SystemSpec s;
        s.levels_ = std::move(levels);
        s.coupling_ = std::move(coupling);
        s.window_ = window;
        return s;
    }

    const std::vector<double>& levels() const noexcept { return levels_; }
    const Matrix& coupling() const noexcept { return coupling_; }
    const std::optional<PulseWindow>& window() const noexcept { return window_; }
    std::size_t dim() const noexcept { return levels_.size(); }

    RealVector energies() const {
        return Eigen::Map<const RealVector>(levels_.data(),
                                            static_cast<Eigen::Index>(levels_.size()));
    }

    bool couplingActive(double t) const noexcept { return !window_ || window_->contains(t); }

    /// Splits the step [t, t + dt) into {before, driven, after} durations
    /// around the pulse window, so an edge inside a step is resolved exactly.
    /// Slivers below 1e-9 dt are folded into their neighbours.
    std::array<double, 3> driveSegments(double t, double dt) const noexcept {
        if (!window_) {
            return {0.0, dt, 0.0};
        }
        const double a = std::clamp(window_->on, t, t + dt);
        const double b = std::clamp(window_->off, a, t + dt);
        std::array<double, 3> seg{a - t, b - a, t + dt - b};
        const double sliver = 1e-9 * dt;
        if (seg[1] < sliver) {
            return {dt, 0.0, 0.0};
        }
        if (seg[0] < sliver) {
            seg[1] += seg[0];
            seg[0] = 0.0;
        }
        if (seg[2] < sliver) {
            seg[1] += seg[2];
            seg[2] = 0.0;
        }
        if (seg[0] == 0.0 && seg[2] == 0.0) {
            seg[1] = dt;
        }
        return seg;
    }

    /// Length of the part of [t, t + dt) during which the coupling is on.
    double drivenTime(double t, double dt) const noexcept { return driveSegments(t, dt)[1]; }
    bool hasCoupling() const { return coupling_.cwiseAbs().maxCoeff() > 0.0; }

    /// Spacing of the two lowest levels.
    double deltaE() const noexcept { return levels_[1] - levels_[0]; }
    double midpoint() const noexcept { return 0.5 * (levels_.front() + levels_.back()); }

    /// |V_12|, the Rabi frequency of the resonant two-level drive.
    double rabiFrequency() const { return std::abs(coupling_(0, 1)); }

    /// T_R = pi/v, infinite without drive.
    double rabiPeriod() const {
        const double v = rabiFrequency();
        return v > 0.0 ? kPi / v : kInf;
    }

private:
    std::vector<double> levels_;
    Matrix coupling_;
    std::optional<PulseWindow> window_;
};

inline SystemSpec makeTwoLevelSystem(double deltaE, double v0, PulseWindow window) {
    if (!(deltaE > 0.0) || !std::isfinite(deltaE)) {
        throw InvalidSpec("deltaE must be positive");
    }
    if (!(v0 >= 0.0) || !std::isfinite(v0)) {
        throw InvalidSpec("v0 must be nonnegative");
    }
    Matrix v = Matrix::Zero(2, 2);
    v(0, 1) = v0;
    v(1, 0) = v0;
    return SystemSpec::make({-0.5 * deltaE, 0.5 * deltaE}, std::move(v), window);
}

/// Two-level system driven for the pi-pulse [0, T_R/2].
inline SystemSpec makePiPulseSystem(double deltaE, double v0) {
    return makeTwoLevelSystem(deltaE, v0, PulseWindow{0.0, 0.5 * kPi / v0});
}

class MeasurementSpec {
public:
    MeasurementSpec() = default;

    /// The step is shrunk, if needed, so that an integer number of steps
    /// covers [0, duration] exactly.
    static MeasurementSpec make(double kappa, double duration, double dt, double deltaE = 1.0) {
        if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
            throw InvalidSpec("kappa must be finite and nonnegative");
        }
        if (!(duration > 0.0) || !std::isfinite(duration)) {
            throw InvalidSpec("duration must be positive");
        }
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            throw InvalidSpec("dt must be positive");
        }
        if (!(deltaE > 0.0) || !std::isfinite(deltaE)) {
            throw InvalidSpec("deltaE must be positive");
        }
        const auto steps = static_cast<std::size_t>(std::ceil(duration / dt * (1.0 - 1e-12)));
        MeasurementSpec m;
        m.kappa_ = kappa;
        m.duration_ = duration;
        m.steps_ = std::max<std::size_t>(steps, 1);
        m.dt_ = duration / static_cast<double>(m.steps_);
        m.deltaE_ = deltaE;
        if (m.steps_ < 100) {
            throw ResolutionError("dt must be at most T/100");
        }
        if (kappa > 0.0 && m.dt_ > m.levelResolutionTime() / 20.0 * (1.0 + 1e-9)) {
            throw ResolutionError("dt must be at most T_lr/20");
        }
        return m;
    }

    double kappa() const noexcept { return kappa_; }
    double duration() const noexcept { return duration_; }
    double dt() const noexcept { return dt_; }
    double deltaE() const noexcept { return deltaE_; }
    std::size_t steps() const noexcept { return steps_; }
    TimeGrid grid() const noexcept { return TimeGrid{0.0, dt_, steps_}; }

    /// T_lr = 1/(kappa deltaE^2).
    double levelResolutionTime() const noexcept {
        return kappa_ > 0.0 ? 1.0 / (kappa_ * deltaE_ * deltaE_) : kInf;
    }

    MeasurementSpec withKappa(double kappa) const { return make(kappa, duration_, dt_, deltaE_); }
    MeasurementSpec withDt(double dt) const { return make(kappa_, duration_, dt, deltaE_); }
    MeasurementSpec withDuration(double duration) const {
        return make(kappa_, duration, dt_, deltaE_);
    }

private:
    double kappa_ = 0.0;
    double duration_ = 1.0;
    double dt_ = 0.01;
    double deltaE_ = 1.0;
    std::size_t steps_ = 100;
};

/// Step must resolve the Rabi period: dt <= T_R/50.
inline void checkResolution(const SystemSpec& sys, const MeasurementSpec& meas) {
    const double tr = sys.dim() == 2 ? sys.rabiPeriod() : kInf;
    if (std::isfinite(tr) && meas.dt() > tr / 50.0 * (1.0 + 1e-9)) {
        throw ResolutionError("dt must be at most T_R/50");
    }
}

/// Real series on a uniform grid, one value per grid point.
class ReadoutTrajectory {
public:
    ReadoutTrajectory() = default;

    ReadoutTrajectory(TimeGrid grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (!(grid_.dt > 0.0)) {
            throw InvalidSpec("readout grid step must be positive");
        }
        if (values_.size() != grid_.points()) {
            throw ShapeError("readout has " + std::to_string(values_.size()) +
                             " values for " + std::to_string(grid_.points()) + " grid points");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) {
                throw InvalidSpec("readout values must be finite");
            }
        }
    }

    static ReadoutTrajectory constant(const MeasurementSpec& meas, double value) {
        return ReadoutTrajectory(meas.grid(), std::vector<double>(meas.steps() + 1, value));
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }

    bool matches(const MeasurementSpec& meas) const { return sameGrid(grid_, meas.grid()); }

private:
    TimeGrid grid_;
    std::vector<double> values_;
};

/// Brownian increments dw_i over [t_i, t_{i+1}).
class NoisePath {
public:
    NoisePath() = default;

    NoisePath(TimeGrid grid, std::vector<double> increments)
        : grid_(grid), increments_(std::move(increments)) {
        if (increments_.size() != grid_.steps) {
            throw ShapeError("noise path needs one increment per step");
        }
        for (double v : increments_) {
            if (!std::isfinite(v)) {
                throw InvalidSpec("noise increments must be finite");
            }
        }
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& increments() const noexcept { return increments_; }
    double operator[](std::size_t i) const { return increments_[i]; }
    std::size_t size() const noexcept { return increments_.size(); }

private:
    TimeGrid grid_;
    std::vector<double> increments_;
};

inline NoisePath sampleNoisePath(const TimeGrid& grid, std::uint64_t seed) {
    if (!(grid.dt > 0.0)) {
        throw PreconditionViolation("noise path requires dt > 0");
    }
    Rng rng = makeRng(seed);
    const double sd = std::sqrt(grid.dt);
    std::vector<double> dw(grid.steps);
    for (auto& x : dw) {
        x = sd * standardNormal(rng);
    }
    return NoisePath(grid, std::move(dw));
}

inline NoisePath sampleNoisePath(const MeasurementSpec& meas, std::uint64_t seed) {
    return sampleNoisePath(meas.grid(), seed);
}

} // namespace qcorridor
