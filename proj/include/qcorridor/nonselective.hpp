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
#include <cstddef>
#include <optional>
#include <vector>

#include "qcorridor/core.hpp"
#include "qcorridor/ensemble.hpp"
#include "qcorridor/stats.hpp"

namespace qcorridor {

struct LindbladResult {
    TimeGrid grid;
    /// rho(t_i) at every grid point.
    std::vector<DensityMatrix> series;

    const DensityMatrix& final() const { return series.back(); }
};

/// drho/dt = -i[V, rho] - kappa/2 [A, [A, rho]], A = H0, in the interaction
/// picture. Classic RK4; a step straddling a pulse edge is split there.
inline LindbladResult propagateLindblad(const SystemSpec& sys, const MeasurementSpec& meas,
                                        const DensityMatrix& initial) {
    if (initial.dim() != sys.dim()) {
        throw ShapeError("density matrix dimension does not match the system");
    }
    const TimeGrid grid = meas.grid();
    const auto d = static_cast<Eigen::Index>(sys.dim());
    const RealVector e = sys.energies();
    Eigen::MatrixXd dephase(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            dephase(i, j) = 0.5 * meas.kappa() * (e[i] - e[j]) * (e[i] - e[j]);
        }
    }
    const Matrix& v = sys.coupling();
    const Complex mi(0.0, -1.0);

    auto rhs = [&](const Matrix& rho, bool driven) {
        Matrix out = -dephase.cast<Complex>().cwiseProduct(rho);
        if (driven) {
            out += mi * (v * rho - rho * v);
        }
        return out;
    };

    LindbladResult res;
    res.grid = grid;
    res.series.reserve(grid.points());
    res.series.push_back(initial);
    const DensityTolerance tol{1e-9, 1e-8, 1e-9};
    Matrix rho = initial.elements();
    const double h = grid.dt;
    auto rk4 = [&](double s, bool driven) {
        const Matrix k1 = rhs(rho, driven);
        const Matrix k2 = rhs(rho + 0.5 * s * k1, driven);
        const Matrix k3 = rhs(rho + 0.5 * s * k2, driven);
        const Matrix k4 = rhs(rho + s * k3, driven);
        rho += (s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    for (std::size_t i = 0; i < grid.steps; ++i) {
        const auto seg = sys.driveSegments(grid.time(i), h);
        for (int k = 0; k < 3; ++k) {
            if (seg[k] > 0.0) {
                rk4(seg[k], k == 1);
            }
        }
        if (!detail::allFinite(rho)) {
            throw NumericFailure("nonselective-dynamics", i, "non-finite density matrix");
        }
        rho = 0.5 * (rho + rho.adjoint()).eval();
        res.series.push_back(DensityMatrix::fromMatrix(rho, tol));
    }
    return res;
}

struct SelectiveAverageReport {
    MatrixEstimate rho;
    Matrix lindblad;
    double maxDeviation = 0.0;
    /// Largest elementwise deviation in standard errors.
    double maxZ = 0.0;
};

/// Importance-weighted average of the conditional final states against the
/// Lindblad solution at T.
inline SelectiveAverageReport averageSelectiveToLindblad(const SystemSpec& sys,
                                                         const MeasurementSpec& meas,
                                                         const WeightedEnsemble& ensemble,
                                                         const QuantumState& initial) {
    ensemble.requireNormalized();
    std::vector<Matrix> terms;
    terms.reserve(ensemble.samples.size());
    for (const auto& s : ensemble.samples) {
        const Vector& c = s.finalState.amplitudes();
        terms.push_back(c * c.adjoint());
    }
    SelectiveAverageReport rep;
    rep.rho = averageMatrices(terms, ensemble.weights());
    rep.lindblad = propagateLindblad(sys, meas, DensityMatrix::fromState(initial)).final().elements();
    rep.maxDeviation = rep.rho.maxDeviation(rep.lindblad);
    rep.maxZ = rep.rho.maxZ(rep.lindblad, 1e-10);
    return rep;
}

/// Rate r of |f(t)| ~ exp(-r t) by least squares on log |f|.
inline double fitDecayRate(const std::vector<double>& times, const std::vector<double>& magnitudes) {
    std::vector<double> logs;
    logs.reserve(magnitudes.size());
    for (double m : magnitudes) {
        logs.push_back(std::log(m));
    }
    return -linearFit(times, logs).second;
}

/// n environment bits; each is rotated by theta when the system is in |2>.
class EnvironmentModel {
public:
    static EnvironmentModel make(std::size_t nBits, double couplingAngle) {
        if (nBits < 1) {
            throw InvalidSpec("environment needs at least one bit");
        }
        if (!(couplingAngle > 0.0 && couplingAngle <= 0.5 * kPi)) {
            throw InvalidSpec("coupling angle must lie in (0, pi/2]");
        }
        EnvironmentModel m;
        m.nBits_ = nBits;
        m.theta_ = couplingAngle;
        return m;
    }

    std::size_t nBits() const noexcept { return nBits_; }
    double couplingAngle() const noexcept { return theta_; }

private:
    std::size_t nBits_ = 1;
    double theta_ = 0.5 * kPi;
};

struct SuperselectionReport {
    DensityMatrix reduced;
    /// <phi''|phi'> of the two environment pointer states.
    double overlap = 1.0;
    /// |rho_12| / |c' c''*|.
    double suppression = 1.0;
    bool explicitState = false;
};

/// Entangles a qubit with the environment bits and traces the bits out.
/// Small environments are built as an explicit state vector; larger ones keep
/// one pointer state per bit and accumulate the product of overlaps.
inline SuperselectionReport superselectionToy(const EnvironmentModel& model,
                                              const QuantumState& initial) {
    if (initial.dim() != 2) {
        throw ShapeError("superselection toy needs a two-level state");
    }
    const Complex c1 = initial.amplitude(0);
    const Complex c2 = initial.amplitude(1);
    const double th = model.couplingAngle();
    const std::size_t n = model.nBits();
    SuperselectionReport rep;
    Complex envOverlap = 1.0;

    if (n <= 12) {
        // Basis index = system bit (lowest) + environment bits above it.
        const std::size_t envDim = std::size_t{1} << n;
        Vector psi = Vector::Zero(static_cast<Eigen::Index>(2 * envDim));
        const double cs = std::cos(th);
        const double sn = std::sin(th);
        for (std::size_t k = 0; k < envDim; ++k) {
            double amp = 1.0;
            for (std::size_t b = 0; b < n; ++b) {
                amp *= ((k >> b) & 1U) ? sn : cs;
            }
            psi[static_cast<Eigen::Index>(2 * k + 1)] = c2 * amp;
        }
        psi[0] = c1;
        Matrix rho = Matrix::Zero(2, 2);
        for (std::size_t k = 0; k < envDim; ++k) {
            const auto i0 = static_cast<Eigen::Index>(2 * k);
            for (Eigen::Index a = 0; a < 2; ++a) {
                for (Eigen::Index b = 0; b < 2; ++b) {
                    rho(a, b) += psi[i0 + a] * std::conj(psi[i0 + b]);
                }
            }
        }
        // Overlap of the pointer states: <0...0| R(theta)^{(x)n} |0...0>.
        for (std::size_t b = 0; b < n; ++b) {
            envOverlap *= cs;
        }
        rep.reduced = DensityMatrix::fromMatrix(rho, {1e-10, 1e-9, 1e-9});
        rep.explicitState = true;
    } else {
        Vector phiOne(2);
        phiOne << 1.0, 0.0;
        Vector phiTwo(2);
        phiTwo << std::cos(th), std::sin(th);
        for (std::size_t b = 0; b < n; ++b) {
            envOverlap *= phiTwo.dot(phiOne);
        }
        Matrix rho(2, 2);
        rho(0, 0) = std::norm(c1);
        rho(1, 1) = std::norm(c2);
        rho(0, 1) = c1 * std::conj(c2) * std::conj(envOverlap);
        rho(1, 0) = std::conj(rho(0, 1));
        rep.reduced = DensityMatrix::fromMatrix(rho);
    }
    rep.overlap = std::abs(envOverlap);
    const double pure = std::abs(c1 * std::conj(c2));
    rep.suppression = pure > 0.0 ? std::abs(rep.reduced(0, 1)) / pure : rep.overlap;
    return rep;
}

/// Density matrix rho(x, x') in the basis of a uniform 1-D grid.
class GridDensityMatrix {
public:
    GridDensityMatrix() = default;

    static GridDensityMatrix make(std::vector<double> positions, Matrix rho) {
        if (positions.size() < 2 || rho.rows() != static_cast<Eigen::Index>(positions.size()) ||
            rho.cols() != rho.rows()) {
            throw ShapeError("grid density matrix must be M x M for M positions");
        }
        const double h = positions[1] - positions[0];
        for (std::size_t i = 1; i < positions.size(); ++i) {
            if (!(h > 0.0) || std::abs(positions[i] - positions[i - 1] - h) > 1e-9 * h) {
                throw InvalidSpec("grid positions must be uniform and increasing");
            }
        }
        if (!detail::allFinite(rho) || detail::hermiticityError(rho) > 1e-10) {
            throw InvalidSpec("grid density matrix must be finite and Hermitian");
        }
        const double tr = rho.trace().real();
        if (tr < -1e-9 || tr > 1.0 + 1e-9) {
            throw InvalidSpec("grid density matrix trace outside [0,1]");
        }
        GridDensityMatrix g;
        g.x_ = std::move(positions);
        g.rho_ = std::move(rho);
        return g;
    }

    /// M points x_i = lo + i (hi - lo)/M.
    static std::vector<double> uniformGrid(std::size_t m = 64, double lo = -8.0, double hi = 8.0) {
        std::vector<double> x(m);
        for (std::size_t i = 0; i < m; ++i) {
            x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m);
        }
        return x;
    }

    /// Equal-weight superposition of the grid points nearest to `centers`.
    static GridDensityMatrix superposition(std::vector<double> positions,
                                           const std::vector<double>& centers) {
        Vector psi = Vector::Zero(static_cast<Eigen::Index>(positions.size()));
        for (double c : centers) {
            psi[static_cast<Eigen::Index>(nearest(positions, c))] += 1.0;
        }
        psi.normalize();
        return make(std::move(positions), psi * psi.adjoint());
    }

    static std::size_t nearest(const std::vector<double>& x, double c) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < x.size(); ++i) {
            if (std::abs(x[i] - c) < std::abs(x[best] - c)) {
                best = i;
            }
        }
        return best;
    }

    const std::vector<double>& positions() const noexcept { return x_; }
    const Matrix& elements() const noexcept { return rho_; }
    std::size_t size() const noexcept { return x_.size(); }
    double spacing() const { return x_[1] - x_[0]; }
    double trace() const { return rho_.trace().real(); }
    Complex at(double x, double xp) const {
        return rho_(static_cast<Eigen::Index>(nearest(x_, x)),
                    static_cast<Eigen::Index>(nearest(x_, xp)));
    }

private:
    std::vector<double> x_;
    Matrix rho_;
};

struct DiffusionOptions {
    /// Free-particle mass; no kinetic term when absent.
    std::optional<double> mass;
    /// Upper bound on the internal step.
    double maxStep = 0.01;
    /// Snapshot times (clamped to the duration); empty keeps only the end.
    std::vector<double> snapshotTimes;
};

struct DiffusionResult {
    GridDensityMatrix final;
    std::vector<double> snapshotTimes;
    std::vector<GridDensityMatrix> snapshots;
};

/// drho/dt = -i[H, rho] - kappa/2 [x, [x, rho]] with H = -(1/2m) d^2/dx^2 by
/// second differences, RK4 in time.
inline DiffusionResult diffusionSeries(const GridDensityMatrix& initial, double kappa,
                                       double duration, DiffusionOptions options = {}) {
    if (!(kappa >= 0.0) || !(duration >= 0.0)) {
        throw InvalidSpec("kappa and duration must be nonnegative");
    }
    const auto m = static_cast<Eigen::Index>(initial.size());
    const auto& x = initial.positions();
    const double h = initial.spacing();

    Matrix ham;
    const bool kinetic = options.mass.has_value();
    double hamNorm = 0.0;
    if (kinetic) {
        const double mass = *options.mass;
        if (!(mass > 0.0)) {
            throw InvalidSpec("mass must be positive");
        }
        ham = Matrix::Zero(m, m);
        const double c = 1.0 / (2.0 * mass * h * h);
        for (Eigen::Index i = 0; i < m; ++i) {
            ham(i, i) = 2.0 * c;
            if (i + 1 < m) {
                ham(i, i + 1) = -c;
                ham(i + 1, i) = -c;
            }
        }
        hamNorm = 4.0 * c;

        // Momentum reachable by the end of the run must stay well inside the
        // grid's Nyquist band, and the spread must stay inside the box.
        const Matrix lap = -2.0 * mass * ham;
        const double p2 = std::max(0.0, -(lap * initial.elements()).trace().real());
        const double pRms = std::sqrt(p2 + kappa * duration);
        const double pMax = kPi / h;
        if (4.0 * pRms > pMax) {
            throw ResolutionError("momentum content aliases on this grid");
        }
        const double box = x.back() - x.front();
        if (pRms * duration / mass > 0.25 * box) {
            throw ResolutionError("wave packet spreads across the box boundary");
        }
    }

    Eigen::MatrixXd dephase(m, m);
    double maxRate = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double dx = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            dephase(i, j) = 0.5 * kappa * dx * dx;
            maxRate = std::max(maxRate, dephase(i, j));
        }
    }
    const Matrix dephaseC = dephase.cast<Complex>();
    const Complex mi(0.0, -1.0);
    auto rhs = [&](const Matrix& rho) {
        Matrix out = -dephaseC.cwiseProduct(rho);
        if (kinetic) {
            out += mi * (ham * rho - rho * ham);
        }
        return out;
    };

    const double stable = 0.5 / std::max(1e-300, maxRate + 2.0 * hamNorm);
    const double target = std::min(options.maxStep, stable);
    std::vector<double> stops = options.snapshotTimes;
    for (double& s : stops) {
        s = std::clamp(s, 0.0, duration);
    }
    std::sort(stops.begin(), stops.end());
    stops.push_back(duration);

    DiffusionResult res;
    Matrix rho = initial.elements();
    double t = 0.0;
    std::size_t stepIndex = 0;
    for (std::size_t k = 0; k < stops.size(); ++k) {
        const double span = stops[k] - t;
        const auto n = static_cast<std::size_t>(std::ceil(span / target - 1e-9));
        const double dt = n > 0 ? span / static_cast<double>(n) : 0.0;
        for (std::size_t s = 0; s < n; ++s, ++stepIndex) {
            const Matrix k1 = rhs(rho);
            const Matrix k2 = rhs(rho + 0.5 * dt * k1);
            const Matrix k3 = rhs(rho + 0.5 * dt * k2);
            const Matrix k4 = rhs(rho + dt * k3);
            rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!detail::allFinite(rho)) {
                throw NumericFailure("nonselective-dynamics", stepIndex, "non-finite grid density");
            }
        }
        t = stops[k];
        rho = 0.5 * (rho + rho.adjoint()).eval();
        auto snap = GridDensityMatrix::make(x, rho);
        if (k + 1 < stops.size()) {
            res.snapshotTimes.push_back(t);
            res.snapshots.push_back(std::move(snap));
        } else {
            res.final = std::move(snap);
        }
    }
    return res;
}

inline GridDensityMatrix propagateDiffusion(const GridDensityMatrix& initial, double kappa,
                                            std::optional<double> mass, double duration) {
    DiffusionOptions o;
    o.mass = mass;
    return diffusionSeries(initial, kappa, duration, o).final;
}

/// kappa = 2 eta k T / hbar^2 with hbar = k = 1.
inline double kappaFromCaldeiraLeggett(double eta, double temperature) {
    if (!(eta > 0.0) || !(temperature > 0.0)) {
        throw InvalidSpec("damping and temperature must be positive");
    }
    return 2.0 * eta * temperature;
}

/// kappa = 2 / (lambda^2 tau).
inline double kappaFromSoftScattering(double lambda, double tau) {
    if (!(lambda > 0.0) || !(tau > 0.0)) {
        throw InvalidSpec("lambda and tau must be positive");
    }
    return 2.0 / (lambda * lambda * tau);
}

} // namespace qcorridor
