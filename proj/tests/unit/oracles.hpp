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


// Reference computations used as test oracles. They share no code with the
// library beyond its value types.

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

/// Brute-force RK4 on the unnormalized amplitudes of
/// dC_n/dt = -k (E_n - E)^2 C_n - i (V C)_n with E piecewise constant on the
/// grid and the drive always on. `sub` substeps per grid step.
inline Vec bruteSelective(const std::vector<double>& levels, const Mat& v, double kappa, double dt,
                          const std::vector<double>& readout, Vec c, int sub = 20) {
    const auto d = static_cast<Eigen::Index>(levels.size());
    const double h = dt / sub;
    for (double e : readout) {
        Mat g = cd(0.0, -1.0) * v;
        for (Eigen::Index n = 0; n < d; ++n) {
            g(n, n) -= kappa * (levels[static_cast<std::size_t>(n)] - e) *
                       (levels[static_cast<std::size_t>(n)] - e);
        }
        for (int s = 0; s < sub; ++s) {
            const Vec k1 = g * c;
            const Vec k2 = g * (c + 0.5 * h * k1);
            const Vec k3 = g * (c + 0.5 * h * k2);
            const Vec k4 = g * (c + h * k3);
            c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    return c;
}

/// Resonant two-level Rabi amplitudes for V = v sigma_x from |1>.
inline double rabiP2(double v, double t) {
    const double s = std::sin(v * t);
    return s * s;
}

/// Dephasing of the coherence under pure measurement: rho12(t) = rho12(0) exp(-k dE^2 t / 2).
inline double dephasingFactor(double kappa, double deltaE, double t) {
    return std::exp(-0.5 * kappa * deltaE * deltaE * t);
}

/// Closed-form amplitude of a level under V = 0 and a piecewise-constant readout.
inline double freeAmplitudeFactor(double level, double kappa, double dt,
                                  const std::vector<double>& readout) {
    double s = 0.0;
    for (double e : readout) {
        s += (level - e) * (level - e);
    }
    return std::exp(-kappa * s * dt);
}

/// Gauss-Hermite-free check of a 1-D Gaussian integral by Simpson's rule.
template <class F>
inline double simpson(F f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) {
        s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    }
    return s * h / 3.0;
}

} // namespace oracle
