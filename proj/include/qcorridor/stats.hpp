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
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcorridor/errors.hpp"

namespace qcorridor {

/// A Monte Carlo estimate and its standard error.
struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// |a - b| in units of the combined standard error. Zero when both agree
/// exactly, infinite when they differ with no error bar at all.
inline double zScore(const Estimate& a, const Estimate& b) {
    const double diff = std::abs(a.value - b.value);
    const double se = std::hypot(a.se, b.se);
    if (diff <= 1e-14 * std::max(1.0, std::abs(a.value))) {
        return 0.0;
    }
    return se > 0.0 ? diff / se : std::numeric_limits<double>::infinity();
}

inline double zScore(const Estimate& a, double exact) { return zScore(a, Estimate{exact, 0.0}); }

/// Self-normalized weights exp(l_i - max l) / sum. Throws DegenerateEnsemble
/// when no log-weight is finite.
inline std::vector<double> normalizeLogWeights(const std::vector<double>& logWeights) {
    double maxLog = -std::numeric_limits<double>::infinity();
    for (double l : logWeights) {
        if (std::isfinite(l)) {
            maxLog = std::max(maxLog, l);
        }
    }
    if (!std::isfinite(maxLog)) {
        throw DegenerateEnsemble(maxLog, "every importance weight is zero");
    }
    std::vector<double> w(logWeights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::isfinite(logWeights[i]) ? std::exp(logWeights[i] - maxLog) : 0.0;
        total += w[i];
    }
    for (double& x : w) {
        x /= total;
    }
    return w;
}

/// Kish effective sample size of normalized weights.
inline double effectiveSampleSize(const std::vector<double>& w) {
    double s2 = 0.0;
    double s1 = 0.0;
    for (double x : w) {
        s1 += x;
        s2 += x * x;
    }
    return s2 > 0.0 ? s1 * s1 / s2 : 0.0;
}

/// Self-normalized weighted mean; the delta-method standard error.
inline Estimate weightedMean(const std::vector<double>& w, const std::vector<double>& x) {
    double m = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        m += w[i] * x[i];
    }
    double v = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = w[i] * (x[i] - m);
        v += d * d;
    }
    return {m, std::sqrt(v)};
}

/// Weighted proportion. The error bar is floored by the binomial error of the
/// shrunk proportion (k+1)/(n+2) so an all-or-nothing outcome still carries
/// a finite standard error.
inline Estimate weightedProportion(const std::vector<double>& w, const std::vector<double>& indicator) {
    Estimate e = weightedMean(w, indicator);
    const double n = effectiveSampleSize(w);
    const double shrunk = (e.value * n + 1.0) / (n + 2.0);
    e.se = std::max(e.se, std::sqrt(shrunk * (1.0 - shrunk) / (n + 2.0)));
    return e;
}

/// Unweighted mean with the sample standard error.
inline Estimate sampleMean(const std::vector<double>& x) {
    const auto n = static_cast<double>(x.size());
    if (x.empty()) {
        return {};
    }
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double v = 0.0;
    for (double xi : x) {
        v += (xi - m) * (xi - m);
    }
    const double se = x.size() > 1 ? std::sqrt(v / (n - 1.0) / n) : 0.0;
    return {m, se};
}

/// Binomial proportion with the same shrunk floor as weightedProportion.
inline Estimate proportion(std::size_t hits, std::size_t n) {
    const double p = n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
    const double nn = static_cast<double>(n);
    const double shrunk = (static_cast<double>(hits) + 1.0) / (nn + 2.0);
    const double se = std::max(std::sqrt(p * (1.0 - p) / std::max(nn, 1.0)),
                               std::sqrt(shrunk * (1.0 - shrunk) / (nn + 2.0)));
    return {p, se};
}

/// Elementwise mean and standard error of a sample of complex matrices.
struct MatrixEstimate {
    Eigen::MatrixXcd mean;
    Eigen::MatrixXd seRe;
    Eigen::MatrixXd seIm;

    /// Largest |mean - ref| over elements, real and imaginary parts separately.
    double maxDeviation(const Eigen::MatrixXcd& ref) const {
        const Eigen::MatrixXcd d = mean - ref;
        return std::max(d.real().cwiseAbs().maxCoeff(), d.imag().cwiseAbs().maxCoeff());
    }

    /// Largest elementwise deviation in standard errors. Deviations below
    /// `absFloor` count as zero.
    double maxZ(const Eigen::MatrixXcd& ref, double absFloor = 1e-12) const {
        const Eigen::MatrixXcd d = mean - ref;
        double z = 0.0;
        auto one = [&](double dev, double se) {
            if (std::abs(dev) <= absFloor) {
                return 0.0;
            }
            return se > 0.0 ? std::abs(dev) / se : std::numeric_limits<double>::infinity();
        };
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            for (Eigen::Index j = 0; j < d.cols(); ++j) {
                z = std::max(z, one(d(i, j).real(), seRe(i, j)));
                z = std::max(z, one(d(i, j).imag(), seIm(i, j)));
            }
        }
        return z;
    }
};

/// Weighted (w normalized) or, with empty w, plain average of matrices.
inline MatrixEstimate averageMatrices(const std::vector<Eigen::MatrixXcd>& xs,
                                      const std::vector<double>& w = {}) {
    MatrixEstimate out;
    if (xs.empty()) {
        return out;
    }
    const auto rows = xs.front().rows();
    const auto cols = xs.front().cols();
    const auto n = static_cast<double>(xs.size());
    out.mean = Eigen::MatrixXcd::Zero(rows, cols);
    for (std::size_t s = 0; s < xs.size(); ++s) {
        out.mean += (w.empty() ? 1.0 / n : w[s]) * xs[s];
    }
    Eigen::MatrixXd vRe = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd vIm = Eigen::MatrixXd::Zero(rows, cols);
    for (std::size_t s = 0; s < xs.size(); ++s) {
        const Eigen::MatrixXcd d = xs[s] - out.mean;
        if (w.empty()) {
            vRe += d.real().cwiseAbs2();
            vIm += d.imag().cwiseAbs2();
        } else {
            vRe += (w[s] * d.real()).cwiseAbs2();
            vIm += (w[s] * d.imag()).cwiseAbs2();
        }
    }
    if (w.empty()) {
        const double f = n > 1.0 ? 1.0 / ((n - 1.0) * n) : 0.0;
        vRe *= f;
        vIm *= f;
    }
    out.seRe = vRe.cwiseSqrt();
    out.seIm = vIm.cwiseSqrt();
    return out;
}

/// Ordinary least squares y = a + b x. Returns {a, b}.
inline std::pair<double, double> linearFit(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double b = sxy / sxx;
    return {my - b * mx, b};
}

} // namespace qcorridor
