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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qcorridor {

enum class ErrorKind {
    InvalidSpec,
    ShapeError,
    NumericFailure,
    PreconditionViolation,
    InvalidMeasure,
    DegenerateEnsemble,
    ResolutionError,
    NonInvertibleMeter,
    OutsideWeakRegime,
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::ShapeError: return "shape-error";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::PreconditionViolation: return "precondition-violation";
    case ErrorKind::InvalidMeasure: return "invalid-measure";
    case ErrorKind::DegenerateEnsemble: return "degenerate-ensemble";
    case ErrorKind::ResolutionError: return "resolution-error";
    case ErrorKind::NonInvertibleMeter: return "non-invertible-meter";
    case ErrorKind::OutsideWeakRegime: return "outside-weak-regime";
    }
    return "unknown";
}

/// Base of every error thrown by the library. The kind is stable and is what
/// the CLI maps onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidSpec : public Error {
public:
    explicit InvalidSpec(const std::string& what) : Error(ErrorKind::InvalidSpec, what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorKind::ShapeError, what) {}
};

class PreconditionViolation : public Error {
public:
    explicit PreconditionViolation(const std::string& what)
        : Error(ErrorKind::PreconditionViolation, what) {}
};

class InvalidMeasure : public Error {
public:
    explicit InvalidMeasure(const std::string& what) : Error(ErrorKind::InvalidMeasure, what) {}
};

class ResolutionError : public Error {
public:
    explicit ResolutionError(const std::string& what) : Error(ErrorKind::ResolutionError, what) {}
};

class NonInvertibleMeter : public Error {
public:
    explicit NonInvertibleMeter(const std::string& what)
        : Error(ErrorKind::NonInvertibleMeter, what) {}
};

class OutsideWeakRegime : public Error {
public:
    explicit OutsideWeakRegime(const std::string& what)
        : Error(ErrorKind::OutsideWeakRegime, what) {}
};

/// Non-finite value produced by an integrator. Carries the module name and
/// the grid step at which it was detected.
class NumericFailure : public Error {
public:
    NumericFailure(std::string module, std::size_t step, const std::string& what)
        : Error(ErrorKind::NumericFailure,
                module + " step " + std::to_string(step) + ": " + what),
          module_(std::move(module)), step_(step) {}

    const std::string& module() const noexcept { return module_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::string module_;
    std::size_t step_;
};

/// All importance weights underflowed to zero.
class DegenerateEnsemble : public Error {
public:
    DegenerateEnsemble(double maxLogWeight, const std::string& what)
        : Error(ErrorKind::DegenerateEnsemble,
                what + " (max log-weight " + std::to_string(maxLogWeight) + ")"),
          maxLogWeight_(maxLogWeight) {}

    double maxLogWeight() const noexcept { return maxLogWeight_; }

private:
    double maxLogWeight_;
};

} // namespace qcorridor
