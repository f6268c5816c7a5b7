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

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcorridor/core.hpp"
#include "qcorridor/errors.hpp"

namespace qcorridor {

using Json = nlohmann::ordered_json;

/// Configuration problem located at a JSON pointer (or a line/column for
/// syntax errors).
class ConfigError : public InvalidSpec {
public:
    ConfigError(std::string where, const std::string& what)
        : InvalidSpec(where + ": " + what), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// Shortest round-trip decimal form.
inline std::string formatDouble(double x) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
    return os.str();
}

/// Minimal CSV writer; numbers are written with round-trip precision so runs
/// can be compared byte for byte.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) {
            throw std::runtime_error("cannot open " + path.string());
        }
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out_ << (i ? "," : "") << cells[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out_ << (i ? "," : "") << formatDouble(cells[i]);
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline void writeJson(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string());
    }
    out << j.dump(2) << '\n';
}

inline void writeTrajectoryCsv(const std::filesystem::path& path, const ReadoutTrajectory& r,
                               const std::string& column = "value") {
    CsvWriter csv(path, {"time", column});
    for (std::size_t i = 0; i < r.size(); ++i) {
        csv.row(std::vector<double>{r.grid().time(i), r[i]});
    }
}

inline void writeNoiseCsv(const std::filesystem::path& path, const NoisePath& n) {
    CsvWriter csv(path, {"time", "dw"});
    for (std::size_t i = 0; i < n.size(); ++i) {
        csv.row(std::vector<double>{n.grid().time(i), n[i]});
    }
}

inline Json toJson(const SystemSpec& sys) {
    Json j;
    j["levels"] = sys.levels();
    Json re = Json::array();
    Json im = Json::array();
    for (Eigen::Index i = 0; i < sys.coupling().rows(); ++i) {
        Json r = Json::array();
        Json m = Json::array();
        for (Eigen::Index k = 0; k < sys.coupling().cols(); ++k) {
            r.push_back(sys.coupling()(i, k).real());
            m.push_back(sys.coupling()(i, k).imag());
        }
        re.push_back(r);
        im.push_back(m);
    }
    j["couplingRe"] = re;
    j["couplingIm"] = im;
    if (sys.window()) {
        j["pulseWindow"] = {sys.window()->on, sys.window()->off};
    }
    return j;
}

inline Json toJson(const MeasurementSpec& m) {
    return Json{{"kappa", m.kappa()},
                {"duration", m.duration()},
                {"dt", m.dt()},
                {"deltaE", m.deltaE()}};
}

namespace detail {

inline void requireKeys(const Json& obj, const std::string& path,
                        std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ConfigError(path.empty() ? "/" : path, "expected an object");
    }
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            throw ConfigError(path + "/" + key, "unknown key");
        }
    }
}

inline double number(const Json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) {
        throw ConfigError(path + "/" + key, "missing required number");
    }
    const Json& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError(path + "/" + key, "expected a number");
    }
    return v.get<double>();
}

inline double number(const Json& obj, const std::string& path, const char* key, double fallback) {
    return obj.contains(key) ? number(obj, path, key) : fallback;
}

inline std::vector<double> numbers(const Json& v, const std::string& path) {
    if (!v.is_array()) {
        throw ConfigError(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
            throw ConfigError(path + "/" + std::to_string(i), "expected a number");
        }
        out.push_back(v[i].get<double>());
    }
    return out;
}

inline Matrix matrixFrom(const Json& v, const std::string& path, std::size_t d) {
    if (!v.is_array() || v.size() != d) {
        throw ConfigError(path, "expected a " + std::to_string(d) + "x" + std::to_string(d) + " array");
    }
    Matrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
        const auto row = numbers(v[i], path + "/" + std::to_string(i));
        if (row.size() != d) {
            throw ConfigError(path + "/" + std::to_string(i), "row has the wrong length");
        }
        for (std::size_t k = 0; k < d; ++k) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
        }
    }
    return m;
}

/// Rethrows library validation errors as configuration errors at `path`.
template <class F>
auto atPath(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

} // namespace detail

/// Either {levels, couplingRe, couplingIm?, pulseWindow?} or the two-level
/// shortcut {deltaE, v0, pulseWindow?} where pulseWindow may be "pi-pulse".
inline SystemSpec systemFromJson(const Json& j, const std::string& path = "/system") {
    if (!j.is_object()) {
        throw ConfigError(path, "expected an object");
    }
    auto window = [&](const Json& w, double v0) -> std::optional<PulseWindow> {
        if (w.is_string()) {
            if (w.get<std::string>() != "pi-pulse") {
                throw ConfigError(path + "/pulseWindow", "expected [on, off] or \"pi-pulse\"");
            }
            if (!(v0 > 0.0)) {
                throw ConfigError(path + "/pulseWindow", "pi-pulse needs v0 > 0");
            }
            return PulseWindow{0.0, 0.5 * kPi / v0};
        }
        const auto on = detail::numbers(w, path + "/pulseWindow");
        if (on.size() != 2) {
            throw ConfigError(path + "/pulseWindow", "expected [on, off]");
        }
        return PulseWindow{on[0], on[1]};
    };
    if (j.contains("levels")) {
        detail::requireKeys(j, path, {"levels", "couplingRe", "couplingIm", "pulseWindow"});
        const auto levels = detail::numbers(j.at("levels"), path + "/levels");
        if (!j.contains("couplingRe")) {
            throw ConfigError(path + "/couplingRe", "missing required matrix");
        }
        Matrix v = detail::matrixFrom(j.at("couplingRe"), path + "/couplingRe", levels.size());
        if (j.contains("couplingIm")) {
            v += Complex(0.0, 1.0) *
                 detail::matrixFrom(j.at("couplingIm"), path + "/couplingIm", levels.size());
        }
        const double v0 = levels.size() >= 2 ? std::abs(v(0, 1)) : 0.0;
        std::optional<PulseWindow> w;
        if (j.contains("pulseWindow")) {
            w = window(j.at("pulseWindow"), v0);
        }
        return detail::atPath(path, [&] { return SystemSpec::make(levels, v, w); });
    }
    detail::requireKeys(j, path, {"deltaE", "v0", "pulseWindow"});
    const double de = detail::number(j, path, "deltaE", 1.0);
    const double v0 = detail::number(j, path, "v0");
    PulseWindow w{0.0, kInf};
    if (j.contains("pulseWindow")) {
        w = *window(j.at("pulseWindow"), v0);
    }
    return detail::atPath(path, [&] { return makeTwoLevelSystem(de, v0, w); });
}

inline MeasurementSpec measurementFromJson(const Json& j, const std::string& path = "/measurement") {
    detail::requireKeys(j, path, {"kappa", "duration", "dt", "deltaE"});
    const double kappa = detail::number(j, path, "kappa");
    const double duration = detail::number(j, path, "duration");
    const double dt = detail::number(j, path, "dt");
    const double de = detail::number(j, path, "deltaE", 1.0);
    return detail::atPath(path, [&] { return MeasurementSpec::make(kappa, duration, dt, de); });
}

/// Byte offset to "line L, column C" for parse diagnostics.
inline std::string lineColumn(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline Json parseJsonText(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        throw ConfigError(lineColumn(text, at), "malformed JSON");
    }
}

inline Json readJsonFile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string(), "cannot read file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parseJsonText(ss.str());
}

} // namespace qcorridor
