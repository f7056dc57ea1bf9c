#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/mixing/markov.hpp"
#include "roughflow/mixing/suspension.hpp"

namespace roughflow {

namespace io {

using nlohmann::json;

inline const json& field(const json& j, const std::string& key, const std::string& path) {
    require(j.is_object(), ErrorKind::config, path + ": expected an object");
    auto it = j.find(key);
    require(it != j.end(), ErrorKind::config, path + "." + key + ": missing required key");
    return *it;
}

inline double number(const json& j, const std::string& path) {
    require(j.is_number(), ErrorKind::config, path + ": expected a number");
    return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
    require(j.is_array(), ErrorKind::config, path + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

/// matrix given either as nested rows or as a flat row-major array with `cols` columns
inline Eigen::MatrixXd matrix(const json& j, std::size_t rows, std::size_t cols, const std::string& path) {
    require(j.is_array(), ErrorKind::config, path + ": expected an array");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (!j.empty() && j[0].is_array()) {
        require(j.size() == rows, ErrorKind::config,
                path + ": expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
        for (std::size_t r = 0; r < rows; ++r) {
            auto row = numbers(j[r], path + "[" + std::to_string(r) + "]");
            require(row.size() == cols, ErrorKind::config,
                    path + "[" + std::to_string(r) + "]: expected " + std::to_string(cols) + " entries");
            for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
        }
        return m;
    }
    auto flat = numbers(j, path);
    require(flat.size() == rows * cols, ErrorKind::config,
            path + ": expected " + std::to_string(rows * cols) + " row-major entries, got " + std::to_string(flat.size()));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * cols + c];
    return m;
}

/// infer the observable dimension from g
inline std::size_t observable_dim(const json& g, std::size_t states, const std::string& path) {
    require(g.is_array() && !g.empty(), ErrorKind::config, path + ": expected a non-empty array");
    if (g[0].is_array()) return g[0].size();
    require(g.size() % states == 0, ErrorKind::config, path + ": length is not a multiple of states");
    return g.size() / states;
}

}  // namespace io

/**
 * @brief Chain spec from JSON: {"states": S, "P": ..., "g": ..., "centered": bool}.
 *
 * `centered: true` asserts E_pi g = 0 (verified); otherwise g is centered.
 */
inline MarkovMixingSpec parse_chain(const nlohmann::json& j, const std::string& path = "chain") {
    const auto& st = io::field(j, "states", path);
    require(st.is_number_integer() && st.get<long long>() >= 1, ErrorKind::config,
            path + ".states: expected a positive integer");
    const auto S = static_cast<std::size_t>(st.get<long long>());
    Eigen::MatrixXd P = io::matrix(io::field(j, "P", path), S, S, path + ".P");
    const auto& gj = io::field(j, "g", path);
    const std::size_t d = io::observable_dim(gj, S, path + ".g");
    Eigen::MatrixXd g = io::matrix(gj, S, d, path + ".g");
    bool centered = false;
    if (j.contains("centered")) {
        require(j["centered"].is_boolean(), ErrorKind::config, path + ".centered: expected a boolean");
        centered = j["centered"].get<bool>();
    }
    try {
        return MarkovMixingSpec(P, g, centered ? Centering::asserted : Centering::subtract_mean);
    } catch (const Error& e) {
        throw Error(ErrorKind::config, path + ": " + e.what());
    }
}

/**
 * @brief Suspension spec from JSON: chain keys plus "tau", "fiber_mode"
 * ("constant" | "polynomial") and, for polynomial mode, "fiber_poly"[state][coord].
 */
inline SuspensionSpec parse_suspension(const nlohmann::json& j, const std::string& path = "suspension") {
    const auto& st = io::field(j, "states", path);
    require(st.is_number_integer() && st.get<long long>() >= 1, ErrorKind::config,
            path + ".states: expected a positive integer");
    const auto S = static_cast<std::size_t>(st.get<long long>());
    Eigen::MatrixXd P = io::matrix(io::field(j, "P", path), S, S, path + ".P");
    std::string mode = "constant";
    if (j.contains("fiber_mode")) {
        require(j["fiber_mode"].is_string(), ErrorKind::config, path + ".fiber_mode: expected a string");
        mode = j["fiber_mode"].get<std::string>();
    }
    require(mode == "constant" || mode == "polynomial", ErrorKind::config,
            path + ".fiber_mode: '" + mode + "' has no exact antiderivative; use constant or polynomial");
    auto tau = io::numbers(io::field(j, "tau", path), path + ".tau");
    require(tau.size() == S, ErrorKind::config, path + ".tau: expected " + std::to_string(S) + " entries");
    double roof = 0.0;
    if (j.contains("roof_bound")) roof = io::number(j["roof_bound"], path + ".roof_bound");
    try {
        if (mode == "constant") {
            const auto& gj = io::field(j, "g", path);
            const std::size_t d = io::observable_dim(gj, S, path + ".g");
            Eigen::MatrixXd g = io::matrix(gj, S, d, path + ".g");
            return SuspensionSpec(MarkovMixingSpec(P, g, Centering::keep), tau, FiberMode::constant, {}, roof);
        }
        const auto& fp = io::field(j, "fiber_poly", path);
        require(fp.is_array() && fp.size() == S, ErrorKind::config,
                path + ".fiber_poly: expected one entry per state");
        SuspensionSpec::FiberPolys polys(S);
        for (std::size_t s = 0; s < S; ++s) {
            const std::string ps = path + ".fiber_poly[" + std::to_string(s) + "]";
            require(fp[s].is_array() && !fp[s].empty(), ErrorKind::config, ps + ": expected per-coordinate arrays");
            for (std::size_t i = 0; i < fp[s].size(); ++i)
                polys[s].push_back(io::numbers(fp[s][i], ps + "[" + std::to_string(i) + "]"));
        }
        const std::size_t d = polys[0].size();
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(d));
        return SuspensionSpec(MarkovMixingSpec(P, g, Centering::keep), tau, FiberMode::polynomial, polys, roof);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        throw Error(ErrorKind::config, path + ": " + e.what());
    }
}

}  // namespace roughflow
