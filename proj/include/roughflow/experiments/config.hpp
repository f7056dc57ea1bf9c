#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/mixing/spec_io.hpp"
#include "roughflow/rde/fields.hpp"

namespace roughflow::experiments {

using nlohmann::json;

/**
 * @brief Collects every problem in an experiment config before failing.
 *
 * Getters return a fallback on error and remember the message; finish()
 * throws one ErrorKind::config error listing all of them, including keys
 * that no getter asked for.
 */
class ConfigReader {
  public:
    ConfigReader(const json& j, std::string kind) : j_(j), kind_(std::move(kind)) {
        if (!j_.is_object()) errors_.push_back("config: expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const json* v = get(key, fallback.has_value());
        if (!v) return fallback.value_or(0.0);
        if (!v->is_number()) return bad(key, "expected a number"), fallback.value_or(0.0);
        const double x = v->get<double>();
        resolved_[key] = x;
        return x;
    }

    double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const double x = number(key, fallback);
        if (!(x > 0.0) && (has(key) || fallback)) bad(key, "must be > 0");
        return x;
    }

    std::uint64_t unsigned_int(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt,
                               std::uint64_t min_value = 0) {
        const json* v = get(key, fallback.has_value());
        if (!v) return fallback.value_or(0);
        if (!v->is_number_integer() || v->get<long long>() < 0) {
            bad(key, "expected a non-negative integer");
            return fallback.value_or(min_value);
        }
        const auto x = v->get<std::uint64_t>();
        if (x < min_value) bad(key, "must be >= " + std::to_string(min_value));
        resolved_[key] = x;
        return x;
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = get(key, true);
        if (!v) return fallback;
        if (!v->is_boolean()) return bad(key, "expected true or false"), fallback;
        resolved_[key] = v->get<bool>();
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) {
        const json* v = get(key, true);
        if (!v) return fallback;
        if (!v->is_string()) return bad(key, "expected a string"), fallback;
        const auto s = v->get<std::string>();
        bool ok = allowed.empty();
        for (const auto& a : allowed) ok = ok || a == s;
        if (!ok) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            return bad(key, "'" + s + "' is not one of: " + list), fallback;
        }
        resolved_[key] = s;
        return s;
    }

    /// strictly increasing list of positive integers
    std::vector<std::size_t> increasing_list(const std::string& key, std::optional<std::vector<std::size_t>> fallback) {
        const json* v = get(key, fallback.has_value());
        if (!v) return fallback.value_or(std::vector<std::size_t>{});
        std::vector<std::size_t> out;
        if (!v->is_array() || v->empty()) return bad(key, "expected a non-empty array of integers"), fallback.value_or(out);
        for (std::size_t i = 0; i < v->size(); ++i) {
            const auto& e = (*v)[i];
            if (!e.is_number_integer() || e.get<long long>() < 1)
                return bad(key + "[" + std::to_string(i) + "]", "expected a positive integer"), fallback.value_or(out);
            out.push_back(e.get<std::size_t>());
            if (i > 0 && out[i] <= out[i - 1])
                return bad(key, "must be strictly increasing"), fallback.value_or(std::vector<std::size_t>{});
        }
        resolved_[key] = out;
        return out;
    }

    std::vector<double> number_list(const std::string& key, std::optional<std::vector<double>> fallback) {
        const json* v = get(key, fallback.has_value());
        if (!v) return fallback.value_or(std::vector<double>{});
        return guarded<std::vector<double>>(key, [&] { return io::numbers(*v, key); }, fallback.value_or(std::vector<double>{}));
    }

    Eigen::MatrixXd matrix(const std::string& key, std::size_t rows, std::size_t cols,
                           std::optional<Eigen::MatrixXd> fallback = std::nullopt) {
        const json* v = get(key, fallback.has_value());
        if (!v) return fallback.value_or(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)));
        return guarded<Eigen::MatrixXd>(
            key, [&] { return io::matrix(*v, rows, cols, key); },
            Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)));
    }

    /// run a parser on a sub-object, capturing its errors
    template <class T>
    std::optional<T> section(const std::string& key, const std::function<T(const json&)>& parse) {
        const json* v = get(key, false);
        if (!v) return std::nullopt;
        try {
            T out = parse(*v);
            resolved_[key] = *v;
            return out;
        } catch (const Error& e) {
            errors_.push_back(e.what());
        } catch (const std::exception& e) {
            errors_.push_back(key + ": " + e.what());
        }
        return std::nullopt;
    }

    /// keys that are allowed but handled elsewhere (e.g. read through `section` conditionally)
    void allow(const std::string& key) { used_.insert(key); }
    void error(const std::string& message) { errors_.push_back(message); }
    const std::vector<std::string>& errors() const { return errors_; }

    /// throws one config error listing every problem found so far
    void finish() {
        if (j_.is_object())
            for (auto it = j_.begin(); it != j_.end(); ++it)
                if (!used_.count(it.key())) errors_.push_back(it.key() + ": unknown key for experiment " + kind_);
        if (errors_.empty()) return;
        std::string msg = "invalid config for " + kind_ + ":";
        for (const auto& e : errors_) msg += "\n  - " + e;
        throw Error(ErrorKind::config, msg);
    }

    /// the config as interpreted, defaults included
    json& resolved() { return resolved_; }

  private:
    const json* get(const std::string& key, bool optional) {
        used_.insert(key);
        if (!has(key)) {
            if (!optional) errors_.push_back(key + ": missing required key");
            return nullptr;
        }
        return &j_.at(key);
    }

    void bad(const std::string& key, const std::string& what) { errors_.push_back(key + ": " + what); }

    template <class T, class F>
    T guarded(const std::string& key, F&& f, T fallback) {
        try {
            T out = f();
            resolved_[key] = j_.at(key);
            return out;
        } catch (const Error& e) {
            errors_.push_back(e.what());
        }
        return fallback;
    }

    json j_;
    std::string kind_;
    std::set<std::string> used_;
    std::vector<std::string> errors_;
    json resolved_ = json::object();
};

/**
 * @brief Field family from JSON: {"family": name, ...parameters}.
 *
 * Families: constant {sigma, b}, identity {dim}, sine1d {c0, c1, b0, b1},
 * linear1d {a, beta}, linear {A: [e x e] per noise coordinate, B},
 * trigonometric {e, d, seed, amplitude} (random member).
 */
inline FieldSpec parse_field(const json& j, const std::string& path = "field") {
    require(j.is_object(), ErrorKind::config, path + ": expected an object");
    const std::string family = io::field(j, "family", path).is_string() ? j["family"].get<std::string>() : "";
    auto num = [&](const char* key, double fallback) {
        return j.contains(key) ? io::number(j[key], path + "." + key) : fallback;
    };
    auto check_keys = [&](std::initializer_list<const char*> allowed) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool ok = it.key() == "family";
            for (auto a : allowed) ok = ok || it.key() == a;
            require(ok, ErrorKind::config, path + "." + it.key() + ": unknown key for family " + family);
        }
    };
    try {
        if (family == "sine1d") {
            check_keys({"c0", "c1", "b0", "b1"});
            return fields::sine1d(num("c0", 1.0), num("c1", 0.0), num("b0", 0.0), num("b1", 0.0));
        }
        if (family == "linear1d") {
            check_keys({"a", "beta"});
            return fields::linear1d(num("a", 1.0), num("beta", 0.0));
        }
        if (family == "identity") {
            check_keys({"dim"});
            return fields::identity(static_cast<std::size_t>(num("dim", 1.0)));
        }
        if (family == "constant") {
            check_keys({"sigma", "b"});
            const auto& s = io::field(j, "sigma", path);
            require(s.is_array() && !s.empty() && s[0].is_array(), ErrorKind::config,
                    path + ".sigma: expected nested rows (e x d)");
            const Eigen::MatrixXd sigma = io::matrix(s, s.size(), s[0].size(), path + ".sigma");
            Eigen::VectorXd b = Eigen::VectorXd::Zero(sigma.rows());
            if (j.contains("b")) b = io::matrix(j["b"], static_cast<std::size_t>(sigma.rows()), 1, path + ".b");
            return fields::constant(sigma, b);
        }
        if (family == "linear") {
            check_keys({"A", "B"});
            const auto& A = io::field(j, "A", path);
            require(A.is_array() && !A.empty() && A[0].is_array() && !A[0].empty(), ErrorKind::config,
                    path + ".A: expected a list of e x e matrices");
            const std::size_t e = A[0].size();
            std::vector<Eigen::MatrixXd> mats;
            for (std::size_t k = 0; k < A.size(); ++k)
                mats.push_back(io::matrix(A[k], e, e, path + ".A[" + std::to_string(k) + "]"));
            Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(e));
            if (j.contains("B")) B = io::matrix(j["B"], e, e, path + ".B");
            return fields::linear(mats, B);
        }
        if (family == "trigonometric") {
            check_keys({"e", "d", "seed", "amplitude"});
            return fields::random_trigonometric(static_cast<std::size_t>(num("e", 1.0)),
                                                static_cast<std::size_t>(num("d", 1.0)),
                                                static_cast<std::uint64_t>(num("seed", 0.0)), num("amplitude", 0.5));
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        throw Error(ErrorKind::config, path + ": " + e.what());
    }
    throw Error(ErrorKind::config,
                path + ".family: '" + family + "' is not one of sine1d, linear1d, identity, constant, linear, trigonometric");
}

}  // namespace roughflow::experiments
