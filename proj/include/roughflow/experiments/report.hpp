#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/rng.hpp"
#include "roughflow/stats.hpp"
#include "roughflow/tensor/path_csv.hpp"

#ifndef ROUGHFLOW_VERSION
#define ROUGHFLOW_VERSION "unknown"
#endif

namespace roughflow::experiments {

using nlohmann::json;

inline std::string version() { return ROUGHFLOW_VERSION; }

/// one pass/fail line of a report; `relation` is "<=" (statistic must stay below) or ">" (must exceed)
struct Check {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    std::string relation = "<=";
    bool asserted = true;
    json detail = json::object();

    bool passed() const {
        if (!std::isfinite(statistic)) return false;
        return relation == ">" ? statistic > threshold : statistic <= threshold;
    }

    json to_json() const {
        json j = detail;
        j["name"] = name;
        j["statistic"] = statistic;
        j["threshold"] = threshold;
        j["relation"] = relation;
        j["asserted"] = asserted;
        j["passed"] = passed();
        return j;
    }
};

/// experiment result: summary JSON, series CSV and the checks behind the exit code
struct ExperimentOutput {
    std::string experiment;
    json config;
    json summary = json::object();
    std::vector<Check> checks;
    std::string series_csv;
    std::string error;  ///< non-empty when a library error was surfaced instead of results

    void add(Check c) { checks.push_back(std::move(c)); }

    bool passed() const {
        if (!error.empty()) return false;
        for (const auto& c : checks)
            if (c.asserted && !c.passed()) return false;
        return true;
    }

    json report() const {
        json j;
        j["experiment"] = experiment;
        j["version"] = version();
        j["config"] = config;
        j["summary"] = summary;
        json cs = json::array();
        for (const auto& c : checks) cs.push_back(c.to_json());
        j["checks"] = cs;
        if (!error.empty()) j["error"] = error;
        j["passed"] = passed();
        return j;
    }

    /// report.json and series.csv under `dir` (created if missing)
    void write(const std::filesystem::path& dir) const {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        require(!ec, ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());
        write_text_file((dir / "report.json").string(), report().dump(2) + "\n");
        write_text_file((dir / "series.csv").string(), series_csv);
    }
};

/// numbers in JSON via the same shortest round-trip text as the CSV outputs
inline json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
        rows.push_back(r);
    }
    return rows;
}

inline json vector_json(const Eigen::VectorXd& v) {
    json r = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) r.push_back(v(i));
    return r;
}

/// |estimate - target| / se against `z` (asserted) with the numbers kept in the detail
inline Check z_check(const std::string& name, const Estimate& est, double target, double z, bool asserted = true) {
    Check c;
    c.name = name;
    c.statistic = est.z(target);
    c.threshold = z;
    c.asserted = asserted;
    c.detail = {{"estimate", est.value}, {"se", est.se}, {"target", target}};
    return c;
}

struct LawOptions {
    double z = 4.0;
    std::size_t ks_resamples = 1000;
    double ks_level = 0.99;
};

inline std::vector<double> coordinate(const std::vector<Eigen::VectorXd>& x, Eigen::Index i) {
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < x.size(); ++r) out[r] = x[r](i);
    return out;
}

/**
 * @brief Control check: some mean (or, with `with_covariance`, some covariance
 * entry) must differ by more than z combined standard errors.
 */
inline Check mismatch_check(const std::string& label, const std::vector<Eigen::VectorXd>& a,
                            const std::vector<Eigen::VectorXd>& b, const LawOptions& opt, bool asserted = true,
                            bool with_covariance = false) {
    require(!a.empty() && !b.empty() && a[0].size() == b[0].size(), ErrorKind::invalid_argument,
            "mismatch_check: samples must be non-empty with equal dimension");
    const Eigen::Index e = a[0].size();
    double worst = 0.0;
    json per = json::array();
    for (Eigen::Index i = 0; i < e; ++i) {
        const auto xa = coordinate(a, i), xb = coordinate(b, i);
        const auto ea = mean_estimate(xa), eb = mean_estimate(xb);
        const double z = std::abs(two_sample_z(ea, eb));
        worst = std::max(worst, z);
        per.push_back({{"quantity", "mean[" + std::to_string(i + 1) + "]"}, {"a", ea.value}, {"b", eb.value}, {"z", z}});
        if (!with_covariance) continue;
        for (Eigen::Index k = i; k < e; ++k) {
            const auto ca = covariance_estimate(xa, coordinate(a, k)), cb = covariance_estimate(xb, coordinate(b, k));
            const double zc = std::abs(two_sample_z(ca, cb));
            worst = std::max(worst, zc);
            per.push_back({{"quantity", "cov[" + std::to_string(i + 1) + "," + std::to_string(k + 1) + "]"},
                           {"a", ca.value},
                           {"b", cb.value},
                           {"z", zc}});
        }
    }
    Check c;
    c.name = label + (with_covariance ? ".moment_mismatch" : ".mean_mismatch");
    c.statistic = worst;
    c.threshold = opt.z;
    c.relation = ">";
    c.asserted = asserted;
    c.detail = {{"quantities", per}};
    return c;
}

/**
 * @brief Two-sample comparison of laws: means and covariances within z
 * combined standard errors, and per-coordinate KS below a pooled bootstrap
 * threshold.
 */
inline std::vector<Check> compare_laws(const std::string& label, const std::vector<Eigen::VectorXd>& a,
                                       const std::vector<Eigen::VectorXd>& b, const LawOptions& opt, RandomStream& rng,
                                       bool asserted = true) {
    require(!a.empty() && !b.empty() && a[0].size() == b[0].size(), ErrorKind::invalid_argument,
            "compare_laws: samples must be non-empty with equal dimension");
    std::vector<Check> out;
    const Eigen::Index e = a[0].size();
    for (Eigen::Index i = 0; i < e; ++i) {
        const auto xa = coordinate(a, i), xb = coordinate(b, i);
        const auto ea = mean_estimate(xa), eb = mean_estimate(xb);
        Check m;
        m.name = label + ".mean[" + std::to_string(i + 1) + "]";
        m.statistic = std::abs(two_sample_z(ea, eb));
        m.threshold = opt.z;
        m.asserted = asserted;
        m.detail = {{"a", ea.value}, {"a_se", ea.se}, {"b", eb.value}, {"b_se", eb.se}};
        out.push_back(m);
        for (Eigen::Index k = i; k < e; ++k) {
            const auto ya = coordinate(a, k), yb = coordinate(b, k);
            const auto ca = covariance_estimate(xa, ya), cb = covariance_estimate(xb, yb);
            Check c;
            c.name = label + ".cov[" + std::to_string(i + 1) + "," + std::to_string(k + 1) + "]";
            c.statistic = std::abs(two_sample_z(ca, cb));
            c.threshold = opt.z;
            c.asserted = asserted;
            c.detail = {{"a", ca.value}, {"a_se", ca.se}, {"b", cb.value}, {"b_se", cb.se}};
            out.push_back(c);
        }
        Check ks;
        ks.name = label + ".ks[" + std::to_string(i + 1) + "]";
        ks.statistic = ks_statistic(xa, xb);
        ks.threshold = ks_bootstrap_threshold(xa, xb, opt.ks_resamples, opt.ks_level, rng);
        ks.asserted = asserted;
        ks.detail = {{"resamples", opt.ks_resamples}, {"level", opt.ks_level}};
        out.push_back(ks);
    }
    return out;
}

/// CSV writer with %.17g numbers
class CsvBuilder {
  public:
    explicit CsvBuilder(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
        text_ += '\n';
    }
    CsvBuilder& row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
        text_ += '\n';
        return *this;
    }
    const std::string& str() const { return text_; }

  private:
    std::string text_;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(const std::string& v) { return v; }

}  // namespace roughflow::experiments
