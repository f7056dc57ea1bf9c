#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "roughflow/brownian/brownian.hpp"
#include "roughflow/cm/cameron_martin.hpp"
#include "roughflow/experiments/config.hpp"
#include "roughflow/experiments/report.hpp"
#include "roughflow/mixing/markov.hpp"
#include "roughflow/mixing/spec_io.hpp"
#include "roughflow/mixing/suspension.hpp"
#include "roughflow/parallel.hpp"
#include "roughflow/rde/solver.hpp"
#include "roughflow/stats.hpp"
#include "roughflow/tensor/lift.hpp"
#include "roughflow/tensor/truncated_tensor.hpp"
#include "roughflow/tensor/variation.hpp"

namespace roughflow::experiments {

/// command-line overrides; `threads` never enters the outputs
struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    std::size_t threads = 1;
};

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{"invariance", "diffusion-discrete", "diffusion-continuous",
                                                "em-rate", "lil", "lil-constant"};
    return kinds;
}

namespace detail {

struct Common {
    std::uint64_t seed = 1;
    std::size_t replicas = 0;
    std::size_t threads = 1;
};

inline Common read_common(ConfigReader& rd, const RunOptions& opt, std::size_t default_replicas,
                          std::size_t min_replicas = 2) {
    Common c;
    c.seed = rd.unsigned_int("seed", 1);
    c.replicas = rd.unsigned_int("replicas", default_replicas, min_replicas);
    rd.unsigned_int("threads", 1, 1);
    rd.resolved().erase("threads");
    if (opt.seed) c.seed = *opt.seed;
    if (opt.replicas) {
        if (*opt.replicas < min_replicas)
            rd.error("replicas: must be >= " + std::to_string(min_replicas));
        c.replicas = *opt.replicas;
    }
    rd.resolved()["seed"] = c.seed;
    rd.resolved()["replicas"] = c.replicas;
    c.threads = std::max<std::size_t>(1, opt.threads);
    rd.allow("experiment");
    return c;
}

inline LawOptions read_law(ConfigReader& rd) {
    LawOptions o;
    o.z = rd.positive("z", 4.0);
    o.ks_resamples = rd.unsigned_int("ks_resamples", 1000, 10);
    o.ks_level = rd.number("ks_level", 0.99);
    if (!(o.ks_level > 0.0 && o.ks_level < 1.0)) rd.error("ks_level: must lie in (0,1)");
    return o;
}

inline Eigen::VectorXd read_y0(ConfigReader& rd, const std::optional<FieldSpec>& f) {
    const std::size_t e = f ? f->e() : 1;
    auto v = rd.number_list("y0", std::vector<double>(e, 0.0));
    if (v.size() != e) {
        rd.error("y0: expected " + std::to_string(e) + " entries");
        v.assign(e, 0.0);
    }
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(e));
}

inline std::vector<Eigen::VectorXd> split_rows(const std::vector<std::vector<double>>& rows, std::size_t offset,
                                               std::size_t width) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
        out.push_back(Eigen::Map<const Eigen::VectorXd>(r.data() + offset, static_cast<Eigen::Index>(width)));
    return out;
}

inline std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t k) {
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = rows[r][k];
    return out;
}

inline std::string ij(std::size_t i, std::size_t j) {
    return "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
}

inline void append_checks(ExperimentOutput& out, CsvBuilder& csv, const std::string& prefix,
                          const std::vector<Check>& checks) {
    for (const auto& c : checks) {
        csv.row({prefix, c.name, cell(c.statistic), cell(c.threshold), c.relation, c.asserted ? "1" : "0",
                 c.passed() ? "1" : "0"});
        out.add(c);
    }
}

/// does the drift correction change anything on the sampled states?
inline bool correction_active(const FieldSpec::Drift& c, const std::vector<Eigen::VectorXd>& states) {
    for (const auto& x : states)
        if (c(x).cwiseAbs().maxCoeff() > 1e-12) return true;
    return false;
}

inline std::vector<Eigen::VectorXd> euler_maruyama_terminals(const FieldSpec& f, const Eigen::VectorXd& y0,
                                                             const Eigen::MatrixXd& sigma, double horizon,
                                                             std::size_t steps, std::uint64_t seed,
                                                             std::uint64_t salt, std::size_t replicas,
                                                             std::size_t threads) {
    const BrownianParams params = BrownianParams::ito(sigma);
    const double h = horizon / static_cast<double>(steps);
    return parallel_map(replicas, threads, [&](std::size_t r) {
        RandomStream rng(seed, r, stream_tag::sde + 16 * salt);
        const GridRoughSample w = sample_brp(params, horizon, h, 1, rng);
        return Eigen::VectorXd(ito_sde_solve(f, y0, w.path, full_partition(w.path), false).terminal());
    });
}

}  // namespace detail

/**
 * @brief Invariance principle: S_N(T) and SS_N(T) over replicas against
 * (0, T sigma, T Gamma). Checks are asserted at the largest N only.
 */
inline ExperimentOutput run_invariance(const json& cfg, const RunOptions& opt = {}) {
    ConfigReader rd(cfg, "invariance");
    const auto common = detail::read_common(rd, opt, 10000);
    auto chain = rd.section<MarkovMixingSpec>("chain", [](const json& j) { return parse_chain(j); });
    if (!rd.has("chain")) rd.error("chain: missing required key");
    const auto Ns = rd.increasing_list("N_list", std::vector<std::size_t>{4096});
    const double T = rd.positive("T", 1.0);
    const double z = rd.positive("z", 4.0);
    rd.finish();

    ExperimentOutput out;
    out.experiment = "invariance";
    out.config = rd.resolved();
    const std::size_t d = chain->dim();
    CovarianceSummary cov;
    try {
        cov = covariance_summary(*chain);
    } catch (const Error& e) {
        out.error = e.what();
        out.summary["error_kind"] = to_string(e.kind());
        out.series_csv = CsvBuilder({"N", "quantity", "i", "j", "estimate", "se", "target", "z"}).str();
        return out;
    }
    out.summary["sigma"] = matrix_json(cov.sigma);
    out.summary["gamma"] = matrix_json(cov.gamma);
    out.summary["var0"] = matrix_json(cov.var0);
    out.summary["tail_bound"] = cov.tail_bound;
    out.summary["lag_cutoff"] = cov.lag_cutoff;

    CsvBuilder csv({"N", "quantity", "i", "j", "estimate", "se", "target", "z"});
    for (std::size_t n_idx = 0; n_idx < Ns.size(); ++n_idx) {
        const std::size_t N = Ns[n_idx];
        const bool assert_here = n_idx + 1 == Ns.size();
        const std::size_t steps = static_cast<std::size_t>(std::floor(T * static_cast<double>(N) + 1e-9));
        const auto rows = parallel_map(common.replicas, common.threads, [&](std::size_t r) {
            const auto lift = canonical_lift(sample_sequence(*chain, steps, common.seed, r), d, N);
            const Level2 inc = lift_increment(lift, N, 0.0, T);
            std::vector<double> v(inc.level1().begin(), inc.level1().end());
            v.insert(v.end(), inc.level2().begin(), inc.level2().end());
            return v;
        });
        auto record = [&](const std::string& q, std::size_t i, std::size_t j, const Estimate& est, double target) {
            Check c = z_check("N=" + std::to_string(N) + "." + q + (q == "mean_S" ? "[" + std::to_string(i + 1) + "]" : detail::ij(i, j)),
                              est, target, z, assert_here);
            csv.row({cell(N), q, cell(i + 1), cell(j + 1), cell(est.value), cell(est.se), cell(target), cell(c.statistic)});
            out.add(c);
        };
        for (std::size_t i = 0; i < d; ++i) record("mean_S", i, i, mean_estimate(detail::column(rows, i)), 0.0);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j)
                record("cov_S", i, j, covariance_estimate(detail::column(rows, i), detail::column(rows, j)),
                       T * cov.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                record("mean_SS", i, j, mean_estimate(detail::column(rows, d + i * d + j)),
                       T * cov.gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out.series_csv = csv.str();
    return out;
}

/**
 * @brief Discrete diffusion approximation: X_N(T) from the recurrence (Davie
 * solver on the canonical lift with clock [tN]/N) against the Ito diffusion
 * with drift b + c (c from Gamma); the c-omitted control must differ in mean.
 */
inline ExperimentOutput run_diffusion_discrete(const json& cfg, const RunOptions& opt = {}) {
    ConfigReader rd(cfg, "diffusion-discrete");
    const auto common = detail::read_common(rd, opt, 10000);
    auto chain = rd.section<MarkovMixingSpec>("chain", [](const json& j) { return parse_chain(j); });
    if (!rd.has("chain")) rd.error("chain: missing required key");
    auto field = rd.section<FieldSpec>("field", [](const json& j) { return parse_field(j); });
    if (!rd.has("field")) rd.error("field: missing required key");
    const Eigen::VectorXd y0 = detail::read_y0(rd, field);
    const auto Ns = rd.increasing_list("N_list", std::vector<std::size_t>{1024});
    const double T = rd.positive("T", 1.0);
    const std::size_t xi_steps = rd.unsigned_int("xi_steps", Ns.empty() ? 1024 : Ns.back(), 1);
    const bool control = rd.boolean("control", true);
    const LawOptions law = detail::read_law(rd);
    if (chain && field && chain->dim() != field->d())
        rd.error("field: noise dimension " + std::to_string(field->d()) + " differs from chain dimension " +
                 std::to_string(chain->dim()));
    rd.finish();

    ExperimentOutput out;
    out.experiment = "diffusion-discrete";
    out.config = rd.resolved();
    CovarianceSummary cov;
    try {
        cov = covariance_summary(*chain);
    } catch (const Error& e) {
        out.error = e.what();
        out.summary["error_kind"] = to_string(e.kind());
        return out;
    }
    out.summary["sigma"] = matrix_json(cov.sigma);
    out.summary["gamma"] = matrix_json(cov.gamma);
    const std::size_t d = chain->dim();
    const FieldSpec corrected = corrected_fields(*field, cov.gamma);
    const auto c_only = drift_correction(*field, cov.gamma);
    const std::size_t xi_cells = static_cast<std::size_t>(std::llround(static_cast<double>(xi_steps) * T));

    const auto xi_good = detail::euler_maruyama_terminals(corrected, y0, cov.sigma, T, xi_cells, common.seed, 0,
                                                          common.replicas, common.threads);
    const auto xi_bare = detail::euler_maruyama_terminals(*field, y0, cov.sigma, T, xi_cells, common.seed, 0,
                                                          common.replicas, common.threads);
    CsvBuilder csv({"N", "check", "statistic", "threshold", "relation", "asserted", "passed"});
    json ks_by_n = json::array();
    for (std::size_t n_idx = 0; n_idx < Ns.size(); ++n_idx) {
        const std::size_t N = Ns[n_idx];
        const bool last = n_idx + 1 == Ns.size();
        const std::size_t steps = static_cast<std::size_t>(std::floor(T * static_cast<double>(N) + 1e-9));
        const auto xs = parallel_map(common.replicas, common.threads, [&](std::size_t r) {
            const auto lift = canonical_lift(sample_sequence(*chain, steps, common.seed, r), d, N);
            return Eigen::VectorXd(
                solve_rde(RDEProblem{*field, y0, lift, DriftClock::step(static_cast<double>(N))}, full_partition(lift), false)
                    .terminal());
        });
        RandomStream boot(common.seed, N, stream_tag::bootstrap);
        auto checks = compare_laws("N=" + std::to_string(N) + ".corrected", xs, xi_good, law, boot, last);
        json ks = json::object();
        ks["N"] = N;
        for (const auto& c : checks)
            if (c.name.find(".ks[") != std::string::npos) ks[c.name.substr(c.name.find("ks["))] = c.statistic;
        ks_by_n.push_back(ks);
        detail::append_checks(out, csv, std::to_string(N), checks);
        if (last) {
            const bool active = detail::correction_active(c_only, xs);
            out.summary["correction_active"] = active;
            detail::append_checks(out, csv, std::to_string(N),
                                  {mismatch_check("N=" + std::to_string(N) + ".uncorrected", xs, xi_bare, law, control && active)});
        }
    }
    out.summary["ks_by_N"] = ks_by_n;
    out.series_csv = csv.str();
    return out;
}

/**
 * @brief Continuous-time diffusion approximation over a suspension flow.
 *
 * X^eps(T) = Y(T / tau_bar) where Y is the Davie solution in V-time driven by
 * the exact fibre lift with drift clock tau_bar * t. The limit in V-time has
 * covariance sigma(eta), drift tau_bar b + c with c from Gamma(eta) + extra.
 * Also checks the V^eps statistics at V-time 1 against the exact targets.
 */
inline ExperimentOutput run_diffusion_continuous(const json& cfg, const RunOptions& opt = {}) {
    ConfigReader rd(cfg, "diffusion-continuous");
    const auto common = detail::read_common(rd, opt, 10000);
    auto susp = rd.section<SuspensionSpec>("suspension", [](const json& j) { return parse_suspension(j); });
    if (!rd.has("suspension")) rd.error("suspension: missing required key");
    auto field = rd.section<FieldSpec>("field", [](const json& j) { return parse_field(j); });
    if (!rd.has("field")) rd.error("field: missing required key");
    const Eigen::VectorXd y0 = detail::read_y0(rd, field);
    auto eps_list = rd.number_list("epsilon_list", std::vector<double>{1.0 / 32});
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (!(eps_list[k] > 0.0)) rd.error("epsilon_list: entries must be > 0");
        if (k > 0 && !(eps_list[k] < eps_list[k - 1])) rd.error("epsilon_list: must be strictly decreasing");
    }
    if (eps_list.empty()) rd.error("epsilon_list: must not be empty");
    const double T = rd.positive("T", 1.0);
    const std::size_t xi_steps = rd.unsigned_int("xi_steps", 1024, 1);
    const std::string extra_mode = rd.string("drift_extra", "mean_fiber_area", {"mean_fiber_area", "half_eta_eta"});
    const bool control = rd.boolean("control", true);
    const LawOptions law = detail::read_law(rd);
    if (susp && field && susp->dim() != field->d())
        rd.error("field: noise dimension " + std::to_string(field->d()) + " differs from suspension dimension " +
                 std::to_string(susp->dim()));
    rd.finish();

    ExperimentOutput out;
    out.experiment = "diffusion-continuous";
    out.config = rd.resolved();
    const std::size_t d = susp->dim();
    const double tb = susp->tau_bar();
    CovarianceSummary cov;
    try {
        cov = covariance_summary(susp->eta_chain());
    } catch (const Error& e) {
        out.error = e.what();
        out.summary["error_kind"] = to_string(e.kind());
        return out;
    }
    const Eigen::MatrixXd Fbar = susp->mean_fiber_area();
    const Eigen::MatrixXd half_ee = 0.5 * susp->mean_eta_eta();
    const Eigen::MatrixXd extra = extra_mode == "mean_fiber_area" ? Fbar : half_ee;
    const Eigen::MatrixXd area_target = cov.gamma + Fbar;
    out.summary["tau_bar"] = tb;
    out.summary["sigma_eta"] = matrix_json(cov.sigma);
    out.summary["gamma_eta"] = matrix_json(cov.gamma);
    out.summary["mean_fiber_area"] = matrix_json(Fbar);
    out.summary["half_mean_eta_eta"] = matrix_json(half_ee);
    out.summary["centering_shift"] = vector_json(susp->centering_shift());

    // limits in V-time
    const FieldSpec& f = *field;
    auto c = drift_correction(f, cov.gamma, extra);
    const FieldSpec limit = f.with_drift([f, c, tb](const Eigen::VectorXd& x) { return Eigen::VectorXd(tb * f.b(x) + c(x)); },
                                         "+vtime");
    const FieldSpec bare = f.with_drift([f, tb](const Eigen::VectorXd& x) { return Eigen::VectorXd(tb * f.b(x)); }, "+vtime");
    const double horizon = T / tb;
    auto steps_for = [&](double h) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(h * static_cast<double>(xi_steps)))); };
    const auto xi_good = detail::euler_maruyama_terminals(limit, y0, cov.sigma, horizon, steps_for(horizon), common.seed, 0,
                                                          common.replicas, common.threads);
    const auto xi_bare = detail::euler_maruyama_terminals(bare, y0, cov.sigma, horizon, steps_for(horizon), common.seed, 0,
                                                          common.replicas, common.threads);
    const auto xi_wrong_time = detail::euler_maruyama_terminals(limit, y0, cov.sigma, T, steps_for(T), common.seed, 1,
                                                                common.replicas, common.threads);

    double tau_max = 0.0;
    for (double t : susp->tau()) tau_max = std::max(tau_max, t);
    CsvBuilder csv({"epsilon", "check", "statistic", "threshold", "relation", "asserted", "passed"});
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        const double eps = eps_list[k];
        const bool last = k + 1 == eps_list.size();
        const double vmax = std::max(1.0, horizon);
        std::vector<double> breaks;
        if (std::abs(horizon - 1.0) > 1e-12) breaks.push_back(std::min(1.0, horizon));
        // fibres guaranteed to start before the horizon, used for the tau_bar estimate
        const std::size_t guaranteed = static_cast<std::size_t>(std::floor(vmax * tb / (eps * eps) / tau_max));
        const auto rows = parallel_map(common.replicas, common.threads, [&](std::size_t r) {
            const SuspensionRecord rec = suspension_sample(*susp, eps, vmax, common.seed, r, breaks);
            const CadlagRoughPath& x = rec.path;
            const std::size_t i1 = x.grid_index(1.0, 1e-9);
            const std::size_t ih = x.grid_index(horizon, 1e-9);
            std::vector<double> v(x.prefix_level1(i1), x.prefix_level1(i1) + d);
            v.insert(v.end(), x.prefix_level2(i1), x.prefix_level2(i1) + d * d);
            double tau_sum = 0.0;
            const std::size_t used = std::max<std::size_t>(1, std::min(guaranteed, rec.states.size()));
            for (std::size_t q = 0; q < used; ++q) tau_sum += susp->tau()[rec.states[q]];
            v.push_back(tau_sum / static_cast<double>(used));
            std::vector<std::size_t> part(ih + 1);
            for (std::size_t q = 0; q <= ih; ++q) part[q] = q;
            const auto sol = solve_rde(RDEProblem{f, y0, x, DriftClock::linear(tb)}, part, false);
            for (Eigen::Index a = 0; a < sol.terminal().size(); ++a) v.push_back(sol.terminal()(a));
            return v;
        });
        const std::string tag = "eps=" + format_double(eps);
        std::vector<Check> checks;
        for (std::size_t i = 0; i < d; ++i)
            checks.push_back(z_check(tag + ".mean_V" + "[" + std::to_string(i + 1) + "]",
                                     mean_estimate(detail::column(rows, i)), 0.0, law.z, last));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j)
                checks.push_back(z_check(tag + ".cov_V" + detail::ij(i, j),
                                         covariance_estimate(detail::column(rows, i), detail::column(rows, j)),
                                         cov.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), law.z, last));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                checks.push_back(z_check(tag + ".mean_VV" + detail::ij(i, j),
                                         mean_estimate(detail::column(rows, d + i * d + j)),
                                         area_target(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), law.z, last));
        if ((Fbar - half_ee).cwiseAbs().maxCoeff() > 1e-12)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    if (i != j)
                        checks.push_back(z_check(tag + ".mean_VV_vs_half_eta_eta" + detail::ij(i, j),
                                                 mean_estimate(detail::column(rows, d + i * d + j)),
                                                 cov.gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                                                     half_ee(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                                                 law.z, false));
        checks.push_back(z_check(tag + ".tau_bar", mean_estimate(detail::column(rows, d + d * d)), tb, law.z, last));
        detail::append_checks(out, csv, format_double(eps), checks);

        const auto xs = detail::split_rows(rows, d + d * d + 1, f.e());
        RandomStream boot(common.seed, k, stream_tag::bootstrap);
        detail::append_checks(out, csv, format_double(eps), compare_laws(tag + ".corrected", xs, xi_good, law, boot, last));
        if (last) {
            const bool active = detail::correction_active(c, xs);
            out.summary["correction_active"] = active;
            out.summary["time_change_active"] = std::abs(tb - 1.0) > 1e-9;
            detail::append_checks(out, csv, format_double(eps),
                                  {mismatch_check(tag + ".uncorrected", xs, xi_bare, law, control && active),
                                   mismatch_check(tag + ".no_time_change", xs, xi_wrong_time, law,
                                                  control && std::abs(tb - 1.0) > 1e-9, true)});
        }
    }
    out.series_csv = csv.str();
    return out;
}

/**
 * @brief Rate of rough_distance(W, em_lift(W, N)) in N on medians over
 * replicas (one fine sample per replica drives every N).
 */
inline ExperimentOutput run_em_rate(const json& cfg, const RunOptions& opt = {}) {
    ConfigReader rd(cfg, "em-rate");
    const auto common = detail::read_common(rd, opt, 32);
    const std::size_t dim = rd.unsigned_int("dim", 2, 1);
    const Eigen::MatrixXd sigma = rd.matrix("sigma", dim, dim, Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
    const Eigen::MatrixXd gamma = rd.matrix("gamma", dim, dim, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
    const double p = rd.number("p", 2.5);
    if (!(p > 2.0 && p < 3.0)) rd.error("p: must lie in (2,3)");
    std::vector<std::size_t> def;
    for (std::size_t k = 4; k <= 12; ++k) def.push_back(std::size_t{1} << k);
    const auto Ns = rd.increasing_list("N_list", def);
    const std::size_t fine = rd.unsigned_int("fine", 8192, 1);
    const std::size_t K = rd.unsigned_int("substeps", 4, 1);
    const auto explore = rd.number_list("p_explore", std::vector<double>{});
    for (double q : explore)
        if (!(q > 2.0 && q < 3.0)) rd.error("p_explore: entries must lie in (2,3)");
    const double slope_min = rd.number("slope_min", 0.05);
    const double r2_min = rd.number("r2_min", 0.8);
    for (auto N : Ns)
        if (fine % N != 0) rd.error("N_list: " + std::to_string(N) + " does not divide fine = " + std::to_string(fine));
    if (Ns.size() < 2) rd.error("N_list: need at least two resolutions for a rate fit");
    std::optional<BrownianParams> params;
    try {
        params = BrownianParams(sigma, gamma);
    } catch (const Error& e) {
        rd.error(std::string("sigma: ") + e.what());
    }
    rd.finish();

    ExperimentOutput out;
    out.experiment = "em-rate";
    out.config = rd.resolved();
    const std::size_t nN = Ns.size(), nE = explore.size();
    const auto rows = parallel_map(common.replicas, common.threads, [&](std::size_t r) {
        const GridRoughSample s = sample_brp(*params, 1.0, 1.0 / static_cast<double>(fine), K, common.seed, r);
        std::vector<double> v;
        v.reserve(nN * (2 + nE));
        for (std::size_t N : Ns) {
            const CadlagRoughPath em = em_lift(s, N);
            const auto parts = rough_distance_parts(s.path, em, p, full_window(s.path));
            v.push_back(parts.total());
            v.push_back(parts.level1);
            for (double q : explore) v.push_back(rough_distance(s.path, em, q));
        }
        return v;
    });
    const std::size_t stride = 2 + nE;
    std::vector<double> Nd, med_rough, med_l1;
    std::vector<std::vector<double>> med_explore(nE);
    CsvBuilder csv({"N", "replica", "rough_distance", "level1_distance"});
    for (std::size_t k = 0; k < nN; ++k) {
        Nd.push_back(static_cast<double>(Ns[k]));
        med_rough.push_back(median(detail::column(rows, k * stride)));
        med_l1.push_back(median(detail::column(rows, k * stride + 1)));
        for (std::size_t e = 0; e < nE; ++e) med_explore[e].push_back(median(detail::column(rows, k * stride + 2 + e)));
        for (std::size_t r = 0; r < rows.size(); ++r)
            csv.row({cell(Ns[k]), cell(r), cell(rows[r][k * stride]), cell(rows[r][k * stride + 1])});
    }
    auto fit_json = [](const RateFit& f) {
        return json{{"delta_hat", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
    };
    const RateFit fr = fit_rate(Nd, med_rough), f1 = fit_rate(Nd, med_l1);
    out.summary["N"] = Ns;
    out.summary["median_rough_distance"] = med_rough;
    out.summary["median_level1_distance"] = med_l1;
    out.summary["fit_rough"] = fit_json(fr);
    out.summary["fit_level1"] = fit_json(f1);
    json ex = json::array();
    for (std::size_t e = 0; e < nE; ++e) {
        const RateFit fe = fit_rate(Nd, med_explore[e]);
        ex.push_back({{"p", explore[e]}, {"median_rough_distance", med_explore[e]}, {"fit", fit_json(fe)}});
    }
    out.summary["p_explore"] = ex;
    auto add = [&](const std::string& name, double stat, double thr) {
        Check c;
        c.name = name;
        c.statistic = stat;
        c.threshold = thr;
        c.relation = ">";
        out.add(c);
    };
    add("rough.delta_hat", fr.slope, slope_min);
    add("rough.r2", fr.r2, r2_min);
    add("level1.delta_hat", f1.slope, slope_min);
    add("level1.r2", f1.r2, r2_min);
    out.series_csv = csv.str();
    return out;
}

inline ContractionTensor parse_tensor(const json& j, const std::string& path) {
    require(j.is_object(), ErrorKind::config, path + ": expected an object");
    const auto& dj = io::field(j, "dim", path);
    require(dj.is_number_integer() && dj.get<long long>() >= 1, ErrorKind::config, path + ".dim: expected a positive integer");
    const auto d = dj.get<std::size_t>();
    for (auto it = j.begin(); it != j.end(); ++it)
        require(it.key() == "dim" || it.key() == "word" || it.key() == "level" || it.key() == "coeffs", ErrorKind::config,
                path + "." + it.key() + ": unknown key");
    try {
        if (j.contains("word")) {
            std::vector<std::size_t> w;
            for (double x : io::numbers(j["word"], path + ".word")) {
                require(x >= 1 && x == std::floor(x), ErrorKind::config, path + ".word: letters are 1-based integers");
                w.push_back(static_cast<std::size_t>(x) - 1);
            }
            return ContractionTensor::word(d, w);
        }
        const auto& lj = io::field(j, "level", path);
        require(lj.is_number_integer() && lj.get<long long>() >= 1, ErrorKind::config, path + ".level: expected a positive integer");
        return ContractionTensor(d, lj.get<std::size_t>(), io::numbers(io::field(j, "coeffs", path), path + ".coeffs"));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        throw Error(ErrorKind::config, path + ": " + e.what());
    }
}

namespace detail {

inline LilConfig read_cm(ConfigReader& rd, std::size_t threads) {
    LilConfig c;
    c.m = rd.unsigned_int("m", 16, 1);
    c.max_iter = rd.unsigned_int("max_iter", 2000, 1);
    c.tol = rd.positive("tol", 1e-10);
    c.fd_step = rd.positive("fd_step", 1e-5);
    c.gradient = rd.string("gradient", "finite_difference", {"finite_difference", "analytic"}) == "analytic"
                     ? GradientRule::analytic
                     : GradientRule::finite_difference;
    c.threads = threads;
    return c;
}

}  // namespace detail

/**
 * @brief LIL running maxima of <A, iterated sums to n> / (2 n log log n)^{l/2}
 * along long trajectories, against the Cameron-Martin constant M.
 */
inline ExperimentOutput run_lil(const json& cfg, const RunOptions& opt = {}) {
    ConfigReader rd(cfg, "lil");
    const auto common = detail::read_common(rd, opt, 3, 1);
    std::optional<MarkovMixingSpec> chain;
    if (rd.has("chain")) {
        chain = rd.section<MarkovMixingSpec>("chain", [](const json& j) { return parse_chain(j); });
    } else {
        Eigen::MatrixXd P = Eigen::MatrixXd::Constant(2, 2, 0.5);
        Eigen::MatrixXd g(2, 1);
        g << 1, -1;
        chain = MarkovMixingSpec(P, g);
        rd.allow("chain");
        rd.resolved()["chain"] = {{"states", 2}, {"P", {{0.5, 0.5}, {0.5, 0.5}}}, {"g", {{1}, {-1}}}};
    }
    const auto levels = rd.increasing_list("levels", std::vector<std::size_t>{1, 2});
    for (auto l : levels)
        if (l > 3) rd.error("levels: entries must be <= 3");
    const std::size_t N = rd.unsigned_int("N", 1000000, 16);
    const std::size_t burn = rd.unsigned_int("burn_in", 1000, 16);
    if (burn >= N) rd.error("burn_in: must be smaller than N");
    const double lo = rd.number("band_low", 0.3), hi = rd.number("band_high", 1.5);
    std::vector<ContractionTensor> tensors;
    if (rd.has("tensors")) {
        auto ts = rd.section<std::vector<ContractionTensor>>("tensors", [](const json& j) {
            require(j.is_array(), ErrorKind::config, "tensors: expected an array");
            std::vector<ContractionTensor> out;
            for (std::size_t k = 0; k < j.size(); ++k) out.push_back(parse_tensor(j[k], "tensors[" + std::to_string(k) + "]"));
            return out;
        });
        if (ts) tensors = *ts;
        if (tensors.size() != levels.size()) rd.error("tensors: need one tensor per entry of levels");
    } else {
        rd.allow("tensors");
        for (auto l : levels) tensors.push_back(ContractionTensor::word(chain ? chain->dim() : 1, std::vector<std::size_t>(l, 0)));
    }
    for (std::size_t k = 0; k < tensors.size() && k < levels.size(); ++k)
        if (tensors[k].level != levels[k] || (chain && tensors[k].dim != chain->dim()))
            rd.error("tensors[" + std::to_string(k) + "]: level/dim do not match levels and the chain");
    LilConfig cm = detail::read_cm(rd, common.threads);
    cm.restarts = rd.unsigned_int("cm_restarts", 32, 1);
    cm.seed = common.seed;
    std::optional<json> growth;
    if (rd.has("norm_growth")) growth = rd.section<json>("norm_growth", [](const json& j) { return j; });
    else rd.allow("norm_growth");
    rd.finish();

    ExperimentOutput out;
    out.experiment = "lil";
    out.config = rd.resolved();
    CovarianceSummary cov;
    try {
        cov = covariance_summary(*chain);
    } catch (const Error& e) {
        out.error = e.what();
        out.summary["error_kind"] = to_string(e.kind());
        return out;
    }
    const std::size_t d = chain->dim();
    std::vector<double> M;
    json targets = json::array();
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const LilResult res = lil_constant(tensors[k], cov.sigma, cm);
        M.push_back(res.M);
        targets.push_back({{"level", levels[k]}, {"M", res.M}, {"converged", res.converged}});
    }
    out.summary["sigma"] = matrix_json(cov.sigma);
    out.summary["targets"] = targets;

    // checkpoints: ten per decade plus the end
    std::vector<std::size_t> marks;
    for (double e = std::log10(static_cast<double>(burn)); e < std::log10(static_cast<double>(N)); e += 0.1) {
        const auto n = static_cast<std::size_t>(std::llround(std::pow(10.0, e)));
        if (n >= burn && n < N && (marks.empty() || n > marks.back())) marks.push_back(n);
    }
    marks.push_back(N);
    const std::size_t depth = levels.back();
    const std::size_t L = levels.size();
    struct Traj {
        std::vector<double> value, runmax;  // marks x levels
        std::vector<double> final_max;
    };
    const auto trajs = parallel_map(common.replicas, common.threads, [&](std::size_t r) {
        const auto xi = sample_sequence(*chain, N, common.seed, r);
        TruncatedTensor t = TruncatedTensor::identity(d, depth);
        Traj tr;
        tr.final_max.assign(L, -INFINITY);
        std::size_t next = 0;
        for (std::size_t n = 1; n <= N; ++n) {
            append_jump(t, xi.data() + (n - 1) * d);
            if (n < burn) continue;
            const double base = 2.0 * static_cast<double>(n) * std::log(std::log(static_cast<double>(n)));
            std::vector<double> vals(L);
            for (std::size_t k = 0; k < L; ++k) {
                vals[k] = tensors[k].pair(t) / std::pow(base, 0.5 * static_cast<double>(levels[k]));
                tr.final_max[k] = std::max(tr.final_max[k], vals[k]);
            }
            if (next < marks.size() && n == marks[next]) {
                for (std::size_t k = 0; k < L; ++k) {
                    tr.value.push_back(vals[k]);
                    tr.runmax.push_back(tr.final_max[k]);
                }
                ++next;
            }
        }
        return tr;
    });
    CsvBuilder csv({"replica", "level", "n", "normalized", "running_max", "M"});
    for (std::size_t r = 0; r < trajs.size(); ++r)
        for (std::size_t q = 0; q < marks.size(); ++q)
            for (std::size_t k = 0; k < L; ++k)
                csv.row({cell(r), cell(levels[k]), cell(marks[q]), cell(trajs[r].value[q * L + k]),
                         cell(trajs[r].runmax[q * L + k]), cell(M[k])});
    for (std::size_t r = 0; r < trajs.size(); ++r)
        for (std::size_t k = 0; k < L; ++k) {
            const std::string tag = "replica=" + std::to_string(r) + ".level=" + std::to_string(levels[k]);
            Check up;
            up.name = tag + ".running_max_upper";
            up.statistic = trajs[r].final_max[k];
            up.threshold = hi * M[k];
            up.detail = {{"M", M[k]}};
            out.add(up);
            Check low = up;
            low.name = tag + ".running_max_lower";
            low.threshold = lo * M[k];
            low.relation = ">";
            out.add(low);
        }

    if (growth) {
        ConfigReader g(*growth, "lil.norm_growth");
        const std::size_t gd = g.unsigned_int("dim", 1, 1);
        const Eigen::MatrixXd gs = g.matrix("sigma", gd, gd, Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(gd), static_cast<Eigen::Index>(gd)));
        const double gp = g.number("p", 2.5);
        std::vector<std::size_t> gdef;
        for (std::size_t k = 4; k <= 16; ++k) gdef.push_back(std::size_t{1} << k);
        const auto gN = g.increasing_list("N_list", gdef);
        const double factor = g.positive("factor", 10.0);
        g.finish();
        const auto rows = lil_diagnostic(BrownianParams::ito(gs), gp, gN, common.seed);
        std::vector<double> ratios;
        json table = json::array();
        for (const auto& row : rows) {
            ratios.push_back(row.ratio_sqrtloglog);
            table.push_back({{"N", row.N}, {"norm", row.norm}, {"ratio_sqrtloglog", row.ratio_sqrtloglog},
                             {"ratio_loglog", row.ratio_loglog}});
        }
        out.summary["norm_growth"] = table;
        Check c;
        c.name = "norm_growth.max_over_median";
        c.statistic = *std::max_element(ratios.begin(), ratios.end()) / median(ratios);
        c.threshold = factor;
        out.add(c);
    }
    out.series_csv = csv.str();
    return out;
}

/// Cameron-Martin constant of a tensor contraction; `replicas` counts restarts
inline ExperimentOutput run_lil_constant(const json& cfg, const RunOptions& opt = {}) {
    ConfigReader rd(cfg, "lil-constant");
    const auto common = detail::read_common(rd, opt, 32, 1);
    if (rd.has("restarts") && !opt.replicas) rd.error("restarts: use replicas (or --replicas) for the restart count");
    auto A = rd.section<ContractionTensor>("tensor", [](const json& j) { return parse_tensor(j, "tensor"); });
    if (!rd.has("tensor")) rd.error("tensor: missing required key");
    const std::size_t d = A ? A->dim : 1;
    const Eigen::MatrixXd sigma = rd.matrix("sigma", d, d, Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    LilConfig cm = detail::read_cm(rd, common.threads);
    cm.restarts = common.replicas;
    cm.seed = common.seed;
    std::optional<double> expected;
    if (rd.has("expected")) expected = rd.number("expected");
    const double expected_tol = rd.positive("expected_tol", 1e-3);
    if (A && A->level > LilConfig::max_level) rd.error("tensor.level: must be <= " + std::to_string(LilConfig::max_level));
    rd.finish();

    ExperimentOutput out;
    out.experiment = "lil-constant";
    out.config = rd.resolved();
    LilResult res;
    try {
        res = lil_constant(*A, sigma, cm);
    } catch (const Error& e) {
        out.error = e.what();
        out.summary["error_kind"] = to_string(e.kind());
        return out;
    }
    out.summary["M"] = res.M;
    out.summary["argmax_h"] = matrix_json(res.argmax.h);
    out.summary["restarts"] = res.restarts_used;
    out.summary["best_restart"] = res.best_restart;
    out.summary["converged"] = res.converged;
    out.summary["restart_values"] = res.restart_values;
    Check feas;
    feas.name = "feasibility.cm_norm";
    feas.statistic = cm_norm(res.argmax, sigma);
    feas.threshold = 1.0 + 1e-9;
    out.add(feas);
    if (expected) {
        Check c;
        c.name = "expected_M";
        c.statistic = std::abs(res.M - *expected);
        c.threshold = expected_tol;
        c.detail = {{"M", res.M}, {"expected", *expected}};
        out.add(c);
    }
    CsvBuilder csv({"step", "value"});
    for (std::size_t k = 0; k < res.trace.size(); ++k) csv.row({cell(k), cell(res.trace[k])});
    out.series_csv = csv.str();
    return out;
}

/// dispatch by experiment kind; a config "experiment" key, if present, must agree
inline ExperimentOutput run_experiment(const std::string& kind, const json& cfg, const RunOptions& opt = {}) {
    if (cfg.is_object() && cfg.contains("experiment")) {
        require(cfg["experiment"].is_string() && cfg["experiment"].get<std::string>() == kind, ErrorKind::config,
                "experiment: config is for '" + (cfg["experiment"].is_string() ? cfg["experiment"].get<std::string>() : "?") +
                    "' but '" + kind + "' was requested");
    }
    if (kind == "invariance") return run_invariance(cfg, opt);
    if (kind == "diffusion-discrete") return run_diffusion_discrete(cfg, opt);
    if (kind == "diffusion-continuous") return run_diffusion_continuous(cfg, opt);
    if (kind == "em-rate") return run_em_rate(cfg, opt);
    if (kind == "lil") return run_lil(cfg, opt);
    if (kind == "lil-constant") return run_lil_constant(cfg, opt);
    throw Error(ErrorKind::config, "unknown experiment '" + kind + "'");
}

}  // namespace roughflow::experiments
