#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/rde/fields.hpp"
#include "roughflow/tensor/path_csv.hpp"
#include "roughflow/tensor/rough_path.hpp"
#include "roughflow/tensor/variation.hpp"

namespace roughflow {

/**
 * @brief Nondecreasing time change A driving the b-term.
 *
 * identity: A(t) = t; step: A(t) = [tN]/N; linear: A(t) = rate * t.
 */
struct DriftClock {
    enum class Kind { identity, step, linear };
    Kind kind = Kind::identity;
    double N = 1.0;
    double rate = 1.0;

    static DriftClock identity() { return {}; }
    static DriftClock step(double N) {
        require(N > 0.0, ErrorKind::invalid_argument, "step clock needs N > 0");
        return {Kind::step, N, 1.0};
    }
    static DriftClock linear(double rate) {
        require(rate >= 0.0, ErrorKind::invalid_argument, "clock rate must be >= 0");
        return {Kind::linear, 1.0, rate};
    }

    double operator()(double t) const {
        switch (kind) {
            case Kind::step: return ticks(t) / N;
            case Kind::linear: return rate * t;
            default: return t;
        }
    }

    /// A(t) - A(s); for the step clock the tick count is formed first, so 1/N steps are exact
    double increment(double s, double t) const {
        if (kind == Kind::step) return (ticks(t) - ticks(s)) / N;
        return (*this)(t) - (*this)(s);
    }

    std::string name() const {
        switch (kind) {
            case Kind::step: return "step";
            case Kind::linear: return "linear";
            default: return "identity";
        }
    }

  private:
    double ticks(double t) const { return std::floor(t * N + 1e-9); }
};

struct RDEProblem {
    FieldSpec fields;
    Eigen::VectorXd y0;
    CadlagRoughPath driver;
    DriftClock clock;

    void validate() const {
        require(fields.d() == driver.dim(), ErrorKind::dimension_mismatch,
                "driver dimension " + std::to_string(driver.dim()) + " differs from noise dimension " +
                    std::to_string(fields.d()));
        require(static_cast<std::size_t>(y0.size()) == fields.e(), ErrorKind::dimension_mismatch,
                "initial state has the wrong dimension");
        require(driver.cells() >= 1, ErrorKind::invalid_argument, "driver has no cells");
    }
};

struct SolutionPath {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::string scheme;
    std::vector<std::size_t> partition;

    std::size_t dim() const { return states.empty() ? 0 : static_cast<std::size_t>(states.front().size()); }
    const Eigen::VectorXd& terminal() const { return states.back(); }

    /// largest |Y_a(t_k) - Y'_a(t_k)| over matching time stamps
    double sup_distance(const SolutionPath& other) const {
        require(times.size() == other.times.size() && dim() == other.dim(), ErrorKind::dimension_mismatch,
                "solutions are not on the same partition");
        double out = 0.0;
        for (std::size_t k = 0; k < states.size(); ++k)
            out = std::max(out, (states[k] - other.states[k]).cwiseAbs().maxCoeff());
        return out;
    }

    std::string to_csv() const {
        std::string s = "t";
        for (std::size_t a = 0; a < dim(); ++a) s += ",y_" + std::to_string(a + 1);
        s += '\n';
        for (std::size_t k = 0; k < times.size(); ++k) {
            s += format_double(times[k]);
            for (Eigen::Index a = 0; a < states[k].size(); ++a) s += "," + format_double(states[k](a));
            s += '\n';
        }
        return s;
    }
};

/// (D sigma . sigma)(y) m = sum_{i,j,k} d_k sigma_{.j}(y) sigma_{ki}(y) m_{ij}
inline Eigen::VectorXd second_order_term(const FieldSpec& f, const Eigen::VectorXd& y, const Eigen::MatrixXd& s,
                                         const Eigen::MatrixXd& m) {
    const std::vector<Eigen::MatrixXd> ds = f.dsigma(y);
    const Eigen::MatrixXd sm = s * m;  // (sm)_{kj} = sum_i sigma_{ki} m_{ij}
    Eigen::VectorXd out = Eigen::VectorXd::Zero(y.size());
    for (std::size_t k = 0; k < f.e(); ++k) out.noalias() += ds[k] * sm.row(static_cast<Eigen::Index>(k)).transpose();
    return out;
}

inline Eigen::VectorXd second_order_term(const FieldSpec& f, const Eigen::VectorXd& y, const Eigen::MatrixXd& m) {
    return second_order_term(f, y, f.sigma(y), m);
}

/**
 * @brief One Davie step y + b(y) da + sigma(y) u + (D sigma . sigma)(y) m.
 *
 * u has d entries and m is row-major d x d.
 */
inline Eigen::VectorXd davie_step(const Eigen::VectorXd& y, const FieldSpec& f, double da, const double* u,
                                  const double* m) {
    const auto d = static_cast<Eigen::Index>(f.d());
    const Eigen::MatrixXd s = f.sigma(y);
    Eigen::Map<const Eigen::VectorXd> U(u, d);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M(m, d, d);
    Eigen::VectorXd out = y + s * U;
    if (da != 0.0) out.noalias() += da * f.b(y);
    bool any = false;
    for (Eigen::Index i = 0; i < d * d && !any; ++i) any = m[i] != 0.0;
    if (any) out += second_order_term(f, y, s, Eigen::MatrixXd(M));
    return out;
}

inline Eigen::VectorXd davie_step(const Eigen::VectorXd& y, const FieldSpec& f, double da, const Eigen::VectorXd& u,
                                  const Eigen::MatrixXd& m) {
    require(static_cast<std::size_t>(y.size()) == f.e() && static_cast<std::size_t>(u.size()) == f.d() &&
                static_cast<std::size_t>(m.rows()) == f.d() && static_cast<std::size_t>(m.cols()) == f.d(),
            ErrorKind::dimension_mismatch, "davie_step: inconsistent shapes");
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> mr = m;
    return davie_step(y, f, da, u.data(), mr.data());
}

inline constexpr double explosion_bound = 1e8;

namespace detail {

inline void guard_state(const Eigen::VectorXd& y, std::size_t step, double t) {
    if (!y.allFinite())
        throw Error(ErrorKind::numerical, "non-finite state at step " + std::to_string(step) + " (t = " +
                                              format_double(t) + ")");
    if (y.cwiseAbs().maxCoeff() > explosion_bound)
        throw Error(ErrorKind::numerical, "state exceeded " + format_double(explosion_bound) + " at step " +
                                              std::to_string(step) + " (t = " + format_double(t) + ")");
}

inline void check_partition(const CadlagRoughPath& x, const std::vector<std::size_t>& part) {
    require(part.size() >= 2, ErrorKind::invalid_argument, "partition needs at least two grid points");
    for (std::size_t k = 0; k < part.size(); ++k) {
        require(part[k] <= x.cells(), ErrorKind::off_grid,
                "partition index " + std::to_string(part[k]) + " is not on the driver grid");
        if (k > 0)
            require(part[k] > part[k - 1], ErrorKind::invalid_argument,
                    "partition indices must be strictly increasing");
    }
}

}  // namespace detail

/// every grid index of the driver
inline std::vector<std::size_t> full_partition(const CadlagRoughPath& x) {
    std::vector<std::size_t> p(x.cells() + 1);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = k;
    return p;
}

/// grid indices 0, stride, 2 stride, ..., cells (stride must divide the cell count)
inline std::vector<std::size_t> strided_partition(const CadlagRoughPath& x, std::size_t stride) {
    require(stride >= 1 && x.cells() % stride == 0, ErrorKind::invalid_argument,
            "stride " + std::to_string(stride) + " does not divide " + std::to_string(x.cells()) + " cells");
    std::vector<std::size_t> p;
    for (std::size_t k = 0; k <= x.cells(); k += stride) p.push_back(k);
    return p;
}

/// grid indices for a list of times (each must be a grid time)
inline std::vector<std::size_t> partition_at_times(const CadlagRoughPath& x, const std::vector<double>& times) {
    std::vector<std::size_t> p;
    p.reserve(times.size());
    for (double t : times) p.push_back(x.grid_index(t, 1e-9));
    return p;
}

/**
 * @brief Iterated Davie steps over the partition cells.
 *
 * Each step uses the Chen increment (U(s,t), UU(s,t)) of the driver between
 * consecutive partition points and da = A(t) - A(s).
 */
inline SolutionPath solve_rde(const RDEProblem& pb, const std::vector<std::size_t>& partition, bool store = true) {
    pb.validate();
    const CadlagRoughPath& x = pb.driver;
    detail::check_partition(x, partition);
    const std::size_t d = x.dim();
    std::vector<double> u(d), m(d * d);
    SolutionPath out;
    out.scheme = "davie";
    out.partition = partition;
    Eigen::VectorXd y = pb.y0;
    detail::guard_state(y, 0, x.time(partition.front()));
    if (store) {
        out.times.reserve(partition.size());
        out.states.reserve(partition.size());
        out.times.push_back(x.time(partition.front()));
        out.states.push_back(y);
    }
    for (std::size_t k = 1; k < partition.size(); ++k) {
        const std::size_t i = partition[k - 1], j = partition[k];
        const double* up;
        const double* mp;
        if (j == i + 1) {
            up = x.cell_level1(i);
            mp = x.cell_level2(i);
        } else {
            x.rebased_into(i, j, u.data(), m.data());
            up = u.data();
            mp = m.data();
        }
        const double da = pb.clock.increment(x.time(i), x.time(j));
        y = davie_step(y, pb.fields, da, up, mp);
        detail::guard_state(y, k, x.time(j));
        if (store) {
            out.times.push_back(x.time(j));
            out.states.push_back(y);
        }
    }
    if (!store) {
        out.times = {x.time(partition.front()), x.time(partition.back())};
        out.states = {pb.y0, y};
    }
    return out;
}

inline SolutionPath solve_rde(const RDEProblem& pb) { return solve_rde(pb, full_partition(pb.driver)); }

/**
 * @brief Correction c_a(x) = sum_{i,j,k} d_k sigma_{aj}(x) sigma_{ki}(x) G_{ij} with G = gamma_hat + extra.
 *
 * This is the Davie contraction of G, i.e. the drift a second level shifted by
 * t G produces in the limit.
 */
inline FieldSpec::Drift drift_correction(const FieldSpec& f, const Eigen::MatrixXd& gamma_hat,
                                         const std::optional<Eigen::MatrixXd>& extra = std::nullopt) {
    const auto d = static_cast<Eigen::Index>(f.d());
    require(gamma_hat.rows() == d && gamma_hat.cols() == d, ErrorKind::dimension_mismatch,
            "gamma_hat must be d x d");
    require(gamma_hat.allFinite(), ErrorKind::invalid_argument, "gamma_hat has non-finite entries");
    Eigen::MatrixXd G = gamma_hat;
    if (extra) {
        require(extra->rows() == d && extra->cols() == d, ErrorKind::dimension_mismatch, "extra must be d x d");
        G += *extra;
    }
    return [f, G](const Eigen::VectorXd& x) { return second_order_term(f, x, G); };
}

/// x -> b(x) + c(x)
inline FieldSpec::Drift corrected_drift(const FieldSpec& f, const Eigen::MatrixXd& gamma_hat,
                                        const std::optional<Eigen::MatrixXd>& extra = std::nullopt) {
    auto c = drift_correction(f, gamma_hat, extra);
    return [f, c](const Eigen::VectorXd& x) { return Eigen::VectorXd(f.b(x) + c(x)); };
}

/// fields whose drift is b + c
inline FieldSpec corrected_fields(const FieldSpec& f, const Eigen::MatrixXd& gamma_hat,
                                  const std::optional<Eigen::MatrixXd>& extra = std::nullopt) {
    return f.with_drift(corrected_drift(f, gamma_hat, extra), "+correction");
}

/**
 * @brief Euler-Maruyama for d Xi = sigma(Xi) dW + drift(Xi) dt on a partition of W's grid.
 *
 * Only the first level of `w` is used; `fields.b` is the full drift.
 */
inline SolutionPath ito_sde_solve(const FieldSpec& fields, const Eigen::VectorXd& y0, const CadlagRoughPath& w,
                                  const std::vector<std::size_t>& partition, bool store = true) {
    require(fields.d() == w.dim(), ErrorKind::dimension_mismatch, "Brownian path dimension differs from d");
    require(static_cast<std::size_t>(y0.size()) == fields.e(), ErrorKind::dimension_mismatch,
            "initial state has the wrong dimension");
    detail::check_partition(w, partition);
    const auto d = static_cast<Eigen::Index>(w.dim());
    SolutionPath out;
    out.scheme = "euler-maruyama";
    out.partition = partition;
    Eigen::VectorXd y = y0;
    Eigen::VectorXd dW(d);
    if (store) {
        out.times.push_back(w.time(partition.front()));
        out.states.push_back(y);
    }
    for (std::size_t k = 1; k < partition.size(); ++k) {
        const std::size_t i = partition[k - 1], j = partition[k];
        for (Eigen::Index a = 0; a < d; ++a)
            dW(a) = j == i + 1 ? w.cell_level1(i)[a] : w.prefix_level1(j)[a] - w.prefix_level1(i)[a];
        const double dt = w.time(j) - w.time(i);
        y = y + fields.sigma(y) * dW + dt * fields.b(y);
        detail::guard_state(y, k, w.time(j));
        if (store) {
            out.times.push_back(w.time(j));
            out.states.push_back(y);
        }
    }
    if (!store) {
        out.times = {w.time(partition.front()), w.time(partition.back())};
        out.states = {y0, y};
    }
    return out;
}

inline SolutionPath ito_sde_solve(const FieldSpec& fields, const Eigen::VectorXd& y0, const CadlagRoughPath& w) {
    return ito_sde_solve(fields, y0, w, full_partition(w));
}

struct LipschitzRow {
    double ell = 0.0;     ///< max homogeneous norm of the two drivers
    double input = 0.0;   ///< rough distance between drivers
    double output = 0.0;  ///< sup distance between solutions
    double ratio = 0.0;   ///< output / input (0 when both vanish)
};

struct LipschitzBucket {
    double lo = 0.0, hi = 0.0;
    std::size_t count = 0;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
};

struct LipschitzTable {
    std::vector<LipschitzRow> rows;
    std::vector<LipschitzBucket> buckets;
};

/**
 * @brief Empirical continuity of the driver-to-solution map.
 *
 * Each pair is solved on its full grid from the same y0; rows record the rough
 * distance of the drivers and the sup distance of the solutions. Rows are
 * grouped into buckets [edges[k], edges[k+1]) of the homogeneous norm.
 */
inline LipschitzTable lipschitz_probe(const FieldSpec& fields, const Eigen::VectorXd& y0,
                                      const std::vector<std::pair<CadlagRoughPath, CadlagRoughPath>>& pairs, double p,
                                      const std::vector<double>& edges = {}, DriftClock clock = DriftClock::identity()) {
    LipschitzTable table;
    for (const auto& [x, y] : pairs) {
        require(same_grid(x, y), ErrorKind::invalid_argument, "driver pairs must share a grid");
        LipschitzRow row;
        row.ell = std::max(homogeneous_norm(x, p), homogeneous_norm(y, p));
        row.input = rough_distance(x, y, p);
        const SolutionPath sx = solve_rde(RDEProblem{fields, y0, x, clock});
        const SolutionPath sy = solve_rde(RDEProblem{fields, y0, y, clock});
        row.output = sx.sup_distance(sy);
        row.ratio = row.input > 0.0 ? row.output / row.input : 0.0;
        table.rows.push_back(row);
    }
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        LipschitzBucket bucket{edges[b], edges[b + 1], 0, 0.0, 0.0};
        std::vector<double> ratios;
        for (const auto& r : table.rows)
            if (r.ell >= bucket.lo && r.ell < bucket.hi) ratios.push_back(r.ratio);
        bucket.count = ratios.size();
        if (!ratios.empty()) {
            bucket.max_ratio = *std::max_element(ratios.begin(), ratios.end());
            std::sort(ratios.begin(), ratios.end());
            const std::size_t n = ratios.size();
            bucket.median_ratio = n % 2 ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
        }
        table.buckets.push_back(bucket);
    }
    return table;
}

}  // namespace roughflow
