#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "rkcca/error.hpp"
#include "rkcca/fisher.hpp"
#include "rkcca/kcca.hpp"
#include "rkcca/kernel.hpp"
#include "rkcca/parallel.hpp"
#include "rkcca/random.hpp"

namespace rkcca {

inline constexpr double var_z_floor = 1e-12;

struct EifRecord {
    Vector eif_rho;
    Vector u, v;
    Vector eif_z;
    double var_z = var_z_floor;
    bool floored = false;
};

struct SensitivityPair {
    double eta_rho = 0.0;
    double eta_f = 0.0;
};

/// Per-observation influence on rho^2:
///   -rho^2 x_i^2 + 2 rho x_i y_i - rho^2 y_i^2
/// with x, y the standardized first canonical variates.
[[nodiscard]] inline Vector eif_rho(const KccaModel &model) {
    const double r = first_kcc(model);
    const Vector x = model.variates_x.row(0).transpose();
    const Vector y = model.variates_y.row(0).transpose();
    return (-r * r * x.array().square() + 2.0 * r * x.array() * y.array() - r * r * y.array().square()).matrix();
}

/// Influence of Fisher's z through the rotated variates u = (x+y)/sqrt2,
/// v = (x-y)/sqrt2. var_z is the weighted variance of u*v divided by n,
/// floored at var_z_floor.
[[nodiscard]] inline EifRecord eif_fisher(const KccaModel &model) {
    const Vector x = model.variates_x.row(0).transpose();
    const Vector y = model.variates_y.row(0).transpose();
    const Vector &w = model.weights.values();
    EifRecord rec;
    rec.eif_rho = eif_rho(model);
    rec.u = (x + y) / std::numbers::sqrt2;
    rec.v = (x - y) / std::numbers::sqrt2;
    rec.eif_z = rec.u.cwiseProduct(rec.v);
    const double mean = w.dot(rec.eif_z);
    const Vector c = rec.eif_z.array() - mean;
    const double var = w.dot(c.cwiseProduct(c)) / static_cast<double>(x.size());
    if (var > var_z_floor) {
        rec.var_z = var;
    } else {
        rec.var_z = var_z_floor;
        rec.floored = true;
    }
    return rec;
}

namespace detail {

inline SampleMatrix take_rows(const SampleMatrix &m, const std::vector<Eigen::Index> &rows) {
    return SampleMatrix(m.values()(rows, Eigen::all));
}

inline KernelSpec resolve_multiset(const KernelSpec &k, const SampleMatrix &distinct, const std::vector<int> &counts) {
    if (k.family == KernelFamily::linear || k.bandwidth) { return k; }
    return KernelSpec::gaussian(median_bandwidth(distinct, counts));
}

// Fisher z of the leading correlation on one bootstrap resample, given the
// multiplicity of every original row.
inline double resample_z(const SampleMatrix &x, const SampleMatrix &y, const KernelSpec &kx, const KernelSpec &ky,
                         const KccaConfig &cfg, const std::vector<int> &counts) {
    const auto n = static_cast<double>(x.rows());
    std::vector<Eigen::Index> rows;
    std::vector<int> mult;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > 0) {
            rows.push_back(static_cast<Eigen::Index>(i));
            mult.push_back(counts[i]);
        }
    }
    double r = 0.0;
    if (cfg.robust) {
        // KIRWLS weights depend on every copy, so the resample is expanded.
        std::vector<Eigen::Index> expanded;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            for (int c = 0; c < counts[i]; ++c) { expanded.push_back(static_cast<Eigen::Index>(i)); }
        }
        const SampleMatrix xr = take_rows(x, expanded);
        const SampleMatrix yr = take_rows(y, expanded);
        r = first_kcc(fit(gram(xr, kx), gram(yr, ky), cfg));
    } else {
        // A classical fit on a resample equals a weighted fit on its distinct
        // rows with weights count / n.
        const SampleMatrix xd = take_rows(x, rows);
        const SampleMatrix yd = take_rows(y, rows);
        const GramMatrix gx = gram(xd, resolve_multiset(kx, xd, mult));
        const GramMatrix gy = gram(yd, resolve_multiset(ky, yd, mult));
        Vector p(static_cast<Eigen::Index>(mult.size()));
        for (std::size_t i = 0; i < mult.size(); ++i) { p[static_cast<Eigen::Index>(i)] = mult[i] / n; }
        const CenteringWeights w = CenteringWeights::normalized(p);
        KccaConfig one = cfg;
        one.n_components = 1;
        if (gx.features() || gy.features()) {
            r = fit_weighted(gx, gy, w, one).rho_raw[0];
        } else {
            r = leading_correlation(gx, gy, w, cfg.kappa);
        }
    }
    return fisher_z(std::clamp(r, 0.0, rho_ceiling));
}

}  // namespace detail

/// Sample variance of Fisher's z over b paired resamples with replacement.
/// Each replicate draws from its own stream split off `seed`.
[[nodiscard]] inline double bootstrap_var_z(const SampleMatrix &x, const SampleMatrix &y, const KernelSpec &kx,
                                            const KernelSpec &ky, const KccaConfig &cfg, int b, std::uint64_t seed,
                                            unsigned workers = 1) {
    detail::require(x.rows() == y.rows(), "views have different sample sizes");
    detail::require(b >= 2, "bootstrap needs at least 2 replicates");
    const Eigen::Index n = x.rows();
    const std::vector<double> z = parallel_map(static_cast<std::size_t>(b), workers, [&](std::size_t rep) {
        for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
            Engine eng = make_engine(derive_seed(seed, {label("bootstrap"), rep, attempt}));
            std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
            std::vector<int> counts(static_cast<std::size_t>(n), 0);
            for (Eigen::Index i = 0; i < n; ++i) { ++counts[static_cast<std::size_t>(pick(eng))]; }
            if (std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) < 2) { continue; }
            return detail::resample_z(x, y, kx, ky, cfg, counts);
        }
        throw NumericalError("bootstrap replicate " + std::to_string(rep) +
                             ": fewer than 2 distinct points after 10 draws");
    });
    double mean = 0.0;
    for (double v : z) { mean += v; }
    mean /= static_cast<double>(b);
    double ss = 0.0;
    for (double v : z) { ss += (v - mean) * (v - mean); }
    return ss / static_cast<double>(b - 1);
}

namespace detail {

inline double eta(double num, double den, const char *what) {
    if (den == 0.0) {
        if (num == 0.0) { return 0.0; }
        throw NumericalError(std::string("sensitivity ") + what + ": contaminated-data norm is zero");
    }
    return std::abs(1.0 - num / den);
}

}  // namespace detail

/// eta_rho = |1 - |EIF_ID| / |EIF_CD||, eta_f the same ratio on the
/// difference of the standardized first variates.
[[nodiscard]] inline SensitivityPair sensitivity(const KccaModel &id, const KccaModel &cd) {
    detail::require(id.variates_x.cols() == cd.variates_x.cols(), "ID and CD models have different sample sizes");
    const double e_id = eif_rho(id).norm();
    const double e_cd = eif_rho(cd).norm();
    const double f_id = (id.variates_x.row(0) - id.variates_y.row(0)).norm();
    const double f_cd = (cd.variates_x.row(0) - cd.variates_y.row(0)).norm();
    return {detail::eta(e_id, e_cd, "eta_rho"), detail::eta(f_id, f_cd, "eta_f")};
}

/// (index, influence) pairs in observation order.
[[nodiscard]] inline std::vector<std::pair<int, double>> index_plot_data(const KccaModel &model) {
    const Vector e = eif_rho(model);
    std::vector<std::pair<int, double>> out;
    out.reserve(static_cast<std::size_t>(e.size()));
    for (Eigen::Index i = 0; i < e.size(); ++i) { out.emplace_back(static_cast<int>(i), e[i]); }
    return out;
}

}  // namespace rkcca
