#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rkcca/error.hpp"
#include "rkcca/kernel.hpp"
#include "rkcca/robust.hpp"

namespace rkcca {

struct KccaConfig {
    double kappa = 1e-2;
    int n_components = 1;
    /// Empty: classical fit with uniform weights. Set: robust fit whose
    /// weights come from the kernel cross-covariance KIRWLS.
    std::optional<KirwlsConfig> robust;

    [[nodiscard]] bool is_robust() const { return robust.has_value(); }
};

/// Rows of coef_* and variates_* are components, columns are observations.
struct KccaModel {
    Vector rho;
    Matrix coef_x, coef_y;
    Matrix variates_x, variates_y;
    CenteringWeights weights;
    double kappa = 0.0;
    /// Unclipped canonical correlations.
    Vector rho_raw;
    /// Populated by robust fits.
    std::optional<RobustWeights> robust_info;
};

namespace detail {

inline constexpr double rho_ceiling = 1.0 - 1e-12;
inline constexpr double rank_tol = 1e-12;
// Eigenvalues below this fraction of the raw kernel scale are centering residue.
inline constexpr double null_tol = 1e-14;

inline void validate(const KccaConfig &cfg, Eigen::Index n) {
    require(cfg.kappa > 0.0 && std::isfinite(cfg.kappa), "kappa must be positive");
    require(cfg.n_components >= 1, "n_components must be at least 1");
    require(cfg.n_components <= n, "n_components exceeds sample size");
    if (cfg.robust) { validate(*cfg.robust); }
}

// Eigenpairs of S = D M D, D = diag(sqrt(w)), restricted to eigenvalues above
// a relative tolerance. basis is n x r with orthonormal columns.
struct Spectrum {
    Matrix basis;
    Vector values;

    [[nodiscard]] Eigen::Index rank() const { return values.size(); }
};

inline Spectrum keep_leading(const Matrix &vecs, const Vector &vals, double scale, const Matrix *lift = nullptr) {
    const double top = vals.size() > 0 ? std::max(vals.maxCoeff(), 0.0) : 0.0;
    const double cut = std::max(rank_tol * top, null_tol * scale);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = vals.size() - 1; i >= 0; --i) {
        if (vals[i] > cut) { keep.push_back(i); }
    }
    const Eigen::Index n = lift ? lift->rows() : vecs.rows();
    Spectrum s{Matrix(n, static_cast<Eigen::Index>(keep.size())), Vector(static_cast<Eigen::Index>(keep.size()))};
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        const double lam = vals[keep[k]];
        s.values[idx] = lam;
        if (lift) {
            // Left singular vector of G from a right one: G v / sqrt(lambda).
            s.basis.col(idx) = (*lift) * vecs.col(keep[k]) / std::sqrt(lam);
        } else {
            s.basis.col(idx) = vecs.col(keep[k]);
        }
    }
    return s;
}

// scale: w-weighted mean of the raw kernel diagonal.
inline Spectrum scaled_spectrum(const GramMatrix &centered, const Vector &sqrt_w, double scale) {
    if (centered.features()) {
        const Matrix g = sqrt_w.asDiagonal() * (*centered.features());
        Eigen::SelfAdjointEigenSolver<Matrix> es(g.transpose() * g);
        if (es.info() != Eigen::Success) { throw NumericalError("eigendecomposition failed"); }
        return keep_leading(es.eigenvectors(), es.eigenvalues(), scale, &g);
    }
    const Matrix s = sqrt_w.asDiagonal() * centered.values() * sqrt_w.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    if (es.info() != Eigen::Success) { throw NumericalError("eigendecomposition failed"); }
    return keep_leading(es.eigenvectors(), es.eigenvalues(), scale);
}

// sqrt(lambda / (lambda + kappa)), the spectral form of (S + kappa)^(-1/2) S^(1/2).
inline Vector shrink(const Vector &lam, double kappa) {
    return (lam.array() / (lam.array() + kappa)).sqrt().matrix();
}

inline Vector apply_gram(const GramMatrix &centered, const Vector &a) {
    if (centered.features()) {
        const Matrix &f = *centered.features();
        return f * (f.transpose() * a);
    }
    return centered.values() * a;
}

inline double kernel_scale(const GramMatrix &raw, const CenteringWeights &w) {
    return std::abs(w.values().dot(raw.values().diagonal()));
}

inline double weighted_mean(const Vector &v, const Vector &w) { return w.dot(v); }

// Weighted mean 0, weighted variance 1; a zero-variance vector maps to zeros.
inline Vector standardize(const Vector &v, const Vector &w) {
    const Vector c = v.array() - weighted_mean(v, w);
    const double var = w.dot(c.cwiseProduct(c));
    if (!(var > 0.0)) { return Vector::Zero(v.size()); }
    return c / std::sqrt(var);
}

}  // namespace detail

/// KCCA with a fixed weight vector on centered Gram matrices. The coefficient
/// problem is solved through the eigenpairs of S = D M D in each view, which
/// avoids inverting M W M + kappa M.
[[nodiscard]] inline KccaModel fit_weighted(const GramMatrix &gx, const GramMatrix &gy, const CenteringWeights &w,
                                            const KccaConfig &cfg) {
    detail::require(gx.centering() == Centering::raw && gy.centering() == Centering::raw,
                    "fit expects raw Gram matrices");
    const Eigen::Index n = gx.size();
    detail::require(gy.size() == n, "views have different sample sizes");
    detail::require(w.size() == n, "weight length does not match sample size");
    detail::validate(cfg, n);
    const int k = cfg.n_components;

    const GramMatrix mx = center_weighted(gx, w);
    const GramMatrix my = center_weighted(gy, w);
    const Vector sqrt_w = w.values().cwiseSqrt();
    const detail::Spectrum sx = detail::scaled_spectrum(mx, sqrt_w, detail::kernel_scale(gx, w));
    const detail::Spectrum sy = detail::scaled_spectrum(my, sqrt_w, detail::kernel_scale(gy, w));

    KccaModel model{Vector::Zero(k),    Matrix::Zero(k, n), Matrix::Zero(k, n), Matrix::Zero(k, n),
                    Matrix::Zero(k, n), w,                  cfg.kappa,          Vector::Zero(k),
                    std::nullopt};
    if (sx.rank() == 0 || sy.rank() == 0) { return model; }
    detail::require(k <= std::min(sx.rank(), sy.rank()),
                    "n_components exceeds the rank of the centered Gram matrices");

    const Vector gxs = detail::shrink(sx.values, cfg.kappa);
    const Vector gys = detail::shrink(sy.values, cfg.kappa);
    const Matrix b = gxs.asDiagonal() * (sx.basis.transpose() * sy.basis) * gys.asDiagonal();

    // Singular triplets of B through the smaller Gram side.
    const bool left = b.rows() <= b.cols();
    Eigen::SelfAdjointEigenSolver<Matrix> es(left ? Matrix(b * b.transpose()) : Matrix(b.transpose() * b));
    if (es.info() != Eigen::Success) { throw NumericalError("eigendecomposition failed"); }
    const Vector ev = es.eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(ev.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) { return ev[a] > ev[c]; });

    const Vector inv_x = (sx.values.array() * (sx.values.array() + cfg.kappa)).rsqrt().matrix();
    const Vector inv_y = (sy.values.array() * (sy.values.array() + cfg.kappa)).rsqrt().matrix();

    for (int j = 0; j < k; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(j)];
        const double r = std::sqrt(std::max(ev[src], 0.0));
        Vector p, q;
        if (left) {
            p = es.eigenvectors().col(src);
            q = r > 0.0 ? Vector(b.transpose() * p / r) : Vector::Zero(b.cols());
        } else {
            q = es.eigenvectors().col(src);
            p = r > 0.0 ? Vector(b * q / r) : Vector::Zero(b.rows());
        }
        Vector ax = sqrt_w.asDiagonal() * (sx.basis * inv_x.cwiseProduct(p));
        Vector ay = sqrt_w.asDiagonal() * (sy.basis * inv_y.cwiseProduct(q));
        Vector fx = detail::standardize(detail::apply_gram(mx, ax), w.values());
        Vector fy = detail::standardize(detail::apply_gram(my, ay), w.values());

        Eigen::Index imax = 0;
        fx.cwiseAbs().maxCoeff(&imax);
        if (fx[imax] < 0.0) {
            fx = -fx;
            ax = -ax;
            fy = -fy;
            ay = -ay;
        }
        if (w.values().dot(fx.cwiseProduct(fy)) < 0.0) {
            fy = -fy;
            ay = -ay;
        }
        model.rho_raw[j] = r;
        model.rho[j] = std::clamp(r, 0.0, detail::rho_ceiling);
        model.coef_x.row(j) = ax.transpose();
        model.coef_y.row(j) = ay.transpose();
        model.variates_x.row(j) = fx.transpose();
        model.variates_y.row(j) = fy.transpose();
    }
    return model;
}

/// Classical or robust KCCA on raw Gram matrices.
[[nodiscard]] inline KccaModel fit(const GramMatrix &gx, const GramMatrix &gy, const KccaConfig &cfg) {
    detail::require(gx.size() == gy.size(), "views have different sample sizes");
    detail::validate(cfg, gx.size());
    if (!cfg.robust) { return fit_weighted(gx, gy, CenteringWeights::uniform(gx.size()), cfg); }
    RobustWeights rw = robust_cco_weights(gx, gy, *cfg.robust);
    KccaModel model = fit_weighted(gx, gy, rw.w, cfg);
    model.robust_info = std::move(rw);
    return model;
}

[[nodiscard]] inline double first_kcc(const KccaModel &model) {
    detail::require(model.rho.size() >= 1, "model has no components");
    return model.rho[0];
}

/// Leading canonical correlation only, for resampling loops. Uses one
/// eigendecomposition and one Cholesky factorization instead of two
/// eigendecompositions. Not clipped.
[[nodiscard]] inline double leading_correlation(const GramMatrix &gx, const GramMatrix &gy, const CenteringWeights &w,
                                                double kappa) {
    const Eigen::Index n = gx.size();
    detail::require(gy.size() == n && w.size() == n, "size mismatch");
    detail::require(kappa > 0.0, "kappa must be positive");
    const Vector sqrt_w = w.values().cwiseSqrt();
    const GramMatrix mx = center_weighted(gx, w);
    const GramMatrix my = center_weighted(gy, w);
    const detail::Spectrum sx = detail::scaled_spectrum(mx, sqrt_w, detail::kernel_scale(gx, w));
    if (sx.rank() == 0) { return 0.0; }
    const Matrix s_y = sqrt_w.asDiagonal() * my.values() * sqrt_w.asDiagonal();
    if (!(s_y.trace() > detail::null_tol * detail::kernel_scale(gy, w))) { return 0.0; }

    // R_Y = I - kappa (S_Y + kappa I)^-1 = S_Y (S_Y + kappa I)^-1.
    Matrix shifted = s_y;
    shifted.diagonal().array() += kappa;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) { throw NumericalError("Cholesky factorization failed"); }
    const Matrix proj = llt.solve(sx.basis);           // (S_Y + kappa)^-1 U_X
    Matrix t = -kappa * (sx.basis.transpose() * proj);  // U^T (R_Y - I) U
    t.diagonal().array() += 1.0;
    const Vector g = detail::shrink(sx.values, kappa);
    const Matrix core = g.asDiagonal() * t * g.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(core, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) { throw NumericalError("eigendecomposition failed"); }
    return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

}  // namespace rkcca
