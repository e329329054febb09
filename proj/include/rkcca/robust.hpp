#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rkcca/error.hpp"
#include "rkcca/kernel.hpp"

namespace rkcca {

enum class LossKind { quadratic, huber, hampel };

inline std::string to_string(LossKind k) {
    switch (k) {
    case LossKind::quadratic: return "quadratic";
    case LossKind::huber: return "huber";
    case LossKind::hampel: return "hampel";
    }
    return "?";
}

/// A robust loss on residual norms. Constants left empty are filled from
/// the first-iteration residuals by the KIRWLS loop (huber: median;
/// hampel: 70th/85th/95th percentiles).
struct LossSpec {
    LossKind kind = LossKind::quadratic;
    std::optional<double> c;                     // huber
    std::optional<std::array<double, 3>> c123;   // hampel

    static LossSpec quadratic() { return {}; }

    static LossSpec huber(std::optional<double> c = std::nullopt) {
        if (c) { detail::require(*c > 0.0, "huber constant must be positive"); }
        return {LossKind::huber, c, std::nullopt};
    }

    static LossSpec hampel(std::optional<std::array<double, 3>> cs = std::nullopt) {
        if (cs) {
            const auto [c1, c2, c3] = *cs;
            detail::require(c1 > 0.0 && c1 <= c2 && c2 < c3 && std::isfinite(c3),
                            "hampel constants must satisfy 0 < c1 <= c2 < c3");
        }
        return {LossKind::hampel, std::nullopt, cs};
    }

    [[nodiscard]] bool resolved() const {
        switch (kind) {
        case LossKind::quadratic: return true;
        case LossKind::huber: return c.has_value();
        case LossKind::hampel: return c123.has_value();
        }
        return false;
    }
};

namespace detail {

inline void require_resolved(const LossSpec &loss) {
    require(loss.resolved(), to_string(loss.kind) + " loss constants are not set");
}

}  // namespace detail

/// zeta(t) for t >= 0.
[[nodiscard]] inline double loss_value(const LossSpec &loss, double t) {
    detail::require(t >= 0.0, "loss argument must be nonnegative");
    detail::require_resolved(loss);
    switch (loss.kind) {
    case LossKind::quadratic: return 0.5 * t * t;
    case LossKind::huber: {
        const double c = *loss.c;
        return t <= c ? 0.5 * t * t : c * t - 0.5 * c * c;
    }
    case LossKind::hampel: {
        const auto [c1, c2, c3] = *loss.c123;
        const double top = 0.5 * c1 * (c2 + c3 - c1);
        if (t < c1) { return 0.5 * t * t; }
        if (t < c2) { return c1 * t - 0.5 * c1 * c1; }
        if (t < c3) { return top - c1 * (c3 - t) * (c3 - t) / (2.0 * (c3 - c2)); }
        return top;
    }
    }
    return 0.0;
}

/// phi(t) = zeta'(t) / t, with phi(0) = 1.
[[nodiscard]] inline double loss_weight(const LossSpec &loss, double t) {
    detail::require_resolved(loss);
    switch (loss.kind) {
    case LossKind::quadratic: return 1.0;
    case LossKind::huber: {
        const double c = *loss.c;
        return t <= c ? 1.0 : c / t;
    }
    case LossKind::hampel: {
        const auto [c1, c2, c3] = *loss.c123;
        if (t < c1) { return 1.0; }
        if (t < c2) { return c1 / t; }
        if (t < c3) { return c1 * (c3 - t) / (t * (c3 - c2)); }
        return 0.0;
    }
    }
    return 1.0;
}

/// Percentile with linear interpolation between order statistics.
[[nodiscard]] inline double percentile(std::vector<double> v, double pct) {
    detail::require(!v.empty(), "percentile of empty set");
    std::sort(v.begin(), v.end());
    const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

/// Fills unset constants from residual percentiles. Ties among residuals can
/// collapse percentiles; the result is nudged to keep 0 < c1 <= c2 < c3.
[[nodiscard]] inline LossSpec resolve_constants(const LossSpec &loss, const Vector &residuals) {
    if (loss.resolved()) { return loss; }
    std::vector<double> r(residuals.data(), residuals.data() + residuals.size());
    const double tiny = std::numeric_limits<double>::min();
    if (loss.kind == LossKind::huber) { return LossSpec::huber(std::max(percentile(r, 50.0), tiny)); }
    double c1 = std::max(percentile(r, 70.0), tiny);
    double c2 = std::max(percentile(r, 85.0), c1);
    double c3 = percentile(r, 95.0);
    if (!(c3 > c2)) { c3 = c2 * (1.0 + 1e-9) + tiny; }
    return LossSpec::hampel(std::array<double, 3>{c1, c2, c3});
}

struct KirwlsConfig {
    int max_iter = 100;
    double tol = 1e-8;
    LossSpec loss = LossSpec::hampel();
};

struct RobustWeights {
    CenteringWeights w;
    int iterations_used = 0;
    bool converged = false;
    Vector residuals;
    LossSpec loss;   // with constants resolved
};

namespace detail {

inline void validate(const KirwlsConfig &cfg) {
    require(cfg.max_iter >= 1, "max_iter must be at least 1");
    require(cfg.tol > 0.0, "tol must be positive");
}

inline Vector clamped_sqrt(const Vector &sq) { return sq.cwiseMax(0.0).cwiseSqrt(); }

// Fixed-point iteration w <- phi(r(w)) / sum phi(r(w)) from uniform weights.
template <class ResidualFn>
RobustWeights kirwls(Eigen::Index n, const KirwlsConfig &cfg, ResidualFn &&residuals_at) {
    validate(cfg);
    require(n >= 2, "KIRWLS needs at least 2 observations");
    CenteringWeights w = CenteringWeights::uniform(n);
    LossSpec loss = cfg.loss;
    int it = 0;
    bool converged = false;
    while (it < cfg.max_iter) {
        ++it;
        const Vector r = residuals_at(w);
        if (it == 1) { loss = resolve_constants(loss, r); }
        Vector p(n);
        for (Eigen::Index i = 0; i < n; ++i) { p[i] = loss_weight(loss, r[i]); }
        CenteringWeights next = CenteringWeights::normalized(p);
        const double change = (next.values() - w.values()).cwiseAbs().maxCoeff() / w.values().cwiseAbs().maxCoeff();
        w = std::move(next);
        if (change < cfg.tol) {
            converged = true;
            break;
        }
    }
    Vector final_r = residuals_at(w);
    return RobustWeights{std::move(w), it, converged, std::move(final_r), loss};
}

}  // namespace detail

/// RKHS residual norms |Phi(X_i) - sum_a w_a Phi(X_a)| via the kernel trick.
[[nodiscard]] inline Vector mean_residuals(const GramMatrix &g, const CenteringWeights &w) {
    detail::require(g.centering() == Centering::raw, "expects a raw Gram matrix");
    const Vector m = g.values() * w.values();
    const double c = w.values().dot(m);
    return detail::clamped_sqrt((g.values().diagonal() - 2.0 * m).array() + c);
}

/// Tensor-product residual norms |Phi_c(X_i) (x) Phi_c(Y_i) - Sigma_XY| with
/// features centered at the current weighted mean and Sigma_XY the weighted
/// cross-covariance.
[[nodiscard]] inline Vector cco_residuals(const GramMatrix &gx, const GramMatrix &gy, const CenteringWeights &w) {
    const Matrix p = center_weighted(gx, w).values().cwiseProduct(center_weighted(gy, w).values());
    const Vector pw = p * w.values();
    const double c = w.values().dot(pw);
    return detail::clamped_sqrt((p.diagonal() - 2.0 * pw).array() + c);
}

/// Weights of the robust kernel mean element.
[[nodiscard]] inline RobustWeights robust_mean_weights(const GramMatrix &g, const KirwlsConfig &cfg) {
    return detail::kirwls(g.size(), cfg, [&](const CenteringWeights &w) { return mean_residuals(g, w); });
}

/// Weights of the robust kernel cross-covariance operator. The same vector
/// serves both covariance operators in robust KCCA.
[[nodiscard]] inline RobustWeights robust_cco_weights(const GramMatrix &gx, const GramMatrix &gy,
                                                      const KirwlsConfig &cfg) {
    detail::require(gx.centering() == Centering::raw && gy.centering() == Centering::raw,
                    "robust_cco_weights expects raw Gram matrices");
    detail::require(gx.size() == gy.size(), "views have different sample sizes");
    return detail::kirwls(gx.size(), cfg, [&](const CenteringWeights &w) { return cco_residuals(gx, gy, w); });
}

}  // namespace rkcca
