#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rkcca/error.hpp"

namespace rkcca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n observations by d features, complete and finite.
class SampleMatrix {
public:
    explicit SampleMatrix(Matrix values) : values_(std::move(values)) {
        detail::require(values_.rows() >= 2, "sample needs at least 2 observations, got " +
                                                 std::to_string(values_.rows()));
        detail::require(values_.cols() >= 1, "sample needs at least 1 feature");
        detail::require(values_.allFinite(), "sample contains non-finite feature values");
    }

    [[nodiscard]] Eigen::Index rows() const { return values_.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return values_.cols(); }
    [[nodiscard]] const Matrix &values() const { return values_; }

private:
    Matrix values_;
};

enum class KernelFamily { gaussian, linear };

struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    /// Gaussian only. Empty means: resolve with the median heuristic.
    std::optional<double> bandwidth;

    static KernelSpec gaussian(std::optional<double> bw = std::nullopt) {
        if (bw) { detail::require(*bw > 0.0 && std::isfinite(*bw), "bandwidth must be positive"); }
        return {KernelFamily::gaussian, bw};
    }
    static KernelSpec linear() { return {KernelFamily::linear, std::nullopt}; }
};

inline std::string to_string(KernelFamily f) {
    return f == KernelFamily::gaussian ? "gaussian" : "linear";
}

/// Nonnegative weights summing to one.
class CenteringWeights {
public:
    explicit CenteringWeights(Vector w) : w_(std::move(w)) {
        detail::require(w_.size() >= 1, "weights must be non-empty");
        detail::require(w_.allFinite() && (w_.array() >= 0.0).all(), "weights must be finite and nonnegative");
        detail::require(std::abs(w_.sum() - 1.0) <= 1e-12, "weights must sum to 1");
    }

    static CenteringWeights uniform(Eigen::Index n) {
        return CenteringWeights(Vector::Constant(n, 1.0 / static_cast<double>(n)));
    }

    /// Scales a nonnegative vector with positive total to unit mass.
    static CenteringWeights normalized(const Vector &p) {
        const double total = p.sum();
        if (!(total > 0.0) || !std::isfinite(total)) {
            throw NumericalError("all observations down-weighted to zero");
        }
        return CenteringWeights(p / total);
    }

    [[nodiscard]] Eigen::Index size() const { return w_.size(); }
    [[nodiscard]] const Vector &values() const { return w_; }
    [[nodiscard]] double operator[](Eigen::Index i) const { return w_[i]; }

private:
    Vector w_;
};

enum class Centering { raw, uniform, weighted };

/// Dense symmetric kernel matrix over one sample. For a linear kernel on
/// fewer features than observations the explicit feature matrix F (values
/// equal F F^T) is kept alongside, so solvers can work in the thin space.
class GramMatrix {
public:
    GramMatrix(Matrix values, Centering centering, std::optional<CenteringWeights> weights = std::nullopt,
               std::optional<Matrix> features = std::nullopt)
        : values_(std::move(values)), centering_(centering), weights_(std::move(weights)),
          features_(std::move(features)) {
        detail::require(values_.rows() == values_.cols(), "Gram matrix must be square");
        detail::require(centering_ != Centering::weighted || weights_.has_value(),
                        "weighted centering requires weights");
        if (features_) {
            detail::require(features_->rows() == values_.rows(), "feature factor row count mismatch");
        }
    }

    static GramMatrix raw(Matrix values) { return GramMatrix(std::move(values), Centering::raw); }

    [[nodiscard]] Eigen::Index size() const { return values_.rows(); }
    [[nodiscard]] const Matrix &values() const { return values_; }
    [[nodiscard]] Centering centering() const { return centering_; }
    [[nodiscard]] const std::optional<CenteringWeights> &weights() const { return weights_; }
    [[nodiscard]] const std::optional<Matrix> &features() const { return features_; }
    [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

private:
    Matrix values_;
    Centering centering_;
    std::optional<CenteringWeights> weights_;
    std::optional<Matrix> features_;
};

namespace detail {

// Observations as contiguous columns (d x n) so distance loops stream memory.
inline Matrix points_by_column(const Matrix &x) { return x.transpose(); }

inline double sq_dist(const double *a, const double *b, Eigen::Index d) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = a[k] - b[k];
        s += diff * diff;
    }
    return s;
}

inline double median_of(std::vector<double> &v) {
    const std::size_t m = v.size();
    const std::size_t hi = m / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(hi), v.end());
    const double upper = v[hi];
    if (m % 2 == 1) { return upper; }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(hi));
    return 0.5 * (lower + upper);
}

}  // namespace detail

/// Median Euclidean distance over all n(n-1)/2 pairs of distinct rows.
[[nodiscard]] inline double median_bandwidth(const SampleMatrix &x) {
    const Matrix pts = detail::points_by_column(x.values());
    const Eigen::Index n = pts.cols();
    const Eigen::Index d = pts.rows();
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index j = 1; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            dist.push_back(std::sqrt(detail::sq_dist(pts.col(i).data(), pts.col(j).data(), d)));
        }
    }
    const double med = detail::median_of(dist);
    if (!(med > 0.0)) { throw NumericalError("degenerate sample: zero median distance"); }
    return med;
}

/// Median pairwise distance of the multiset in which row i of `distinct`
/// occurs counts[i] times. Equals median_bandwidth of the expanded sample.
[[nodiscard]] inline double median_bandwidth(const SampleMatrix &distinct, std::span<const int> counts) {
    const Eigen::Index n = distinct.rows();
    detail::require(static_cast<Eigen::Index>(counts.size()) == n, "multiplicity length mismatch");
    const Matrix pts = detail::points_by_column(distinct.values());
    const Eigen::Index d = pts.rows();

    std::vector<std::pair<double, std::int64_t>> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2 + 1));
    std::int64_t total_n = 0;
    std::int64_t zero_pairs = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const std::int64_t cj = counts[static_cast<std::size_t>(j)];
        detail::require(cj >= 0, "multiplicities must be nonnegative");
        total_n += cj;
        zero_pairs += cj * (cj - 1) / 2;
        for (Eigen::Index i = 0; i < j; ++i) {
            const std::int64_t ci = counts[static_cast<std::size_t>(i)];
            if (ci == 0 || cj == 0) { continue; }
            dist.emplace_back(std::sqrt(detail::sq_dist(pts.col(i).data(), pts.col(j).data(), d)), ci * cj);
        }
    }
    detail::require(total_n >= 2, "need at least 2 observations");
    if (zero_pairs > 0) { dist.emplace_back(0.0, zero_pairs); }
    std::sort(dist.begin(), dist.end());

    const std::int64_t pairs = total_n * (total_n - 1) / 2;
    const std::int64_t hi = pairs / 2;
    const std::int64_t lo = (pairs % 2 == 1) ? hi : hi - 1;
    double lo_val = 0.0;
    double hi_val = 0.0;
    std::int64_t seen = 0;
    bool have_lo = false;
    for (const auto &[value, count] : dist) {
        const std::int64_t next = seen + count;
        if (!have_lo && lo < next) {
            lo_val = value;
            have_lo = true;
        }
        if (hi < next) {
            hi_val = value;
            break;
        }
        seen = next;
    }
    const double med = 0.5 * (lo_val + hi_val);
    if (!(med > 0.0)) { throw NumericalError("degenerate sample: zero median distance"); }
    return med;
}

/// Fills in the median-heuristic bandwidth when a Gaussian spec has none.
[[nodiscard]] inline KernelSpec resolve_bandwidth(const KernelSpec &k, const SampleMatrix &x) {
    if (k.family == KernelFamily::linear || k.bandwidth) { return k; }
    return KernelSpec::gaussian(median_bandwidth(x));
}

/// k(x, x') = exp(-|x - x'|^2 / (2 sigma^2)) or <x, x'>.
[[nodiscard]] inline Matrix cross_gram(const SampleMatrix &rows, const SampleMatrix &cols, const KernelSpec &k) {
    detail::require(rows.cols() == cols.cols(), "feature dimension mismatch between samples");
    if (k.family == KernelFamily::linear) { return rows.values() * cols.values().transpose(); }
    detail::require(k.bandwidth.has_value(), "gaussian bandwidth not resolved");
    const double scale = 1.0 / (2.0 * (*k.bandwidth) * (*k.bandwidth));
    const Matrix a = detail::points_by_column(rows.values());
    const Matrix b = detail::points_by_column(cols.values());
    const Eigen::Index d = a.rows();
    Matrix out(a.cols(), b.cols());
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.cols(); ++i) {
            out(i, j) = std::exp(-scale * detail::sq_dist(a.col(i).data(), b.col(j).data(), d));
        }
    }
    return out;
}

/// Raw Gram matrix. A Gaussian spec without bandwidth is resolved first.
[[nodiscard]] inline GramMatrix gram(const SampleMatrix &x, const KernelSpec &spec) {
    const KernelSpec k = resolve_bandwidth(spec, x);
    const Eigen::Index n = x.rows();
    if (k.family == KernelFamily::linear) {
        Matrix values = x.values() * x.values().transpose();
        if (x.cols() < n) { return GramMatrix(std::move(values), Centering::raw, std::nullopt, x.values()); }
        return GramMatrix::raw(std::move(values));
    }
    const double scale = 1.0 / (2.0 * (*k.bandwidth) * (*k.bandwidth));
    const Matrix pts = detail::points_by_column(x.values());
    const Eigen::Index d = pts.rows();
    Matrix values(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        values(j, j) = 1.0;
        for (Eigen::Index i = 0; i < j; ++i) {
            const double v = std::exp(-scale * detail::sq_dist(pts.col(i).data(), pts.col(j).data(), d));
            values(i, j) = v;
            values(j, i) = v;
        }
    }
    return GramMatrix::raw(std::move(values));
}

/// C K C with C = I - (1/n) 1 1^T (double centering by row and column means).
[[nodiscard]] inline GramMatrix center_uniform(const GramMatrix &g) {
    detail::require(g.centering() == Centering::raw, "center_uniform expects a raw Gram matrix");
    const Eigen::Index n = g.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Vector row_mean = g.values().rowwise().sum() * inv_n;
    const double grand = row_mean.sum() * inv_n;
    Matrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            out(i, j) = g(i, j) - (row_mean[i] + row_mean[j]) + grand;
        }
    }
    std::optional<Matrix> feats;
    if (g.features()) {
        const Eigen::RowVectorXd mean = g.features()->colwise().mean();
        feats = g.features()->rowwise() - mean;
    }
    return GramMatrix(std::move(out), Centering::uniform, std::nullopt, std::move(feats));
}

/// (I - 1 w^T) K (I - 1 w^T)^T, i.e. the Gram matrix of features centered at
/// the w-weighted mean element.
[[nodiscard]] inline GramMatrix center_weighted(const GramMatrix &g, const CenteringWeights &w) {
    detail::require(g.centering() == Centering::raw, "center_weighted expects a raw Gram matrix");
    detail::require(w.size() == g.size(), "weight length " + std::to_string(w.size()) +
                                              " does not match Gram size " + std::to_string(g.size()));
    const Eigen::Index n = g.size();
    const Vector m = g.values() * w.values();
    const double c = w.values().dot(m);
    Matrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) { out(i, j) = g(i, j) - (m[i] + m[j]) + c; }
    }
    std::optional<Matrix> feats;
    if (g.features()) {
        const Eigen::RowVectorXd mean = w.values().transpose() * (*g.features());
        feats = g.features()->rowwise() - mean;
    }
    return GramMatrix(std::move(out), Centering::weighted, w, std::move(feats));
}

/// Centers a T x n cross-Gram k(X^t_i, X_j) against the w-weighted mean of
/// the training features:
///   K^test - 1_T w^T K - K^test w 1_n^T + (w^T K w) 1_T 1_n^T.
[[nodiscard]] inline Matrix center_test(const Matrix &g_test, const GramMatrix &g_train, const CenteringWeights &w) {
    detail::require(g_train.centering() == Centering::raw, "center_test expects a raw training Gram");
    const Eigen::Index n = g_train.size();
    detail::require(g_test.cols() == n, "test Gram has " + std::to_string(g_test.cols()) +
                                            " columns, training sample has " + std::to_string(n));
    detail::require(w.size() == n, "weight length does not match training sample");
    const Vector m = g_train.values() * w.values();
    const double c = w.values().dot(m);
    const Vector t = g_test * w.values();
    Matrix out(g_test.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < g_test.rows(); ++i) { out(i, j) = g_test(i, j) - (m[j] + t[i]) + c; }
    }
    return out;
}

}  // namespace rkcca
