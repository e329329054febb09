#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rkcca/dataset.hpp"
#include "rkcca/error.hpp"
#include "rkcca/kernel.hpp"
#include "rkcca/random.hpp"
#include "rkcca/robust.hpp"

namespace rkcca {

enum class Design { scs, mgs, sms };
enum class Variant { id, cd };

inline std::string to_string(Design d) {
    switch (d) {
    case Design::scs: return "scs";
    case Design::mgs: return "mgs";
    case Design::sms: return "sms";
    }
    return "?";
}
inline std::string to_string(Variant v) { return v == Variant::id ? "id" : "cd"; }

inline Design parse_design(std::string s) {
    if (s.size() == 4 && s.back() == 'd') { s.pop_back(); }  // scsd, mgsd, smsd
    if (s == "scs") { return Design::scs; }
    if (s == "mgs") { return Design::mgs; }
    if (s == "sms") { return Design::sms; }
    throw ValidationError("unknown design '" + s + "'");
}
inline Variant parse_variant(const std::string &s) {
    if (s == "id") { return Variant::id; }
    if (s == "cd") { return Variant::cd; }
    throw ValidationError("unknown variant '" + s + "'");
}

struct SynthSpec {
    Design design = Design::scs;
    int n = 100;
    Variant variant = Variant::id;
    std::uint64_t seed = 0;
    double sms_sigma_x = 10.0;  // contaminated rows
    double sms_sigma_y = 20.0;
    double contamination_rate = 0.05;
    /// Test hook: overrides the clean noise scale (SCS eta sd, SMS sigma).
    std::optional<double> noise_sd;
    int sms_columns = 1000;
    int sms_loaded = 50;
    double sms_loading = 0.5;
    /// MGS covariance; empty means 0.9^|i-j| on 12 coordinates.
    std::optional<Matrix> mgs_sigma;
};

struct SynthData {
    Matrix x, y;
    std::vector<int> contaminated;
};

namespace detail {

inline void validate(const SynthSpec &s) {
    require(s.n >= 10, "synthetic sample size must be at least 10");
    require(s.contamination_rate >= 0.0 && s.contamination_rate < 1.0, "contamination rate must lie in [0, 1)");
    require(s.sms_sigma_x > 0.0 && s.sms_sigma_y > 0.0, "sms noise levels must be positive");
    if (s.noise_sd) { require(*s.noise_sd >= 0.0, "noise override must be nonnegative"); }
    require(s.sms_columns >= 1 && s.sms_loaded >= 0 && s.sms_loaded <= s.sms_columns, "invalid sms column layout");
}

inline int contaminated_count(int n, double rate) {
    return static_cast<int>(std::ceil(rate * static_cast<double>(n) - 1e-9));
}

// A seeded subset of rows, ascending. Drawn from its own stream so the row
// streams are untouched.
inline std::vector<int> pick_rows(const SynthSpec &s) {
    if (s.variant == Variant::id) { return {}; }
    const int k = contaminated_count(s.n, s.contamination_rate);
    std::vector<int> idx(static_cast<std::size_t>(s.n));
    for (int i = 0; i < s.n; ++i) { idx[static_cast<std::size_t>(i)] = i; }
    Engine eng = make_engine(derive_seed(s.seed, {label("contamination"), static_cast<std::uint64_t>(s.n)}));
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, s.n - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(eng))]);
    }
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline std::vector<bool> row_flags(int n, const std::vector<int> &rows) {
    std::vector<bool> f(static_cast<std::size_t>(n), false);
    for (int r : rows) { f[static_cast<std::size_t>(r)] = true; }
    return f;
}

inline Engine row_engine(const SynthSpec &s, std::string_view stream, int row) {
    return make_engine(derive_seed(s.seed, {label(stream), static_cast<std::uint64_t>(row)}));
}

inline Matrix toeplitz_sigma(int dim, double r) {
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) { m(i, j) = std::pow(r, std::abs(i - j)); }
    }
    return m;
}

}  // namespace detail

/// Sine/cosine design: Z ~ U[-3pi, 3pi], X_ij = sin(jZ) + eta, Y_ij = cos(jZ) + eta.
[[nodiscard]] inline SynthData gen_scs(const SynthSpec &s) {
    detail::validate(s);
    detail::require(s.design == Design::scs, "gen_scs needs design scs");
    const int p = 100;
    const double sd = s.noise_sd.value_or(0.1);
    SynthData out{Matrix(s.n, p), Matrix(s.n, p), detail::pick_rows(s)};
    const auto bad = detail::row_flags(s.n, out.contaminated);
    for (int i = 0; i < s.n; ++i) {
        Engine eng = detail::row_engine(s, "scs", i);
        std::uniform_real_distribution<double> unif(-3.0 * std::numbers::pi, 3.0 * std::numbers::pi);
        std::normal_distribution<double> norm;
        const double z = unif(eng);
        const double eta = (bad[static_cast<std::size_t>(i)] ? 1.0 : 0.0) + sd * norm(eng);
        for (int j = 0; j < p; ++j) {
            out.x(i, j) = std::sin((j + 1) * z) + eta;
            out.y(i, j) = std::cos((j + 1) * z) + eta;
        }
    }
    return out;
}

/// Multivariate Gaussian design: Z ~ N(0, Sigma) in R^12, X = Z[0..6), Y = ln|Z[6..12)|.
[[nodiscard]] inline SynthData gen_mgs(const SynthSpec &s) {
    detail::validate(s);
    detail::require(s.design == Design::mgs, "gen_mgs needs design mgs");
    const Matrix sigma = s.mgs_sigma.value_or(detail::toeplitz_sigma(12, 0.9));
    detail::require(sigma.rows() == 12 && sigma.cols() == 12, "mgs covariance must be 12 x 12");
    Eigen::LLT<Matrix> llt(sigma);
    detail::require(llt.info() == Eigen::Success, "mgs covariance must be positive definite");
    const Matrix l = llt.matrixL();
    SynthData out{Matrix(s.n, 6), Matrix(s.n, 6), detail::pick_rows(s)};
    const auto bad = detail::row_flags(s.n, out.contaminated);
    for (int i = 0; i < s.n; ++i) {
        Engine eng = detail::row_engine(s, "mgs", i);
        std::normal_distribution<double> norm;
        Vector z(12);
        for (;;) {
            Vector e(12);
            for (int k = 0; k < 12; ++k) { e[k] = norm(eng); }
            z = l * e;
            if (bad[static_cast<std::size_t>(i)]) { z.array() += 1.0; }
            if ((z.tail(6).array() != 0.0).all()) { break; }
        }
        out.x.row(i) = z.head(6).transpose();
        out.y.row(i) = z.tail(6).array().abs().log().matrix().transpose();
    }
    return out;
}

/// Shared-latent design: h ~ N(0,1), the first loaded columns of both views
/// carry loading * h, all columns get Gaussian noise.
[[nodiscard]] inline SynthData gen_sms(const SynthSpec &s) {
    detail::validate(s);
    detail::require(s.design == Design::sms, "gen_sms needs design sms");
    const int p = s.sms_columns;
    const double sd = s.noise_sd.value_or(1.0);
    SynthData out{Matrix(s.n, p), Matrix(s.n, p), detail::pick_rows(s)};
    const auto bad = detail::row_flags(s.n, out.contaminated);
    for (int i = 0; i < s.n; ++i) {
        Engine eng = detail::row_engine(s, "sms", i);
        std::normal_distribution<double> norm;
        const bool c = bad[static_cast<std::size_t>(i)];
        const double sx = c ? s.sms_sigma_x : sd;
        const double sy = c ? s.sms_sigma_y : sd;
        const double h = norm(eng);
        for (int j = 0; j < p; ++j) { out.x(i, j) = (j < s.sms_loaded ? s.sms_loading * h : 0.0) + sx * norm(eng); }
        for (int j = 0; j < p; ++j) { out.y(i, j) = (j < s.sms_loaded ? s.sms_loading * h : 0.0) + sy * norm(eng); }
    }
    return out;
}

[[nodiscard]] inline SynthData generate(const SynthSpec &s) {
    switch (s.design) {
    case Design::scs: return gen_scs(s);
    case Design::mgs: return gen_mgs(s);
    case Design::sms: return gen_sms(s);
    }
    throw ValidationError("unknown design");
}

namespace detail {

// Terciles of a column mapped to 0/1/2.
inline void discretize_terciles(Matrix &m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::vector<double> col(m.col(j).data(), m.col(j).data() + m.rows());
        const double q1 = percentile(col, 100.0 / 3.0);
        const double q2 = percentile(col, 200.0 / 3.0);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double v = m(i, j);
            m(i, j) = static_cast<double>((v > q1 ? 1 : 0) + (v > q2 ? 1 : 0));
        }
    }
}

}  // namespace detail

/// Two genes of snps_per_gene SNPs each. Cases share one latent between the
/// genes; controls draw an independent latent per gene. Cases come first.
[[nodiscard]] inline CaseControlDataset plant_case_control(const SynthSpec &s, int n_case, int n_control,
                                                           int snps_per_gene = 25) {
    detail::require(s.design == Design::sms, "plant_case_control needs design sms");
    detail::require(n_case >= 2 && n_control >= 2, "need at least 2 subjects per arm");
    detail::require(snps_per_gene >= 1, "genes need at least one SNP");
    const int n = n_case + n_control;
    SynthSpec rows = s;
    rows.n = std::max(n, 10);
    detail::validate(rows);
    const std::vector<int> contaminated = detail::pick_rows(rows);
    const auto bad = detail::row_flags(rows.n, contaminated);
    const double sd = s.noise_sd.value_or(1.0);
    const int loaded = std::min(s.sms_loaded, snps_per_gene);

    Matrix g(n, 2 * snps_per_gene);
    for (int i = 0; i < n; ++i) {
        Engine eng = detail::row_engine(s, "plant", i);
        std::normal_distribution<double> norm;
        const bool c = bad[static_cast<std::size_t>(i)];
        const double sx = c ? s.sms_sigma_x : sd;
        const double sy = c ? s.sms_sigma_y : sd;
        const double h1 = norm(eng);
        const double h2 = norm(eng);
        const double hy = i < n_case ? h1 : h2;
        for (int j = 0; j < snps_per_gene; ++j) {
            g(i, j) = (j < loaded ? s.sms_loading * h1 : 0.0) + sx * norm(eng);
        }
        for (int j = 0; j < snps_per_gene; ++j) {
            g(i, snps_per_gene + j) = (j < loaded ? s.sms_loading * hy : 0.0) + sy * norm(eng);
        }
    }
    detail::discretize_terciles(g);

    std::vector<std::string> subjects, snps;
    std::vector<Status> status;
    std::map<std::string, std::string> genes;
    for (int i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "S%05d", i + 1);
        subjects.emplace_back(buf);
        status.push_back(i < n_case ? Status::case_ : Status::control);
    }
    for (int gene = 1; gene <= 2; ++gene) {
        for (int j = 1; j <= snps_per_gene; ++j) {
            std::string id = "rs" + std::to_string(gene) + "_" + std::to_string(j);
            genes[id] = "GENE" + std::to_string(gene);
            snps.push_back(std::move(id));
        }
    }
    return CaseControlDataset(std::move(subjects), std::move(snps), std::move(g), std::move(status), genes,
                              std::min({10, n_case, n_control}));
}

}  // namespace rkcca
