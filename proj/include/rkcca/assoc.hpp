#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rkcca/dataset.hpp"
#include "rkcca/error.hpp"
#include "rkcca/fisher.hpp"
#include "rkcca/influence.hpp"
#include "rkcca/kcca.hpp"
#include "rkcca/kernel.hpp"
#include "rkcca/parallel.hpp"

namespace rkcca {

struct KccuStatistic {
    double t = 0.0;
    double p = 1.0;
};

/// t = (z_case - z_control) / sqrt(var_case + var_control), two-sided normal p.
[[nodiscard]] inline KccuStatistic kccu_statistic(double z_case, double z_control, double var_case,
                                                  double var_control) {
    detail::require(var_case > 0.0 && var_control > 0.0, "KCCU variances must be positive");
    const double t = (z_case - z_control) / std::sqrt(var_case + var_control);
    return {t, two_sided_p(t)};
}

struct AssocConfig {
    KernelSpec kernel = KernelSpec::gaussian();
    KccaConfig kcca;
};

struct TestResult {
    std::string gene1, gene2;
    double r_case = 0.0, r_control = 0.0;
    double z_case = 0.0, z_control = 0.0;
    double var_case = 0.0, var_control = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    double p_bh = 1.0;
    std::vector<std::string> flags;
};

/// A gene pair that could not be tested (for example a gene with no
/// polymorphic SNP in one arm).
struct SkippedPair {
    std::string gene1, gene2;
    std::string reason;
};

namespace detail {

struct ArmFit {
    double r = 0.0;
    double z = 0.0;
    EifRecord eif;
};

// Genotype block of a gene restricted to a subset of subjects, with columns
// that are constant inside the subset removed.
inline Matrix informative_block(const CaseControlDataset &data, std::size_t gene, const std::vector<Eigen::Index> &rows,
                                const char *arm) {
    const Matrix block = data.genotypes()(rows, data.gene_columns(gene));
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
        if ((block.col(j).array() != block(0, j)).any()) { keep.push_back(j); }
    }
    if (keep.empty()) {
        throw ValidationError("gene " + data.genes()[gene] + " has no polymorphic SNP among " + arm);
    }
    return block(Eigen::all, keep);
}

inline ArmFit fit_arm(const CaseControlDataset &data, std::size_t g1, std::size_t g2,
                      const std::vector<Eigen::Index> &rows, const AssocConfig &cfg, const char *arm) {
    const SampleMatrix x(informative_block(data, g1, rows, arm));
    const SampleMatrix y(informative_block(data, g2, rows, arm));
    const KccaModel m = fit(gram(x, cfg.kernel), gram(y, cfg.kernel), cfg.kcca);
    ArmFit out;
    out.r = first_kcc(m);
    out.z = fisher_z(out.r);
    out.eif = eif_fisher(m);
    return out;
}

inline std::vector<Eigen::Index> arm_rows(const CaseControlDataset &data, Status s) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < data.status().size(); ++i) {
        if (data.status()[i] == s) { rows.push_back(static_cast<Eigen::Index>(i)); }
    }
    return rows;
}

}  // namespace detail

/// KCCA of the two genes' SNP blocks within cases and within controls,
/// compared through Fisher's z and IF-based variances.
[[nodiscard]] inline TestResult gene_pair_test(const CaseControlDataset &data, std::size_t g1, std::size_t g2,
                                               const AssocConfig &cfg) {
    detail::require(g1 < data.genes().size() && g2 < data.genes().size(), "gene index out of range");
    detail::require(g1 != g2, "a gene cannot be paired with itself");
    const auto cases = detail::arm_rows(data, Status::case_);
    const auto controls = detail::arm_rows(data, Status::control);
    const detail::ArmFit fc = detail::fit_arm(data, g1, g2, cases, cfg, "cases");
    const detail::ArmFit fk = detail::fit_arm(data, g1, g2, controls, cfg, "controls");

    TestResult r;
    r.gene1 = data.genes()[g1];
    r.gene2 = data.genes()[g2];
    r.r_case = fc.r;
    r.r_control = fk.r;
    r.z_case = fc.z;
    r.z_control = fk.z;
    r.var_case = fc.eif.var_z;
    r.var_control = fk.eif.var_z;
    if (fc.eif.floored) { r.flags.emplace_back("var_case_floor"); }
    if (fk.eif.floored) { r.flags.emplace_back("var_control_floor"); }
    if (fc.eif.floored && fk.eif.floored) {
        r.flags.emplace_back("both_floored");
        r.t_stat = 0.0;
        r.p_value = 1.0;
    } else {
        const KccuStatistic s = kccu_statistic(r.z_case, r.z_control, r.var_case, r.var_control);
        r.t_stat = s.t;
        r.p_value = s.p;
    }
    r.p_bh = r.p_value;
    return r;
}

[[nodiscard]] inline TestResult gene_pair_test(const CaseControlDataset &data, const std::string &g1,
                                               const std::string &g2, const AssocConfig &cfg) {
    return gene_pair_test(data, data.gene_index(g1), data.gene_index(g2), cfg);
}

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
[[nodiscard]] inline std::vector<double> bh_adjust(const std::vector<double> &p) {
    for (double v : p) { detail::require(v > 0.0 && v <= 1.0, "p-values must lie in (0, 1]"); }
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> q(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const std::size_t i = order[k];
        running = std::min(running, std::min(1.0, p[i] * (static_cast<double>(m) / static_cast<double>(k + 1))));
        q[i] = running;
    }
    return q;
}

struct ScanSummary {
    std::size_t n_genes = 0;
    std::size_t n_pairs = 0;
    std::size_t n_tested = 0;
    double alpha = 0.05;
    std::size_t significant_raw = 0;
    std::size_t significant_bh = 0;
    std::vector<std::string> isolated_raw;   // genes in a raw-significant pair
    std::vector<std::string> isolated_bh;    // genes in a BH-significant pair
};

struct ScanResult {
    std::vector<TestResult> results;
    std::vector<SkippedPair> skipped;
    ScanSummary summary;
};

/// All G(G-1)/2 gene pairs in gene order. Pairs that cannot be tested are
/// recorded as skipped; numerical failures are recorded the same way.
[[nodiscard]] inline ScanResult pairwise_scan(const CaseControlDataset &data, const AssocConfig &cfg, double alpha,
                                              unsigned workers = 1) {
    detail::require(data.genes().size() >= 2, "scan needs at least 2 genes");
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    const std::size_t g = data.genes().size();
    for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = i + 1; j < g; ++j) { pairs.emplace_back(i, j); }
    }
    using Outcome = std::variant<TestResult, SkippedPair>;
    const std::vector<Outcome> outcomes = parallel_map(pairs.size(), workers, [&](std::size_t k) -> Outcome {
        const auto [a, b] = pairs[k];
        try {
            return gene_pair_test(data, a, b, cfg);
        } catch (const std::exception &e) {
            return SkippedPair{data.genes()[a], data.genes()[b], e.what()};
        }
    });

    ScanResult out;
    for (const auto &o : outcomes) {
        if (const auto *r = std::get_if<TestResult>(&o)) {
            out.results.push_back(*r);
        } else {
            out.skipped.push_back(std::get<SkippedPair>(o));
        }
    }
    std::vector<double> p;
    p.reserve(out.results.size());
    for (const auto &r : out.results) { p.push_back(r.p_value); }
    const std::vector<double> q = bh_adjust(p);
    std::set<std::string> raw_genes, bh_genes;
    for (std::size_t i = 0; i < out.results.size(); ++i) {
        TestResult &r = out.results[i];
        r.p_bh = q[i];
        if (r.p_value <= alpha) {
            ++out.summary.significant_raw;
            raw_genes.insert(r.gene1);
            raw_genes.insert(r.gene2);
        }
        if (r.p_bh <= alpha) {
            ++out.summary.significant_bh;
            bh_genes.insert(r.gene1);
            bh_genes.insert(r.gene2);
        }
    }
    out.summary.n_genes = g;
    out.summary.n_pairs = pairs.size();
    out.summary.n_tested = out.results.size();
    out.summary.alpha = alpha;
    out.summary.isolated_raw.assign(raw_genes.begin(), raw_genes.end());
    out.summary.isolated_bh.assign(bh_genes.begin(), bh_genes.end());
    return out;
}

/// Set overlap of the isolated genes found by several methods.
struct OverlapReport {
    std::vector<std::string> methods;
    std::map<std::string, std::vector<std::string>> genes;      // per method
    std::map<std::string, std::vector<std::string>> exclusive;  // found only by that method
    std::map<std::pair<std::string, std::string>, std::size_t> pairwise;
    std::vector<std::string> common;
};

[[nodiscard]] inline OverlapReport overlap_report(const std::map<std::string, std::vector<std::string>> &by_method) {
    OverlapReport rep;
    std::map<std::string, std::set<std::string>> sets;
    for (const auto &[m, g] : by_method) {
        rep.methods.push_back(m);
        sets[m] = std::set<std::string>(g.begin(), g.end());
        rep.genes[m].assign(sets[m].begin(), sets[m].end());
    }
    for (const auto &[m, s] : sets) {
        std::vector<std::string> only;
        for (const auto &gene : s) {
            bool elsewhere = false;
            for (const auto &[m2, s2] : sets) { elsewhere = elsewhere || (m2 != m && s2.count(gene) > 0); }
            if (!elsewhere) { only.push_back(gene); }
        }
        rep.exclusive[m] = std::move(only);
        for (const auto &[m2, s2] : sets) {
            if (m2 <= m) { continue; }
            std::size_t c = 0;
            for (const auto &gene : s) { c += s2.count(gene); }
            rep.pairwise[{m, m2}] = c;
        }
    }
    if (!sets.empty()) {
        for (const auto &gene : sets.begin()->second) {
            bool all = true;
            for (const auto &[m, s] : sets) { all = all && s.count(gene) > 0; }
            if (all) { rep.common.push_back(gene); }
        }
    }
    return rep;
}

}  // namespace rkcca
