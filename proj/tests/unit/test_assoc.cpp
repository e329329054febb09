#include <catch_amalgamated.hpp>

#include <random>

#include "rkcca/assoc.hpp"
#include "rkcca/synth.hpp"

using namespace rkcca;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent step-up rule: for each i, the smallest p_(j) m / j over the
// order statistics j at or above the rank of p_i.
std::vector<double> brute_bh(const std::vector<double> &p) {
    const std::size_t m = p.size();
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i) {
        double best = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (p[j] < p[i] || (p[j] == p[i] && j < i)) { continue; }
            std::size_t rank = 0;
            for (std::size_t k = 0; k < m; ++k) { rank += (p[k] < p[j] || (p[k] == p[j] && k <= j)) ? 1 : 0; }
            best = std::min(best, p[j] * (static_cast<double>(m) / static_cast<double>(rank)));
        }
        q[i] = best;
    }
    return q;
}

CaseControlDataset random_genotypes(int n_case, int n_control, int genes, int snps, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_int_distribution<int> g(0, 2);
    const int n = n_case + n_control;
    Matrix m(n, genes * snps);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < genes * snps; ++j) { m(i, j) = g(eng); }
    }
    std::vector<std::string> subjects, ids;
    std::vector<Status> status;
    std::map<std::string, std::string> map;
    for (int i = 0; i < n; ++i) {
        subjects.push_back("s" + std::to_string(i));
        status.push_back(i < n_case ? Status::case_ : Status::control);
    }
    for (int k = 0; k < genes; ++k) {
        for (int j = 0; j < snps; ++j) {
            ids.push_back("rs" + std::to_string(k) + "_" + std::to_string(j));
            map[ids.back()] = "G" + std::to_string(k);
        }
    }
    return CaseControlDataset(subjects, ids, m, status, map);
}

}  // namespace

TEST_CASE("fisher transform and normal tail") {
    CHECK(fisher_z(0.0) == 0.0);
    CHECK_THAT(fisher_z(0.5), WithinAbs(0.5 * std::log(3.0), 1e-15));
    CHECK_THAT(fisher_z(0.761594), WithinAbs(1.0, 1e-6));
    CHECK_THAT(fisher_z(std::tanh(0.3)), WithinAbs(0.3, 1e-14));
    CHECK_THROWS_AS(fisher_z(1.0), ValidationError);
    CHECK_THROWS_AS(fisher_z(-0.1), ValidationError);
    CHECK_THAT(normal_cdf(0.0), WithinAbs(0.5, 1e-16));
}

TEST_CASE("KCCU statistic") {
    const KccuStatistic zero = kccu_statistic(0.4, 0.4, 0.01, 0.02);
    CHECK(zero.t == 0.0);
    CHECK(zero.p == 1.0);
    const KccuStatistic two = kccu_statistic(0.7, 0.5, 0.005, 0.005);
    CHECK_THAT(two.t, WithinAbs(2.0, 1e-12));
    CHECK_THAT(two.p, WithinAbs(0.0455, 1e-4));
    CHECK_THAT(kccu_statistic(1.959964, 0.0, 0.5, 0.5).p, WithinAbs(0.05, 1e-6));
    CHECK_THROWS_AS(kccu_statistic(0.1, 0.2, 0.0, 0.1), ValidationError);
}

TEST_CASE("BH adjustment") {
    const std::vector<double> q = bh_adjust({0.01, 0.02, 0.03});
    for (double v : q) { CHECK_THAT(v, WithinAbs(0.03, 1e-16)); }
    CHECK(bh_adjust({0.37}) == std::vector<double>{0.37});
    CHECK_THROWS_AS(bh_adjust({0.0, 0.5}), ValidationError);
    CHECK_THROWS_AS(bh_adjust({1.2}), ValidationError);

    std::mt19937_64 eng(1);
    std::uniform_real_distribution<double> u(1e-6, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p(100);
        for (auto &v : p) { v = u(eng); }
        p[3] = p[10];  // a tie
        const std::vector<double> a = bh_adjust(p), b = brute_bh(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(a[i] == b[i]);
            CHECK(a[i] >= p[i]);
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (p[i] < p[j]) { CHECK(a[i] <= a[j]); }
            }
        }
    }
}

TEST_CASE("dataset validation") {
    CHECK_THROWS_AS(random_genotypes(5, 20, 2, 3, 1), ValidationError);
    Matrix m = Matrix::Zero(20, 2);
    std::vector<std::string> subjects;
    std::vector<Status> st;
    for (int i = 0; i < 20; ++i) {
        subjects.push_back("s" + std::to_string(i));
        st.push_back(i < 10 ? Status::case_ : Status::control);
    }
    CHECK_THROWS_WITH(CaseControlDataset(subjects, {"a", "b"}, m, st, {{"a", "G"}}),
                      "SNPs without a gene mapping: b");
}

TEST_CASE("gene pair test properties") {
    const CaseControlDataset data = random_genotypes(40, 40, 3, 4, 7);
    const AssocConfig cfg;
    const TestResult r = gene_pair_test(data, "G0", "G1", cfg);
    CHECK_THAT(r.t_stat, WithinAbs((r.z_case - r.z_control) / std::sqrt(r.var_case + r.var_control), 1e-12));
    CHECK_THAT(r.p_value, WithinAbs(two_sided_p(r.t_stat), 1e-15));
    CHECK(r.r_case >= 0.0);
    CHECK(r.r_case < 1.0);

    SECTION("gene order") {
        const TestResult s = gene_pair_test(data, "G1", "G0", cfg);
        CHECK_THAT(s.t_stat, WithinAbs(r.t_stat, 1e-10));
    }
    SECTION("label swap negates t") {
        std::vector<Status> flipped;
        for (Status s : data.status()) { flipped.push_back(s == Status::case_ ? Status::control : Status::case_); }
        const TestResult s = gene_pair_test(data.relabeled(flipped), "G0", "G1", cfg);
        CHECK(s.t_stat == -r.t_stat);
        CHECK(s.p_value == r.p_value);
    }
    SECTION("identical arms") {
        Matrix g(80, data.genotypes().cols());
        g.topRows(40) = data.genotypes().topRows(40);
        g.bottomRows(40) = data.genotypes().topRows(40);
        std::vector<std::string> subjects;
        for (int i = 0; i < 80; ++i) { subjects.push_back("d" + std::to_string(i)); }
        const CaseControlDataset dup(subjects, data.snp_ids(), g, data.status(), data.gene_map());
        CHECK(gene_pair_test(dup, "G0", "G2", cfg).t_stat == 0.0);
    }
    SECTION("monomorphic gene in one arm") {
        Matrix g = data.genotypes();
        for (Eigen::Index c : data.gene_columns(2)) { g.block(0, c, 40, 1).setConstant(1.0); }
        const CaseControlDataset mono(data.subject_ids(), data.snp_ids(), g, data.status(), data.gene_map());
        CHECK_THROWS_AS(gene_pair_test(mono, "G0", "G2", cfg), ValidationError);
        const ScanResult scan = pairwise_scan(mono, cfg, 0.05);
        CHECK(scan.results.size() == 1);
        REQUIRE(scan.skipped.size() == 2);
        CHECK(scan.skipped[0].gene2 == "G2");
    }
}

TEST_CASE("pairwise scan") {
    SECTION("two genes give one result") {
        const ScanResult s = pairwise_scan(random_genotypes(20, 20, 2, 3, 3), AssocConfig{}, 0.05);
        CHECK(s.results.size() == 1);
        CHECK(s.summary.n_pairs == 1);
    }
    SECTION("74 genes schedule 2701 pairs in gene order") {
        const ScanResult s = pairwise_scan(random_genotypes(12, 12, 74, 2, 5), AssocConfig{}, 0.05);
        CHECK(s.results.size() + s.skipped.size() == 2701);
        CHECK(s.summary.n_pairs == 2701);
        CHECK(s.results.front().gene1 == "G0");
        CHECK(s.results.front().gene2 == "G1");
    }
    SECTION("worker count does not change results") {
        const CaseControlDataset d = random_genotypes(25, 25, 6, 3, 9);
        const ScanResult a = pairwise_scan(d, AssocConfig{}, 0.05, 1);
        const ScanResult b = pairwise_scan(d, AssocConfig{}, 0.05, 4);
        REQUIRE(a.results.size() == b.results.size());
        for (std::size_t i = 0; i < a.results.size(); ++i) {
            CHECK(a.results[i].t_stat == b.results[i].t_stat);
            CHECK(a.results[i].p_bh == b.results[i].p_bh);
        }
    }
    SECTION("planted pair stands out") {
        SynthSpec spec;
        spec.design = Design::sms;
        spec.seed = 4;
        const CaseControlDataset d = plant_case_control(spec, 200, 200);
        const ScanResult s = pairwise_scan(d, AssocConfig{}, 0.05);
        REQUIRE(s.results.size() == 1);
        CHECK(s.results[0].t_stat > 1.96);
        CHECK(s.summary.significant_bh == 1);
        CHECK(s.summary.isolated_bh == std::vector<std::string>{"GENE1", "GENE2"});
    }
}

TEST_CASE("overlap report") {
    const OverlapReport r = overlap_report({{"kcca", {"A", "B", "C"}}, {"lcca", {"B", "D"}}, {"rkcca", {"B", "C"}}});
    CHECK(r.common == std::vector<std::string>{"B"});
    CHECK(r.exclusive.at("kcca") == std::vector<std::string>{"A"});
    CHECK(r.exclusive.at("lcca") == std::vector<std::string>{"D"});
    CHECK(r.exclusive.at("rkcca").empty());
    CHECK(r.pairwise.at({"kcca", "rkcca"}) == 2);
}
