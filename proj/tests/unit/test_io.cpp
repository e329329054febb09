#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "rkcca/io.hpp"
#include "rkcca/synth.hpp"

using namespace rkcca;
namespace fs = std::filesystem;

namespace {

io::Tsv tsv(const std::string &text) {
    std::istringstream in(text);
    return io::read_tsv(in, "mem");
}

fs::path scratch(const std::string &name) {
    const fs::path dir = fs::temp_directory_path() / "rkcca_test_io";
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path &p, const std::string &text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
}

}  // namespace

TEST_CASE("tsv reader") {
    const io::Tsv t = tsv("# comment\n\na\tb\n1\t2\r\n# late comment\n3\t4\n");
    CHECK(t.header.fields == std::vector<std::string>{"a", "b"});
    CHECK(t.header.line == 3);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].fields == std::vector<std::string>{"1", "2"});
    CHECK(t.rows[1].line == 6);
    CHECK(io::split_tabs("a\t\tb") == std::vector<std::string>{"a", "", "b"});
    CHECK_THROWS_WITH(tsv("a\tb\n1\t2\n3\n"), "mem:3: expected 2 fields, found 1");
    CHECK_THROWS_AS(tsv("# only\n"), ValidationError);
}

TEST_CASE("genotype parsing") {
    const io::Genotypes g = io::parse_genotypes(tsv("subject_id\trs1\trs2\ns1\t0\t2\ns2\t1\t1\n"));
    CHECK(g.subjects == std::vector<std::string>{"s1", "s2"});
    CHECK(g.snps == std::vector<std::string>{"rs1", "rs2"});
    CHECK(g.values(0, 1) == 2.0);
    CHECK(g.values(1, 0) == 1.0);
    CHECK_THROWS_WITH(io::parse_genotypes(tsv("subject_id\trs1\ns1\t0\ns2\t3\n")),
                      "mem:3: invalid genotype value \"3\" for SNP rs1 (expected 0, 1 or 2)");
    CHECK_THROWS_AS(io::parse_genotypes(tsv("subject_id\trs1\ns1\t1.0\n")), ValidationError);
    CHECK_THROWS_AS(io::parse_genotypes(tsv("subject_id\trs1\ns1\tNA\n")), ValidationError);
    CHECK_THROWS_WITH(io::parse_genotypes(tsv("id\trs1\ns1\t0\n")), "mem:1: header must start with: subject_id");
}

TEST_CASE("phenotype and gene map parsing") {
    const auto p = io::parse_phenotypes(tsv("subject_id\tstatus\na\t1\nb\t0\n"));
    CHECK(p.at("a") == Status::case_);
    CHECK(p.at("b") == Status::control);
    CHECK_THROWS_WITH(io::parse_phenotypes(tsv("subject_id\tstatus\na\t2\n")),
                      "mem:2: invalid status \"2\" (expected 0 or 1)");
    CHECK_THROWS_AS(io::parse_phenotypes(tsv("subject_id\tstatus\na\t1\na\t0\n")), ValidationError);
    const auto m = io::parse_gene_map(tsv("snp_id\tgene_id\nrs1\tG1\nrs1\tG1\n"));
    CHECK(m.at("rs1") == "G1");
    CHECK_THROWS_WITH(io::parse_gene_map(tsv("snp_id\tgene_id\nrs1\tG1\nrs1\tG2\n")),
                      "mem:3: SNP rs1 mapped to more than one gene");
}

TEST_CASE("case-control round trip") {
    SynthSpec s;
    s.design = Design::sms;
    s.seed = 12;
    const CaseControlDataset d = plant_case_control(s, 15, 12, 4);
    const fs::path geno = scratch("g.tsv"), pheno = scratch("p.tsv"), map = scratch("m.tsv");
    {
        std::ofstream os = io::open_out(geno.string());
        io::write_provenance(os, "test", {{"seed", 12}});
        io::write_genotypes(os, d);
    }
    {
        std::ofstream os = io::open_out(pheno.string());
        io::write_phenotypes(os, d);
    }
    {
        std::ofstream os = io::open_out(map.string());
        io::write_gene_map(os, d);
    }
    const CaseControlDataset back = io::load_case_control(geno.string(), pheno.string(), map.string());
    CHECK(back.genotypes() == d.genotypes());
    CHECK(back.status() == d.status());
    CHECK(back.subject_ids() == d.subject_ids());
    CHECK(back.genes() == d.genes());

    SECTION("subject mismatch") {
        write_text(pheno, "subject_id\tstatus\nS00001\t1\nXX\t0\n");
        CHECK_THROWS_AS(io::load_case_control(geno.string(), pheno.string(), map.string()), ValidationError);
    }
    SECTION("unmapped snp") {
        write_text(map, "snp_id\tgene_id\nrs1_1\tGENE1\n");
        try {
            (void)io::load_case_control(geno.string(), pheno.string(), map.string());
            FAIL("expected a validation error");
        } catch (const ValidationError &e) {
            CHECK(std::string(e.what()).starts_with("SNPs without a gene mapping: rs1_2 rs1_3 rs1_4 rs2_1"));
        }
    }
}

TEST_CASE("matrix round trip and provenance") {
    Matrix m(3, 2);
    m << 1.5, -2.0, 1e-300, 3.14159265358979, 0.1, 12345678.9;
    const fs::path p = scratch("x.tsv");
    {
        std::ofstream os = io::open_out(p.string());
        io::write_provenance(os, "simulate", {{"n", 3}});
        io::write_matrix(os, m, "x");
    }
    const Matrix back = io::read_matrix(p.string());
    REQUIRE(back.rows() == 3);
    CHECK((back - m).cwiseAbs().maxCoeff() <= 1e-11 * m.cwiseAbs().maxCoeff());
    std::ifstream in(p);
    std::string first, second, third;
    std::getline(in, first);
    std::getline(in, second);
    std::getline(in, third);
    CHECK(first == "# rkcca 1.0.0");
    CHECK(second == "# command: simulate");
    CHECK(third == "# config: {\"n\":3}");
    write_text(p, "row\tx1\n0\tabc\n");
    CHECK_THROWS_WITH(io::read_matrix(p.string()), p.string() + ":2: invalid number \"abc\"");
    CHECK(io::fmt(0.1) == "0.1");
    CHECK(io::fmt(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("scan output") {
    ScanResult s;
    TestResult r;
    r.gene1 = "A";
    r.gene2 = "B";
    r.flags = {"var_case_floor"};
    s.results.push_back(r);
    r.flags.clear();
    s.results.push_back(r);
    s.skipped.push_back({"A", "C", "gene C has no polymorphic SNP among cases"});
    std::ostringstream os;
    io::write_scan(os, s);
    std::istringstream in(os.str());
    const io::Tsv t = io::read_tsv(in, "scan");
    CHECK(t.header.fields.size() == 12);
    CHECK(t.rows[0].fields.back() == "var_case_floor");
    CHECK(t.rows[1].fields.back() == ".");
    const auto j = io::summary_json(s);
    CHECK(j["n_skipped"] == 1);
    CHECK(j["skipped_pairs"][0]["gene2"] == "C");
}
