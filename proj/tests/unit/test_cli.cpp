#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path dir = fs::temp_directory_path() / "rkcca_test_cli";

int run(const std::string &args) {
    const std::string cmd = "cd '" + dir.string() + "' && '" RKCCA_CLI_PATH "' " + args + " >out.log 2>err.log";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string &name) {
    std::ifstream in(dir / name, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put(const std::string &name, const std::string &text) {
    std::ofstream os(dir / name, std::ios::binary);
    os << text;
}

struct Scratch {
    Scratch() {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
};

const std::string inputs = "--genotypes cc.genotypes.tsv --phenotypes cc.phenotypes.tsv --gene-map cc.genemap.tsv";

}  // namespace

TEST_CASE("help and usage errors") {
    Scratch s;
    CHECK(run("--help") == 0);
    CHECK(slurp("out.log").find("sensitivity-bench") != std::string::npos);
    CHECK(run("scan --help") == 0);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("scan --out x.tsv") == 2);
    CHECK(run("simulate --design xyz --out-prefix a") == 2);
}

TEST_CASE("simulate then scan") {
    Scratch s;
    REQUIRE(run("simulate --design sms --n-case 60 --n-control 60 --snps-per-gene 6 --seed 4 --out-prefix cc") == 0);
    const auto manifest = nlohmann::json::parse(slurp("cc.manifest.json"));
    CHECK(manifest["spec"]["seed"] == 4);
    CHECK(manifest["files"]["genotypes"]["sha256"].get<std::string>().size() == 64);

    REQUIRE(run("scan " + inputs + " --method kcca --out scan.tsv") == 0);
    const std::string scan = slurp("scan.tsv");
    CHECK(scan.starts_with("# rkcca 1.0.0\n# command: scan\n# config: {"));
    CHECK(scan.find("\nGENE1\tGENE2\t") != std::string::npos);
    const auto summary = nlohmann::json::parse(slurp("scan.summary.json"));
    CHECK(summary["methods"]["kcca"]["n_pairs"] == 1);

    SECTION("same seed gives identical files") {
        REQUIRE(run("simulate --design sms --n-case 60 --n-control 60 --snps-per-gene 6 --seed 4 --out-prefix dd") == 0);
        CHECK(slurp("dd.genotypes.tsv") == slurp("cc.genotypes.tsv"));
        const auto again = nlohmann::json::parse(slurp("dd.manifest.json"));
        CHECK(again["files"]["genotypes"]["sha256"] == manifest["files"]["genotypes"]["sha256"]);
    }
    SECTION("lcca equals kcca with a linear kernel") {
        REQUIRE(run("scan " + inputs + " --method lcca --out a.tsv") == 0);
        REQUIRE(run("scan " + inputs + " --method kcca --kernel linear --out b.tsv") == 0);
        CHECK(slurp("a.tsv") == slurp("b.tsv"));
    }
    SECTION("worker count does not change output") {
        REQUIRE(run("scan " + inputs + " --method rkcca-hampel --workers 1 --out w1.tsv") == 0);
        REQUIRE(run("scan " + inputs + " --method rkcca-hampel --workers 3 --out w3.tsv") == 0);
        CHECK(slurp("w1.tsv") == slurp("w3.tsv"));
    }
    SECTION("several methods") {
        REQUIRE(run("scan " + inputs + " --method lcca kcca rkcca-huber --out m.tsv") == 0);
        CHECK(fs::exists(dir / "m.lcca.tsv"));
        CHECK(fs::exists(dir / "m.rkcca-huber.tsv"));
        const auto j = nlohmann::json::parse(slurp("m.summary.json"));
        CHECK(j.contains("overlap_isolated_raw"));
    }
    SECTION("malformed genotype value") {
        std::string g = slurp("cc.genotypes.tsv");
        const auto row = g.find("\nS00002\t");
        g.replace(g.find('\t', row + 1) + 1, 1, "3");
        put("cc.genotypes.tsv", g);
        CHECK(run("scan " + inputs + " --out bad.tsv") == 2);
        CHECK(slurp("err.log").find("cc.genotypes.tsv:6: invalid genotype value \"3\"") != std::string::npos);
    }
    SECTION("unmapped snp") {
        put("cc.genemap.tsv", "snp_id\tgene_id\nrs1_1\tGENE1\n");
        CHECK(run("scan " + inputs + " --out bad.tsv") == 2);
        CHECK(slurp("err.log").find("SNPs without a gene mapping") != std::string::npos);
    }
}

TEST_CASE("config file and seed precedence") {
    Scratch s;
    put("c.json", R"({"seed": 5, "n": 30, "simulate": {"design": "mgs"}})");
    REQUIRE(run("simulate --config c.json --out-prefix a") == 0);
    auto m = nlohmann::json::parse(slurp("a.manifest.json"));
    CHECK(m["spec"]["seed"] == 5);
    CHECK(m["spec"]["n"] == 30);
    CHECK(m["spec"]["design"] == "mgs");
    REQUIRE(run("simulate --config c.json --seed 8 --out-prefix b") == 0);
    CHECK(nlohmann::json::parse(slurp("b.manifest.json"))["spec"]["seed"] == 8);
    REQUIRE(run("simulate --out-prefix e") == 0);
    CHECK(nlohmann::json::parse(slurp("e.manifest.json"))["spec"]["seed"] == 1);
    REQUIRE(std::system(("cd '" + dir.string() + "' && RKCCA_SEED=11 '" RKCCA_CLI_PATH "' simulate --out-prefix f").c_str()) == 0);
    CHECK(nlohmann::json::parse(slurp("f.manifest.json"))["spec"]["seed"] == 11);
    put("bad.json", "{not json");
    CHECK(run("simulate --config bad.json --out-prefix g") == 2);
}

TEST_CASE("simulate contaminated sample") {
    Scratch s;
    REQUIRE(run("simulate --design sms --variant cd --n 101 --out-prefix s") == 0);
    const auto m = nlohmann::json::parse(slurp("s.manifest.json"));
    CHECK(m["contaminated_idx"].size() == 6);
    CHECK(slurp("s.x.tsv").find("row\tx1\t") != std::string::npos);
    REQUIRE(run("index-plot --x s.x.tsv --y s.y.tsv --method kcca --out ip.tsv") == 0);
    std::istringstream in(slurp("ip.tsv"));
    std::string line;
    int data = 0;
    while (std::getline(in, line)) { data += (!line.empty() && line[0] != '#') ? 1 : 0; }
    CHECK(data == 102);
}

TEST_CASE("benchmark smoke runs") {
    Scratch s;
    REQUIRE(run("are-bench --n-list 30 --reps 2 --b-boot 4 --out are.tsv --timing-out t.tsv") == 0);
    const std::string are = slurp("are.tsv");
    CHECK(are.find("\n30\tlcca\t2\t4\t") != std::string::npos);
    CHECK(are.find("\n30\tkcca\t2\t4\t") != std::string::npos);
    CHECK(are.find("nan") == std::string::npos);
    CHECK(slurp("t.tsv").find("time_if_s\ttime_boot_s") != std::string::npos);
    REQUIRE(run("are-bench --n-list 30 --reps 2 --b-boot 4 --workers 2 --out are2.tsv") == 0);
    CHECK(slurp("are2.tsv") == are);

    REQUIRE(run("sensitivity-bench --designs mgsd --n-list 40 --reps 2 --out sens.tsv") == 0);
    const std::string sens = slurp("sens.tsv");
    CHECK(sens.find("design\tn\tmethod\teta_rho_mean\teta_rho_sd\teta_f_mean\teta_f_sd\n") != std::string::npos);
    CHECK(sens.find("\nmgsd\t40\tclassical\t") != std::string::npos);
    CHECK(sens.find("\nmgsd\t40\trobust\t") != std::string::npos);
    CHECK(run("are-bench --reps 1 --out x.tsv") == 2);
}
