// rkcca: gene-pair scans with (robust) kernel CCA, benchmark studies and
// synthetic data generation.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "rkcca/assoc.hpp"
#include "rkcca/bench.hpp"
#include "rkcca/influence.hpp"
#include "rkcca/io.hpp"
#include "rkcca/kcca.hpp"
#include "rkcca/synth.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// JSON config files. Nested objects named after a subcommand configure that
// subcommand; other top-level keys go to the subcommand being run.
class JsonConfig : public CLI::Config {
public:
    std::string section;

    std::string to_config(const CLI::App *, bool, bool, std::string) const override { return "{}"; }

    std::vector<CLI::ConfigItem> from_config(std::istream &in) const override {
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception &e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) { throw CLI::ConversionError("config file must hold a JSON object"); }
        std::vector<CLI::ConfigItem> items;
        for (const auto &[key, value] : j.items()) {
            if (value.is_object()) {
                for (const auto &[k2, v2] : value.items()) { items.push_back(item({key}, k2, v2)); }
            } else if (!section.empty()) {
                items.push_back(item({section}, key, value));
            }
        }
        return items;
    }

private:
    static std::string scalar(const json &v) {
        if (v.is_string()) { return v.get<std::string>(); }
        if (v.is_boolean()) { return v.get<bool>() ? "true" : "false"; }
        return v.dump();
    }

    static CLI::ConfigItem item(std::vector<std::string> parents, const std::string &name, const json &v) {
        CLI::ConfigItem it;
        it.parents = std::move(parents);
        it.name = name;
        if (v.is_array()) {
            for (const auto &e : v) { it.inputs.push_back(scalar(e)); }
        } else {
            it.inputs.push_back(scalar(v));
        }
        return it;
    }
};

// Options shared by the analysis subcommands.
struct Common {
    std::uint64_t seed = 1;
    unsigned workers = 1;
    double kappa = 1e-2;
    std::optional<double> huber_c;
    std::vector<double> hampel_c;
    int max_iter = 100;
    double tol = 1e-8;
};

void add_common(CLI::App *sub, Common &c) {
    sub->add_option("--seed", c.seed, "Master seed (falls back to RKCCA_SEED)")->envname("RKCCA_SEED");
    sub->add_option("--workers", c.workers, "Worker threads; never changes results")->check(CLI::PositiveNumber);
    sub->add_option("--kappa", c.kappa, "KCCA regularizer")->check(CLI::PositiveNumber);
    sub->add_option("--huber-c", c.huber_c, "Huber constant (default: median first-pass residual)");
    sub->add_option("--hampel-c", c.hampel_c, "Hampel constants c1 c2 c3 (default: 70/85/95th percentiles)")
        ->expected(3);
    sub->add_option("--max-iter", c.max_iter, "KIRWLS iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--tol", c.tol, "KIRWLS relative weight-change tolerance")->check(CLI::PositiveNumber);
}

rkcca::LossSpec make_loss(const std::string &kind, const Common &c) {
    if (kind == "huber") { return rkcca::LossSpec::huber(c.huber_c); }
    if (kind == "hampel") {
        if (c.hampel_c.empty()) { return rkcca::LossSpec::hampel(); }
        return rkcca::LossSpec::hampel(std::array<double, 3>{c.hampel_c[0], c.hampel_c[1], c.hampel_c[2]});
    }
    if (kind == "quadratic") { return rkcca::LossSpec::quadratic(); }
    throw rkcca::ValidationError("unknown loss '" + kind + "'");
}

json loss_json(const rkcca::LossSpec &l) {
    json j{{"kind", rkcca::to_string(l.kind)}};
    if (l.c) { j["c"] = *l.c; }
    if (l.c123) { j["c123"] = *l.c123; }
    if (!l.resolved()) { j["constants"] = "percentile defaults"; }
    return j;
}

// A method name resolved to a kernel and an optional robust loss.
struct Method {
    rkcca::KernelSpec kernel;
    std::optional<rkcca::LossSpec> loss;
};

Method resolve_method(const std::string &name, const std::optional<std::string> &kernel_override,
                      std::optional<double> bandwidth, const Common &c) {
    Method m;
    if (name == "lcca") {
        m.kernel = rkcca::KernelSpec::linear();
    } else if (name == "kcca") {
        m.kernel = rkcca::KernelSpec::gaussian();
    } else if (name == "rkcca-huber" || name == "rkcca-hampel") {
        m.kernel = rkcca::KernelSpec::gaussian();
        m.loss = make_loss(name.substr(6), c);
    } else {
        throw rkcca::ValidationError("unknown method '" + name + "'");
    }
    if (kernel_override) {
        if (*kernel_override == "linear") {
            m.kernel = rkcca::KernelSpec::linear();
        } else if (*kernel_override == "gaussian") {
            m.kernel = rkcca::KernelSpec::gaussian();
        } else {
            throw rkcca::ValidationError("unknown kernel '" + *kernel_override + "'");
        }
    }
    if (bandwidth) {
        rkcca::detail::require(m.kernel.family == rkcca::KernelFamily::gaussian,
                               "--bandwidth only applies to the gaussian kernel");
        m.kernel = rkcca::KernelSpec::gaussian(*bandwidth);
    }
    return m;
}

rkcca::KccaConfig kcca_config(const Method &m, const Common &c) {
    rkcca::KccaConfig k;
    k.kappa = c.kappa;
    if (m.loss) { k.robust = rkcca::KirwlsConfig{c.max_iter, c.tol, *m.loss}; }
    return k;
}

json method_json(const Method &m, const Common &c) {
    json j{{"kernel", rkcca::to_string(m.kernel.family)}, {"kappa", c.kappa}};
    if (m.kernel.family == rkcca::KernelFamily::gaussian) {
        j["bandwidth"] = m.kernel.bandwidth ? json(*m.kernel.bandwidth) : json("median heuristic");
    }
    if (m.loss) {
        j["weights"] = "robust";
        j["loss"] = loss_json(*m.loss);
        j["max_iter"] = c.max_iter;
        j["tol"] = c.tol;
    } else {
        j["weights"] = "classical";
    }
    return j;
}

std::string sha256_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw rkcca::ValidationError("cannot read " + path); }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string hex;
    for (unsigned i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof b, "%02x", md[i]);
        hex += b;
    }
    return hex;
}

// path with its extension replaced, e.g. out.tsv -> out.summary.json
std::string with_suffix(const std::string &path, const std::string &suffix) {
    fs::path p(path);
    return (p.parent_path() / p.stem()).string() + suffix;
}

// ---- scan --------------------------------------------------------------------

struct ScanArgs {
    Common common;
    std::string genotypes, phenotypes, gene_map;
    std::vector<std::string> methods{"kcca"};
    std::optional<std::string> kernel;
    std::optional<double> bandwidth;
    double alpha = 0.05;
    int min_arm = 10;
    std::string out;
    std::string summary;
};

int run_scan(const ScanArgs &a) {
    const rkcca::CaseControlDataset data = rkcca::io::load_case_control(a.genotypes, a.phenotypes, a.gene_map, a.min_arm);
    json summary;
    std::map<std::string, std::vector<std::string>> isolated;
    for (const std::string &name : a.methods) {
        const Method m = resolve_method(name, a.kernel, a.bandwidth, a.common);
        const rkcca::AssocConfig cfg{m.kernel, kcca_config(m, a.common)};
        json config = method_json(m, a.common);
        config["alpha"] = a.alpha;
        config["min_arm"] = a.min_arm;
        config["seed"] = a.common.seed;
        config["inputs"] = {a.genotypes, a.phenotypes, a.gene_map};
        const rkcca::ScanResult scan = rkcca::pairwise_scan(data, cfg, a.alpha, a.common.workers);

        const std::string path = a.methods.size() == 1 ? a.out : with_suffix(a.out, "." + name + ".tsv");
        std::ofstream os = rkcca::io::open_out(path);
        rkcca::io::write_provenance(os, "scan", config);
        rkcca::io::write_scan(os, scan);
        json s = rkcca::io::summary_json(scan);
        s["config"] = config;
        summary[name] = s;
        isolated[name] = scan.summary.isolated_raw;
    }
    json doc{{"rkcca", rkcca::io::version}, {"command", "scan"}, {"methods", summary}};
    if (a.methods.size() > 1) { doc["overlap_isolated_raw"] = rkcca::io::overlap_json(rkcca::overlap_report(isolated)); }
    std::ofstream os = rkcca::io::open_out(a.summary.empty() ? with_suffix(a.out, ".summary.json") : a.summary);
    os << doc.dump(2) << '\n';
    return 0;
}

// ---- are-bench ---------------------------------------------------------------

struct AreArgs {
    Common common;
    std::vector<int> n_list{100, 300, 500};
    int reps = 100;
    int b_boot = 500;
    std::vector<std::string> methods{"lcca", "kcca"};
    bool fresh_truth = false;
    std::string out;
    std::string timing_out;
};

int run_are(const AreArgs &a) {
    rkcca::bench::AreConfig cfg;
    cfg.n_list = a.n_list;
    cfg.reps = a.reps;
    cfg.b_boot = a.b_boot;
    cfg.seed = a.common.seed;
    cfg.kappa = a.common.kappa;
    cfg.fresh_truth = a.fresh_truth;
    cfg.workers = a.common.workers;
    cfg.methods.clear();
    for (const auto &m : a.methods) {
        if (m == "lcca") {
            cfg.methods.push_back(rkcca::KernelFamily::linear);
        } else if (m == "kcca") {
            cfg.methods.push_back(rkcca::KernelFamily::gaussian);
        } else {
            throw rkcca::ValidationError("are-bench methods are lcca and kcca, got '" + m + "'");
        }
    }
    const json config{{"n_list", a.n_list}, {"reps", a.reps},          {"b_boot", a.b_boot},
                      {"methods", a.methods}, {"kappa", a.common.kappa}, {"fresh_truth", a.fresh_truth},
                      {"seed", a.common.seed}, {"design", "scs"}};
    const auto rows = rkcca::bench::run_are(cfg);
    using rkcca::io::fmt;
    std::ofstream os = rkcca::io::open_out(a.out);
    rkcca::io::write_provenance(os, "are-bench", config);
    os << "n\tmethod\treps\tb_boot\ttruth_var_z\tif_var_mean\tif_var_sd\tboot_var_mean\tboot_var_sd\tmse_if\tmse_boot"
          "\tare\n";
    for (const auto &r : rows) {
        os << r.n << '\t' << r.method << '\t' << r.reps << '\t' << r.b_boot << '\t' << fmt(r.truth_var_z) << '\t'
           << fmt(r.if_mean) << '\t' << fmt(r.if_sd) << '\t' << fmt(r.boot_mean) << '\t' << fmt(r.boot_sd) << '\t'
           << fmt(r.mse_if) << '\t' << fmt(r.mse_boot) << '\t' << fmt(r.are) << '\n';
    }
    if (!a.timing_out.empty()) {
        std::ofstream ts = rkcca::io::open_out(a.timing_out);
        rkcca::io::write_provenance(ts, "are-bench", config);
        ts << "n\tmethod\ttime_if_s\ttime_boot_s\n";
        for (const auto &r : rows) {
            ts << r.n << '\t' << r.method << '\t' << fmt(r.time_if_s) << '\t' << fmt(r.time_boot_s) << '\n';
        }
    }
    return 0;
}

// ---- sensitivity-bench -------------------------------------------------------

struct SensArgs {
    Common common;
    std::vector<std::string> designs{"mgsd", "scsd", "smsd"};
    std::vector<int> n_list{100, 500, 1000};
    int reps = 100;
    std::string loss = "hampel";
    std::vector<double> sms_noise{10.0, 20.0};
    std::string out;
};

int run_sensitivity(const SensArgs &a) {
    rkcca::bench::SensitivityConfig cfg;
    cfg.designs.clear();
    for (const auto &d : a.designs) { cfg.designs.push_back(rkcca::parse_design(d)); }
    cfg.n_list = a.n_list;
    cfg.reps = a.reps;
    cfg.loss = make_loss(a.loss, a.common);
    cfg.kappa = a.common.kappa;
    cfg.seed = a.common.seed;
    cfg.sms_sigma_x = a.sms_noise.at(0);
    cfg.sms_sigma_y = a.sms_noise.at(1);
    cfg.workers = a.common.workers;
    const json config{{"designs", a.designs},
                      {"n_list", a.n_list},
                      {"reps", a.reps},
                      {"loss", loss_json(cfg.loss)},
                      {"max_iter", a.common.max_iter},
                      {"tol", a.common.tol},
                      {"kappa", a.common.kappa},
                      {"sms_noise", a.sms_noise},
                      {"kernel", "gaussian"},
                      {"seed", a.common.seed}};
    const auto rows = rkcca::bench::run_sensitivity(cfg);
    using rkcca::io::fmt;
    std::ofstream os = rkcca::io::open_out(a.out);
    rkcca::io::write_provenance(os, "sensitivity-bench", config);
    os << "design\tn\tmethod\teta_rho_mean\teta_rho_sd\teta_f_mean\teta_f_sd\n";
    for (const auto &r : rows) {
        os << r.design << '\t' << r.n << '\t' << r.method << '\t' << fmt(r.eta_rho_mean) << '\t'
           << fmt(r.eta_rho_sd) << '\t' << fmt(r.eta_f_mean) << '\t' << fmt(r.eta_f_sd) << '\n';
    }
    return 0;
}

// ---- simulate ----------------------------------------------------------------

struct SimArgs {
    std::uint64_t seed = 1;
    std::string design = "scs";
    int n = 100;
    std::string variant = "id";
    double contamination_rate = 0.05;
    std::vector<double> sms_noise{10.0, 20.0};
    std::optional<double> noise_sd;
    std::optional<int> n_case, n_control;
    int snps_per_gene = 25;
    std::string out_prefix;
};

int run_simulate(const SimArgs &a) {
    rkcca::SynthSpec s;
    s.design = rkcca::parse_design(a.design);
    s.n = a.n;
    s.variant = rkcca::parse_variant(a.variant);
    s.seed = a.seed;
    s.contamination_rate = a.contamination_rate;
    s.sms_sigma_x = a.sms_noise.at(0);
    s.sms_sigma_y = a.sms_noise.at(1);
    s.noise_sd = a.noise_sd;
    json spec{{"design", rkcca::to_string(s.design)},
              {"variant", rkcca::to_string(s.variant)},
              {"seed", s.seed},
              {"contamination_rate", s.contamination_rate},
              {"sms_noise", a.sms_noise}};
    if (a.noise_sd) { spec["noise_sd"] = *a.noise_sd; }

    std::map<std::string, std::string> files;
    json manifest{{"rkcca", rkcca::io::version}, {"command", "simulate"}};
    if (a.n_case || a.n_control) {
        rkcca::detail::require(a.n_case && a.n_control, "case-control simulation needs both --n-case and --n-control");
        spec["n_case"] = *a.n_case;
        spec["n_control"] = *a.n_control;
        spec["snps_per_gene"] = a.snps_per_gene;
        const rkcca::CaseControlDataset d = rkcca::plant_case_control(s, *a.n_case, *a.n_control, a.snps_per_gene);
        files = {{"genotypes", a.out_prefix + ".genotypes.tsv"},
                 {"phenotypes", a.out_prefix + ".phenotypes.tsv"},
                 {"gene_map", a.out_prefix + ".genemap.tsv"}};
        {
            std::ofstream os = rkcca::io::open_out(files["genotypes"]);
            rkcca::io::write_provenance(os, "simulate", spec);
            rkcca::io::write_genotypes(os, d);
        }
        {
            std::ofstream os = rkcca::io::open_out(files["phenotypes"]);
            rkcca::io::write_provenance(os, "simulate", spec);
            rkcca::io::write_phenotypes(os, d);
        }
        {
            std::ofstream os = rkcca::io::open_out(files["gene_map"]);
            rkcca::io::write_provenance(os, "simulate", spec);
            rkcca::io::write_gene_map(os, d);
        }
        std::vector<int> contaminated;
        if (s.variant == rkcca::Variant::cd) {
            rkcca::SynthSpec rows = s;
            rows.n = std::max(*a.n_case + *a.n_control, 10);
            contaminated = rkcca::detail::pick_rows(rows);
        }
        manifest["contaminated_idx"] = contaminated;
    } else {
        spec["n"] = s.n;
        const rkcca::SynthData d = rkcca::generate(s);
        files = {{"x", a.out_prefix + ".x.tsv"}, {"y", a.out_prefix + ".y.tsv"}};
        {
            std::ofstream os = rkcca::io::open_out(files["x"]);
            rkcca::io::write_provenance(os, "simulate", spec);
            rkcca::io::write_matrix(os, d.x, "x");
        }
        {
            std::ofstream os = rkcca::io::open_out(files["y"]);
            rkcca::io::write_provenance(os, "simulate", spec);
            rkcca::io::write_matrix(os, d.y, "y");
        }
        manifest["contaminated_idx"] = d.contaminated;
    }
    manifest["spec"] = spec;
    json listing = json::object();
    for (const auto &[role, path] : files) {
        listing[role] = {{"path", fs::path(path).filename().string()}, {"sha256", sha256_file(path)}};
    }
    manifest["files"] = listing;
    std::ofstream os = rkcca::io::open_out(a.out_prefix + ".manifest.json");
    os << manifest.dump(2) << '\n';
    return 0;
}

// ---- index-plot --------------------------------------------------------------

struct IndexArgs {
    Common common;
    std::string x_path, y_path;
    std::string design = "sms";
    int n = 300;
    std::string variant = "cd";
    std::string method = "kcca";
    std::optional<std::string> kernel;
    std::optional<double> bandwidth;
    std::string out;
};

int run_index_plot(const IndexArgs &a) {
    const Method m = resolve_method(a.method, a.kernel, a.bandwidth, a.common);
    json config = method_json(m, a.common);
    rkcca::Matrix x, y;
    if (!a.x_path.empty() || !a.y_path.empty()) {
        rkcca::detail::require(!a.x_path.empty() && !a.y_path.empty(), "--x and --y must be given together");
        x = rkcca::io::read_matrix(a.x_path);
        y = rkcca::io::read_matrix(a.y_path);
        config["inputs"] = {a.x_path, a.y_path};
    } else {
        rkcca::SynthSpec s;
        s.design = rkcca::parse_design(a.design);
        s.n = a.n;
        s.variant = rkcca::parse_variant(a.variant);
        s.seed = a.common.seed;
        const rkcca::SynthData d = rkcca::generate(s);
        x = d.x;
        y = d.y;
        config["data"] = {{"design", rkcca::to_string(s.design)},
                          {"n", s.n},
                          {"variant", rkcca::to_string(s.variant)},
                          {"seed", s.seed},
                          {"contaminated_idx", d.contaminated}};
    }
    rkcca::detail::require(x.rows() == y.rows(), "views have different numbers of rows");
    const rkcca::KccaModel model =
        rkcca::fit(rkcca::gram(rkcca::SampleMatrix(x), m.kernel), rkcca::gram(rkcca::SampleMatrix(y), m.kernel),
                   kcca_config(m, a.common));
    std::ofstream os = rkcca::io::open_out(a.out);
    rkcca::io::write_provenance(os, "index-plot", config);
    rkcca::io::write_index_plot(os, rkcca::index_plot_data(model));
    return 0;
}

const std::vector<std::string> method_names{"lcca", "kcca", "rkcca-huber", "rkcca-hampel"};

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Gene-gene interaction scans with classical and robust kernel CCA"};
    app.require_subcommand(1);
    app.fallthrough();
    auto cfg_format = std::make_shared<JsonConfig>();
    app.config_formatter(cfg_format);
    app.set_config("--config", "", "JSON config file; command-line flags take precedence");
    app.set_version_flag("--version", rkcca::io::version);

    ScanArgs scan;
    CLI::App *s = app.add_subcommand("scan", "Test every gene pair for a case/control difference in KCCA");
    add_common(s, scan.common);
    s->add_option("--genotypes", scan.genotypes, "Genotype TSV (subject_id, SNP columns)")->required();
    s->add_option("--phenotypes", scan.phenotypes, "Phenotype TSV (subject_id, status)")->required();
    s->add_option("--gene-map", scan.gene_map, "SNP to gene TSV (snp_id, gene_id)")->required();
    s->add_option("--method", scan.methods, "One or more of lcca, kcca, rkcca-huber, rkcca-hampel")
        ->check(CLI::IsMember(method_names));
    s->add_option("--kernel", scan.kernel, "Override the method's kernel")->check(CLI::IsMember({"gaussian", "linear"}));
    s->add_option("--bandwidth", scan.bandwidth, "Fixed gaussian bandwidth (default: per-fit median)")
        ->check(CLI::PositiveNumber);
    s->add_option("--alpha", scan.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    s->add_option("--min-arm", scan.min_arm, "Minimum cases and controls")->check(CLI::Range(2, 1 << 30));
    s->add_option("--out", scan.out, "Results TSV")->required();
    s->add_option("--summary", scan.summary, "Summary JSON (default: next to --out)");

    AreArgs are;
    CLI::App *ab = app.add_subcommand("are-bench", "Bootstrap versus influence-function variance of Fisher's z");
    add_common(ab, are.common);
    ab->add_option("--n-list", are.n_list, "Sample sizes");
    ab->add_option("--reps", are.reps, "Replications per sample size")->check(CLI::Range(2, 1 << 30));
    ab->add_option("--b-boot", are.b_boot, "Bootstrap resamples")->check(CLI::Range(2, 1 << 30));
    ab->add_option("--methods", are.methods, "lcca and/or kcca")->check(CLI::IsMember({"lcca", "kcca"}));
    ab->add_flag("--fresh-truth", are.fresh_truth, "Monte-Carlo truth from an independent set of replications");
    ab->add_option("--out", are.out, "Report TSV")->required();
    ab->add_option("--timing-out", are.timing_out, "Optional wall-clock timing TSV");

    SensArgs sens;
    CLI::App *sb = app.add_subcommand("sensitivity-bench", "eta measures of classical and robust KCCA");
    add_common(sb, sens.common);
    sb->add_option("--designs", sens.designs, "Any of mgsd, scsd, smsd")
        ->check(CLI::IsMember({"mgsd", "scsd", "smsd", "mgs", "scs", "sms"}));
    sb->add_option("--n-list", sens.n_list, "Sample sizes");
    sb->add_option("--reps", sens.reps, "Replications")->check(CLI::Range(2, 1 << 30));
    sb->add_option("--loss", sens.loss, "Robust loss")->check(CLI::IsMember({"huber", "hampel"}));
    sb->add_option("--sms-noise", sens.sms_noise, "Noise sd of contaminated rows in X and Y")->expected(2);
    sb->add_option("--out", sens.out, "Report TSV")->required();

    SimArgs sim;
    CLI::App *sm = app.add_subcommand("simulate", "Write a synthetic sample or case-control dataset");
    sm->add_option("--seed", sim.seed, "Seed (falls back to RKCCA_SEED)")->envname("RKCCA_SEED");
    sm->add_option("--design", sim.design, "scs, mgs or sms")
        ->check(CLI::IsMember({"scs", "mgs", "sms", "scsd", "mgsd", "smsd"}));
    sm->add_option("--n", sim.n, "Sample size")->check(CLI::Range(10, 1 << 30));
    sm->add_option("--variant", sim.variant, "id or cd")->check(CLI::IsMember({"id", "cd"}));
    sm->add_option("--contamination-rate", sim.contamination_rate, "Fraction of contaminated rows (cd)");
    sm->add_option("--sms-noise", sim.sms_noise, "Noise sd of contaminated rows in X and Y")->expected(2);
    sm->add_option("--noise-sd", sim.noise_sd, "Override the clean noise level");
    sm->add_option("--n-case", sim.n_case, "Cases (case-control output, design sms)");
    sm->add_option("--n-control", sim.n_control, "Controls (case-control output, design sms)");
    sm->add_option("--snps-per-gene", sim.snps_per_gene, "SNPs per planted gene")->check(CLI::PositiveNumber);
    sm->add_option("--out-prefix", sim.out_prefix, "Output path prefix")->required();

    IndexArgs idx;
    CLI::App *ip = app.add_subcommand("index-plot", "Per-observation influence on the first kernel CC");
    add_common(ip, idx.common);
    ip->add_option("--x", idx.x_path, "X matrix TSV (as written by simulate)");
    ip->add_option("--y", idx.y_path, "Y matrix TSV (as written by simulate)");
    ip->add_option("--design", idx.design, "Generate data instead: scs, mgs or sms")
        ->check(CLI::IsMember({"scs", "mgs", "sms", "scsd", "mgsd", "smsd"}));
    ip->add_option("--n", idx.n, "Generated sample size")->check(CLI::Range(10, 1 << 30));
    ip->add_option("--variant", idx.variant, "Generated variant, id or cd")->check(CLI::IsMember({"id", "cd"}));
    ip->add_option("--method", idx.method, "lcca, kcca, rkcca-huber or rkcca-hampel")->check(CLI::IsMember(method_names));
    ip->add_option("--kernel", idx.kernel, "Override the method's kernel")->check(CLI::IsMember({"gaussian", "linear"}));
    ip->add_option("--bandwidth", idx.bandwidth, "Fixed gaussian bandwidth")->check(CLI::PositiveNumber);
    ip->add_option("--out", idx.out, "TSV with columns index, eif_rho")->required();

    for (int i = 1; i < argc; ++i) {
        for (CLI::App *sub : {s, ab, sb, sm, ip}) {
            if (sub->get_name() == argv[i] && cfg_format->section.empty()) { cfg_format->section = argv[i]; }
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (s->parsed()) { return run_scan(scan); }
        if (ab->parsed()) { return run_are(are); }
        if (sb->parsed()) { return run_sensitivity(sens); }
        if (sm->parsed()) { return run_simulate(sim); }
        if (ip->parsed()) { return run_index_plot(idx); }
    } catch (const rkcca::ValidationError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const rkcca::NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
