#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rkcca/assoc.hpp"
#include "rkcca/dataset.hpp"
#include "rkcca/error.hpp"

namespace rkcca::io {

inline constexpr const char *version = "1.0.0";

/// %.12g, the one number format used in every output file.
[[nodiscard]] inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Leading '#' lines naming the tool version, the command and the resolved
/// configuration, so that a file can be regenerated from its header.
inline void write_provenance(std::ostream &os, const std::string &command, const nlohmann::json &config) {
    os << "# rkcca " << version << "\n";
    os << "# command: " << command << "\n";
    os << "# config: " << config.dump() << "\n";
}

struct TsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

struct Tsv {
    std::string source;
    TsvRow header;
    std::vector<TsvRow> rows;
};

[[nodiscard]] inline std::vector<std::string> split_tabs(const std::string &s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = s.find('\t', start);
        out.push_back(s.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) { break; }
        start = tab + 1;
    }
    return out;
}

[[noreturn]] inline void fail_at(const std::string &source, std::size_t line, const std::string &msg) {
    throw ValidationError(source + ":" + std::to_string(line) + ": " + msg);
}

/// Reads a tab-separated table with a header row. '#' lines and blank lines
/// are skipped; every data row must have as many fields as the header.
[[nodiscard]] inline Tsv read_tsv(std::istream &in, const std::string &source) {
    Tsv t{source, {}, {}};
    std::string line;
    std::size_t no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') { line.pop_back(); }
        if (line.empty() || line[0] == '#') { continue; }
        TsvRow row{no, split_tabs(line)};
        if (!have_header) {
            t.header = std::move(row);
            have_header = true;
            continue;
        }
        if (row.fields.size() != t.header.fields.size()) {
            fail_at(source, no, "expected " + std::to_string(t.header.fields.size()) + " fields, found " +
                                    std::to_string(row.fields.size()));
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) { throw ValidationError(source + ": empty file"); }
    return t;
}

[[nodiscard]] inline Tsv read_tsv_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) { throw ValidationError("cannot open " + path); }
    return read_tsv(in, path);
}

inline void expect_header(const Tsv &t, const std::vector<std::string> &names) {
    const auto &h = t.header.fields;
    bool ok = h.size() >= names.size();
    for (std::size_t i = 0; ok && i < names.size(); ++i) { ok = h[i] == names[i]; }
    if (!ok) {
        std::string want;
        for (const auto &n : names) { want += (want.empty() ? "" : ", ") + n; }
        fail_at(t.source, t.header.line, "header must start with: " + want);
    }
}

struct Genotypes {
    std::vector<std::string> subjects;
    std::vector<std::string> snps;
    Matrix values;
};

/// Header: subject_id then SNP ids. Values 0, 1 or 2.
[[nodiscard]] inline Genotypes parse_genotypes(const Tsv &t) {
    expect_header(t, {"subject_id"});
    Genotypes g;
    g.snps.assign(t.header.fields.begin() + 1, t.header.fields.end());
    if (g.snps.empty()) { fail_at(t.source, t.header.line, "no SNP columns"); }
    g.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(g.snps.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const TsvRow &row = t.rows[r];
        g.subjects.push_back(row.fields[0]);
        for (std::size_t c = 1; c < row.fields.size(); ++c) {
            const std::string &v = row.fields[c];
            if (v != "0" && v != "1" && v != "2") {
                fail_at(t.source, row.line, "invalid genotype value \"" + v + "\" for SNP " + g.snps[c - 1] +
                                                " (expected 0, 1 or 2)");
            }
            g.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = v[0] - '0';
        }
    }
    return g;
}

/// Header: subject_id, status. Status 1 marks a case, 0 a control.
[[nodiscard]] inline std::map<std::string, Status> parse_phenotypes(const Tsv &t) {
    expect_header(t, {"subject_id", "status"});
    std::map<std::string, Status> out;
    for (const TsvRow &row : t.rows) {
        const std::string &v = row.fields[1];
        if (v != "0" && v != "1") { fail_at(t.source, row.line, "invalid status \"" + v + "\" (expected 0 or 1)"); }
        if (!out.emplace(row.fields[0], v == "1" ? Status::case_ : Status::control).second) {
            fail_at(t.source, row.line, "duplicate subject " + row.fields[0]);
        }
    }
    return out;
}

/// Header: snp_id, gene_id.
[[nodiscard]] inline std::map<std::string, std::string> parse_gene_map(const Tsv &t) {
    expect_header(t, {"snp_id", "gene_id"});
    std::map<std::string, std::string> out;
    for (const TsvRow &row : t.rows) {
        if (row.fields[0].empty() || row.fields[1].empty()) { fail_at(t.source, row.line, "empty identifier"); }
        const auto [it, inserted] = out.emplace(row.fields[0], row.fields[1]);
        if (!inserted && it->second != row.fields[1]) {
            fail_at(t.source, row.line, "SNP " + row.fields[0] + " mapped to more than one gene");
        }
    }
    return out;
}

/// Joins the three inputs. Subjects must match exactly between genotype and
/// phenotype files; every genotyped SNP must be mapped.
[[nodiscard]] inline CaseControlDataset load_case_control(const std::string &geno_path, const std::string &pheno_path,
                                                          const std::string &map_path, int min_arm = 10) {
    Genotypes g = parse_genotypes(read_tsv_file(geno_path));
    const auto pheno = parse_phenotypes(read_tsv_file(pheno_path));
    const auto gene_map = parse_gene_map(read_tsv_file(map_path));

    std::vector<Status> status;
    std::vector<std::string> missing;
    for (const auto &s : g.subjects) {
        const auto it = pheno.find(s);
        if (it == pheno.end()) {
            missing.push_back(s);
        } else {
            status.push_back(it->second);
        }
    }
    const std::set<std::string> geno_ids(g.subjects.begin(), g.subjects.end());
    std::vector<std::string> extra;
    for (const auto &[s, st] : pheno) {
        if (geno_ids.count(s) == 0) { extra.push_back(s); }
    }
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "subject ids differ between " + geno_path + " and " + pheno_path + ":";
        for (const auto &s : missing) { msg += " " + s + " (no phenotype)"; }
        for (const auto &s : extra) { msg += " " + s + " (no genotype)"; }
        throw ValidationError(msg);
    }
    return CaseControlDataset(std::move(g.subjects), std::move(g.snps), std::move(g.values), std::move(status),
                              gene_map, min_arm);
}

// ---- writers ---------------------------------------------------------------

inline std::ofstream open_out(const std::string &path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) { throw ValidationError("cannot write " + path); }
    return os;
}

inline void write_genotypes(std::ostream &os, const CaseControlDataset &d) {
    os << "subject_id";
    for (const auto &s : d.snp_ids()) { os << '\t' << s; }
    os << '\n';
    for (Eigen::Index i = 0; i < d.genotypes().rows(); ++i) {
        os << d.subject_ids()[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < d.genotypes().cols(); ++j) { os << '\t' << static_cast<int>(d.genotypes()(i, j)); }
        os << '\n';
    }
}

inline void write_phenotypes(std::ostream &os, const CaseControlDataset &d) {
    os << "subject_id\tstatus\n";
    for (std::size_t i = 0; i < d.subject_ids().size(); ++i) {
        os << d.subject_ids()[i] << '\t' << (d.status()[i] == Status::case_ ? 1 : 0) << '\n';
    }
}

inline void write_gene_map(std::ostream &os, const CaseControlDataset &d) {
    os << "snp_id\tgene_id\n";
    for (std::size_t g = 0; g < d.genes().size(); ++g) {
        for (Eigen::Index c : d.gene_columns(g)) { os << d.snp_ids()[static_cast<std::size_t>(c)] << '\t' << d.genes()[g] << '\n'; }
    }
}

/// Real-valued matrix with a header of column names prefix1..prefixd.
inline void write_matrix(std::ostream &os, const Matrix &m, const std::string &prefix) {
    os << "row";
    for (Eigen::Index j = 0; j < m.cols(); ++j) { os << '\t' << prefix << (j + 1); }
    os << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << i;
        for (Eigen::Index j = 0; j < m.cols(); ++j) { os << '\t' << fmt(m(i, j)); }
        os << '\n';
    }
}

[[nodiscard]] inline Matrix read_matrix(const std::string &path) {
    const Tsv t = read_tsv_file(path);
    expect_header(t, {"row"});
    const auto cols = static_cast<Eigen::Index>(t.header.fields.size() - 1);
    if (cols < 1) { fail_at(path, t.header.line, "no value columns"); }
    Matrix m(static_cast<Eigen::Index>(t.rows.size()), cols);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const std::string &v = t.rows[r].fields[static_cast<std::size_t>(c + 1)];
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(v, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used != v.size() || v.empty()) { fail_at(path, t.rows[r].line, "invalid number \"" + v + "\""); }
            m(static_cast<Eigen::Index>(r), c) = x;
        }
    }
    return m;
}

inline void write_scan(std::ostream &os, const ScanResult &scan) {
    os << "gene1\tgene2\tr_case\tr_control\tz_case\tz_control\tvar_case\tvar_control\tT\tp\tp_bh\tflags\n";
    for (const TestResult &r : scan.results) {
        std::string flags;
        for (const auto &f : r.flags) { flags += (flags.empty() ? "" : ",") + f; }
        os << r.gene1 << '\t' << r.gene2 << '\t' << fmt(r.r_case) << '\t' << fmt(r.r_control) << '\t'
           << fmt(r.z_case) << '\t' << fmt(r.z_control) << '\t' << fmt(r.var_case) << '\t' << fmt(r.var_control)
           << '\t' << fmt(r.t_stat) << '\t' << fmt(r.p_value) << '\t' << fmt(r.p_bh) << '\t'
           << (flags.empty() ? "." : flags) << '\n';
    }
}

[[nodiscard]] inline nlohmann::json summary_json(const ScanResult &scan) {
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto &s : scan.skipped) { skipped.push_back({{"gene1", s.gene1}, {"gene2", s.gene2}, {"reason", s.reason}}); }
    const ScanSummary &s = scan.summary;
    return {{"n_genes", s.n_genes},
            {"n_pairs", s.n_pairs},
            {"n_tested", s.n_tested},
            {"n_skipped", scan.skipped.size()},
            {"alpha", s.alpha},
            {"significant_pairs_raw", s.significant_raw},
            {"significant_pairs_bh", s.significant_bh},
            {"isolated_genes_raw", s.isolated_raw.size()},
            {"isolated_genes_bh", s.isolated_bh.size()},
            {"isolated_gene_ids_raw", s.isolated_raw},
            {"isolated_gene_ids_bh", s.isolated_bh},
            {"skipped_pairs", skipped}};
}

[[nodiscard]] inline nlohmann::json overlap_json(const OverlapReport &r) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto &[k, v] : r.pairwise) { pairs.push_back({{"a", k.first}, {"b", k.second}, {"shared", v}}); }
    return {{"methods", r.methods}, {"genes", r.genes}, {"exclusive", r.exclusive}, {"pairwise", pairs},
            {"common", r.common}};
}

inline void write_index_plot(std::ostream &os, const std::vector<std::pair<int, double>> &pts) {
    os << "index\teif_rho\n";
    for (const auto &[i, v] : pts) { os << i << '\t' << fmt(v) << '\n'; }
}

}  // namespace rkcca::io
