#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rkcca/error.hpp"
#include "rkcca/kernel.hpp"

namespace rkcca {

enum class Status { control = 0, case_ = 1 };

/// Genotypes (subjects x SNPs, additive 0/1/2 coding), case/control status
/// and the SNP-to-gene map. Genes keep the order of their first SNP column.
class CaseControlDataset {
public:
    CaseControlDataset(std::vector<std::string> subject_ids, std::vector<std::string> snp_ids, Matrix genotypes,
                       std::vector<Status> status, const std::map<std::string, std::string> &gene_of_snp,
                       int min_arm = 10)
        : subjects_(std::move(subject_ids)), snps_(std::move(snp_ids)), genotypes_(std::move(genotypes)),
          status_(std::move(status)) {
        const auto n = static_cast<Eigen::Index>(subjects_.size());
        detail::require(genotypes_.rows() == n, "genotype rows do not match subject count");
        detail::require(genotypes_.cols() == static_cast<Eigen::Index>(snps_.size()),
                        "genotype columns do not match SNP count");
        detail::require(status_.size() == subjects_.size(), "status length does not match subject count");
        detail::require(genotypes_.allFinite(), "genotypes contain non-finite values");
        detail::require(std::set<std::string>(subjects_.begin(), subjects_.end()).size() == subjects_.size(),
                        "duplicate subject ids");
        detail::require(std::set<std::string>(snps_.begin(), snps_.end()).size() == snps_.size(),
                        "duplicate SNP ids");

        std::vector<std::string> unmapped;
        std::map<std::string, std::size_t> gene_index;
        for (std::size_t j = 0; j < snps_.size(); ++j) {
            const auto it = gene_of_snp.find(snps_[j]);
            if (it == gene_of_snp.end()) {
                unmapped.push_back(snps_[j]);
                continue;
            }
            auto [pos, inserted] = gene_index.try_emplace(it->second, genes_.size());
            if (inserted) {
                genes_.push_back(it->second);
                gene_cols_.emplace_back();
            }
            gene_cols_[pos->second].push_back(static_cast<Eigen::Index>(j));
        }
        if (!unmapped.empty()) {
            std::string msg = "SNPs without a gene mapping:";
            for (const auto &s : unmapped) { msg += " " + s; }
            throw ValidationError(msg);
        }
        for (Status s : status_) { (s == Status::case_ ? n_case_ : n_control_) += 1; }
        detail::require(min_arm >= 2, "arm size floor must be at least 2");
        detail::require(n_case_ >= min_arm, "need at least " + std::to_string(min_arm) + " cases, got " +
                                                std::to_string(n_case_));
        detail::require(n_control_ >= min_arm, "need at least " + std::to_string(min_arm) + " controls, got " +
                                                   std::to_string(n_control_));
    }

    [[nodiscard]] const std::vector<std::string> &subject_ids() const { return subjects_; }
    [[nodiscard]] const std::vector<std::string> &snp_ids() const { return snps_; }
    [[nodiscard]] const Matrix &genotypes() const { return genotypes_; }
    [[nodiscard]] const std::vector<Status> &status() const { return status_; }
    [[nodiscard]] const std::vector<std::string> &genes() const { return genes_; }
    [[nodiscard]] const std::vector<Eigen::Index> &gene_columns(std::size_t g) const { return gene_cols_.at(g); }
    [[nodiscard]] std::size_t gene_index(const std::string &gene) const {
        for (std::size_t g = 0; g < genes_.size(); ++g) {
            if (genes_[g] == gene) { return g; }
        }
        throw ValidationError("unknown gene " + gene);
    }
    [[nodiscard]] int n_case() const { return n_case_; }
    [[nodiscard]] int n_control() const { return n_control_; }

    [[nodiscard]] std::map<std::string, std::string> gene_map() const {
        std::map<std::string, std::string> m;
        for (std::size_t g = 0; g < genes_.size(); ++g) {
            for (Eigen::Index c : gene_cols_[g]) { m[snps_[static_cast<std::size_t>(c)]] = genes_[g]; }
        }
        return m;
    }

    /// Same genotypes with a different status vector.
    [[nodiscard]] CaseControlDataset relabeled(std::vector<Status> status, int min_arm = 2) const {
        return CaseControlDataset(subjects_, snps_, genotypes_, std::move(status), gene_map(), min_arm);
    }

private:
    std::vector<std::string> subjects_;
    std::vector<std::string> snps_;
    Matrix genotypes_;
    std::vector<Status> status_;
    std::vector<std::string> genes_;
    std::vector<std::vector<Eigen::Index>> gene_cols_;
    int n_case_ = 0;
    int n_control_ = 0;
};

}  // namespace rkcca
