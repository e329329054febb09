#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rkcca/influence.hpp"
#include "rkcca/kcca.hpp"
#include "rkcca/kernel.hpp"
#include "rkcca/parallel.hpp"
#include "rkcca/random.hpp"
#include "rkcca/synth.hpp"

namespace rkcca::bench {

[[nodiscard]] inline double mean_of(const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) { s += x; }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
[[nodiscard]] inline double sd_of(const std::vector<double> &v) {
    if (v.size() < 2) { return 0.0; }
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) { ss += (x - m) * (x - m); }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

[[nodiscard]] inline std::string method_name(KernelFamily f) { return f == KernelFamily::linear ? "lcca" : "kcca"; }

// ---- ARE of the bootstrap against the IF variance --------------------------

struct AreConfig {
    std::vector<int> n_list{100, 300, 500};
    int reps = 100;
    int b_boot = 500;
    std::uint64_t seed = 1;
    double kappa = 1e-2;
    bool fresh_truth = false;
    std::vector<KernelFamily> methods{KernelFamily::linear, KernelFamily::gaussian};
    unsigned workers = 1;
};

struct AreRow {
    int n = 0;
    std::string method;
    int reps = 0;
    int b_boot = 0;
    double truth_var_z = 0.0;
    double if_mean = 0.0, if_sd = 0.0;
    double boot_mean = 0.0, boot_sd = 0.0;
    double mse_if = 0.0, mse_boot = 0.0;
    double are = 0.0;
    double time_if_s = 0.0, time_boot_s = 0.0;  // mean wall-clock per replication
};

namespace detail {

struct AreRep {
    double z = 0.0;
    double var_if = 0.0;
    double var_boot = 0.0;
    double t_if = 0.0;
    double t_boot = 0.0;
};

inline SynthData scs_sample(std::uint64_t seed, int n) {
    SynthSpec s;
    s.design = Design::scs;
    s.n = n;
    s.seed = seed;
    return gen_scs(s);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

[[nodiscard]] inline std::vector<AreRow> run_are(const AreConfig &cfg) {
    rkcca::detail::require(cfg.reps >= 2, "reps must be at least 2");
    rkcca::detail::require(cfg.b_boot >= 2, "b_boot must be at least 2");
    rkcca::detail::require(!cfg.n_list.empty(), "n_list is empty");
    KccaConfig kc;
    kc.kappa = cfg.kappa;
    std::vector<AreRow> rows;
    for (int n : cfg.n_list) {
        rkcca::detail::require(n >= 10, "sample sizes must be at least 10");
        const auto un = static_cast<std::uint64_t>(n);
        for (KernelFamily fam : cfg.methods) {
            const KernelSpec k = fam == KernelFamily::linear ? KernelSpec::linear() : KernelSpec::gaussian();
            const auto reps = parallel_map(static_cast<std::size_t>(cfg.reps), cfg.workers, [&](std::size_t r) {
                const SynthData d = detail::scs_sample(derive_seed(cfg.seed, {label("are-data"), un, r}), n);
                const SampleMatrix x(d.x), y(d.y);
                detail::AreRep out;
                auto t0 = std::chrono::steady_clock::now();
                const KccaModel m = fit(gram(x, k), gram(y, k), kc);
                const EifRecord e = eif_fisher(m);
                out.t_if = detail::seconds_since(t0);
                out.z = fisher_z(first_kcc(m));
                out.var_if = e.var_z;
                t0 = std::chrono::steady_clock::now();
                out.var_boot = bootstrap_var_z(x, y, k, k, kc, cfg.b_boot,
                                               derive_seed(cfg.seed, {label("are-boot"), un, r}));
                out.t_boot = detail::seconds_since(t0);
                return out;
            });
            std::vector<double> z, vi, vb, ti, tb;
            for (const auto &r : reps) {
                z.push_back(r.z);
                vi.push_back(r.var_if);
                vb.push_back(r.var_boot);
                ti.push_back(r.t_if);
                tb.push_back(r.t_boot);
            }
            if (cfg.fresh_truth) {
                z = parallel_map(static_cast<std::size_t>(cfg.reps), cfg.workers, [&](std::size_t r) {
                    const SynthData d = detail::scs_sample(derive_seed(cfg.seed, {label("are-truth"), un, r}), n);
                    return fisher_z(first_kcc(fit(gram(SampleMatrix(d.x), k), gram(SampleMatrix(d.y), k), kc)));
                });
            }
            const double truth = std::pow(sd_of(z), 2);
            AreRow row;
            row.n = n;
            row.method = method_name(fam);
            row.reps = cfg.reps;
            row.b_boot = cfg.b_boot;
            row.truth_var_z = truth;
            row.if_mean = mean_of(vi);
            row.if_sd = sd_of(vi);
            row.boot_mean = mean_of(vb);
            row.boot_sd = sd_of(vb);
            for (std::size_t i = 0; i < vi.size(); ++i) {
                row.mse_if += (vi[i] - truth) * (vi[i] - truth);
                row.mse_boot += (vb[i] - truth) * (vb[i] - truth);
            }
            row.mse_if /= static_cast<double>(vi.size());
            row.mse_boot /= static_cast<double>(vb.size());
            row.are = row.mse_boot / row.mse_if;
            row.time_if_s = mean_of(ti);
            row.time_boot_s = mean_of(tb);
            rows.push_back(row);
        }
    }
    return rows;
}

// ---- sensitivity of classical and robust fits to contamination -------------

struct SensitivityConfig {
    std::vector<Design> designs{Design::mgs, Design::scs, Design::sms};
    std::vector<int> n_list{100, 500, 1000};
    int reps = 100;
    LossSpec loss = LossSpec::hampel();
    double kappa = 1e-2;
    std::uint64_t seed = 1;
    double sms_sigma_x = 10.0;
    double sms_sigma_y = 20.0;
    unsigned workers = 1;
};

struct SensitivityRow {
    std::string design;
    int n = 0;
    std::string method;  // classical or robust
    double eta_rho_mean = 0.0, eta_rho_sd = 0.0;
    double eta_f_mean = 0.0, eta_f_sd = 0.0;
    std::vector<double> eta_rho, eta_f;  // per replication
};

/// Paired ID and CD samples share a seed, so they differ only in the
/// contaminated rows.
[[nodiscard]] inline std::vector<SensitivityRow> run_sensitivity(const SensitivityConfig &cfg) {
    rkcca::detail::require(cfg.reps >= 2, "reps must be at least 2");
    rkcca::detail::require(!cfg.designs.empty() && !cfg.n_list.empty(), "designs and n_list must be non-empty");
    KccaConfig classical;
    classical.kappa = cfg.kappa;
    KccaConfig robust = classical;
    robust.robust = KirwlsConfig{100, 1e-8, cfg.loss};
    std::vector<SensitivityRow> rows;
    for (Design design : cfg.designs) {
        for (int n : cfg.n_list) {
            struct Rep {
                SensitivityPair c, r;
            };
            const auto reps = parallel_map(static_cast<std::size_t>(cfg.reps), cfg.workers, [&](std::size_t r) {
                SynthSpec s;
                s.design = design;
                s.n = n;
                s.seed = derive_seed(cfg.seed, {label("sensitivity"), label(to_string(design)),
                                                static_cast<std::uint64_t>(n), r});
                s.sms_sigma_x = cfg.sms_sigma_x;
                s.sms_sigma_y = cfg.sms_sigma_y;
                const SynthData id = generate(s);
                s.variant = Variant::cd;
                const SynthData cd = generate(s);
                const KernelSpec k = KernelSpec::gaussian();
                const GramMatrix ix = gram(SampleMatrix(id.x), k), iy = gram(SampleMatrix(id.y), k);
                const GramMatrix cx = gram(SampleMatrix(cd.x), k), cy = gram(SampleMatrix(cd.y), k);
                try {
                    return Rep{sensitivity(fit(ix, iy, classical), fit(cx, cy, classical)),
                               sensitivity(fit(ix, iy, robust), fit(cx, cy, robust))};
                } catch (const NumericalError &e) {
                    throw NumericalError(to_string(design) + " n=" + std::to_string(n) + " rep " + std::to_string(r) +
                                         ": " + e.what());
                }
            });
            for (const char *method : {"classical", "robust"}) {
                SensitivityRow row;
                row.design = to_string(design) + "d";
                row.n = n;
                row.method = method;
                for (const Rep &rep : reps) {
                    const SensitivityPair &p = row.method == "classical" ? rep.c : rep.r;
                    row.eta_rho.push_back(p.eta_rho);
                    row.eta_f.push_back(p.eta_f);
                }
                row.eta_rho_mean = mean_of(row.eta_rho);
                row.eta_rho_sd = sd_of(row.eta_rho);
                row.eta_f_mean = mean_of(row.eta_f);
                row.eta_f_sd = sd_of(row.eta_f);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

}  // namespace rkcca::bench
