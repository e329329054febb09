#include <catch_amalgamated.hpp>

#include <random>

#include "rkcca/influence.hpp"
#include "rkcca/synth.hpp"

using namespace rkcca;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

KccaModel hand_model(const Vector &x, const Vector &y, double rho) {
    const Eigen::Index n = x.size();
    KccaModel m{Vector::Constant(1, rho), Matrix::Zero(1, n), Matrix::Zero(1, n), x.transpose(), y.transpose(),
                CenteringWeights::uniform(n), 1e-2, Vector::Constant(1, rho), std::nullopt};
    return m;
}

std::pair<Matrix, Matrix> bivariate(Eigen::Index n, double r, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> nd;
    Matrix x(n, 1), y(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = nd(eng);
        y(i, 0) = r * x(i, 0) + std::sqrt(1 - r * r) * nd(eng);
    }
    return {x, y};
}

KccaConfig kappa(double k) {
    KccaConfig c;
    c.kappa = k;
    return c;
}

}  // namespace

TEST_CASE("eif_rho by hand") {
    Vector x(4), y(4);
    x << 1, -1, 1, -1;
    y << 1, 1, -1, -1;
    const Vector e = eif_rho(hand_model(x, y, 0.5));
    // -0.25 x^2 + x y - 0.25 y^2
    CHECK(e[0] == 0.5);
    CHECK(e[1] == -1.5);
    CHECK(e[2] == -1.5);
    CHECK(e[3] == 0.5);

    CHECK(eif_rho(hand_model(x, x, 1.0)).isZero(0.0));
    CHECK(eif_rho(hand_model(x, y, 0.0)).isZero(0.0));
}

TEST_CASE("eif_fisher structure") {
    Vector x(4), y(4);
    x << 1, -1, 1, -1;
    y << 1, 1, -1, -1;
    const EifRecord r = eif_fisher(hand_model(x, y, 0.5));
    for (Eigen::Index i = 0; i < 4; ++i) { CHECK(r.eif_z[i] == r.u[i] * r.v[i]); }
    // u v = (x^2 - y^2) / 2 = 0 here, so the variance is floored.
    CHECK(r.floored);
    CHECK(r.var_z == var_z_floor);

    const EifRecord same = eif_fisher(hand_model(x, x, 0.99));
    CHECK(same.v.isZero(0.0));
    CHECK(same.eif_z.isZero(0.0));
    CHECK(same.floored);
}

TEST_CASE("eif_fisher variance on a bivariate normal") {
    // Over many replications the median IF variance sits near 1/(n-3).
    std::vector<double> v;
    for (std::uint64_t rep = 0; rep < 40; ++rep) {
        auto [x, y] = bivariate(500, 0.5, 100 + rep);
        const KccaModel m = fit(gram(SampleMatrix(x), KernelSpec::linear()), gram(SampleMatrix(y), KernelSpec::linear()),
                                kappa(1e-6));
        v.push_back(eif_fisher(m).var_z);
    }
    std::nth_element(v.begin(), v.begin() + 20, v.end());
    const double ref = 1.0 / 497.0;
    CHECK(v[20] > ref / 2);
    CHECK(v[20] < ref * 2);
}

TEST_CASE("IF variance shrinks with n") {
    std::vector<double> med;
    for (int n : {100, 200, 400}) {
        std::vector<double> v;
        for (std::uint64_t rep = 0; rep < 50; ++rep) {
            auto [x, y] = bivariate(n, 0.5, 1000 * static_cast<std::uint64_t>(n) + rep);
            const KccaModel m = fit(gram(SampleMatrix(x), KernelSpec::linear()),
                                    gram(SampleMatrix(y), KernelSpec::linear()), kappa(1e-6));
            v.push_back(eif_fisher(m).var_z);
        }
        std::nth_element(v.begin(), v.begin() + 25, v.end());
        med.push_back(v[25]);
    }
    CHECK(med[0] > med[1]);
    CHECK(med[1] > med[2]);
}

TEST_CASE("bootstrap variance") {
    SynthSpec spec;
    spec.design = Design::scs;
    spec.n = 60;
    spec.seed = 3;
    const SynthData d = generate(spec);
    const SampleMatrix x(d.x), y(d.y);
    const KernelSpec k = KernelSpec::gaussian();

    SECTION("deterministic and independent of worker count") {
        const double a = bootstrap_var_z(x, y, k, k, KccaConfig{}, 20, 42, 1);
        const double b = bootstrap_var_z(x, y, k, k, KccaConfig{}, 20, 42, 3);
        CHECK(a == b);
        CHECK(a > 0.0);
        CHECK(std::isfinite(a));
        CHECK(bootstrap_var_z(x, y, k, k, KccaConfig{}, 20, 43, 1) != a);
    }
    SECTION("identical views clip to a constant z") {
        CHECK(bootstrap_var_z(x, x, k, k, kappa(1e-15), 5, 1) == 0.0);
    }
    SECTION("weighted shortcut equals refitting the expanded resample") {
        std::vector<int> counts(60, 0);
        std::mt19937_64 eng(8);
        std::uniform_int_distribution<int> pick(0, 59);
        std::vector<Eigen::Index> rows;
        for (int i = 0; i < 60; ++i) {
            const int r = pick(eng);
            ++counts[static_cast<std::size_t>(r)];
            rows.push_back(r);
        }
        const double fast = detail::resample_z(x, y, k, k, KccaConfig{}, counts);
        const SampleMatrix xr(d.x(rows, Eigen::all)), yr(d.y(rows, Eigen::all));
        const double slow = fisher_z(first_kcc(fit(gram(xr, k), gram(yr, k), KccaConfig{})));
        CHECK_THAT(fast, WithinAbs(slow, 1e-8));
    }
    SECTION("robust resamples") {
        KccaConfig rc;
        rc.robust = KirwlsConfig{};
        const double v = bootstrap_var_z(x, y, k, k, rc, 4, 5);
        CHECK(v >= 0.0);
        CHECK(std::isfinite(v));
    }
    SECTION("validation") {
        CHECK_THROWS_AS(bootstrap_var_z(x, y, k, k, KccaConfig{}, 1, 5), ValidationError);
    }
}

TEST_CASE("sensitivity measures") {
    Vector x(4), y(4);
    x << 1, -1, 1, -1;
    y << 1, 1, -1, -1;
    const KccaModel id = hand_model(x, y, 0.5);
    const SensitivityPair same = sensitivity(id, id);
    CHECK(same.eta_rho == 0.0);
    CHECK(same.eta_f == 0.0);

    const KccaModel cd = hand_model(2.0 * x, 2.0 * y, 0.5);
    const SensitivityPair half = sensitivity(id, cd);
    // Doubling the variates doubles |x - y| and quadruples the influence norm.
    CHECK_THAT(half.eta_f, WithinAbs(0.5, 1e-15));
    CHECK_THAT(half.eta_rho, WithinAbs(0.75, 1e-15));

    const KccaModel zero = hand_model(x, y, 0.0);
    CHECK_THROWS_AS(sensitivity(id, zero), NumericalError);
    CHECK(sensitivity(zero, zero).eta_rho == 0.0);

    const KccaModel other = hand_model(Vector::Ones(3), Vector::Ones(3), 0.5);
    CHECK_THROWS_AS(sensitivity(id, other), ValidationError);
}

TEST_CASE("index plot data") {
    Vector x(3), y(3);
    x << 1, 0, -1;
    y << 1, -1, 0;
    const auto pts = index_plot_data(hand_model(x, y, 0.4));
    REQUIRE(pts.size() == 3);
    for (int i = 0; i < 3; ++i) { CHECK(pts[static_cast<std::size_t>(i)].first == i); }
}

TEST_CASE("influence of contaminated rows") {
    SynthSpec spec;
    spec.design = Design::sms;
    spec.n = 300;
    spec.variant = Variant::cd;
    spec.seed = 12;
    const SynthData d = generate(spec);
    const GramMatrix gx = gram(SampleMatrix(d.x), KernelSpec::gaussian());
    const GramMatrix gy = gram(SampleMatrix(d.y), KernelSpec::gaussian());
    const auto ratio = [&](const KccaModel &m) {
        const Vector e = eif_rho(m).cwiseAbs();
        std::vector<bool> bad(300, false);
        for (int i : d.contaminated) { bad[static_cast<std::size_t>(i)] = true; }
        double sb = 0, sg = 0;
        for (int i = 0; i < 300; ++i) { (bad[static_cast<std::size_t>(i)] ? sb : sg) += e[i]; }
        return (sb / static_cast<double>(d.contaminated.size())) / (sg / (300.0 - static_cast<double>(d.contaminated.size())));
    };
    KccaConfig rc;
    rc.robust = KirwlsConfig{};
    const double classical = ratio(fit(gx, gy, KccaConfig{}));
    const double robust = ratio(fit(gx, gy, rc));
    CHECK(classical > 2.0);
    CHECK(robust < classical);
}
