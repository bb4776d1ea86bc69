#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sparkle/kernel.hpp"
#include "sparkle/rng.hpp"

using namespace sparkle;

namespace {
KernelSpec matern(double m, double l = 1.0, double var = 1.0) {
    KernelSpec spec;
    spec.smoothness_m = m;
    spec.lengthscale = l;
    spec.variance = var;
    return spec;
}
} // namespace

TEST_CASE("matern kernel at zero lag equals variance") {
    CHECK(eval_kernel(matern(2.0), 0.0, 0.0) == 1.0);
    CHECK(eval_kernel(matern(2.5, 0.7, 3.0), 1.3, 1.3) == 3.0);
}

TEST_CASE("matern 3/2 closed form at unit lag") {
    // (1 + sqrt(3)) exp(-sqrt(3)), evaluated with 40-digit arithmetic
    const double expected = 0.4833577245965077;
    CHECK(eval_kernel(matern(2.0), 0.0, 1.0) == Catch::Approx(expected).epsilon(1e-14));
}

TEST_CASE("matern nu=2 matches high precision Bessel values") {
    // rho_2(r) = 2 r^2 K_2(2r); reference values from 40-digit arithmetic
    const KernelSpec spec = matern(2.5);
    struct Ref {
        double r, value;
    };
    const Ref refs[] = {
        {1e-7, 0.99999999999999},
        {0.01, 0.9999000477813601},
        {0.3, 0.9216549404009526},
        {1.0, 0.5075195091321117},
        {2.7, 0.04878874648314915},
        {10.0, 1.265908722458446e-7},
        {50.0, 2.37511265194432e-41},
    };
    for (const auto& ref : refs)
        CHECK(eval_kernel(spec, 0.0, ref.r) ==
              Catch::Approx(ref.value).epsilon(1e-10));
}

TEST_CASE("bessel path agrees with half-integer closed forms on [0,50]") {
    // route the closed-form orders through the Bessel evaluation and compare
    for (double nu : {1.5, 2.5}) {
        for (double r = 0.01; r <= 50.0; r *= 1.37) {
            const double z = std::sqrt(2.0 * nu) * r;
            if (z > 700.0) continue;
            const double closed = detail::matern_correlation_scaled(nu, z);
            const double bessel = std::pow(2.0, 1.0 - nu) / std::tgamma(nu) *
                                  std::pow(z, nu) * boost::math::cyl_bessel_k(nu, z);
            const double scale = std::max(closed, 1e-300);
            CHECK(std::abs(closed - bessel) / scale < 1e-10);
        }
    }
}

TEST_CASE("general half-integer recursion covers nu=7/2") {
    // m = 4 -> nu = 3.5: (1 + z + 2z^2/5 + z^3/15) exp(-z)
    const KernelSpec spec = matern(4.0);
    for (double r : {0.2, 1.0, 3.0}) {
        const double z = std::sqrt(7.0) * r;
        const double expected =
            (1.0 + z + 2.0 * z * z / 5.0 + z * z * z / 15.0) * std::exp(-z);
        CHECK(eval_kernel(spec, 0.0, r) == Catch::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("kernel symmetry and maximum at coincidence") {
    const KernelSpec spec = matern(2.5, 0.8, 1.7);
    RandomStream rng(11);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-10, 10), y = rng.uniform(-10, 10);
        const double kxy = eval_kernel(spec, x, y);
        CHECK(kxy == eval_kernel(spec, y, x)); // exact
        CHECK(kxy <= eval_kernel(spec, x, x));
    }
}

TEST_CASE("kernel is stationary: shift invariance") {
    const KernelSpec spec = matern(2.0, 1.3, 0.9);
    RandomStream rng(12);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-5, 5), y = rng.uniform(-5, 5);
        const double shift = rng.uniform(-100, 100);
        CHECK(std::abs(eval_kernel(spec, x, y) -
                       eval_kernel(spec, x + shift, y + shift)) < 1e-14);
    }
}

TEST_CASE("kernel continuity in the lag") {
    const KernelSpec spec = matern(2.5);
    for (double h : {1e-3, 1e-6}) {
        for (double r : {0.0, 0.4, 2.0}) {
            const double diff =
                std::abs(eval_kernel(spec, 0.0, r) - eval_kernel(spec, 0.0, r + h));
            CHECK(diff < 10.0 * h + 1e-12);
        }
    }
}

TEST_CASE("invalid kernel spec is a configuration error") {
    CHECK_THROWS_AS(eval_kernel(matern(1.5), 0, 1), ConfigError); // m == 3/2
    CHECK_THROWS_AS(eval_kernel(matern(2.5, -1.0), 0, 1), ConfigError);
    CHECK_THROWS_AS(eval_kernel(matern(2.5, 1.0, 0.0), 0, 1), ConfigError);
}

TEST_CASE("gram of a single point") {
    const KernelSpec spec = matern(2.0, 1.0, 1.6);
    const GramMatrix g = gram(spec, std::vector<double>{0.3}, 1e-8);
    REQUIRE(g.size() == 1);
    CHECK(g.entries(0, 0) == Catch::Approx(1.6 + 1e-8).epsilon(1e-15));
}

TEST_CASE("gram of coincident points without jitter is rank one") {
    const KernelSpec spec = matern(2.0, 1.0, 2.0);
    const GramMatrix g = gram(spec, std::vector<double>{0.7, 0.7}, 0.0);
    for (int i = 0; i < 2; ++i)
        for (int l = 0; l < 2; ++l) CHECK(g.entries(i, l) == 2.0);
}

TEST_CASE("gram matches entrywise closed-form evaluation") {
    // m=2 -> nu=3/2 closed form, points {0, 0.5, 1}
    const KernelSpec spec = matern(2.0);
    const GramMatrix g = gram(spec, std::vector<double>{0.0, 0.5, 1.0}, 0.0);
    auto rho = [](double r) { return (1 + std::sqrt(3.0) * r) * std::exp(-std::sqrt(3.0) * r); };
    const double k05 = 0.7848876539574507; // 40-digit evaluation of rho(0.5)
    const double k10 = 0.4833577245965077;
    CHECK(g.entries(0, 1) == Catch::Approx(k05).epsilon(1e-12));
    CHECK(g.entries(0, 2) == Catch::Approx(k10).epsilon(1e-12));
    CHECK(g.entries(1, 2) == Catch::Approx(k05).epsilon(1e-12));
    for (int i = 0; i < 3; ++i) {
        CHECK(g.entries(i, i) == 1.0);
        for (int l = 0; l < 3; ++l) {
            CHECK(g.entries(i, l) == g.entries(l, i));
            CHECK(g.entries(i, l) ==
                  Catch::Approx(rho(std::abs(i - l) * 0.5)).epsilon(1e-12));
        }
    }
}

TEST_CASE("gram of random points is PSD up to roundoff") {
    const KernelSpec spec = matern(2.5);
    RandomStream rng(21);
    std::vector<double> pts(50);
    for (auto& p : pts) p = rng.uniform(-5, 5);
    const GramMatrix g = gram(spec, pts, 0.0);
    CHECK(g.min_eigenvalue() >= -1e-8 * 50);
    const GramMatrix gj = gram(spec, pts, spec.default_jitter());
    CHECK(gj.min_eigenvalue() >= 0.0);
}

TEST_CASE("gram rejects non-finite points") {
    const KernelSpec spec = matern(2.0);
    CHECK_THROWS_AS(gram(spec, std::vector<double>{0.0, std::nan("")}, 0.0),
                    InputError);
}

TEST_CASE("kernel spec JSON round trip") {
    const KernelSpec spec = matern(2.5, 1.25, 0.5);
    nlohmann::json j = spec;
    CHECK(j["family"] == "matern");
    CHECK(j["m"] == 2.5);
    const auto back = j.get<KernelSpec>();
    CHECK(back.smoothness_m == spec.smoothness_m);
    CHECK(back.lengthscale == spec.lengthscale);
    CHECK(back.variance == spec.variance);
    nlohmann::json bad = j;
    bad["family"] = "rbf";
    CHECK_THROWS_AS(bad.get<KernelSpec>(), ConfigError);
}
