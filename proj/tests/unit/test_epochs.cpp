#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "sparkle/epochs.hpp"

using namespace sparkle;

TEST_CASE("tolerances halve exactly between epochs") {
    for (long long T : {3LL, 100LL, 1500LL}) {
        const auto sched = build_epoch_schedule(T, 20, 2, 2.5, 7e-5);
        for (int q = 1; q < sched.Q; ++q)
            CHECK(sched.eps[q] == sched.eps[q - 1] / 2.0); // exact powers of two
    }
}

TEST_CASE("pre-ceiling growth ratio approaches 2^{(4m+2)/(2m-1)}") {
    // m=2.5 gives exponent 3, so the ratio is exactly 8 before rounding
    const double m = 2.5;
    const double exponent = (4 * m + 2) / (2 * m - 1);
    CHECK(exponent == 3.0);
    auto raw = [&](int q) {
        return std::pow(std::pow(2.0, 0.6) * std::pow(2.0, q + 4), exponent);
    };
    for (int q = 1; q < 6; ++q)
        CHECK(raw(q + 1) / raw(q) == Catch::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("epoch length golden value at the tuned constants") {
    // C1=7e-5, m=2.5, s0=2, d=20, T=1500:
    // tau_1 = ceil(7e-5 * (2^0.6 * 32)^3 * log10(30000) * log10(1500)) = 114,
    // pinned from 40-digit evaluation of the same expression.
    const auto sched = build_epoch_schedule(1500, 20, 2, 2.5, 7e-5);
    REQUIRE(sched.Q == 3);
    CHECK(sched.tau[0] == 114);
    CHECK(sched.tau[1] == 909); // ceil of 8x the raw first length
    CHECK(sched.tau[2] == 1500 - 114 - 909); // truncated final epoch
    CHECK(sched.eps[0] ==
          Catch::Approx(0.3149291168559917).epsilon(1e-13));
}

TEST_CASE("epoch lengths cover the horizon exactly and never shrink") {
    for (long long T : {3LL, 57LL, 500LL, 2400LL}) {
        const auto sched = build_epoch_schedule(T, 10, 1, 2.5, 7e-5);
        CHECK(std::accumulate(sched.tau.begin(), sched.tau.end(), 0LL) == T);
        for (int q = 1; q + 1 < sched.Q; ++q) // truncation exempts the last
            CHECK(sched.tau[q] >= sched.tau[q - 1]);
        CHECK(sched.Q == static_cast<int>(sched.tau.size()));
        CHECK(sched.Q == static_cast<int>(sched.eps.size()));
    }
}

TEST_CASE("epoch_of maps steps to their epoch") {
    const auto sched = build_epoch_schedule(1500, 20, 2, 2.5, 7e-5);
    CHECK(sched.epoch_of(0) == 0);
    CHECK(sched.epoch_of(sched.tau[0] - 1) == 0);
    CHECK(sched.epoch_of(sched.tau[0]) == 1);
    CHECK(sched.epoch_of(1499) == sched.Q - 1);
}

TEST_CASE("horizons below three are rejected") {
    CHECK_THROWS_AS(build_epoch_schedule(1, 10, 1, 2.5, 7e-5), InputError);
    CHECK_THROWS_AS(build_epoch_schedule(2, 10, 1, 2.5, 7e-5), InputError);
    CHECK_THROWS_AS(build_epoch_schedule(100, 10, 1, 1.5, 7e-5), InputError);
    CHECK_THROWS_AS(build_epoch_schedule(100, 10, 1, 2.5, 0.0), InputError);
}
