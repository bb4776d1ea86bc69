#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sparkle/dp_estimator.hpp"
#include "sparkle/rng.hpp"

using namespace sparkle;

TEST_CASE("regularization schedule golden values") {
    // n=100, d=10, delta=0.01, m=2, C3=C4=1, pinned from 40-digit evaluation
    RegularizationSchedule sched;
    sched.C3 = 1.0;
    sched.C4 = 1.0;
    sched.m = 2.0;
    const RegularizationPair pair = schedule(100, 10, 0.01, sched);
    CHECK(pair.w == Catch::Approx(0.2628260884878466).epsilon(1e-13));
    CHECK(pair.gamma == Catch::Approx(0.1396634873648015).epsilon(1e-13));
    CHECK(pair.lambda == Catch::Approx(0.4024895758526481).epsilon(1e-13));
    CHECK(pair.rho == Catch::Approx(0.1057847608784839).epsilon(1e-13));
    // the rate term 100^{-0.4} loses to the deviation term here
    CHECK(pair.w > std::pow(100.0, -0.4));
}

TEST_CASE("lambda decreases strictly when n doubles") {
    RegularizationSchedule sched;
    sched.m = 2.0;
    sched.C3 = 1.0;
    sched.C4 = 1.0;
    const auto a = schedule(100, 10, 0.01, sched);
    const auto b = schedule(200, 10, 0.01, sched);
    CHECK(b.lambda < a.lambda);
}

TEST_CASE("rho equals lambda times w identically") {
    RandomStream rng(17);
    for (int i = 0; i < 100; ++i) {
        RegularizationSchedule sched;
        sched.C3 = rng.uniform(0.01, 5.0);
        sched.C4 = rng.uniform(0.1, 5.0);
        sched.m = rng.uniform(1.6, 6.0);
        const long long n = 1 + static_cast<long long>(rng.uniform(0, 5000));
        const int d = 1 + static_cast<int>(rng.uniform(0, 500));
        const double delta = rng.uniform(1e-6, 0.49);
        const auto pair = schedule(n, d, delta, sched);
        CHECK(pair.rho == pair.lambda * pair.w); // exact identity
        CHECK(pair.w > 0.0);
        CHECK(pair.gamma > 0.0);
    }
}

TEST_CASE("schedule rejects delta outside (0, 1/2)") {
    RegularizationSchedule sched;
    CHECK_THROWS_AS(schedule(100, 10, 0.0, sched), InputError);
    CHECK_THROWS_AS(schedule(100, 10, 0.5, sched), InputError);
    CHECK_THROWS_AS(schedule(100, 10, -0.1, sched), InputError);
    CHECK_THROWS_AS(schedule(0, 10, 0.01, sched), InputError);
}
