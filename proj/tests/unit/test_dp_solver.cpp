#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "sparkle/dp_estimator.hpp"
#include "sparkle/rng.hpp"

using namespace sparkle;

namespace {

KernelSpec matern25() {
    KernelSpec spec;
    spec.smoothness_m = 2.5;
    return spec;
}

SampleBatch sine_batch(int n, int d, int s, double noise_sd, RandomStream& rng,
                       double amp = 2.0) {
    SampleBatch batch;
    batch.covariates.resize(n, d);
    batch.responses.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) batch.covariates(i, j) = rng.uniform(-5, 5);
        double y = 0.0;
        for (int j = 0; j < s; ++j) y += amp * std::sin(batch.covariates(i, j));
        if (noise_sd > 0) y += rng.normal(0.0, noise_sd);
        batch.responses[i] = y;
    }
    return batch;
}

} // namespace

TEST_CASE("zero responses give the zero function") {
    RandomStream rng(31);
    SampleBatch batch = sine_batch(12, 3, 1, 0.0, rng);
    batch.responses.setZero();
    RegularizationPair pair{0.05, 0.1, 0.5, 0.2};
    auto [f, report] = fit_doubly_penalized(batch, pair, matern25());
    CHECK(f.support().empty());
    CHECK(report.active_set.empty());
    CHECK(dp_objective(batch, pair, f) == 0.0);
}

TEST_CASE("unpenalized one-dimensional fit interpolates") {
    SampleBatch batch;
    batch.covariates.resize(3, 1);
    batch.covariates << -1.0, 0.2, 1.4;
    batch.responses.resize(3);
    batch.responses << 0.5, -0.3, 1.1;
    RegularizationPair pair{0.0, 0.0, 0.0, 0.0};
    auto [f, report] = fit_doubly_penalized(batch, pair, matern25());
    for (int i = 0; i < 3; ++i) {
        const double fx = f.evaluate(batch.covariates.row(i).transpose());
        CHECK(std::abs(fx - batch.responses[i]) < 1e-6);
    }
}

TEST_CASE("dominant penalty zeroes every component") {
    RandomStream rng(32);
    SampleBatch batch = sine_batch(20, 4, 2, 0.2, rng);
    RegularizationPair pair{50.0, 50.0, 1.0, 1.0};
    auto [f, report] = fit_doubly_penalized(batch, pair, matern25());
    CHECK(f.support().empty());
    CHECK(report.converged);
}

TEST_CASE("objective trajectory is nonincreasing") {
    RandomStream rng(33);
    SampleBatch batch = sine_batch(30, 5, 2, 0.3, rng);
    RegularizationPair pair{0.01, 0.05, 0.2, 0.05};
    auto [f, report] = fit_doubly_penalized(batch, pair, matern25());
    REQUIRE(report.objective_trajectory.size() >= 1);
    for (std::size_t i = 1; i < report.objective_trajectory.size(); ++i)
        CHECK(report.objective_trajectory[i] <=
              report.objective_trajectory[i - 1] + 1e-12);
}

TEST_CASE("blockwise stationarity holds at the solution") {
    RandomStream rng(34);
    SampleBatch batch = sine_batch(25, 4, 2, 0.2, rng);
    RegularizationPair pair{0.02, 0.08, 0.25, 0.08};
    FitOptions opts;
    opts.tol = 1e-12;
    opts.max_sweeps = 2000;
    auto [f, report] = fit_doubly_penalized(batch, pair, matern25(), opts);
    REQUIRE(report.block_kkt_residual.size() == 4);
    for (double r : report.block_kkt_residual) CHECK(r < 1e-5);
}

TEST_CASE("reference solver agrees on the zero-response instance") {
    RandomStream rng(35);
    SampleBatch batch = sine_batch(10, 2, 1, 0.0, rng);
    batch.responses.setZero();
    RegularizationPair pair{0.1, 0.1, 1.0, 0.1};
    auto ref = fit_reference(batch, pair, matern25(), 2000);
    auto [f, report] = fit_doubly_penalized(batch, pair, matern25());
    CHECK(std::abs(dp_objective(batch, pair, ref) -
                   dp_objective(batch, pair, f)) < 1e-8);
}

TEST_CASE("reference solver matches block descent on random instances") {
    RandomStream rng(36);
    for (int trial = 0; trial < 10; ++trial) {
        SampleBatch batch = sine_batch(30, 5, 2, 0.22, rng);
        RegularizationSchedule sched;
        sched.C3 = 0.3;
        const RegularizationPair pair = schedule(batch.n(), batch.dim(), 0.05, sched);
        FitOptions opts;
        opts.tol = 1e-11;
        auto [f, report] = fit_doubly_penalized(batch, pair, matern25(), opts);
        auto ref = fit_reference(batch, pair, matern25(), 200000);
        const double obj_bcd = dp_objective(batch, pair, f);
        const double obj_ref = dp_objective(batch, pair, ref);
        CHECK(std::abs(obj_bcd - obj_ref) / (1.0 + std::abs(obj_ref)) <= 1e-4);
    }
}

TEST_CASE("lambda-dominant instance zeroed by both solvers") {
    RandomStream rng(37);
    SampleBatch batch = sine_batch(15, 3, 1, 0.1, rng);
    RegularizationPair pair{0.0, 40.0, 1.0, 1.0};
    auto [f, report] = fit_doubly_penalized(batch, pair, matern25());
    auto ref = fit_reference(batch, pair, matern25(), 5000);
    CHECK(f.support().empty());
    CHECK(ref.pruned_support() == f.pruned_support());
}

TEST_CASE("sample order does not change the optimum value") {
    RandomStream rng(38);
    SampleBatch batch = sine_batch(24, 3, 1, 0.2, rng);
    SampleBatch shuffled = batch;
    std::vector<int> perm(batch.n());
    for (int i = 0; i < batch.n(); ++i) perm[i] = i;
    for (int i = batch.n() - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
    for (int i = 0; i < batch.n(); ++i) {
        shuffled.covariates.row(i) = batch.covariates.row(perm[i]);
        shuffled.responses[i] = batch.responses[perm[i]];
    }
    RegularizationPair pair{0.02, 0.06, 0.3, 0.06};
    FitOptions opts;
    opts.tol = 1e-12;
    opts.max_sweeps = 2000;
    auto [fa, ra] = fit_doubly_penalized(batch, pair, matern25(), opts);
    auto [fb, rb] = fit_doubly_penalized(shuffled, pair, matern25(), opts);
    CHECK(std::abs(dp_objective(batch, pair, fa) -
                   dp_objective(shuffled, pair, fb)) < 1e-10);
}

TEST_CASE("degenerate single-sample batch fits gracefully") {
    SampleBatch batch;
    batch.covariates.resize(1, 3);
    batch.covariates << 0.5, -0.2, 1.0;
    batch.responses.resize(1);
    batch.responses << 2.0;
    RegularizationPair pair{0.01, 0.01, 0.5, 0.01};
    auto [f, report] = fit_doubly_penalized(batch, pair, matern25());
    const double fx = f.evaluate(batch.covariates.row(0).transpose());
    CHECK(std::isfinite(fx));
    CHECK(std::abs(fx - 2.0) < 2.0); // moves toward the single response
}

TEST_CASE("non-finite responses are rejected") {
    SampleBatch batch;
    batch.covariates.resize(2, 1);
    batch.covariates << 0.0, 1.0;
    batch.responses.resize(2);
    batch.responses << 1.0, std::nan("");
    RegularizationPair pair{0.1, 0.1, 1.0, 0.1};
    CHECK_THROWS_AS(fit_doubly_penalized(batch, pair, matern25()), InputError);
}

TEST_CASE("schedule-driven fit keeps the support small on sparse truth") {
    // s-sparse data, n=400, d=50; C3 here is set where the rate-driven
    // schedule actually sparsifies (the supplement's bandit-tuned C3=0.01
    // leaves every block active; see the rate study in the README).
    RandomStream rng(39);
    const int s = 2;
    int ok = 0;
    for (int seed = 0; seed < 10; ++seed) {
        SampleBatch batch = sine_batch(400, 50, s, std::sqrt(0.05), rng);
        RegularizationSchedule sched;
        sched.C3 = 1.0;
        sched.C4 = 1.0;
        const RegularizationPair pair = schedule(batch.n(), batch.dim(), 0.05, sched);
        FitOptions opts;
        opts.tol = 1e-9;
        opts.max_sweeps = 60;
        auto [f, report] = fit_doubly_penalized(batch, pair, matern25(), opts);
        if (static_cast<int>(report.active_set.size()) <= 3 * s) ++ok;
    }
    CHECK(ok >= 9);
}
