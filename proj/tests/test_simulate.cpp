#include <catch2/catch_amalgamated.hpp>

#include "volaforge/realized.hpp"
#include "volaforge/simulate.hpp"
#include "volaforge/stats.hpp"

using namespace volaforge;

TEST_CASE("constant-volatility paths have exact daily quadratic variation") {
    SimConfig cfg;
    cfg.days = 50;
    cfg.n_per_day = 78;
    cfg.vol_model = ConstantVol{0.01};
    cfg.seed = 3;
    const auto sim = simulate_paths(cfg);
    REQUIRE(sim.true_qv.size() == 50);
    for (double qv : sim.true_qv) CHECK(qv == Catch::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("jump-only paths: daily QV equals the sum of squared jumps") {
    // Low intensity so no grid step carries two jumps under this seed; with
    // zero diffusion every nonzero return is then exactly one jump.
    SimConfig cfg;
    cfg.days = 1000;
    cfg.n_per_day = 39;
    cfg.vol_model = ConstantVol{0.0};
    cfg.jump = {0.02, 0.02};
    cfg.seed = 17;
    const auto sim = simulate_paths(cfg);
    std::size_t single_jump_days = 0;
    for (std::size_t d = 0; d < cfg.days; ++d) {
        KahanSum sum_sq;
        std::size_t n_jumps = 0;
        for (double r : sim.panel.returns[d]) {
            if (r != 0.0) {
                sum_sq.add(r * r);
                ++n_jumps;
            }
        }
        CHECK(sim.true_qv[d] == Catch::Approx(sum_sq.value()).margin(1e-18));
        if (n_jumps == 1) {
            ++single_jump_days;
            for (double r : sim.panel.returns[d])
                if (r != 0.0) CHECK(sim.true_qv[d] == Catch::Approx(r * r).epsilon(1e-12));
        }
    }
    CHECK(single_jump_days >= 5);
}

TEST_CASE("square-root variance has the right stationary mean") {
    // fast mean reversion keeps consecutive daily integrals almost
    // uncorrelated, so the plain Monte-Carlo standard error applies
    SimConfig cfg;
    cfg.days = 30000;
    cfg.n_per_day = 8;
    cfg.vol_model = SqrtVol{5.0, 1e-4, 0.02};
    cfg.seed = 23;
    const auto sim = simulate_paths(cfg);
    const double mean = stats::mean(sim.true_qv);
    const double se = stats::stddev_sample(sim.true_qv) /
                      std::sqrt(static_cast<double>(sim.true_qv.size()));
    CHECK(std::abs(mean - 1e-4) < 3.0 * se);
}

TEST_CASE("seed determinism of simulated panels") {
    SimConfig cfg;
    cfg.days = 40;
    cfg.n_per_day = 20;
    cfg.vol_model = SqrtVol{};
    cfg.jump = {0.1, 0.01};
    cfg.seed = 77;
    const auto a = simulate_paths(cfg);
    const auto b = simulate_paths(cfg);
    REQUIRE(a.panel.returns == b.panel.returns);
    REQUIRE(a.true_qv == b.true_qv);
    cfg.seed = 78;
    const auto c = simulate_paths(cfg);
    CHECK(a.panel.returns != c.panel.returns);
}

TEST_CASE("RV converges to emitted QV at the 1/n rate") {
    // var(RV - QV) is proportional to 1/n, so the mean squared gap should
    // shrink by roughly the grid-refinement factor (8x here, with MC slack)
    std::vector<double> errs;
    for (std::size_t n : {8u, 64u, 512u}) {
        SimConfig cfg;
        cfg.days = 2000;
        cfg.n_per_day = n;
        cfg.vol_model = SqrtVol{4.0, 1e-4, 0.05};
        cfg.seed = 31;
        const auto sim = simulate_paths(cfg);
        const auto series = realized_series(sim.panel);
        double err = 0.0;
        for (std::size_t d = 0; d < cfg.days; ++d) {
            const double diff = series[d].rv - sim.true_qv[d];
            err += diff * diff;
        }
        errs.push_back(err / static_cast<double>(cfg.days));
    }
    CHECK(errs[1] < errs[0] / 4.0);
    CHECK(errs[2] < errs[1] / 4.0);
    CHECK(errs[1] > errs[0] / 16.0);
    CHECK(errs[2] > errs[1] / 16.0);
}

TEST_CASE("sim config validation") {
    SimConfig cfg;
    cfg.n_per_day = 1;
    CHECK_THROWS_AS(simulate_paths(cfg), ConfigError);
    cfg.n_per_day = 10;
    cfg.jump.intensity = -1.0;
    CHECK_THROWS_AS(simulate_paths(cfg), ConfigError);
}

TEST_CASE("har generator fixed points") {
    SECTION("constant at beta0") {
        HarGenConfig cfg;
        cfg.beta0 = 0.4;
        cfg.beta1 = cfg.beta2 = cfg.beta3 = 0.0;
        cfg.noise_std = 0.0;
        cfg.days = 50;
        const auto s = generate_har_series(cfg);
        for (double v : s.values) CHECK(v == Catch::Approx(0.4));
    }
    SECTION("deterministic fixed point 1.0") {
        HarGenConfig cfg;   // defaults: betas (0.1, 0.5, 0.3, 0.1), noise 0
        cfg.days = 100;
        const auto s = generate_har_series(cfg);
        CHECK(s.values.back() == Catch::Approx(1.0).epsilon(1e-9));
        CHECK(s.values.front() == Catch::Approx(1.0).epsilon(1e-9));
    }
    SECTION("explosive betas rejected") {
        HarGenConfig cfg;
        cfg.beta1 = 0.9;
        cfg.beta2 = 0.2;
        CHECK_THROWS_AS(generate_har_series(cfg), ConfigError);
    }
}

TEST_CASE("har generator determinism and positivity") {
    HarGenConfig cfg;
    cfg.noise_std = 0.2;
    cfg.days = 2000;
    cfg.seed = 5;
    const auto a = generate_har_series(cfg);
    const auto b = generate_har_series(cfg);
    REQUIRE(a.values == b.values);
    for (double v : a.values) CHECK(v > 0.0);
}
