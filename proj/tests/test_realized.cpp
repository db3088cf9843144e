#include <catch2/catch_amalgamated.hpp>

#include "volaforge/realized.hpp"
#include "volaforge/simulate.hpp"

using namespace volaforge;

TEST_CASE("realized_day hand computations") {
    SECTION("all-zero day") {
        std::vector<double> r(78, 0.0);
        const auto d = realized_day(r);
        CHECK(d.rv == 0.0);
        CHECK(d.rv_pos == 0.0);
        CHECK(d.rv_neg == 0.0);
        CHECK(d.rq == 0.0);
        CHECK(d.ret_oc == 0.0);
    }
    SECTION("two-return day") {
        const auto d = realized_day(std::vector<double>{0.01, -0.01});
        CHECK(d.rv == Catch::Approx(2e-4).epsilon(1e-12));
        CHECK(d.rv_pos == Catch::Approx(1e-4).epsilon(1e-12));
        CHECK(d.rv_neg == Catch::Approx(1e-4).epsilon(1e-12));
        CHECK(d.rq == Catch::Approx(2.0 / 3.0 * 2e-8).epsilon(1e-12));
        CHECK(d.ret_oc == 0.0);
    }
    SECTION("errors") {
        CHECK_THROWS_AS(realized_day(std::vector<double>{}), DataError);
        CHECK_THROWS_AS(realized_day(std::vector<double>{0.01}), DataError);
        CHECK_THROWS_AS(realized_day(std::vector<double>{0.01, std::nan("")}), DataError);
    }
}

TEST_CASE("semivariance identity is bit-exact") {
    Rng rng(21);
    for (int trial = 0; trial < 5000; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(100);
        std::vector<double> r(n);
        for (auto& x : r) x = 0.01 * rng.gauss();
        const auto d = realized_day(r);
        CHECK(d.rv == d.rv_pos + d.rv_neg);
    }
}

TEST_CASE("rv and rq scale as k^2 and k^4") {
    Rng rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> r(30);
        for (auto& x : r) x = 0.01 * rng.gauss();
        const double k = 0.1 + 5.0 * rng.u01();
        std::vector<double> rk = r;
        for (auto& x : rk) x *= k;
        const auto base = realized_day(r);
        const auto scaled = realized_day(rk);
        CHECK(scaled.rv == Catch::Approx(k * k * base.rv).epsilon(1e-12));
        CHECK(scaled.rq == Catch::Approx(k * k * k * k * base.rq).epsilon(1e-12));
        CHECK(scaled.ret_oc == Catch::Approx(k * base.ret_oc).epsilon(1e-12));
    }
}

TEST_CASE("mean RV matches integrated variance on simulated paths") {
    // Monte-Carlo consistency of the estimator under constant volatility.
    SimConfig cfg;
    cfg.days = 20000;
    cfg.n_per_day = 78;
    cfg.vol_model = ConstantVol{0.01};
    cfg.seed = 99;
    const auto sim = simulate_paths(cfg);
    const auto series = realized_series(sim.panel);
    double sum = 0.0, ss = 0.0;
    for (const auto& d : series) sum += d.rv;
    const double mean = sum / static_cast<double>(series.size());
    for (const auto& d : series) ss += (d.rv - mean) * (d.rv - mean);
    const double se = std::sqrt(ss / static_cast<double>(series.size() - 1) /
                                static_cast<double>(series.size()));
    CHECK(std::abs(mean - 1e-4) < 3.0 * se);
}

TEST_CASE("build_lags windows") {
    SECTION("constant series") {
        std::vector<RealizedDay> series(40);
        for (auto& d : series) d.rv = 3.5;
        const auto lags = build_lags(series, 30);
        CHECK(lags.rvd == Catch::Approx(3.5));
        CHECK(lags.rvw == Catch::Approx(3.5));
        CHECK(lags.rvm == Catch::Approx(3.5));
    }
    SECTION("1..22 ramp at day 23") {
        std::vector<RealizedDay> series(23);
        for (std::size_t i = 0; i < 22; ++i) series[i].rv = static_cast<double>(i + 1);
        const auto lags = build_lags(series, 22);   // day 23, 1-based
        CHECK(lags.rvd == Catch::Approx(22.0));
        CHECK(lags.rvw == Catch::Approx(20.0));    // mean of 18..22
        CHECK(lags.rvm == Catch::Approx(11.5));    // mean of 1..22
    }
    SECTION("positive returns clamp to zero") {
        std::vector<RealizedDay> series(30);
        for (auto& d : series) {
            d.rv = 1.0;
            d.ret_oc = 0.01;
        }
        const auto lags = build_lags(series, 25);
        CHECK(lags.retd_neg == 0.0);
        CHECK(lags.retw_neg == 0.0);
        CHECK(lags.retm_neg == 0.0);
    }
    SECTION("negative averages pass through") {
        std::vector<RealizedDay> series(30);
        for (auto& d : series) {
            d.rv = 1.0;
            d.ret_oc = -0.02;
        }
        const auto lags = build_lags(series, 25);
        CHECK(lags.retd_neg == Catch::Approx(-0.02));
        CHECK(lags.retw_neg == Catch::Approx(-0.02));
    }
    SECTION("burn-in guard") {
        std::vector<RealizedDay> series(30);
        CHECK_THROWS_AS(build_lags(series, 21), SizingError);
    }
}

TEST_CASE("realized csv round trip") {
    SimConfig cfg;
    cfg.days = 30;
    cfg.n_per_day = 10;
    cfg.seed = 5;
    const auto sim = simulate_paths(cfg);
    const auto series = realized_series(sim.panel);
    const auto path = (std::filesystem::temp_directory_path() / "vf_realized.csv").string();
    write_realized_csv(path, sim.panel, series);
    std::vector<std::string> dates;
    const auto back = read_realized_csv(path, &dates);
    REQUIRE(back.size() == series.size());
    REQUIRE(dates.size() == series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        CHECK(back[i].rv == series[i].rv);          // shortest round-trip formatting is exact
        CHECK(back[i].rq == series[i].rq);
        CHECK(back[i].ret_oc == series[i].ret_oc);
    }
    std::filesystem::remove(path);
}
