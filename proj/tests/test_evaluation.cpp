#include <catch2/catch_amalgamated.hpp>

#include "volaforge/evaluation.hpp"

using namespace volaforge;

TEST_CASE("relative mse matrix") {
    SECTION("identical models give a matrix of ones") {
        const std::vector<double> l = {1.0, 2.0, 0.5, 1.5};
        const auto m = relative_mse_matrix({l, l, l});
        for (const auto& row : m)
            for (double v : row) CHECK(v == 1.0);
    }
    SECTION("doubling the errors quadruples the ratio") {
        std::vector<double> base = {1.0, 0.6, 1.4, 0.9};
        std::vector<double> twice;
        for (double v : base) twice.push_back(4.0 * v);   // errors doubled => losses x4
        const auto m = relative_mse_matrix({base, twice});
        CHECK(m[0][1] == Catch::Approx(4.0));
        CHECK(m[1][0] == Catch::Approx(0.25));
    }
    SECTION("reciprocal identity across a full set") {
        Rng rng(1);
        std::vector<std::vector<double>> losses(6, std::vector<double>(50));
        for (auto& l : losses)
            for (auto& v : l) v = rng.u01() + 0.1;
        const auto m = relative_mse_matrix(losses);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                CHECK(m[i][j] * m[j][i] == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("zero benchmark is reported missing") {
        const std::vector<double> zero(40, 0.0);
        const std::vector<double> other(40, 1.0);
        const auto m = relative_mse_matrix({zero, other});
        CHECK(std::isnan(m[0][1]));
        CHECK(m[1][0] == 0.0);
    }
}

TEST_CASE("diebold-mariano test") {
    SECTION("identical losses are degenerate at p = 0.5") {
        const std::vector<double> l(60, 1.3);
        const auto res = dm_test(l, l, 1);
        CHECK(res.statistic == 0.0);
        CHECK(res.p_value == 0.5);
        CHECK(res.degenerate);
    }
    SECTION("antisymmetry is exact") {
        Rng rng(2);
        std::vector<double> a(100), b(100);
        for (std::size_t i = 0; i < 100; ++i) {
            a[i] = rng.u01();
            b[i] = rng.u01();
        }
        for (int h : {1, 5, 22}) {
            const auto ij = dm_test(a, b, h);
            const auto ji = dm_test(b, a, h);
            CHECK(ij.statistic == -ji.statistic);
            CHECK(ij.hac_lags == h - 1);
        }
    }
    SECTION("a constant loss shift is detected with probability approaching one") {
        Rng rng(3);
        int rejections = 0;
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> li(500), lj(500);
            for (std::size_t t = 0; t < 500; ++t) {
                lj[t] = 1.0 + 0.5 * rng.gauss();
                li[t] = lj[t] + 1.0 + 0.5 * rng.gauss();   // unit shift
            }
            if (dm_test(li, lj, 1).p_value < 0.05) ++rejections;
        }
        CHECK(rejections >= 49);
    }
    SECTION("short series are rejected") {
        const std::vector<double> l(10, 1.0);
        CHECK_THROWS_AS(dm_test(l, l, 1), SizingError);
    }
}

TEST_CASE("model confidence set") {
    McsConfig cfg;
    cfg.bootstrap_reps = 500;
    SECTION("identical models co-survive") {
        const std::vector<double> l = {1.0, 2.0, 1.5, 0.5, 1.1, 0.9, 1.3, 0.8};
        const auto res = mcs({l, l, l}, cfg, Rng(4));
        CHECK(res.degenerate);
        CHECK(res.survivors.size() == 3);
        CHECK(res.elimination_order.empty());
    }
    SECTION("a strongly inferior model is eliminated first") {
        Rng rng(5);
        std::vector<std::vector<double>> losses(3, std::vector<double>(250));
        for (std::size_t t = 0; t < 250; ++t) {
            losses[0][t] = 1.0 + 0.3 * rng.gauss();
            losses[1][t] = 1.0 + 0.3 * rng.gauss();
            losses[2][t] = 4.0 + 0.3 * rng.gauss();   // ~10 sigma-of-mean above
        }
        const auto res = mcs(losses, cfg, Rng(6));
        REQUIRE_FALSE(res.elimination_order.empty());
        CHECK(res.elimination_order.front() == 2);
        CHECK(res.p_values[2] < 0.01);
        CHECK(res.p_values[0] >= 0.10);
    }
    SECTION("elimination order ignores a common loss shift") {
        Rng rng(7);
        std::vector<std::vector<double>> losses(4, std::vector<double>(200));
        for (auto& l : losses)
            for (auto& v : l) v = 1.0 + 0.4 * rng.u01();
        losses[1][17] += 2.0;   // make one model mildly worse
        auto shifted = losses;
        for (auto& l : shifted)
            for (auto& v : l) v += 123.0;
        const auto a = mcs(losses, cfg, Rng(8));
        const auto b = mcs(shifted, cfg, Rng(8));
        CHECK(a.elimination_order == b.elimination_order);
        CHECK(a.survivors == b.survivors);
    }
    SECTION("survivors weakly grow with the confidence level on shared draws") {
        Rng rng(9);
        std::vector<std::vector<double>> losses(5, std::vector<double>(300));
        for (std::size_t m = 0; m < 5; ++m)
            for (std::size_t t = 0; t < 300; ++t)
                losses[m][t] = 1.0 + 0.15 * static_cast<double>(m) + rng.gauss() * 0.8;
        McsConfig lo = cfg, hi = cfg;
        lo.level = 0.90;
        hi.level = 0.95;
        const auto at90 = mcs(losses, lo, Rng(10));
        const auto at95 = mcs(losses, hi, Rng(10));
        CHECK(at95.survivors.size() >= at90.survivors.size());
        for (std::size_t s : at90.survivors)
            CHECK(std::find(at95.survivors.begin(), at95.survivors.end(), s) !=
                  at95.survivors.end());
    }
}

TEST_CASE("decile-conditional relative mse") {
    SECTION("uniform targets split into equal buckets") {
        std::vector<double> targets;
        for (int i = 1; i <= 100; ++i) targets.push_back(static_cast<double>(i));
        const auto counts = decile_counts(targets);
        for (std::size_t c : counts) CHECK(c == 10);
    }
    SECTION("identical models give unit ratios everywhere") {
        Rng rng(11);
        std::vector<double> targets(120), losses(120);
        for (std::size_t i = 0; i < 120; ++i) {
            targets[i] = rng.u01();
            losses[i] = rng.u01() + 0.01;
        }
        const auto ratios = decile_relative_mse({losses, losses}, targets, 0);
        for (const auto& row : ratios)
            for (double v : row) CHECK(v == Catch::Approx(1.0));
    }
    SECTION("a planted top-decile defect shows up only there") {
        Rng rng(12);
        const std::size_t n = 1000;
        std::vector<double> targets(n);
        std::vector<std::vector<double>> losses(2, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            targets[i] = rng.u01();
            losses[0][i] = 1.0;
            losses[1][i] = targets[i] > 0.9 ? 3.0 : 1.0;   // worse only in the top decile
        }
        const auto ratios = decile_relative_mse(losses, targets, 0);
        for (std::size_t d = 0; d < 9; ++d) CHECK(ratios[d][1] == Catch::Approx(1.0));
        CHECK(ratios[9][1] > 2.0);
    }
}

TEST_CASE("fitted-series acf") {
    SECTION("lag zero is one by definition") {
        Rng rng(13);
        std::vector<double> x(500);
        for (auto& v : x) v = rng.gauss();
        const auto res = fitted_acf(x, 20);
        CHECK(res.acf[0] == 1.0);
        CHECK(res.acf.size() == 21);
        CHECK(res.white_noise_band == Catch::Approx(1.96 / std::sqrt(500.0)));
    }
    SECTION("white noise stays inside the bands almost everywhere") {
        Rng rng(14);
        std::vector<double> x(2000);
        for (auto& v : x) v = rng.gauss();
        const auto res = fitted_acf(x, 40);
        int inside = 0;
        for (std::size_t k = 1; k < res.acf.size(); ++k)
            if (std::abs(res.acf[k]) < res.white_noise_band) ++inside;
        CHECK(inside >= 36);   // ~95% of 40 lags
    }
    SECTION("an AR(1) fit shows its persistence") {
        Rng rng(15);
        std::vector<double> x(20000);
        x[0] = 0.0;
        for (std::size_t t = 1; t < x.size(); ++t) x[t] = 0.9 * x[t - 1] + rng.gauss();
        const auto res = fitted_acf(x, 5);
        CHECK(res.acf[1] == Catch::Approx(0.9).margin(0.05));
    }
    SECTION("constant series are flagged undefined") {
        const std::vector<double> c(100, 2.0);
        CHECK_THROWS_AS(fitted_acf(c, 10), NumericError);
    }
}
