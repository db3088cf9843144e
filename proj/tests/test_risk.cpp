#include <catch2/catch_amalgamated.hpp>

#include "volaforge/risk.hpp"

using namespace volaforge;

TEST_CASE("filtered historical simulation VaR") {
    Rng rng(1);
    std::vector<double> residuals(100000);
    for (auto& r : residuals) r = rng.gauss();
    SECTION("gaussian residuals reproduce the normal quantile") {
        const double var = fhs_var(1e-4, residuals, 0.05);
        CHECK(var == Catch::Approx(0.01 * -1.645).epsilon(0.02));
    }
    SECTION("zero variance forecast gives zero VaR") {
        CHECK(fhs_var(0.0, residuals, 0.05) == 0.0);
    }
    SECTION("VaR is homogeneous of degree one-half in the variance") {
        const double base = fhs_var(2e-4, residuals, 0.05);
        const double twice = fhs_var(4e-4, residuals, 0.05);
        CHECK(twice == Catch::Approx(std::sqrt(2.0) * base).margin(1e-15));
    }
    SECTION("window size guards") {
        const std::vector<double> tiny(50, 0.0);
        CHECK_THROWS_AS(fhs_var(1e-4, tiny, 0.05), SizingError);
        CHECK_THROWS_AS(fhs_var(1e-4, std::vector<double>{}, 0.05), DataError);
    }
}

TEST_CASE("quantile loss") {
    SECTION("returns exactly at the VaR give zero loss") {
        const std::vector<double> r(20, -0.02);
        const std::vector<double> v(20, -0.02);
        CHECK(quantile_loss(r, v, 0.05) == 0.0);
    }
    SECTION("single-day textbook value") {
        const std::vector<double> r = {-0.03};
        const std::vector<double> v = {-0.02};
        CHECK(quantile_loss(r, v, 0.05) == Catch::Approx(0.0095).margin(1e-15));
    }
    SECTION("misalignment is rejected") {
        CHECK_THROWS_AS(quantile_loss(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}, 0.05),
                        DataError);
    }
    SECTION("the true quantile minimizes the expected loss") {
        Rng rng(2);
        std::vector<double> returns(50000);
        for (auto& r : returns) r = 0.01 * rng.gauss();
        const double true_q = 0.01 * -1.6448536269514722;
        auto loss_at = [&](double shift) {
            const std::vector<double> v(returns.size(), true_q + shift);
            return quantile_loss(returns, v, 0.05);
        };
        const double at_truth = loss_at(0.0);
        for (double shift : {-0.004, -0.002, 0.002, 0.004}) CHECK(at_truth < loss_at(shift));
    }
}

TEST_CASE("coverage tests") {
    SECTION("exact coverage gives a zero likelihood ratio") {
        std::vector<int> hits(1000, 0);
        for (std::size_t i = 0; i < 50; ++i) hits[i * 20] = 1;   // exactly 5%
        const auto rep = coverage_tests(hits, 0.05);
        CHECK(rep.kupiec_lr == 0.0);
        CHECK(rep.kupiec_p == 1.0);
        CHECK(rep.exceedance_rate == Catch::Approx(0.05));
    }
    SECTION("alternating hits explode the independence statistic") {
        std::vector<int> hits(1000);
        for (std::size_t i = 0; i < hits.size(); ++i) hits[i] = i % 2;
        const auto rep = coverage_tests(hits, 0.5);
        CHECK(rep.independence_lr > 100.0);
        CHECK(rep.independence_p < 1e-10);
        // hand computation: n01 = 500, n10 = 499, n00 = n11 = 0, so the
        // alternative likelihood is 1 and the null uses pi = 500/999
        const double expected =
            -2.0 * (499.0 * std::log(499.0 / 999.0) + 500.0 * std::log(500.0 / 999.0));
        CHECK(rep.independence_lr == Catch::Approx(expected).epsilon(1e-9));
    }
    SECTION("additivity of the conditional statistic") {
        Rng rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<int> hits(300);
            for (auto& h : hits) h = rng.u01() < 0.07 ? 1 : 0;
            const auto rep = coverage_tests(hits, 0.05);
            CHECK(std::abs(rep.conditional_lr - (rep.kupiec_lr + rep.independence_lr)) < 1e-10);
            CHECK(rep.kupiec_lr >= 0.0);
            CHECK(rep.independence_lr >= 0.0);
        }
    }
    SECTION("zero hits flag low power without crashing") {
        const std::vector<int> hits(500, 0);
        const auto rep = coverage_tests(hits, 0.05);
        CHECK(rep.low_power);
        CHECK(rep.hits == 0);
        CHECK(std::isfinite(rep.kupiec_lr));
    }
    SECTION("kupiec size is close to nominal") {
        Rng rng(4);
        int rejections = 0;
        const int sims = 2000;
        for (int s = 0; s < sims; ++s) {
            std::vector<int> hits(1000);
            for (auto& h : hits) h = rng.u01() < 0.05 ? 1 : 0;
            if (coverage_tests(hits, 0.05).kupiec_p < 0.05) ++rejections;
        }
        const double rate = static_cast<double>(rejections) / sims;
        CHECK(rate == Catch::Approx(0.05).margin(0.02));
    }
    SECTION("short hit sequences are rejected") {
        CHECK_THROWS_AS(coverage_tests(std::vector<int>(50, 0), 0.05), SizingError);
    }
}

TEST_CASE("lowering VaR weakly lowers the hit count") {
    Rng rng(5);
    std::vector<double> returns(2000);
    for (auto& r : returns) r = 0.01 * rng.gauss();
    std::size_t prev_hits = returns.size() + 1;
    for (double level : {-0.005, -0.01, -0.02, -0.03, -0.05}) {
        const std::vector<double> var(returns.size(), level);
        const auto hits = var_hits(returns, var);
        std::size_t count = 0;
        for (int h : hits) count += static_cast<std::size_t>(h);
        CHECK(count <= prev_hits);
        prev_hits = count;
    }
}
