#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "volaforge/csv.hpp"
#include "volaforge/timeseries.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace volaforge;

TEST_CASE("split arithmetic reproduces the 70/10/20 benchmark sizes") {
    const auto s = make_split(4257, SplitScheme::Percent70_10_20);
    CHECK(s.train.size() == 2964);
    CHECK(s.validation.size() == 424);
    CHECK(s.test.size() == 847);
    CHECK(s.burn_in == 22);
}

TEST_CASE("fixed-train splits") {
    SECTION("no room for test rows") {
        CHECK_THROWS_AS(make_split(1222, SplitScheme::FixedTrain1000), SizingError);
    }
    SECTION("2000 days with a 1000-day training window") {
        const auto s = make_split(2000, SplitScheme::FixedTrain1000);
        CHECK(s.train.size() == 1000);
        CHECK(s.validation.size() == 200);
        CHECK(s.test.size() == 778);   // 2000 - 22 - 1000 - 200
    }
    SECTION("too small overall") {
        CHECK_THROWS_AS(make_split(29, SplitScheme::Percent70_10_20), SizingError);
    }
}

TEST_CASE("split segments are ordered, disjoint and cover the usable sample") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t total = 30 + rng.uniform_index(9000);
        for (auto scheme : {SplitScheme::Percent70_10_20, SplitScheme::FixedTrain1000,
                            SplitScheme::FixedTrain2000}) {
            DataSplit s;
            try {
                s = make_split(total, scheme);
            } catch (const SizingError&) {
                continue;
            }
            CHECK(s.train.begin == 0);
            CHECK(s.train.end == s.validation.begin);
            CHECK(s.validation.end == s.test.begin);
            CHECK(s.test.end == total - s.burn_in);
            CHECK(s.train.size() >= 1);
            CHECK(s.validation.size() >= 1);
            CHECK(s.test.size() >= 1);
        }
    }
}

TEST_CASE("standardize uses training statistics only") {
    auto fm = vftest::make_matrix({{1.0}, {2.0}, {3.0}, {4.0}}, {0, 0, 0, 0}, 3, 1);
    const auto std_fm = standardize(fm);
    // training column {1,2,3}: mean 2, population std sqrt(2/3)
    CHECK(std_fm.rows[0][0] == Catch::Approx(-1.224744871).epsilon(1e-6));
    CHECK(std_fm.rows[1][0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(std_fm.rows[2][0] == Catch::Approx(1.224744871).epsilon(1e-6));
    // validation row transformed with the same statistics
    CHECK(std_fm.rows[3][0] == Catch::Approx(2.449489743).epsilon(1e-6));
    CHECK(std_fm.standardization[0].mean == Catch::Approx(2.0));
    CHECK(std_fm.standardization[0].std == Catch::Approx(0.8164965809).epsilon(1e-9));
}

TEST_CASE("constant columns pass through unscaled") {
    auto fm = vftest::make_matrix({{5.0, 1.0}, {5.0, 2.0}, {5.0, 3.0}}, {0, 0, 0});
    const auto std_fm = standardize(fm);
    CHECK(std_fm.rows[0][0] == 5.0);
    CHECK(std_fm.rows[2][0] == 5.0);
    CHECK(std_fm.standardization[0].std == 1.0);
    CHECK_FALSE(std_fm.standardization[0].scaled);
    CHECK(std_fm.standardization[1].scaled);
}

TEST_CASE("standardization invariants on training rows") {
    Rng rng(11);
    auto fm = vftest::random_problem(rng, 200, 5);
    fm.split.train = {0, 150};
    fm.split.validation = {150, 180};
    fm.split.test = {180, 200};
    const auto std_fm = standardize(fm);
    for (std::size_t j = 0; j < std_fm.n_cols(); ++j) {
        double mean = 0.0, ss = 0.0;
        for (std::size_t r = 0; r < 150; ++r) mean += std_fm.rows[r][j];
        mean /= 150.0;
        for (std::size_t r = 0; r < 150; ++r)
            ss += (std_fm.rows[r][j] - mean) * (std_fm.rows[r][j] - mean);
        CHECK(std::abs(mean) < 1e-10);
        CHECK(std::abs(std::sqrt(ss / 150.0) - 1.0) < 1e-10);
    }
}

TEST_CASE("standardize round-trips") {
    Rng rng(13);
    auto fm = vftest::random_problem(rng, 120, 4);
    const auto back = inverse_standardize(standardize(fm));
    for (std::size_t r = 0; r < fm.n_rows(); ++r)
        for (std::size_t j = 0; j < fm.n_cols(); ++j)
            CHECK(back.rows[r][j] == Catch::Approx(fm.rows[r][j]).margin(1e-12));
}

TEST_CASE("intraday panel validation") {
    IntradayPanel p;
    p.asset_id = "t";
    p.dates = {"2020-01-01", "2020-01-02"};
    p.returns = {{0.01, -0.01}, {0.02, 0.0}};
    CHECK_NOTHROW(p.validate());

    SECTION("ragged day rejected") {
        p.returns[1] = {0.02};
        CHECK_THROWS_AS(p.validate(), DataError);
    }
    SECTION("duplicate dates rejected") {
        p.dates[1] = "2020-01-01";
        CHECK_THROWS_AS(p.validate(), DataError);
    }
    SECTION("NaN rejected") {
        p.returns[0][0] = std::nan("");
        CHECK_THROWS_AS(p.validate(), DataError);
    }
}

TEST_CASE("csv round trip and validation") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "volaforge_csv_test";
    fs::create_directories(dir);

    SECTION("intraday") {
        const auto path = (dir / "intra.csv").string();
        {
            std::ofstream out(path);
            out << "date,r1,r2,r3\n";
            out << "2020-01-01,0.01,-0.02,0.005\n";
            out << "2020-01-02,-0.001,0.002,0\n";
        }
        const auto panel = csv::read_intraday(path, "abc");
        REQUIRE(panel.days() == 2);
        CHECK(panel.returns_per_day() == 3);
        CHECK(panel.returns[0][1] == -0.02);
        CHECK(panel.asset_id == "abc");
    }
    SECTION("daily with comment header") {
        const auto path = (dir / "daily.csv").string();
        {
            std::ofstream out(path);
            out << "# config_hash=deadbeef seed=1\n";
            out << "date,value\n2020-01-01,1e-4\n2020-01-02,2e-4\n";
        }
        const auto s = csv::read_daily(path);
        REQUIRE(s.values.size() == 2);
        CHECK(s.values[1] == 2e-4);
    }
    SECTION("malformed number rejected") {
        const auto path = (dir / "bad.csv").string();
        {
            std::ofstream out(path);
            out << "date,value\n2020-01-01,12,34\n";
        }
        CHECK_THROWS_AS(csv::read_daily(path), DataError);
    }
    SECTION("missing value rejected") {
        const auto path = (dir / "gap.csv").string();
        {
            std::ofstream out(path);
            out << "date,value\n2020-01-01,\n";
        }
        CHECK_THROWS_AS(csv::read_daily(path), DataError);
    }
    fs::remove_all(dir);
}
