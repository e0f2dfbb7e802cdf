#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "alinear/data.hpp"
#include "support/oracles.hpp"

using namespace alinear;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    const auto dir = std::filesystem::temp_directory_path() / "alinear_test_data";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << content;
    return path;
}

RawSeries series_of(std::vector<std::vector<double>> channels) {
    RawSeries s;
    s.name = "fixture";
    const std::size_t n = channels.front().size();
    for (std::size_t i = 0; i < n; ++i) s.timestamps.push_back(Timestamp{std::chrono::hours{i}});
    for (std::size_t c = 0; c < channels.size(); ++c) s.channel_names.push_back("c" + std::to_string(c));
    s.channels = std::move(channels);
    return s;
}

} // namespace

TEST_CASE("load_csv reads a toy file", "[data][csv]") {
    const auto path = write_temp("toy.csv", "date,OT\n2016-07-01,1\n2016-07-02,2\n2016-07-03,3\n2016-07-04,4\n");
    const auto s = load_csv(path);
    REQUIRE(s.length() == 4);
    REQUIRE(s.channel_count() == 1);
    CHECK(s.channel_names[0] == "OT");
    CHECK(s.channels[0] == std::vector<double>{1, 2, 3, 4});
    CHECK(s.name == "toy");
}

TEST_CASE("load_csv keeps file column order and honours the channel subset", "[data][csv]") {
    const auto path = write_temp("multi.csv",
                                 "date,HUFL,HULL,OT\n"
                                 "2016-07-01 00:00:00,5.8,2.0,30.5\n"
                                 "2016-07-01 01:00:00,5.6,2.1,27.7\n");
    const auto all = load_csv(path);
    CHECK(all.channel_names == std::vector<std::string>{"HUFL", "HULL", "OT"});
    CHECK(all.timestamps[1] - all.timestamps[0] == std::chrono::hours{1});

    const auto sub = load_csv(path, CsvSchema{{"OT", "HUFL"}});
    CHECK(sub.channel_names == std::vector<std::string>{"HUFL", "OT"});
    CHECK(sub.channels[1] == std::vector<double>{30.5, 27.7});

    CHECK_THROWS_AS(load_csv(path, CsvSchema{{"nope"}}), DataError);
}

TEST_CASE("load_csv rejects bad input with the offending line", "[data][csv]") {
    SECTION("NaN value") {
        const auto path = write_temp("nan.csv", "date,OT\n2016-07-01,1\n2016-07-02,NaN\n2016-07-03,3\n");
        CHECK_THROWS_WITH(load_csv(path), ContainsSubstring(":3:") && ContainsSubstring("non-finite"));
    }
    SECTION("missing file") { CHECK_THROWS_AS(load_csv("/nonexistent/alinear.csv"), DataError); }
    SECTION("wrong field count") {
        const auto path = write_temp("fields.csv", "date,a,b\n2016-07-01,1,2\n2016-07-02,3\n");
        CHECK_THROWS_WITH(load_csv(path), ContainsSubstring(":3:"));
    }
    SECTION("garbage number") {
        const auto path = write_temp("garbage.csv", "date,a\n2016-07-01,1x\n");
        CHECK_THROWS_WITH(load_csv(path), ContainsSubstring(":2:") && ContainsSubstring("not a number"));
    }
    SECTION("non-monotone timestamps") {
        const auto path = write_temp("order.csv", "date,a\n2016-07-02,1\n2016-07-01,2\n");
        CHECK_THROWS_WITH(load_csv(path), ContainsSubstring("strictly increasing"));
    }
    SECTION("duplicate timestamps") {
        const auto path = write_temp("dup.csv", "date,a\n2016-07-01,1\n2016-07-01,2\n");
        CHECK_THROWS_AS(load_csv(path), DataError);
    }
    SECTION("empty series") {
        const auto path = write_temp("empty.csv", "date,a\n");
        CHECK_THROWS_WITH(load_csv(path), ContainsSubstring("no data rows"));
    }
    SECTION("bad timestamp") {
        const auto path = write_temp("ts.csv", "date,a\nyesterday,1\n");
        CHECK_THROWS_WITH(load_csv(path), ContainsSubstring("timestamp"));
    }
}

TEST_CASE("parse_timestamp accepts the benchmark layouts", "[data][csv]") {
    using namespace std::chrono;
    Timestamp a, b, c, d;
    REQUIRE(parse_timestamp("2016-07-01 02:15:00", a));
    REQUIRE(parse_timestamp("2016-07-01T02:15:00", b));
    REQUIRE(parse_timestamp("2016/7/1 2:15", c));
    REQUIRE(parse_timestamp("2016-07-01", d));
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a - d == hours{2} + minutes{15});
    Timestamp x;
    CHECK_FALSE(parse_timestamp("2016-13-01", x));
    CHECK_FALSE(parse_timestamp("2016-02-30", x));
    CHECK_FALSE(parse_timestamp("20160701", x));
}

TEST_CASE("ETTh1 loads with its published shape", "[data][csv][etth1]") {
    const char* env = std::getenv("ALINEAR_ETTH1");
    const std::filesystem::path path = env ? env : "data/ETTh1.csv";
    if (!std::filesystem::exists(path)) SKIP("ETTh1.csv not available (set ALINEAR_ETTH1)");
    const auto s = load_csv(path);
    CHECK(s.length() == 17420);
    CHECK(s.channel_count() == 7);
}

TEST_CASE("chronological_split uses floor boundaries", "[data][split]") {
    const auto r = chronological_split(100, {0.7, 0.1, 0.2}, 3, 2);
    CHECK(r.train == IndexRange{0, 70});
    CHECK(r.val == IndexRange{70, 80});
    CHECK(r.test == IndexRange{80, 100});

    const auto e = chronological_split(17420, {0.7, 0.1, 0.2}, 96, 96);
    CHECK(e.train == IndexRange{0, 12194});
    CHECK(e.val == IndexRange{12194, 13936});
    CHECK(e.test == IndexRange{13936, 17420});

    CHECK_THROWS_WITH(chronological_split(10, {0.7, 0.1, 0.2}, 96, 48), ContainsSubstring("segment too short"));
    CHECK_THROWS_AS(chronological_split(100, {0.7, 0.2, 0.2}, 1, 1), ConfigError);
    CHECK_THROWS_AS(chronological_split(100, {1.0, 0.0, 0.0}, 1, 1), ConfigError);
}

TEST_CASE("split ranges are disjoint, ordered and cover [0, N)", "[data][split][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> frac(0.05, 0.6);
    std::uniform_int_distribution<std::size_t> len(200, 50000);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = frac(rng), b = frac(rng) * (1.0 - a);
        const SplitSpec spec{a, b, 1.0 - a - b};
        if (spec.test_fraction <= 0.0) continue;
        const std::size_t n = len(rng);
        SplitRanges r;
        try {
            r = chronological_split(n, spec, 1, 1);
        } catch (const DataError&) {
            continue;  // a segment came out empty for this tiny fraction
        }
        CHECK(r.train.begin == 0);
        CHECK(r.train.end == r.val.begin);
        CHECK(r.val.end == r.test.begin);
        CHECK(r.test.end == n);
        CHECK(r.train.size() + r.val.size() + r.test.size() == n);
    }
}

TEST_CASE("standardize uses population statistics of the training range", "[data][standardize]") {
    const auto s = series_of({{1, 2, 3}});
    const auto out = standardize(s, {0, 3});
    CHECK_THAT(out.stats.mean[0], WithinAbs(2.0, 1e-15));
    CHECK_THAT(out.stats.std[0], WithinRel(std::sqrt(2.0 / 3.0), 1e-15));
    CHECK_THAT(out.series.channels[0][0], WithinAbs(-1.224744871391589, 1e-12));
    CHECK_THAT(out.series.channels[0][1], WithinAbs(0.0, 1e-15));
    CHECK_THAT(out.series.channels[0][2], WithinAbs(1.224744871391589, 1e-12));
    CHECK_FALSE(out.stats.zero_variance[0]);
}

TEST_CASE("standardize floors a constant channel and flags it", "[data][standardize]") {
    const auto out = standardize(series_of({{5, 5, 5}}), {0, 3});
    CHECK(out.series.channels[0] == std::vector<double>{0, 0, 0});
    CHECK(out.stats.zero_variance[0]);
    CHECK(out.stats.std[0] == StandardizationStats::std_floor);
}

TEST_CASE("standardize is idempotent on standardized data", "[data][standardize]") {
    std::mt19937_64 rng(3);
    const auto once = standardize(series_of({oracle::random_vector(rng, 500, 4.0)}), {0, 500});
    const auto twice = standardize(once.series, {0, 500});
    CHECK_THAT(twice.stats.mean[0], WithinAbs(0.0, 1e-12));
    CHECK_THAT(twice.stats.std[0], WithinAbs(1.0, 1e-12));
}

TEST_CASE("standardize round-trips through the inverse map", "[data][standardize][property]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto values = oracle::random_vector(rng, 300, 50.0);
        for (auto& v : values) v += 1000.0;
        const auto raw = series_of({values});
        const auto out = standardize(raw, {0, 210});
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double back = out.stats.inverse(out.series.channels[0][i], 0);
            CHECK(std::abs(back - values[i]) <= 1e-9 * std::abs(values[i]));
        }
    }
}

TEST_CASE("standardization statistics ignore values outside the training range", "[data][standardize][property]") {
    std::mt19937_64 rng(5);
    auto values = oracle::random_vector(rng, 100);
    const auto base = standardize(series_of({values}), {0, 70});
    for (std::size_t i = 70; i < 100; i += 7) {
        auto perturbed = values;
        perturbed[i] += 1e6;
        const auto other = standardize(series_of({perturbed}), {0, 70});
        CHECK(other.stats.mean == base.stats.mean);
        CHECK(other.stats.std == base.stats.std);
    }
}

TEST_CASE("make_windows counts and offsets", "[data][windows]") {
    std::vector<double> v(10);
    std::iota(v.begin(), v.end(), 0.0);
    const auto s = series_of({v});
    const auto w = make_windows(s, {0, 10}, 3, 2, 1);
    REQUIRE(w.size() == 6);
    CHECK(std::vector<double>(w[0].input.begin(), w[0].input.end()) == std::vector<double>{0, 1, 2});
    CHECK(std::vector<double>(w[0].target.begin(), w[0].target.end()) == std::vector<double>{3, 4});
    CHECK(w[5].offset == 5);

    const auto s192 = series_of({std::vector<double>(192, 1.0)});
    CHECK(make_windows(s192, {0, 192}, 96, 96, 1).size() == 1);

    const auto s200 = series_of({std::vector<double>(200, 1.0)});
    CHECK(make_windows(s200, {0, 200}, 96, 48, 8).size() == 8);

    CHECK_THROWS_AS(make_windows(s, {0, 4}, 3, 2, 1), DataError);
    CHECK_THROWS_AS(make_windows(s, {0, 10}, 3, 2, 0), ConfigError);
}

TEST_CASE("windows are adjacent contiguous slices of their channel", "[data][windows][property]") {
    std::mt19937_64 rng(13);
    const auto s = series_of({oracle::random_vector(rng, 400), oracle::random_vector(rng, 400)});
    for (std::size_t stride : {1u, 3u, 8u}) {
        const IndexRange range{37, 351};
        const auto windows = make_windows(s, range, 24, 12, stride);
        CHECK(windows.size() == 2 * ((range.size() - 36) / stride + 1));
        for (const auto& w : windows) {
            const auto& src = s.channels[w.channel];
            const std::size_t start = range.begin + w.offset;
            CHECK(w.offset % stride == 0);
            CHECK(w.offset + 36 <= range.size());
            for (std::size_t i = 0; i < 24; ++i) CHECK(w.input[i] == src[start + i]);
            for (std::size_t i = 0; i < 12; ++i) CHECK(w.target[i] == src[start + 24 + i]);
        }
    }
}
