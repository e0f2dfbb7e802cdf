#include <catch_amalgamated.hpp>

#include <random>

#include "alinear/metrics.hpp"
#include "support/oracles.hpp"

using namespace alinear;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("mse and mae on hand values", "[metrics]") {
    const std::vector<double> p{1, 2, 3}, t{1, 4, 0};
    CHECK_THAT(mse(p, t), WithinAbs(13.0 / 3.0, 1e-15));
    CHECK_THAT(mae(p, t), WithinAbs(5.0 / 3.0, 1e-15));
    CHECK(mse(p, p) == 0.0);

    const std::vector<float> pf{1, 2}, tf{2, 2};
    CHECK(mse<float>(pf, tf) == 0.5f);

    CHECK_THROWS_AS(mse(p, std::vector<double>{1, 2}), ConfigError);
    CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), ConfigError);
}

TEST_CASE("accumulated metrics equal the pooled mean", "[metrics][property]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> all_p, all_t;
        ErrorAccumulator a, b;
        for (int w = 0; w < 10; ++w) {
            const auto p = oracle::random_vector(rng, 7);
            const auto t = oracle::random_vector(rng, 7);
            (w < 4 ? a : b).add(p, t);
            all_p.insert(all_p.end(), p.begin(), p.end());
            all_t.insert(all_t.end(), t.begin(), t.end());
        }
        a.merge(b);
        CHECK_THAT(a.mse(), WithinRel(mse(all_p, all_t), 1e-12));
        CHECK_THAT(a.mae(), WithinRel(mae(all_p, all_t), 1e-12));
        CHECK(a.mae() * a.mae() <= a.mse() * (1 + 1e-12));
    }
    CHECK(ErrorAccumulator{}.mse() == 0.0);
}

TEST_CASE("pnp uses the natural log of the parameter count", "[metrics]") {
    CHECK_THAT(pnp(1.0, 3), WithinRel(91.0239226626627, 1e-12));
    CHECK_THAT(pnp(0.5, 10000), WithinRel(21.7147240951626, 1e-12));
    CHECK(pnp(0.4, 18628) > pnp(0.5, 18628));
    CHECK(pnp(0.4, 18628) > pnp(0.4, 186244));
    CHECK_THROWS_AS(pnp(0.0, 100), ConfigError);
    CHECK_THROWS_AS(pnp(1.0, 1), ConfigError);
    CHECK_THROWS_AS(param_count(0, 96), ConfigError);
}
