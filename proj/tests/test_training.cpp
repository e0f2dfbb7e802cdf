#include <catch_amalgamated.hpp>

#include <limits>

#include "alinear/training.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace alinear;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("cosine schedule endpoints", "[training][lr]") {
    CHECK(cosine_lr(0, 10, 1e-4) == 1e-4);
    CHECK_THAT(cosine_lr(5, 10, 1e-4), WithinRel(5e-5, 1e-12));
    CHECK_THAT(cosine_lr(9, 10, 1e-4), WithinRel(2.4471741852e-6, 1e-9));
    CHECK_THAT(cosine_lr(10, 10, 1e-4), WithinAbs(0.0, 1e-20));
    for (std::size_t e = 1; e < 10; ++e) CHECK(cosine_lr(e, 10, 1.0) < cosine_lr(e - 1, 10, 1.0));
}

TEST_CASE("first Adam step moves each weight by lr against its gradient sign", "[training][adam]") {
    auto p = init_params(4, 2, 0.5, 0);
    auto g = GradientSet::zeros_like(p);
    g.tensors.k1 = 3.0;
    g.tensors.w_trend(1, 2) = -0.25;
    const auto before = p;
    auto state = AdamState::for_params(p);
    adam_step(p, g, state, 0.01);
    CHECK_THAT(p.tensors.k1 - before.tensors.k1, WithinAbs(-0.01, 1e-9));
    CHECK_THAT(p.tensors.w_trend(1, 2) - before.tensors.w_trend(1, 2), WithinAbs(0.01, 1e-9));
    CHECK(p.tensors.w_trend(0, 0) == before.tensors.w_trend(0, 0));
    CHECK(state.step == 1);
}

TEST_CASE("Adam refuses mismatched state and reports non-finite parameters", "[training][adam]") {
    auto p = init_params(4, 2, 0.5, 0);
    auto g = GradientSet::zeros_like(p);
    AdamState empty;
    CHECK_THROWS_AS(adam_step(p, g, empty, 0.01), ConfigError);
    auto state = AdamState::for_params(p);
    g.tensors.v1 = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(p, g, state, 0.01), DivergenceError);
}

TEST_CASE("fisher_yates is a seeded permutation", "[training][shuffle]") {
    std::vector<int> a(50), b;
    std::iota(a.begin(), a.end(), 0);
    b = a;
    Rng r1(9), r2(9);
    fisher_yates(std::span(a), r1);
    fisher_yates(std::span(b), r2);
    CHECK(a == b);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    Rng r3(10);
    auto c = sorted;
    fisher_yates(std::span(c), r3);
    CHECK(c != a);
}

TEST_CASE("a noiseless line is learned to low validation error", "[training][slow]") {
    fixture::Windows w;
    fixture::make_windows({.length = 2000, .slope = 0.01, .amplitude = 0.0, .noise_std = 0.0}, 96, 48, 1, w);
    TrainConfig cfg;
    cfg.lr0 = 1e-3;
    cfg.max_epochs = 10;
    cfg.patience = 3;
    const auto r = train(init_params(96, 48, 0.5, 0), w.train, w.val, cfg);
    CHECK(r.log.best_val_loss() < 1e-3);
    CHECK(evaluate(r.best, w.val).mse() == r.log.best_val_loss());
}

TEST_CASE("training loss does not rise over the first steps at a small learning rate", "[training]") {
    fixture::Windows w;
    fixture::make_windows({.length = 1500}, 48, 24, 4, w);
    auto p = init_params(48, 24, 0.5, 0);
    auto state = AdamState::for_params(p);
    auto g = GradientSet::zeros_like(p);
    std::vector<GradientSet> scratch;
    std::vector<std::size_t> all(w.train.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    double prev = batch_gradient(p, w.train, all, scratch, g, 1);
    for (int step = 0; step < 3; ++step) {
        adam_step(p, g, state, 1e-5);
        const double loss = batch_gradient(p, w.train, all, scratch, g, 1);
        CHECK(loss <= prev);
        prev = loss;
    }
}

TEST_CASE("batch gradient equals the mean of per-window gradients", "[training]") {
    fixture::Windows w;
    fixture::make_windows({.length = 400}, 24, 12, 5, w);
    std::mt19937_64 rng(2);
    auto p = init_params(24, 12, 0.5, 0, {.init_noise = 0.05});
    std::vector<std::size_t> batch{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
    auto g = GradientSet::zeros_like(p);
    std::vector<GradientSet> scratch;
    batch_gradient(p, w.train, batch, scratch, g, 3);
    auto ref = GradientSet::zeros_like(p);
    for (auto i : batch) ref.add(backward(forward(w.train[i].input, p), w.train[i].input, w.train[i].target, p).grads);
    const auto a = oracle::flatten(g), b = oracle::flatten(ref);
    for (std::size_t s = 0; s < a.size(); ++s)
        for (std::size_t i = 0; i < a[s].size(); ++i)
            CHECK_THAT(a[s][i], WithinAbs(b[s][i] / static_cast<double>(batch.size()), 1e-12));
}

TEST_CASE("patience 0 stops after the first epoch that does not improve", "[training]") {
    fixture::Windows w;
    fixture::make_windows({.length = 1200}, 48, 24, 4, w);
    TrainConfig cfg;
    cfg.lr0 = 0.5;  // deliberately unstable so validation gets worse quickly
    cfg.max_epochs = 10;
    cfg.patience = 0;
    TrainResult r;
    try {
        r = train(init_params(48, 24, 0.5, 0), w.train, w.val, cfg);
    } catch (const DivergenceError&) {
        SUCCEED("diverged before the early-stop check");
        return;
    }
    if (r.log.stop_reason == "early_stop") {
        CHECK(r.log.epochs.size() == r.log.best_epoch + 2);
    } else {
        for (std::size_t e = 1; e < r.log.epochs.size(); ++e) CHECK(r.log.epochs[e].val_loss < r.log.epochs[e - 1].val_loss);
    }
}

TEST_CASE("training returns the best validation epoch, not the last", "[training]") {
    fixture::Windows w;
    fixture::make_windows({.length = 1500}, 48, 24, 2, w);
    TrainConfig cfg;
    cfg.lr0 = 3e-3;
    cfg.max_epochs = 6;
    cfg.patience = 10;
    const auto r = train(init_params(48, 24, 0.5, 0), w.train, w.val, cfg);
    REQUIRE(r.log.epochs.size() == 6);
    CHECK(r.log.stop_reason == "max_epochs");
    CHECK(evaluate(r.best, w.val).mse() == r.log.epochs[r.log.best_epoch].val_loss);
    CHECK(r.log.best_val_loss() == r.log.epochs[r.log.best_epoch].val_loss);
}

TEST_CASE("training is deterministic for a seed and independent of thread count", "[training]") {
    fixture::Windows w;
    fixture::make_windows({.length = 1500}, 48, 24, 2, w);
    TrainConfig cfg;
    cfg.lr0 = 1e-3;
    cfg.max_epochs = 3;
    cfg.seed = 4;
    const auto init = init_params(48, 24, 0.5, 0);
    const auto a = train(init, w.train, w.val, cfg);
    const auto b = train(init, w.train, w.val, cfg);
    cfg.threads = 4;
    const auto c = train(init, w.train, w.val, cfg);
    CHECK(a.best == b.best);
    CHECK(a.best == c.best);
    cfg.threads = 1;
    cfg.seed = 5;
    CHECK_FALSE(train(init, w.train, w.val, cfg).best == a.best);
}

TEST_CASE("full-batch training takes one optimizer step per epoch", "[training]") {
    fixture::Windows w;
    fixture::make_windows({.length = 800}, 24, 12, 4, w);
    TrainConfig cfg;
    cfg.batch_size = w.train.size();
    cfg.max_epochs = 4;
    cfg.patience = 10;
    cfg.lr0 = 1e-3;
    const auto r = train(init_params(24, 12, 0.5, 0), w.train, w.val, cfg);
    CHECK(r.log.optimizer_steps == r.log.epochs.size());
}

TEST_CASE("exploding inputs raise a divergence error", "[training]") {
    fixture::Windows w;
    fixture::make_windows({.length = 800}, 24, 12, 4, w);
    auto& values = w.data.series.channels[0];
    std::fill(values.begin(), values.begin() + 300, 1e300);
    TrainConfig cfg;
    cfg.max_epochs = 2;
    CHECK_THROWS_AS(train(init_params(24, 12, 0.5, 0), w.train, w.val, cfg), DivergenceError);
}

TEST_CASE("train rejects empty inputs and bad settings", "[training]") {
    fixture::Windows w;
    fixture::make_windows({.length = 800}, 24, 12, 4, w);
    const auto p = init_params(24, 12, 0.5, 0);
    CHECK_THROWS_AS(train(p, {}, w.val, {}), DataError);
    CHECK_THROWS_AS(train(p, w.train, {}, {}), DataError);
    TrainConfig bad;
    bad.lr0 = 0.0;
    CHECK_THROWS_AS(train(p, w.train, w.val, bad), ConfigError);
    bad = {};
    bad.batch_size = 0;
    CHECK_THROWS_AS(train(p, w.train, w.val, bad), ConfigError);
}
