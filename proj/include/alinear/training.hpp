#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "alinear/data.hpp"
#include "alinear/error.hpp"
#include "alinear/metrics.hpp"
#include "alinear/model.hpp"
#include "alinear/optim.hpp"
#include "alinear/parallel.hpp"
#include "alinear/random.hpp"

namespace alinear {

struct TrainConfig {
    double lr0 = 1e-4;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 10;
    std::size_t patience = 3;
    std::uint64_t seed = 0;
    bool shuffle = true;
    /// Global gradient-norm clip; 0 disables clipping.
    double max_grad_norm = 0.0;
    /// Workers for batch gradients and evaluation. Results do not depend on this value.
    unsigned threads = 1;

    void validate() const {
        if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ConfigError("train: lr0 must be positive");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
        if (max_grad_norm < 0.0) throw ConfigError("train: max_grad_norm must be >= 0");
    }
};

struct EpochRecord {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
    double wall_seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    /// "max_epochs" or "early_stop".
    std::string stop_reason;
    std::size_t optimizer_steps = 0;

    double best_val_loss() const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : epochs) best = std::min(best, e.val_loss);
        return best;
    }
};

struct TrainResult {
    ModelParams best;
    TrainLog log;
};

namespace detail {
// Gradients are summed per fixed-size chunk and chunks are combined in order, so the result is
// bit-identical for any thread count.
inline constexpr std::size_t grad_chunk = 8;
inline constexpr std::size_t eval_chunk = 64;
} // namespace detail

/// MSE/MAE of `params` over `windows` (mean over windows and horizon steps).
inline ErrorAccumulator evaluate(const ModelParams& params, std::span<const ForecastWindow> windows, unsigned threads = 1) {
    const std::size_t chunks = (windows.size() + detail::eval_chunk - 1) / detail::eval_chunk;
    std::vector<ErrorAccumulator> partial(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t end = std::min(windows.size(), (c + 1) * detail::eval_chunk);
        for (std::size_t i = c * detail::eval_chunk; i < end; ++i)
            partial[c].add(forward(windows[i].input, params).output, windows[i].target);
    });
    ErrorAccumulator total;
    for (const auto& p : partial) total.merge(p);
    return total;
}

/// Mean-over-batch gradient of the per-window MSE. Returns the mean batch loss.
inline double batch_gradient(const ModelParams& params, std::span<const ForecastWindow> windows,
                             std::span<const std::size_t> batch, std::vector<GradientSet>& scratch,
                             GradientSet& out, unsigned threads) {
    const std::size_t chunks = (batch.size() + detail::grad_chunk - 1) / detail::grad_chunk;
    while (scratch.size() < chunks) scratch.push_back(GradientSet::zeros_like(params));
    std::vector<double> losses(chunks, 0.0);
    const double weight = 1.0 / static_cast<double>(batch.size());
    parallel_for(chunks, threads, [&](std::size_t c) {
        auto& g = scratch[c];
        g.set_zero();
        const std::size_t end = std::min(batch.size(), (c + 1) * detail::grad_chunk);
        for (std::size_t k = c * detail::grad_chunk; k < end; ++k) {
            const auto& w = windows[batch[k]];
            losses[c] += accumulate_backward(forward(w.input, params), w.input, w.target, params, g, weight);
        }
    });
    out.set_zero();
    double loss = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        out.add(scratch[c]);
        loss += losses[c];
    }
    return loss * weight;
}

/// Adam + per-epoch cosine learning rate + early stopping on validation MSE.
/// Returns the parameters of the best validation epoch.
inline TrainResult train(ModelParams model, std::span<const ForecastWindow> train_windows,
                         std::span<const ForecastWindow> val_windows, const TrainConfig& cfg) {
    cfg.validate();
    if (train_windows.empty()) throw DataError("train: no training windows");
    if (val_windows.empty()) throw DataError("train: no validation windows");

    using clock = std::chrono::steady_clock;
    Rng rng(cfg.seed);
    AdamState adam = AdamState::for_params(model);
    GradientSet grads = GradientSet::zeros_like(model);
    std::vector<GradientSet> scratch;

    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result{model, {}};
    double best = std::numeric_limits<double>::infinity();
    std::size_t bad_epochs = 0;
    result.log.stop_reason = "max_epochs";

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = clock::now();
        const double lr = cosine_lr(epoch, cfg.max_epochs, cfg.lr0);
        if (cfg.shuffle) fisher_yates(std::span(order), rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const auto batch = std::span(order).subspan(start, len);
            const double loss = batch_gradient(model, train_windows, batch, scratch, grads, cfg.threads);
            if (!grads.all_finite())
                throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch starting " +
                                      std::to_string(start));
            if (cfg.max_grad_norm > 0.0) {
                const double norm = std::sqrt(grads.squared_norm());
                if (norm > cfg.max_grad_norm) {
                    const double s = cfg.max_grad_norm / norm;
                    grads.for_each_learnable([&](std::string_view, std::span<double> g) {
                        for (double& v : g) v *= s;
                    });
                }
            }
            adam_step(model, grads, adam, lr);
            ++result.log.optimizer_steps;
            loss_sum += loss * static_cast<double>(len);
        }

        const double val = evaluate(model, val_windows, cfg.threads).mse();
        if (!std::isfinite(val)) throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
        const double seconds = std::chrono::duration<double>(clock::now() - t0).count();
        result.log.epochs.push_back({loss_sum / static_cast<double>(order.size()), val, lr, seconds});

        if (val < best) {
            best = val;
            result.best = model;
            result.log.best_epoch = epoch;
            bad_epochs = 0;
        } else if (++bad_epochs >= cfg.patience) {
            result.log.stop_reason = "early_stop";
            break;
        }
    }
    return result;
}

} // namespace alinear
