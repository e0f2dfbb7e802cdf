#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "alinear/error.hpp"
#include "alinear/model.hpp"

namespace alinear {

/// Epoch-level cosine annealing from lr0 towards zero: lr0 * (1 + cos(pi * epoch / max_epochs)) / 2.
inline double cosine_lr(std::size_t epoch, std::size_t max_epochs, double lr0) {
    if (max_epochs == 0) return lr0;
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(max_epochs)));
}

/// Bias-corrected Adam. Moments are stored flat in the canonical slot order of the parameters.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_params(const ModelParams& p) {
        AdamState s;
        s.m.assign(p.learnable_count(), 0.0);
        s.v.assign(p.learnable_count(), 0.0);
        return s;
    }
};

inline void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state, double lr) {
    if (grads.variant != params.variant) throw ConfigError("adam_step: gradient/parameter variant mismatch");
    const std::size_t n = params.learnable_count();
    if (state.m.size() != n || state.v.size() != n) throw ConfigError("adam_step: optimizer state shape mismatch");

    std::vector<std::span<const double>> g;
    grads.for_each_learnable([&](std::string_view, std::span<const double> s) { g.push_back(s); });

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);

    std::size_t flat = 0;
    std::size_t slot = 0;
    bool finite = true;
    params.for_each_learnable([&](std::string_view, std::span<double> w) {
        const auto gs = g[slot++];
        if (gs.size() != w.size()) throw ConfigError("adam_step: gradient shape mismatch");
        for (std::size_t i = 0; i < w.size(); ++i, ++flat) {
            double& m = state.m[flat];
            double& v = state.v[flat];
            m = state.beta1 * m + (1.0 - state.beta1) * gs[i];
            v = state.beta2 * v + (1.0 - state.beta2) * gs[i] * gs[i];
            w[i] -= lr * (m / c1) / (std::sqrt(v / c2) + state.epsilon);
            finite = finite && std::isfinite(w[i]);
        }
    });
    if (!finite) throw DivergenceError("adam_step produced a non-finite parameter");
}

} // namespace alinear
