#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alinear/decomposition.hpp"
#include "alinear/error.hpp"
#include "alinear/matrix.hpp"
#include "alinear/random.hpp"

namespace alinear {

/// Model variant. `full` is the complete model; the others are the ablations.
///
///  - no_kernel:   the moving-average width is frozen at a fixed value; k1/k2 are not learned.
///  - no_decomp:   no trend/seasonal split. A single projection P = W x + b feeds both streams of
///                 the decay/recombination stage, so y(t) = P(t) * (beta + (1 - beta) exp(-lambda t)).
///  - no_adaptive: no seasonal decay and no gate; y = trend_pred + seasonal_pred. v1/v2 are not learned.
enum class Variant : std::uint32_t { full = 0, no_kernel = 1, no_decomp = 2, no_adaptive = 3 };

inline constexpr std::array<Variant, 4> all_variants{Variant::full, Variant::no_kernel, Variant::no_decomp,
                                                     Variant::no_adaptive};

inline std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::full: return "full";
    case Variant::no_kernel: return "no_kernel";
    case Variant::no_decomp: return "no_decomp";
    case Variant::no_adaptive: return "no_adaptive";
    }
    return "unknown";
}

inline Variant parse_variant(std::string_view s) {
    for (auto v : all_variants) {
        if (to_string(v) == s) return v;
    }
    throw ConfigError("unknown ablation mode '" + std::string(s) + "' (expected full, no_kernel, no_decomp or no_adaptive)");
}

inline bool learns_kernel(Variant v) { return v == Variant::full || v == Variant::no_adaptive; }
inline bool has_decomposition(Variant v) { return v != Variant::no_decomp; }
inline bool has_gate(Variant v) { return v != Variant::no_adaptive; }

/// The learnable tensors. Shared between parameters and their gradients.
struct ParamTensors {
    double k1 = 0.0;
    double k2 = 0.0;
    Matrix w_trend;
    std::vector<double> b_trend;
    Matrix w_seasonal;
    std::vector<double> b_seasonal;
    double v1 = 0.0;
    double v2 = 0.0;

    friend bool operator==(const ParamTensors&, const ParamTensors&) = default;
};

/// Visits the tensors that are learnable under `variant`, in a fixed canonical order, as
/// f(name, span). Under no_decomp the single projection lives in the trend slots.
template <typename Tensors, typename F>
    requires std::same_as<std::remove_const_t<Tensors>, ParamTensors>
void for_each_learnable(Variant variant, Tensors& t, F&& f) {
    if (learns_kernel(variant)) {
        f("k1", std::span(&t.k1, 1));
        f("k2", std::span(&t.k2, 1));
    }
    f("W_T", t.w_trend.flat());
    f("b_T", std::span(t.b_trend));
    if (has_decomposition(variant)) {
        f("W_S", t.w_seasonal.flat());
        f("b_S", std::span(t.b_seasonal));
    }
    if (has_gate(variant)) {
        f("v1", std::span(&t.v1, 1));
        f("v2", std::span(&t.v2, 1));
    }
}

inline std::size_t count_learnable(Variant variant, const ParamTensors& t) {
    std::size_t n = 0;
    for_each_learnable(variant, t, [&](std::string_view, auto s) { n += s.size(); });
    return n;
}

struct ModelParams {
    std::size_t input_len = 0;
    std::size_t horizon = 0;
    /// Seasonal decay strength; the per-step rate is delta / horizon. Fixed, not learned.
    double delta = 0.0;
    Variant variant = Variant::full;
    /// Clamp bounds. k1/k2 themselves live in `tensors`.
    double w_min = 3.0;
    double w_max = 96.0;
    ParamTensors tensors;

    DecompParams decomp() const { return {tensors.k1, tensors.k2, w_min, w_max}; }
    std::size_t learnable_count() const { return count_learnable(variant, tensors); }

    template <typename F>
    void for_each_learnable(F&& f) {
        alinear::for_each_learnable(variant, tensors, std::forward<F>(f));
    }
    template <typename F>
    void for_each_learnable(F&& f) const {
        alinear::for_each_learnable(variant, tensors, std::forward<F>(f));
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Gradients shaped like the parameters they belong to.
struct GradientSet {
    Variant variant = Variant::full;
    ParamTensors tensors;

    static GradientSet zeros_like(const ModelParams& p) {
        GradientSet g{p.variant, {}};
        g.tensors.w_trend = Matrix(p.tensors.w_trend.rows(), p.tensors.w_trend.cols());
        g.tensors.b_trend.assign(p.tensors.b_trend.size(), 0.0);
        g.tensors.w_seasonal = Matrix(p.tensors.w_seasonal.rows(), p.tensors.w_seasonal.cols());
        g.tensors.b_seasonal.assign(p.tensors.b_seasonal.size(), 0.0);
        return g;
    }

    void set_zero() {
        tensors.k1 = tensors.k2 = tensors.v1 = tensors.v2 = 0.0;
        std::ranges::fill(tensors.w_trend.flat(), 0.0);
        std::ranges::fill(tensors.b_trend, 0.0);
        std::ranges::fill(tensors.w_seasonal.flat(), 0.0);
        std::ranges::fill(tensors.b_seasonal, 0.0);
    }

    /// this += other, slot by slot in canonical order.
    void add(const GradientSet& other) {
        std::vector<std::span<const double>> src;
        alinear::for_each_learnable(variant, other.tensors, [&](std::string_view, auto s) { src.push_back(s); });
        std::size_t i = 0;
        alinear::for_each_learnable(variant, tensors, [&](std::string_view, std::span<double> d) {
            const auto s = src[i++];
            for (std::size_t k = 0; k < d.size(); ++k) d[k] += s[k];
        });
    }

    template <typename F>
    void for_each_learnable(F&& f) {
        alinear::for_each_learnable(variant, tensors, std::forward<F>(f));
    }
    template <typename F>
    void for_each_learnable(F&& f) const {
        alinear::for_each_learnable(variant, tensors, std::forward<F>(f));
    }

    bool all_finite() const {
        bool ok = true;
        for_each_learnable([&](std::string_view, std::span<const double> s) {
            for (double v : s) ok = ok && std::isfinite(v);
        });
        return ok;
    }

    double squared_norm() const {
        double n = 0.0;
        for_each_learnable([&](std::string_view, std::span<const double> s) {
            for (double v : s) n += v * v;
        });
        return n;
    }
};

/// Initialization knobs. Defaults give every projection row 1/T (predict the component mean).
struct InitOptions {
    Variant variant = Variant::full;
    double kernel_init = 25.0;   // k1
    double kernel_slope = 0.01;  // k2
    double trend_factor_init = 0.0;  // v1
    double gate_slope = 0.01;        // v2
    /// Width used by no_kernel.
    double fixed_width = 25.0;
    double w_min = 3.0;
    /// 0 means "use T".
    double w_max = 0.0;
    /// Half-width of uniform noise added to the projection weights; 0 disables it.
    double init_noise = 0.0;
};

inline ModelParams init_params(std::size_t input_len, std::size_t horizon, double delta, std::uint64_t seed,
                               const InitOptions& opt = {}) {
    if (input_len == 0 || horizon == 0) throw ConfigError("init_params: T and H must be positive");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("init_params: delta must be finite and >= 0");

    ModelParams p;
    p.input_len = input_len;
    p.horizon = horizon;
    p.variant = opt.variant;
    p.delta = opt.variant == Variant::no_adaptive ? 0.0 : delta;
    p.w_max = opt.w_max > 0.0 ? opt.w_max : static_cast<double>(input_len);
    p.w_min = std::min(opt.w_min, p.w_max);
    p.decomp().validate();

    auto& t = p.tensors;
    if (opt.variant == Variant::no_kernel) {
        t.k1 = opt.fixed_width;
        t.k2 = 0.0;
    } else {
        t.k1 = opt.kernel_init;
        t.k2 = opt.kernel_slope;
    }
    const double w0 = 1.0 / static_cast<double>(input_len);
    t.w_trend = Matrix(horizon, input_len, w0);
    t.b_trend.assign(horizon, 0.0);
    if (has_decomposition(opt.variant)) {
        t.w_seasonal = Matrix(horizon, input_len, w0);
        t.b_seasonal.assign(horizon, 0.0);
    }
    if (has_gate(opt.variant)) {
        t.v1 = opt.trend_factor_init;
        t.v2 = opt.gate_slope;
    }

    if (opt.init_noise > 0.0) {
        Rng rng(seed);
        for (Matrix* m : {&t.w_trend, &t.w_seasonal}) {
            for (double& w : m->flat()) w += opt.init_noise * (2.0 * uniform01(rng) - 1.0);
        }
    }
    return p;
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Default seasonal decay by horizon band: 0.5 up to 96 steps, 1.0 up to 336, 2.0 beyond.
inline double default_delta(std::size_t horizon) {
    if (horizon <= 96) return 0.5;
    if (horizon <= 336) return 1.0;
    return 2.0;
}

struct ComponentPredictions {
    std::vector<double> trend_pred;
    std::vector<double> seasonal_pred;
};

/// trend_pred = W_T trend + b_T, seasonal_pred = W_S seasonal + b_S.
inline ComponentPredictions project_components(const DecompOutput& d, const ModelParams& p) {
    const auto& t = p.tensors;
    if (!has_decomposition(p.variant)) throw ConfigError("project_components: variant has no decomposition");
    if (d.trend.size() != t.w_trend.cols() || d.seasonal.size() != t.w_seasonal.cols())
        throw ConfigError("project_components: component length does not match T");
    ComponentPredictions out{std::vector<double>(p.horizon), std::vector<double>(p.horizon)};
    affine(t.w_trend, d.trend, t.b_trend, out.trend_pred);
    affine(t.w_seasonal, d.seasonal, t.b_seasonal, out.seasonal_pred);
    return out;
}

struct DecayedSeasonal {
    std::vector<double> values;
    /// exp(-lambda * t) for t = 1..H.
    std::vector<double> factors;
    double lambda = 0.0;
};

/// values(t) = seasonal_pred(t) * exp(-(delta / H) * t), t counted from 1.
inline DecayedSeasonal decay_seasonal(std::span<const double> seasonal_pred, double delta, std::size_t horizon) {
    if (!(delta >= 0.0)) throw ConfigError("decay_seasonal: delta must be >= 0");
    if (horizon == 0 || seasonal_pred.size() != horizon) throw ConfigError("decay_seasonal: length must equal H");
    DecayedSeasonal out{std::vector<double>(horizon), std::vector<double>(horizon), delta / static_cast<double>(horizon)};
    for (std::size_t i = 0; i < horizon; ++i) {
        out.factors[i] = std::exp(-out.lambda * static_cast<double>(i + 1));
        out.values[i] = seasonal_pred[i] * out.factors[i];
    }
    return out;
}

struct Recombined {
    std::vector<double> output;
    double beta_trend = 0.5;
};

/// beta_T = sigmoid(v1 + v2 H); output = beta_T * trend_pred + (1 - beta_T) * seasonal_decayed.
inline Recombined recombine(std::span<const double> trend_pred, std::span<const double> seasonal_decayed,
                            const ModelParams& p) {
    const double beta = sigmoid(p.tensors.v1 + p.tensors.v2 * static_cast<double>(p.horizon));
    Recombined out{std::vector<double>(trend_pred.size()), beta};
    for (std::size_t i = 0; i < trend_pred.size(); ++i)
        out.output[i] = beta * trend_pred[i] + (1.0 - beta) * seasonal_decayed[i];
    return out;
}

/// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
    /// Empty trend/seasonal for no_decomp.
    DecompOutput decomp;
    std::vector<double> trend_pred;
    std::vector<double> seasonal_pred;
    std::vector<double> decay_factors;
    std::vector<double> seasonal_decayed;
    /// Mixing weights applied to the two streams: (beta_T, 1 - beta_T), or (1, 1) for no_adaptive.
    double beta_trend = 0.5;
    double beta_seasonal = 0.5;
    double lambda = 0.0;
    std::vector<double> output;
};

inline WindowWidth effective_width(const ModelParams& p) {
    auto w = window_width(p.decomp(), p.horizon);
    if (!learns_kernel(p.variant)) w.d_alpha_d_k1 = w.d_alpha_d_k2 = 0.0;
    return w;
}

inline ForwardTrace forward(std::span<const double> x, const ModelParams& p) {
    if (x.size() != p.input_len) throw ConfigError("forward: input length does not match T");
    ForwardTrace tr;
    if (has_decomposition(p.variant)) {
        tr.decomp = decompose_with_width(x, effective_width(p));
        auto proj = project_components(tr.decomp, p);
        tr.trend_pred = std::move(proj.trend_pred);
        tr.seasonal_pred = std::move(proj.seasonal_pred);
    } else {
        tr.decomp.alpha = 0.0;
        tr.trend_pred.resize(p.horizon);
        affine(p.tensors.w_trend, x, p.tensors.b_trend, tr.trend_pred);
        tr.seasonal_pred = tr.trend_pred;
    }

    auto decayed = decay_seasonal(tr.seasonal_pred, p.delta, p.horizon);
    tr.decay_factors = std::move(decayed.factors);
    tr.seasonal_decayed = std::move(decayed.values);
    tr.lambda = decayed.lambda;

    if (has_gate(p.variant)) {
        auto mix = recombine(tr.trend_pred, tr.seasonal_decayed, p);
        tr.beta_trend = mix.beta_trend;
        tr.beta_seasonal = 1.0 - mix.beta_trend;
        tr.output = std::move(mix.output);
    } else {
        tr.beta_trend = tr.beta_seasonal = 1.0;
        tr.output.resize(p.horizon);
        for (std::size_t i = 0; i < p.horizon; ++i) tr.output[i] = tr.trend_pred[i] + tr.seasonal_decayed[i];
    }
    return tr;
}

/// Adds `weight` times the gradient of the per-window MSE into `grads` and returns the
/// (unweighted) loss. Throws DivergenceError on a non-finite loss.
inline double accumulate_backward(const ForwardTrace& tr, std::span<const double> x, std::span<const double> target,
                                  const ModelParams& p, GradientSet& grads, double weight = 1.0) {
    const std::size_t H = p.horizon;
    if (target.size() != H) throw ConfigError("backward: target length does not match H");
    if (x.size() != p.input_len) throw ConfigError("backward: input length does not match T");

    const double inv_h = 1.0 / static_cast<double>(H);
    std::vector<double> g_out(H), g_trend_pred(H), g_seasonal_pred(H);
    double loss = 0.0;
    double g_beta = 0.0;
    for (std::size_t i = 0; i < H; ++i) {
        const double r = tr.output[i] - target[i];
        loss += r * r;
        g_out[i] = 2.0 * inv_h * r * weight;
        g_trend_pred[i] = tr.beta_trend * g_out[i];
        g_seasonal_pred[i] = tr.beta_seasonal * g_out[i] * tr.decay_factors[i];
        g_beta += g_out[i] * (tr.trend_pred[i] - tr.seasonal_decayed[i]);
    }
    loss *= inv_h;
    if (!std::isfinite(loss)) throw DivergenceError("non-finite loss in backward pass");

    auto& g = grads.tensors;
    if (has_gate(p.variant)) {
        const double g_v1 = g_beta * tr.beta_trend * (1.0 - tr.beta_trend);
        g.v1 += g_v1;
        g.v2 += g_v1 * static_cast<double>(H);
    }

    if (!has_decomposition(p.variant)) {
        for (std::size_t i = 0; i < H; ++i) g_trend_pred[i] += g_seasonal_pred[i];
        add_outer(g.w_trend, g_trend_pred, x);
        for (std::size_t i = 0; i < H; ++i) g.b_trend[i] += g_trend_pred[i];
        return loss;
    }

    add_outer(g.w_trend, g_trend_pred, tr.decomp.trend);
    add_outer(g.w_seasonal, g_seasonal_pred, tr.decomp.seasonal);
    for (std::size_t i = 0; i < H; ++i) {
        g.b_trend[i] += g_trend_pred[i];
        g.b_seasonal[i] += g_seasonal_pred[i];
    }

    if (learns_kernel(p.variant) && (tr.decomp.d_alpha_d_k1 != 0.0 || tr.decomp.d_alpha_d_k2 != 0.0)) {
        // seasonal = x - trend, so d seasonal / d alpha = -d trend / d alpha.
        std::vector<double> g_trend(p.input_len, 0.0), g_seasonal(p.input_len, 0.0);
        add_transposed_product(p.tensors.w_trend, g_trend_pred, g_trend);
        add_transposed_product(p.tensors.w_seasonal, g_seasonal_pred, g_seasonal);
        double g_alpha = 0.0;
        for (std::size_t j = 0; j < p.input_len; ++j)
            g_alpha += (g_trend[j] - g_seasonal[j]) * tr.decomp.d_trend_d_alpha[j];
        g.k1 += g_alpha * tr.decomp.d_alpha_d_k1;
        g.k2 += g_alpha * tr.decomp.d_alpha_d_k2;
    }
    return loss;
}

struct BackwardResult {
    double loss = 0.0;
    GradientSet grads;
};

inline BackwardResult backward(const ForwardTrace& tr, std::span<const double> x, std::span<const double> target,
                               const ModelParams& p) {
    BackwardResult r{0.0, GradientSet::zeros_like(p)};
    r.loss = accumulate_backward(tr, x, target, p, r.grads);
    if (!r.grads.all_finite()) throw DivergenceError("non-finite gradient in backward pass");
    return r;
}

/// Convenience: the forecast alone.
inline std::vector<double> predict(std::span<const double> x, const ModelParams& p) { return forward(x, p).output; }

} // namespace alinear
