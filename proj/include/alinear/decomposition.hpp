#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <vector>

#include "alinear/error.hpp"

namespace alinear {

/// Learnable moving-average width coefficients plus the fixed clamp bounds.
/// The width used for horizon H is clamp(k1 + k2 * H, w_min, w_max).
struct DecompParams {
    double k1 = 25.0;
    double k2 = 0.01;
    double w_min = 3.0;
    double w_max = 96.0;

    void validate() const {
        if (!(w_min >= 1.0)) throw ConfigError("decomposition: w_min must be >= 1");
        if (!(w_min <= w_max)) throw ConfigError("decomposition: w_min must not exceed w_max");
    }
};

struct WindowWidth {
    double alpha = 1.0;
    double d_alpha_d_k1 = 0.0;
    double d_alpha_d_k2 = 0.0;
};

/// Clamped affine width. Outside [w_min, w_max] the derivatives are zero.
inline WindowWidth window_width(const DecompParams& p, std::size_t horizon) noexcept {
    const double h = static_cast<double>(horizon);
    const double raw = p.k1 + p.k2 * h;
    if (raw < p.w_min) return {p.w_min, 0.0, 0.0};
    if (raw > p.w_max) return {p.w_max, 0.0, 0.0};
    return {raw, 1.0, h};
}

template <std::floating_point Real>
struct MovingAverage {
    std::vector<Real> trend;
    std::vector<Real> d_trend_d_alpha;
};

/// Centered box average of continuous width `alpha` with replicate padding.
///
/// With half-width h = (alpha - 1) / 2, offsets |j| <= floor(h) get weight 1 and the two taps at
/// |j| = floor(h) + 1 get weight frac(h), so the weights sum to alpha. At odd integer widths this is
/// the ordinary box average. The derivative with respect to alpha is
///   (edge_mean - trend) / alpha,  edge_mean = (x[i - floor(h) - 1] + x[i + floor(h) + 1]) / 2,
/// which is the right-derivative at the odd-integer kinks.
template <std::floating_point Real>
MovingAverage<Real> fractional_moving_average(std::span<const Real> x, Real alpha) {
    if (x.empty()) throw ConfigError("moving average: empty input");
    if (!(alpha >= Real(1))) throw ConfigError("moving average: width must be >= 1");

    const Real half = (alpha - Real(1)) / Real(2);
    const auto inner = static_cast<std::ptrdiff_t>(std::floor(half));
    const Real frac = half - static_cast<Real>(inner);
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto at = [&](std::ptrdiff_t i) { return x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))]; };

    MovingAverage<Real> out{std::vector<Real>(x.size()), std::vector<Real>(x.size())};
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        Real sum = 0;
        for (std::ptrdiff_t j = -inner; j <= inner; ++j) sum += at(i + j);
        const Real edge_mean = (at(i - inner - 1) + at(i + inner + 1)) / Real(2);
        const Real trend = (sum + Real(2) * frac * edge_mean) / alpha;
        out.trend[static_cast<std::size_t>(i)] = trend;
        out.d_trend_d_alpha[static_cast<std::size_t>(i)] = (edge_mean - trend) / alpha;
    }
    return out;
}

/// Trend/seasonal split of one input window. `trend + seasonal == input` exactly, because the
/// seasonal part is defined by subtraction.
struct DecompOutput {
    std::vector<double> trend;
    std::vector<double> seasonal;
    double alpha = 1.0;
    std::vector<double> d_trend_d_alpha;
    double d_alpha_d_k1 = 0.0;
    double d_alpha_d_k2 = 0.0;
};

inline DecompOutput decompose_with_width(std::span<const double> x, WindowWidth width) {
    for (double v : x) {
        if (!std::isfinite(v)) throw DataError("decompose: non-finite input value");
    }
    auto ma = fractional_moving_average<double>(x, width.alpha);
    DecompOutput out;
    out.seasonal.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.seasonal[i] = x[i] - ma.trend[i];
    out.trend = std::move(ma.trend);
    out.d_trend_d_alpha = std::move(ma.d_trend_d_alpha);
    out.alpha = width.alpha;
    out.d_alpha_d_k1 = width.d_alpha_d_k1;
    out.d_alpha_d_k2 = width.d_alpha_d_k2;
    return out;
}

inline DecompOutput decompose(std::span<const double> x, const DecompParams& params, std::size_t horizon) {
    if (horizon == 0) throw ConfigError("decompose: horizon must be >= 1");
    return decompose_with_width(x, window_width(params, horizon));
}

} // namespace alinear
