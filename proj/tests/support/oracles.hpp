#pragma once

// Test-only reference computations. Nothing here calls into the code paths it is used to check,
// except the finite-difference helper, which by construction compares backward() against forward().

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alinear/data.hpp"
#include "alinear/metrics.hpp"
#include "alinear/model.hpp"

namespace oracle {

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

/// Plain centered box average of odd integer width with replicate padding, summed directly.
inline std::vector<double> box_average(std::span<const double> x, int width) {
    const int n = static_cast<int>(x.size());
    const int h = (width - 1) / 2;
    std::vector<double> out(x.size());
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = i - h; j <= i + h; ++j) s += x[static_cast<std::size_t>(std::clamp(j, 0, n - 1))];
        out[static_cast<std::size_t>(i)] = s / width;
    }
    return out;
}

/// Fractional width expressed through the two neighbouring odd-width box sums:
/// alpha * trend = (1 - f) * (2n + 1) * box_{2n+1} + f * (2n + 3) * box_{2n+3}.
inline std::vector<double> interpolated_box(std::span<const double> x, double alpha) {
    const double half = (alpha - 1.0) / 2.0;
    const int n = static_cast<int>(std::floor(half));
    const double f = half - n;
    const auto lo = box_average(x, 2 * n + 1);
    const auto hi = box_average(x, 2 * n + 3);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = ((1.0 - f) * (2 * n + 1) * lo[i] + f * (2 * n + 3) * hi[i]) / alpha;
    return out;
}

/// Per-window loss from a fresh forward pass.
inline double window_loss(const alinear::ModelParams& p, std::span<const double> x, std::span<const double> y) {
    const auto out = alinear::forward(x, p).output;
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (out[i] - y[i]) * (out[i] - y[i]);
    return s / static_cast<double>(y.size());
}

/// Central finite differences for every learnable scalar, in canonical slot order.
inline std::vector<std::vector<double>> finite_difference_gradient(alinear::ModelParams p, std::span<const double> x,
                                                                  std::span<const double> y, double step = 1e-5) {
    std::vector<std::span<double>> slots;
    p.for_each_learnable([&](std::string_view, std::span<double> s) { slots.push_back(s); });
    std::vector<std::vector<double>> grads;
    for (auto s : slots) {
        std::vector<double> g(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double orig = s[i];
            s[i] = orig + step;
            const double up = window_loss(p, x, y);
            s[i] = orig - step;
            const double down = window_loss(p, x, y);
            s[i] = orig;
            g[i] = (up - down) / (2.0 * step);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

inline std::vector<std::vector<double>> flatten(const alinear::GradientSet& g) {
    std::vector<std::vector<double>> out;
    g.for_each_learnable([&](std::string_view, std::span<const double> s) { out.emplace_back(s.begin(), s.end()); });
    return out;
}

/// Relative error with an absolute floor so tiny gradients do not blow up the ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Ordinary least squares of every target step on [input, 1] fitted and scored on the same
/// windows: the in-sample MSE of the best affine map, used as the noise floor.
inline double ols_noise_floor(std::span<const alinear::ForecastWindow> windows) {
    const auto n = static_cast<Eigen::Index>(windows.size());
    const auto t = static_cast<Eigen::Index>(windows.front().input.size());
    const auto h = static_cast<Eigen::Index>(windows.front().target.size());
    Eigen::MatrixXd X(n, t + 1), Y(n, h);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& w = windows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < t; ++j) X(i, j) = w.input[static_cast<std::size_t>(j)];
        X(i, t) = 1.0;
        for (Eigen::Index j = 0; j < h; ++j) Y(i, j) = w.target[static_cast<std::size_t>(j)];
    }
    const Eigen::MatrixXd B = X.colPivHouseholderQr().solve(Y);
    return (X * B - Y).squaredNorm() / static_cast<double>(n * h);
}

} // namespace oracle
