#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>

#include "alinear/error.hpp"
#include "alinear/model.hpp"

namespace alinear {

namespace detail {
template <std::floating_point Real>
void check_pair(std::span<const Real> pred, std::span<const Real> truth) {
    if (pred.size() != truth.size()) throw ConfigError("metric: prediction and truth lengths differ");
    if (pred.empty()) throw ConfigError("metric: empty input");
}
} // namespace detail

template <std::floating_point Real>
Real mse(std::span<const Real> pred, std::span<const Real> truth) {
    detail::check_pair(pred, truth);
    Real s = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return s / static_cast<Real>(pred.size());
}

template <std::floating_point Real>
Real mae(std::span<const Real> pred, std::span<const Real> truth) {
    detail::check_pair(pred, truth);
    Real s = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
    return s / static_cast<Real>(pred.size());
}

inline double mse(std::span<const double> pred, std::span<const double> truth) { return mse<double>(pred, truth); }
inline double mae(std::span<const double> pred, std::span<const double> truth) { return mae<double>(pred, truth); }

/// Running sums for metrics over many equal-length windows.
struct ErrorAccumulator {
    double squared = 0.0;
    double absolute = 0.0;
    std::size_t count = 0;

    void add(std::span<const double> pred, std::span<const double> truth) {
        detail::check_pair(pred, truth);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - truth[i];
            squared += d * d;
            absolute += std::abs(d);
        }
        count += pred.size();
    }
    void merge(const ErrorAccumulator& o) {
        squared += o.squared;
        absolute += o.absolute;
        count += o.count;
    }
    double mse() const { return count ? squared / static_cast<double>(count) : 0.0; }
    double mae() const { return count ? absolute / static_cast<double>(count) : 0.0; }
};

/// Learnable scalars of the full model: 2 (window) + 2HT + 2H (projections) + 2 (gate).
inline std::uint64_t param_count(std::uint64_t input_len, std::uint64_t horizon) {
    if (input_len == 0 || horizon == 0) throw ConfigError("param_count: T and H must be positive");
    return 2 * horizon * input_len + 2 * horizon + 4;
}

inline std::uint64_t param_count(std::uint64_t input_len, std::uint64_t horizon, Variant variant) {
    const std::uint64_t full = param_count(input_len, horizon);
    switch (variant) {
    case Variant::full: return full;
    case Variant::no_kernel:
    case Variant::no_adaptive: return full - 2;
    case Variant::no_decomp: return horizon * input_len + horizon + 2;
    }
    throw ConfigError("param_count: unknown variant");
}

/// Parameter-normalized performance: 100 / (metric * ln(params)). Higher is better.
inline double pnp(double metric, std::uint64_t params) {
    if (!(metric > 0.0)) throw ConfigError("pnp: metric must be positive");
    if (params < 2) throw ConfigError("pnp: parameter count must be at least 2");
    return 100.0 / (metric * std::log(static_cast<double>(params)));
}

} // namespace alinear
