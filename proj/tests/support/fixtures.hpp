#pragma once

// Synthetic series already split, standardized and windowed.

#include <vector>

#include "alinear/data.hpp"
#include "alinear/synthetic.hpp"

namespace fixture {

struct Windows {
    alinear::StandardizedSeries data;
    std::vector<alinear::ForecastWindow> train, val, test;
};

/// Windows hold views into `out.data`, so the struct must not be copied after this returns.
inline void make_windows(const alinear::SyntheticSpec& spec, std::size_t T, std::size_t H, std::size_t stride,
                         Windows& out) {
    const auto raw = alinear::make_synthetic_series(spec);
    const auto split = alinear::chronological_split(raw, {}, T, H);
    out.data = alinear::standardize(raw, split.train);
    const auto& s = out.data.series;
    out.train = alinear::make_windows(s, split.train, T, H, stride);
    out.val = alinear::make_windows(s, split.val, T, H, stride);
    out.test = alinear::make_windows(s, split.test, T, H, stride);
}

} // namespace fixture
