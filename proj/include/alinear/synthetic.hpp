#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <string>

#include "alinear/data.hpp"
#include "alinear/random.hpp"

namespace alinear {

/// y_t = slope * t + amplitude * sin(2 pi t / period) + N(0, noise_std^2)
struct SyntheticSpec {
    std::size_t length = 6000;
    double slope = 0.01;
    double amplitude = 1.0;
    double period = 24.0;
    double noise_std = 0.1;
    std::uint64_t seed = 0;
};

/// Standard normal via Box-Muller on the portable uniform source.
inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Single channel "y" on an hourly grid starting 2016-07-01 00:00.
inline RawSeries make_synthetic_series(const SyntheticSpec& spec) {
    using namespace std::chrono;
    RawSeries s;
    s.name = "synthetic";
    s.channel_names = {"y"};
    s.channels.resize(1);
    Rng rng(spec.seed);
    const sys_seconds start = sys_days{year{2016} / July / 1};
    for (std::size_t t = 0; t < spec.length; ++t) {
        const double td = static_cast<double>(t);
        s.timestamps.push_back(start + hours{t});
        s.channels[0].push_back(spec.slope * td + spec.amplitude * std::sin(2.0 * std::numbers::pi * td / spec.period) +
                                spec.noise_std * standard_normal(rng));
    }
    return s;
}

inline std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    const auto day = floor<days>(ts);
    const year_month_day ymd{day};
    const hh_mm_ss hms{ts - day};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

/// Writes a series in the loader's CSV layout ("date,<channels...>").
inline void write_csv(const RawSeries& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "date";
    for (const auto& n : s.channel_names) out << ',' << n;
    out << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < s.length(); ++i) {
        out << format_timestamp(s.timestamps[i]);
        for (const auto& c : s.channels) out << ',' << c[i];
        out << '\n';
    }
}

} // namespace alinear
