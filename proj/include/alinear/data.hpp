#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alinear/error.hpp"

namespace alinear {

using Timestamp = std::chrono::sys_seconds;

/// A multichannel series as read from disk. Every channel has one value per timestamp.
struct RawSeries {
    std::string name;
    std::vector<Timestamp> timestamps;
    std::vector<std::string> channel_names;
    std::vector<std::vector<double>> channels;

    std::size_t length() const noexcept { return timestamps.size(); }
    std::size_t channel_count() const noexcept { return channels.size(); }
};

/// Which CSV columns to read. An empty channel list selects every value column.
struct CsvSchema {
    std::vector<std::string> channels;
};

/// Half-open index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SplitSpec {
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;
};

struct SplitRanges {
    IndexRange train;
    IndexRange val;
    IndexRange test;
};

struct StandardizationStats {
    std::vector<double> mean;
    std::vector<double> std;
    /// Channels whose training std was below the floor.
    std::vector<bool> zero_variance;

    static constexpr double std_floor = 1e-8;

    double inverse(double standardized, std::size_t channel) const {
        return standardized * std[channel] + mean[channel];
    }
};

/// One (history, future) pair. Views into a standardized series that must outlive the window.
struct ForecastWindow {
    std::span<const double> input;
    std::span<const double> target;
    std::size_t channel = 0;
    /// Offset of input[0] inside the source range.
    std::size_t offset = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline bool parse_uint(std::string_view s, int& out) {
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

} // namespace detail

/// Parses "YYYY-MM-DD", "YYYY-MM-DD HH:MM[:SS]" or "YYYY-MM-DDTHH:MM:SS" ('/' also accepted as
/// the date separator). Returns false on anything else.
inline bool parse_timestamp(std::string_view text, Timestamp& out) {
    using namespace std::chrono;
    const auto t = detail::trim(text);
    const auto date_end = t.find_first_of(" T");
    const auto date = t.substr(0, date_end);
    const char sep = date.find('/') != std::string_view::npos ? '/' : '-';

    const auto p1 = date.find(sep);
    const auto p2 = p1 == std::string_view::npos ? p1 : date.find(sep, p1 + 1);
    if (p2 == std::string_view::npos) return false;
    int y = 0, mo = 0, d = 0;
    if (!detail::parse_uint(date.substr(0, p1), y) || !detail::parse_uint(date.substr(p1 + 1, p2 - p1 - 1), mo) ||
        !detail::parse_uint(date.substr(p2 + 1), d))
        return false;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return false;

    int hh = 0, mm = 0, ss = 0;
    if (date_end != std::string_view::npos) {
        auto time = t.substr(date_end + 1);
        if (const auto z = time.find_first_of("Z+"); z != std::string_view::npos) time = time.substr(0, z);
        if (const auto dot = time.find('.'); dot != std::string_view::npos) time = time.substr(0, dot);
        const auto c1 = time.find(':');
        if (c1 == std::string_view::npos) return false;
        const auto c2 = time.find(':', c1 + 1);
        if (!detail::parse_uint(time.substr(0, c1), hh)) return false;
        if (!detail::parse_uint(time.substr(c1 + 1, c2 == std::string_view::npos ? std::string_view::npos : c2 - c1 - 1), mm))
            return false;
        if (c2 != std::string_view::npos && !detail::parse_uint(time.substr(c2 + 1), ss)) return false;
        if (hh > 23 || mm > 59 || ss > 60) return false;
    }
    out = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
    return true;
}

/// Reads a header-led CSV: first column timestamps, remaining columns real values.
/// Throws DataError with the 1-based file line number for malformed rows.
inline RawSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    std::vector<std::string> header;
    for (auto h : detail::split_commas(line)) header.emplace_back(h);
    if (header.size() < 2) throw DataError(path.string() + ": header needs a timestamp and at least one value column");

    RawSeries series;
    series.name = path.stem().string();
    std::vector<std::size_t> columns;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (schema.channels.empty() ||
            std::find(schema.channels.begin(), schema.channels.end(), name) != schema.channels.end()) {
            columns.push_back(c);
            series.channel_names.push_back(name);
        }
    }
    for (const auto& wanted : schema.channels) {
        if (std::find(series.channel_names.begin(), series.channel_names.end(), wanted) == series.channel_names.end())
            throw DataError(path.string() + ": no column named '" + wanted + "'");
    }
    series.channels.resize(columns.size());

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_commas(line);
        const auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };
        if (cells.size() != header.size())
            throw DataError(where() + "expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()));
        Timestamp ts;
        if (!parse_timestamp(cells[0], ts)) throw DataError(where() + "unparseable timestamp '" + std::string(cells[0]) + "'");
        if (!series.timestamps.empty() && ts <= series.timestamps.back())
            throw DataError(where() + "timestamps are not strictly increasing");
        series.timestamps.push_back(ts);

        for (std::size_t k = 0; k < columns.size(); ++k) {
            const auto cell = cells[columns[k]];
            // strtod rather than from_chars so that "NaN"/"inf" parse and get rejected as non-finite.
            const std::string buf(cell);
            char* end = nullptr;
            const double v = buf.empty() ? 0.0 : std::strtod(buf.c_str(), &end);
            if (buf.empty() || end != buf.c_str() + buf.size())
                throw DataError(where() + "column '" + series.channel_names[k] + "' is not a number: '" + buf + "'");
            if (!std::isfinite(v))
                throw DataError(where() + "column '" + series.channel_names[k] + "' holds a non-finite value");
            series.channels[k].push_back(v);
        }
    }
    if (series.timestamps.empty()) throw DataError(path.string() + ": no data rows");
    return series;
}

inline void validate_split(const SplitSpec& spec) {
    for (double f : {spec.train_fraction, spec.val_fraction, spec.test_fraction}) {
        if (!(f > 0.0 && f < 1.0)) throw ConfigError("split fractions must lie in (0, 1)");
    }
    if (std::abs(spec.train_fraction + spec.val_fraction + spec.test_fraction - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
}

/// Chronological train/val/test split. Boundaries are floor(N*train) and that plus floor(N*val).
inline SplitRanges chronological_split(std::size_t n, const SplitSpec& spec, std::size_t input_len,
                                       std::size_t horizon) {
    validate_split(spec);
    const double fr[] = {spec.train_fraction, spec.val_fraction, spec.test_fraction};

    // The tiny epsilon keeps e.g. 100 * 0.7 = 70.00000000000001 and 0.1 * 17420 on the intended side.
    const auto part = [n](double f) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9));
    };
    const std::size_t b1 = part(fr[0]);
    const std::size_t b2 = std::min(n, b1 + part(fr[1]));
    SplitRanges r{{0, b1}, {b1, b2}, {b2, n}};

    const std::size_t need = input_len + horizon;
    const char* names[] = {"train", "val", "test"};
    const IndexRange* parts[] = {&r.train, &r.val, &r.test};
    for (int i = 0; i < 3; ++i) {
        if (parts[i]->size() < need)
            throw DataError(std::string(names[i]) + " segment too short: " + std::to_string(parts[i]->size()) +
                            " < T + H = " + std::to_string(need));
    }
    return r;
}

inline SplitRanges chronological_split(const RawSeries& series, const SplitSpec& spec, std::size_t input_len,
                                       std::size_t horizon) {
    return chronological_split(series.length(), spec, input_len, horizon);
}

struct StandardizedSeries {
    RawSeries series;
    StandardizationStats stats;
};

/// Z-scores every channel with the population mean/std of `train_range` only.
inline StandardizedSeries standardize(const RawSeries& series, IndexRange train_range) {
    if (train_range.size() == 0 || train_range.end > series.length())
        throw DataError("standardize: training range is empty or out of bounds");

    StandardizedSeries out{series, {}};
    const std::size_t nc = series.channel_count();
    out.stats.mean.resize(nc);
    out.stats.std.resize(nc);
    out.stats.zero_variance.resize(nc);
    const double n = static_cast<double>(train_range.size());
    for (std::size_t c = 0; c < nc; ++c) {
        const auto train = std::span(series.channels[c]).subspan(train_range.begin, train_range.size());
        const double mean = std::accumulate(train.begin(), train.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : train) ss += (v - mean) * (v - mean);
        double sd = std::sqrt(ss / n);
        const bool degenerate = sd < StandardizationStats::std_floor;
        if (degenerate) sd = StandardizationStats::std_floor;
        out.stats.mean[c] = mean;
        out.stats.std[c] = sd;
        out.stats.zero_variance[c] = degenerate;
        for (double& v : out.series.channels[c]) v = (v - mean) / sd;
    }
    return out;
}

/// Sliding windows over `range` for each channel, channel-major, offsets in steps of `stride`.
inline std::vector<ForecastWindow> make_windows(const RawSeries& series, IndexRange range, std::size_t input_len,
                                                std::size_t horizon, std::size_t stride = 1) {
    if (input_len == 0 || horizon == 0) throw ConfigError("make_windows: T and H must be positive");
    if (stride == 0) throw ConfigError("make_windows: stride must be at least 1");
    if (range.end > series.length()) throw DataError("make_windows: range exceeds series length");
    const std::size_t span_len = input_len + horizon;
    if (range.size() < span_len)
        throw DataError("make_windows: range of length " + std::to_string(range.size()) + " is shorter than T + H = " +
                        std::to_string(span_len));

    const std::size_t per_channel = (range.size() - span_len) / stride + 1;
    std::vector<ForecastWindow> windows;
    windows.reserve(per_channel * series.channel_count());
    for (std::size_t c = 0; c < series.channel_count(); ++c) {
        const std::span<const double> values(series.channels[c]);
        for (std::size_t k = 0; k < per_channel; ++k) {
            const std::size_t o = k * stride;
            const std::size_t start = range.begin + o;
            windows.push_back({values.subspan(start, input_len), values.subspan(start + input_len, horizon), c, o});
        }
    }
    return windows;
}

} // namespace alinear
