#pragma once

// Binary checkpoint, all integers and doubles little-endian (layout in docs/checkpoint_format.md):
//
//   magic    8 bytes  "ALINCKPT"
//   version  u32      1
//   variant  u32      0 full, 1 no_kernel, 2 no_decomp, 3 no_adaptive
//   T, H     u64 x2
//   delta, w_min, w_max   f64 x3
//   8 tensors in order k1, k2, W_T, b_T, W_S, b_S, v1, v2, each:  u64 count, count x f64
//     (W_* row-major H x T; absent tensors have count 0)

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "alinear/error.hpp"
#include "alinear/model.hpp"

namespace alinear {

inline constexpr std::array<char, 8> checkpoint_magic{'A', 'L', 'I', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t checkpoint_version = 1;

namespace detail {

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename U>
    U get() {
        if (pos_ + sizeof(U) > bytes_.size()) throw DataError("checkpoint: truncated file");
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
        pos_ += sizeof(U);
        return v;
    }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const ModelParams& p) {
    std::vector<std::uint8_t> out(checkpoint_magic.begin(), checkpoint_magic.end());
    detail::put_le(out, checkpoint_version);
    detail::put_le(out, static_cast<std::uint32_t>(p.variant));
    detail::put_le(out, static_cast<std::uint64_t>(p.input_len));
    detail::put_le(out, static_cast<std::uint64_t>(p.horizon));
    for (double d : {p.delta, p.w_min, p.w_max}) detail::put_le(out, std::bit_cast<std::uint64_t>(d));

    const auto& t = p.tensors;
    const auto put_tensor = [&](std::span<const double> s) {
        detail::put_le(out, static_cast<std::uint64_t>(s.size()));
        for (double d : s) detail::put_le(out, std::bit_cast<std::uint64_t>(d));
    };
    put_tensor(std::span(&t.k1, 1));
    put_tensor(std::span(&t.k2, 1));
    put_tensor(t.w_trend.flat());
    put_tensor(t.b_trend);
    put_tensor(t.w_seasonal.flat());
    put_tensor(t.b_seasonal);
    put_tensor(std::span(&t.v1, 1));
    put_tensor(std::span(&t.v2, 1));
    return out;
}

inline ModelParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < checkpoint_magic.size() ||
        !std::equal(checkpoint_magic.begin(), checkpoint_magic.end(), bytes.begin()))
        throw DataError("checkpoint: bad magic header");
    detail::ByteReader in(bytes.subspan(checkpoint_magic.size()));
    if (const auto version = in.get<std::uint32_t>(); version != checkpoint_version)
        throw DataError("checkpoint: unsupported format version " + std::to_string(version));
    const auto variant = in.get<std::uint32_t>();
    if (variant > static_cast<std::uint32_t>(Variant::no_adaptive)) throw DataError("checkpoint: unknown variant");

    ModelParams p;
    p.variant = static_cast<Variant>(variant);
    p.input_len = static_cast<std::size_t>(in.get<std::uint64_t>());
    p.horizon = static_cast<std::size_t>(in.get<std::uint64_t>());
    p.delta = in.get_f64();
    p.w_min = in.get_f64();
    p.w_max = in.get_f64();
    if (p.input_len == 0 || p.horizon == 0) throw DataError("checkpoint: zero T or H");

    const std::size_t H = p.horizon, T = p.input_len;
    const auto read_tensor = [&](std::size_t expected, const char* name) {
        const auto n = in.get<std::uint64_t>();
        if (n != expected)
            throw DataError(std::string("checkpoint: tensor ") + name + " has " + std::to_string(n) + " values, expected " +
                            std::to_string(expected));
        std::vector<double> v(n);
        for (auto& d : v) d = in.get_f64();
        return v;
    };
    const bool decomp = has_decomposition(p.variant);
    auto& t = p.tensors;
    t.k1 = read_tensor(1, "k1")[0];
    t.k2 = read_tensor(1, "k2")[0];
    auto w_trend = read_tensor(H * T, "W_T");
    t.b_trend = read_tensor(H, "b_T");
    auto w_seasonal = read_tensor(decomp ? H * T : 0, "W_S");
    t.b_seasonal = read_tensor(decomp ? H : 0, "b_S");
    t.v1 = read_tensor(1, "v1")[0];
    t.v2 = read_tensor(1, "v2")[0];
    if (!in.at_end()) throw DataError("checkpoint: trailing bytes");

    t.w_trend = Matrix(H, T);
    std::copy(w_trend.begin(), w_trend.end(), t.w_trend.flat().begin());
    if (decomp) {
        t.w_seasonal = Matrix(H, T);
        std::copy(w_seasonal.begin(), w_seasonal.end(), t.w_seasonal.flat().begin());
    }
    return p;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams& p) {
    const auto bytes = encode_checkpoint(p);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing checkpoint " + path.string());
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

} // namespace alinear
