#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace alinear {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// out = m * x + bias
inline void affine(const Matrix& m, std::span<const double> x, std::span<const double> bias,
                   std::span<double> out) noexcept {
    assert(x.size() == m.cols() && bias.size() == m.rows() && out.size() == m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto w = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * x[c];
        out[r] = acc + bias[r];
    }
}

/// out += m^T * g
inline void add_transposed_product(const Matrix& m, std::span<const double> g,
                                   std::span<double> out) noexcept {
    assert(g.size() == m.rows() && out.size() == m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto w = m.row(r);
        const double gr = g[r];
        for (std::size_t c = 0; c < w.size(); ++c) out[c] += gr * w[c];
    }
}

/// m += scale * a b^T
inline void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b,
                      double scale = 1.0) noexcept {
    assert(a.size() == m.rows() && b.size() == m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto w = m.row(r);
        const double ar = scale * a[r];
        for (std::size_t c = 0; c < w.size(); ++c) w[c] += ar * b[c];
    }
}

} // namespace alinear
