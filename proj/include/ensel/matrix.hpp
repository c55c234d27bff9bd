#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace ensel {

/// Dense row-major matrix of doubles; one row per student.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return values_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return values_[r * cols_ + c];
    }

    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

    const std::vector<double>& values() const noexcept { return values_; }

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

}  // namespace ensel
