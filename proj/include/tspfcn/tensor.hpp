#pragma once

/// @file tensor.hpp
/// @brief Dense row-major n-d array used for every activation, parameter and gradient.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tspfcn/errors.hpp"

namespace tspfcn {

using Shape = std::vector<int>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

template <typename T>
class Tensor {
  public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{0})
        : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_numel(shape_)) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    int dim(std::size_t k) const { return shape_.at(k); }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> span() noexcept { return data_; }
    std::span<const T> span() const noexcept { return data_; }
    std::vector<T>& values() noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Element (c, y, x) of a rank-3 CHW tensor.
    T& at(int c, int y, int x) noexcept {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    const T& at(int c, int y, int x) const noexcept {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const noexcept {
        for (const T& v : data_) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

  private:
    Shape shape_;
    std::vector<T> data_;
};

/// Throws NumericError naming `where` if any value is NaN or infinite.
template <typename T>
void check_finite(const Tensor<T>& t, const std::string& where) {
    if (!t.all_finite()) {
        throw NumericError("non-finite value in " + where);
    }
}

template <typename T>
void require_shape(const Tensor<T>& t, const Shape& expected, const std::string& where) {
    if (t.shape() != expected) {
        throw ShapeError(where + ": expected shape " + shape_str(expected) + ", got " +
                         shape_str(t.shape()));
    }
}

} // namespace tspfcn
