#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "thermal/errors.hpp"

namespace thermal {

// Dense row-major multi-dimensional array. Training and inference run in
// float; double is used for finite-difference gradient checks and
// receptive-field probing.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::int64_t> shape, T fill = T{})
        : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

    Tensor(std::vector<std::int64_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != checked_size(shape_)) {
            throw ConfigError("tensor data length does not match shape");
        }
    }

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
    std::int64_t dim(std::int64_t i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    T& at(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * dim(1) + j)]; }
    const T& at(std::int64_t i, std::int64_t j) const {
        return data_[static_cast<std::size_t>(i * dim(1) + j)];
    }
    T& at(std::int64_t i, std::int64_t j, std::int64_t k) {
        return data_[static_cast<std::size_t>((i * dim(1) + j) * dim(2) + k)];
    }
    const T& at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return data_[static_cast<std::size_t>((i * dim(1) + j) * dim(2) + k)];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(T{}); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::int64_t i = 0; i < size(); ++i) {
            out[i] = static_cast<U>(data_[static_cast<std::size_t>(i)]);
        }
        return out;
    }

    static std::string shape_str(const std::vector<std::int64_t>& s) {
        std::string out = "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        return out + "]";
    }

private:
    static std::int64_t checked_size(const std::vector<std::int64_t>& shape) {
        if (shape.empty()) throw ConfigError("tensor shape must have at least one dimension");
        std::int64_t n = 1;
        for (std::int64_t d : shape) {
            if (d < 1) throw ConfigError("tensor dimensions must be >= 1, got " + shape_str(shape));
            n *= d;
        }
        return n;
    }

    std::vector<std::int64_t> shape_;
    std::vector<T> data_;
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

}  // namespace thermal
