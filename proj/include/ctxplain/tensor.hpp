#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/rng.hpp"

namespace ctx {

// Dense row-major n-d array. float carries all production activations and
// weights; the double instantiation exists for gradient checking.
template <typename T>
struct basic_tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    basic_tensor() = default;
    explicit basic_tensor(std::vector<std::size_t> s)
        : shape(std::move(s)), data(numel_of(shape), T(0)) {}

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }
    bool empty() const { return data.empty(); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    T& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    const T& at2(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    T& at4(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
        return data[((n * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }
    const T& at4(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        return data[((n * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    template <typename U>
    basic_tensor<U> cast() const {
        basic_tensor<U> out(shape);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    bool same_shape(const basic_tensor& o) const { return shape == o.shape; }

    static basic_tensor glorot_uniform(std::vector<std::size_t> s, std::size_t fan_in,
                                       std::size_t fan_out, std::uint64_t seed) {
        basic_tensor t(std::move(s));
        rng64 rng(seed);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (auto& v : t.data) v = static_cast<T>(rng.uniform(-limit, limit));
        return t;
    }
};

using tensor = basic_tensor<float>;

inline std::string shape_string(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace ctx
