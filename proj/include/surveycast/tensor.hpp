#pragma once

#include <cstddef>
#include <vector>

namespace surveycast {

// Dense row-major tensor. Rank-2 activations are (batch, features); rank-3
// activations are (batch, channels, length).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        v.assign(size_of(shape), 0.0);
    }

    static std::size_t size_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (const std::size_t d : s) n *= d;
        return n;
    }

    std::size_t size() const { return v.size(); }
    std::size_t rank() const { return shape.size(); }

    // (batch, features)
    double& at2(std::size_t n, std::size_t f) { return v[n * shape[1] + f]; }
    double at2(std::size_t n, std::size_t f) const { return v[n * shape[1] + f]; }

    // (batch, channels, length)
    double& at3(std::size_t n, std::size_t c, std::size_t l) {
        return v[(n * shape[1] + c) * shape[2] + l];
    }
    double at3(std::size_t n, std::size_t c, std::size_t l) const {
        return v[(n * shape[1] + c) * shape[2] + l];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

} // namespace surveycast
