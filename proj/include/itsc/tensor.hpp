#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "itsc/common.hpp"

namespace itsc::nn {

/// Dense n-dimensional array of doubles in row-major order, with an optional
/// same-shape gradient buffer.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // empty unless allocated; same length as data otherwise

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);
    Tensor(std::vector<std::size_t> s, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const;

    // Row-major element access for the ranks this engine uses.
    double& at(std::size_t i) { return data[i]; }
    const double& at(std::size_t i) const { return data[i]; }
    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    const double& at(std::size_t i, std::size_t j) const {
        return data[i * shape[1] + j];
    }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    const double& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    void ensure_grad();
    void zero_grad();
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    std::string shape_str() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

/// Trainable tensor with Adam moment accumulators.
struct Param {
    std::string name;
    Tensor value;                       // value.grad accumulates backward results
    std::vector<double> first_moment;   // zero-initialized, same length as value.data
    std::vector<double> second_moment;
    long step_count = 0;

    Param() = default;
    Param(std::string param_name, Tensor initial);

    std::size_t size() const { return value.size(); }
    void zero_grad() { value.zero_grad(); }
};

}  // namespace itsc::nn
