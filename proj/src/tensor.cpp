#include "itsc/tensor.hpp"

#include <cmath>
#include <sstream>

namespace itsc::nn {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> s)
    : shape(std::move(s)), data(shape_product(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_product(shape)) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str());
    }
}

std::size_t Tensor::dim(std::size_t i) const {
    if (i >= shape.size()) {
        throw ShapeError("dimension index " + std::to_string(i) + " out of rank " +
                         std::to_string(shape.size()));
    }
    return shape[i];
}

void Tensor::ensure_grad() {
    requires_grad = true;
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    if (!grad.empty()) grad.assign(grad.size(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream out;
    out << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ")";
    return out.str();
}

Param::Param(std::string param_name, Tensor initial)
    : name(std::move(param_name)), value(std::move(initial)) {
    value.ensure_grad();
    first_moment.assign(value.size(), 0.0);
    second_moment.assign(value.size(), 0.0);
}

}  // namespace itsc::nn
