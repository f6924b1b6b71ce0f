#include "mgml/tensor.hpp"

#include <utility>

namespace mgml {

std::string Shape::str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
}

namespace {

void validate(const Shape& s) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
        throw ShapeError("all tensor dimensions must be >= 1, got " + s.str());
    }
}

} // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
    validate(shape);
    data_.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
    validate(shape);
    if (data_.size() != shape.numel()) {
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape.str());
    }
}

void Tensor::ensure_grad() {
    if (grad_.empty()) grad_.assign(data_.size(), 0.0);
}

void Tensor::zero_grad() {
    grad_.assign(data_.size(), 0.0);
}

std::span<double> Tensor::grad() {
    ensure_grad();
    return grad_;
}

std::span<const double> Tensor::grad() const {
    if (grad_.empty()) throw UsageError("tensor has no gradient buffer");
    return grad_;
}

} // namespace mgml
