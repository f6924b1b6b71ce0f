#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mgml/errors.hpp"

namespace mgml {

// Dense rank-4 shape in (batch, channel, height, width) order.
struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    bool operator==(const Shape&) const = default;

    std::size_t numel() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }

    // Canonical "NxCxHxW" form, used in error messages and manifests.
    std::string str() const;
};

// Dense rank-4 tensor of 64-bit floats, row-major (n, c, h, w).
// Carries an optional same-sized gradient buffer, filled in by the
// reverse pass; values themselves are treated as immutable once built.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor zeros(Shape shape) { return Tensor(shape, 0.0); }
    static Tensor full(Shape shape, double value) { return Tensor(shape, value); }

    const Shape& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
    double at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

    std::size_t index(int n, int c, int y, int x) const {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }

    bool has_grad() const { return !grad_.empty(); }

    // Allocates (zero-filled) the gradient buffer if absent.
    void ensure_grad();
    void zero_grad();
    void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

    std::span<double> grad();
    std::span<const double> grad() const;

private:
    Shape shape_{};
    std::vector<double> data_;
    std::vector<double> grad_;
};

} // namespace mgml
