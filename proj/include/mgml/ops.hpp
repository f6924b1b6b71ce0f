#pragma once

#include <span>
#include <vector>

#include "mgml/anchors.hpp"
#include "mgml/autograd.hpp"
#include "mgml/tensor.hpp"

namespace mgml {

// ---- value-level kernels -------------------------------------------------
// Pure, deterministic, single-threaded. The autograd wrappers below call
// these for the forward pass and register the matching adjoint.

Tensor crop_spatial(const Tensor& t, const Anchor& a);
Tensor slice_channels(const Tensor& t, int lo, int hi);
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor adaptive_avg_pool(const Tensor& t, int out_h, int out_w);
Tensor global_avg_pool(const Tensor& t);
Tensor add(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& t);

// Direct 2-D convolution, same-padding (pad = (kernel-1)/2, kernel odd),
// output spatial dims ceil(in/stride).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride);

// y = W v + b over the flattened per-sample features.
// weight shape (out, in, 1, 1), bias (1, out, 1, 1); output (n, out, 1, 1).
Tensor linear(const Tensor& v, const Tensor& weight, const Tensor& bias);

// Row-wise softmax over the channel axis of an (n, k, 1, 1) tensor.
Tensor softmax(const Tensor& logits);

// ---- autograd wrappers ---------------------------------------------------

VarPtr crop_spatial(const VarPtr& t, const Anchor& a);
VarPtr slice_channels(const VarPtr& t, int lo, int hi);
VarPtr concat_channels(const std::vector<VarPtr>& parts);
VarPtr adaptive_avg_pool(const VarPtr& t, int out_h, int out_w);
VarPtr global_avg_pool(const VarPtr& t);
VarPtr add(const VarPtr& a, const VarPtr& b);
VarPtr relu(const VarPtr& t);
VarPtr conv2d(const VarPtr& x, const VarPtr& weight, const VarPtr& bias, int stride);
VarPtr linear(const VarPtr& v, const VarPtr& weight, const VarPtr& bias);

// Scalar helpers for assembling weighted objectives.
VarPtr scale(const VarPtr& t, double factor);
VarPtr add_scalars(const std::vector<VarPtr>& terms);
// Sum of all elements, as a scalar; used by tests and gradient checks.
VarPtr sum(const VarPtr& t);

struct CrossEntropyResult {
    VarPtr loss;   // scalar, batch mean
    Tensor probs;  // (n, num_classes, 1, 1), rows sum to 1
};

// Numerically stable softmax cross-entropy against hard labels.
CrossEntropyResult softmax_cross_entropy(const VarPtr& logits, std::span<const int> labels);

} // namespace mgml
