#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mgml/autograd.hpp"
#include "mgml/ops.hpp"

namespace mgml {

// Deterministic seeded RNG used for initialization and shuffling.
// Normal deviates come from an explicit Box-Muller transform so the bit
// stream does not depend on the standard library's distribution choices.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64();
    double next_uniform();               // in [0, 1)
    double next_normal();                // standard normal
    int next_below(int bound);           // uniform in [0, bound)

    // Derives an independent stream, e.g. per training run or parameter.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt);

private:
    std::uint64_t state_;
};

// A named trainable tensor plus its SGD velocity buffer.
struct Param {
    std::string name;
    VarPtr var;
    Tensor velocity;

    Tensor& value() { return var->value; }
    const Tensor& value() const { return var->value; }
};

using ParamPtr = std::shared_ptr<Param>;

// He-style scaled normal init: N(0, sqrt(2 / fan_in)), bit-reproducible
// as a pure function of (seed, shape).
Tensor he_normal_init(Shape shape, int fan_in, std::uint64_t seed);

ParamPtr make_param(std::string name, Tensor init);

// Plain convolution layer (odd square kernel, same padding).
class Conv2d {
public:
    Conv2d(std::string name, int in_channels, int out_channels, int kernel,
           int stride, std::uint64_t seed);

    VarPtr forward(const VarPtr& x) const;
    void collect(std::vector<ParamPtr>& out) const;

    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }
    int stride() const { return stride_; }

private:
    int in_channels_, out_channels_, kernel_, stride_;
    ParamPtr weight_, bias_;
};

// 3x3 conv + optional identity/projection residual + rectifier.
// The projection (1x1, matching stride) kicks in exactly when the block
// changes shape.
class ConvBlock {
public:
    ConvBlock(std::string name, int in_channels, int out_channels, int stride,
              bool has_residual, std::uint64_t seed);

    VarPtr forward(const VarPtr& x) const;
    void collect(std::vector<ParamPtr>& out) const;

    int out_channels() const { return conv_.out_channels(); }
    int stride() const { return conv_.stride(); }

private:
    Conv2d conv_;
    bool has_residual_;
    std::unique_ptr<Conv2d> projection_;  // only when residual and shape changes
};

// Fully-connected classification head over flattened features.
class LinearHead {
public:
    LinearHead(std::string name, int in_features, int out_features, std::uint64_t seed);

    VarPtr forward(const VarPtr& v) const;
    void collect(std::vector<ParamPtr>& out) const;

    int in_features() const { return in_features_; }

private:
    int in_features_, out_features_;
    ParamPtr weight_, bias_;
};

// SGD with momentum and coupled weight decay:
//   v <- m*v + (g + wd*p);  p <- p - lr*v
struct OptimizerState {
    double learning_rate = 0.005;
    double momentum = 0.9;
    double weight_decay = 0.0005;
};

void sgd_step(const OptimizerState& state, std::vector<ParamPtr>& params);
void zero_grads(std::vector<ParamPtr>& params);

// Step decay: base_lr / factor^(milestones passed).
double lr_schedule(int epoch, double base_lr, const std::vector<int>& milestones,
                   double factor = 10.0);

} // namespace mgml
