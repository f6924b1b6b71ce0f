#include "mgml/nn.hpp"

#include <cmath>
#include <numbers>

namespace mgml {

// splitmix64 step; small state, solid equidistribution for this use.
std::uint64_t Rng::next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = next_uniform();
    double v = next_uniform();
    if (u < 1e-300) u = 1e-300;
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

int Rng::next_below(int bound) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(bound));
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t salt) {
    Rng r(seed ^ (0xd1b54a32d192ed03ull * (salt + 1)));
    return r.next_u64();
}

Tensor he_normal_init(Shape shape, int fan_in, std::uint64_t seed) {
    Rng rng(seed);
    const double stddev = std::sqrt(2.0 / fan_in);
    Tensor t(shape);
    for (double& v : t.data()) v = stddev * rng.next_normal();
    return t;
}

ParamPtr make_param(std::string name, Tensor init) {
    auto p = std::make_shared<Param>();
    p->name = std::move(name);
    p->var = Variable::leaf(std::move(init), /*requires_grad=*/true);
    p->velocity = Tensor::zeros(p->var->value.shape());
    return p;
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel,
               int stride, std::uint64_t seed)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel),
      stride_(stride) {
    if (stride != 1 && stride != 2) throw ConfigError("conv stride must be 1 or 2");
    const int fan_in = in_channels * kernel * kernel;
    weight_ = make_param(name + ".weight",
                         he_normal_init({out_channels, in_channels, kernel, kernel},
                                        fan_in, Rng::derive(seed, 1)));
    bias_ = make_param(name + ".bias", Tensor::zeros({1, out_channels, 1, 1}));
}

VarPtr Conv2d::forward(const VarPtr& x) const {
    return conv2d(x, weight_->var, bias_->var, stride_);
}

void Conv2d::collect(std::vector<ParamPtr>& out) const {
    out.push_back(weight_);
    out.push_back(bias_);
}

// -------------------------------------------------------------- ConvBlock

ConvBlock::ConvBlock(std::string name, int in_channels, int out_channels, int stride,
                     bool has_residual, std::uint64_t seed)
    : conv_(name + ".conv", in_channels, out_channels, 3, stride, seed),
      has_residual_(has_residual) {
    if (has_residual && (in_channels != out_channels || stride != 1)) {
        projection_ = std::make_unique<Conv2d>(name + ".proj", in_channels,
                                               out_channels, 1, stride,
                                               Rng::derive(seed, 2));
    }
}

VarPtr ConvBlock::forward(const VarPtr& x) const {
    VarPtr y = conv_.forward(x);
    if (has_residual_) {
        y = add(y, projection_ ? projection_->forward(x) : x);
    }
    return relu(y);
}

void ConvBlock::collect(std::vector<ParamPtr>& out) const {
    conv_.collect(out);
    if (projection_) projection_->collect(out);
}

// ------------------------------------------------------------- LinearHead

LinearHead::LinearHead(std::string name, int in_features, int out_features,
                       std::uint64_t seed)
    : in_features_(in_features), out_features_(out_features) {
    weight_ = make_param(name + ".weight",
                         he_normal_init({out_features, in_features, 1, 1}, in_features,
                                        Rng::derive(seed, 1)));
    bias_ = make_param(name + ".bias", Tensor::zeros({1, out_features, 1, 1}));
}

VarPtr LinearHead::forward(const VarPtr& v) const {
    const Shape s = v->value.shape();
    if (s.c * s.h * s.w != in_features_) {
        throw ShapeError("linear head expects " + std::to_string(in_features_) +
                         " features, got input of shape " + s.str());
    }
    return linear(v, weight_->var, bias_->var);
}

void LinearHead::collect(std::vector<ParamPtr>& out) const {
    out.push_back(weight_);
    out.push_back(bias_);
}

// ---------------------------------------------------------------- SGD

void sgd_step(const OptimizerState& state, std::vector<ParamPtr>& params) {
    for (ParamPtr& p : params) {
        Tensor& value = p->value();
        if (!value.has_grad()) {
            throw UsageError("sgd_step: parameter " + p->name + " has no gradient");
        }
        auto g = value.grad();
        auto v = p->velocity.data();
        auto w = value.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = state.momentum * v[i] + (g[i] + state.weight_decay * w[i]);
            w[i] -= state.learning_rate * v[i];
        }
    }
}

void zero_grads(std::vector<ParamPtr>& params) {
    for (ParamPtr& p : params) p->value().zero_grad();
}

double lr_schedule(int epoch, double base_lr, const std::vector<int>& milestones,
                   double factor) {
    double lr = base_lr;
    for (int m : milestones)
        if (epoch >= m) lr /= factor;
    return lr;
}

} // namespace mgml
