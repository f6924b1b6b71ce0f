#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mgml/nn.hpp"
#include "test_util.hpp"

using namespace mgml;
using mgml::testing::grad_check;
using mgml::testing::random_tensor;
using mgml::testing::weighted_sum;

TEST_CASE("conv2d with a centered delta kernel is the identity") {
    Tensor x = random_tensor({1, 1, 5, 5}, 1, 0.5);
    for (double& v : x.data()) v = std::abs(v) + 0.1;  // all positive
    Tensor w({1, 1, 3, 3});
    w.at(0, 0, 1, 1) = 1.0;
    Tensor b({1, 1, 1, 1});
    Tensor y = conv2d(x, w, b, 1);
    REQUIRE(y.shape() == x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("conv2d zero weights produce zeros; stride halves spatial dims") {
    Tensor x = random_tensor({2, 3, 8, 8}, 2);
    Tensor w({4, 3, 3, 3});
    Tensor b({1, 4, 1, 1});
    Tensor y = conv2d(x, w, b, 2);
    CHECK(y.shape() == Shape{2, 4, 4, 4});
    for (double v : y.data()) CHECK(v == 0.0);

    CHECK(conv2d(x, w, b, 1).shape() == Shape{2, 4, 8, 8});
    // odd input, stride 2: ceil rule
    Tensor o = random_tensor({1, 3, 7, 5}, 3);
    CHECK(conv2d(o, w, b, 2).shape() == Shape{1, 4, 4, 3});
}

TEST_CASE("conv2d rejects channel mismatch") {
    Tensor x({1, 2, 4, 4});
    Tensor w({1, 3, 3, 3});
    Tensor b({1, 1, 1, 1});
    CHECK_THROWS_AS(conv2d(x, w, b, 1), ShapeError);
}

TEST_CASE("linear examples") {
    SUBCASE("identity weights") {
        Tensor v({1, 3, 1, 1}, {1.0, -2.0, 3.0});
        Tensor w({3, 3, 1, 1});
        for (int i = 0; i < 3; ++i) w.at(i, i, 0, 0) = 1.0;
        Tensor b({1, 3, 1, 1});
        Tensor y = linear(v, w, b);
        for (int i = 0; i < 3; ++i) CHECK(y.at(0, i, 0, 0) == v.at(0, i, 0, 0));
    }
    SUBCASE("zero weights return the bias") {
        Tensor v({1, 4, 1, 1}, {9.0, 9.0, 9.0, 9.0});
        Tensor w({2, 4, 1, 1});
        Tensor b({1, 2, 1, 1}, {1.0, 2.0});
        Tensor y = linear(v, w, b);
        CHECK(y.at(0, 0, 0, 0) == 1.0);
        CHECK(y.at(0, 1, 0, 0) == 2.0);
    }
    SUBCASE("W=[[1,1]], b=[0], v=[3,4] -> [7]") {
        Tensor v({1, 2, 1, 1}, {3.0, 4.0});
        Tensor w({1, 2, 1, 1}, {1.0, 1.0});
        Tensor b({1, 1, 1, 1});
        CHECK(linear(v, w, b).at(0, 0, 0, 0) == 7.0);
    }
    SUBCASE("feature-count mismatch") {
        Tensor v({1, 3, 1, 1});
        Tensor w({1, 2, 1, 1});
        Tensor b({1, 1, 1, 1});
        CHECK_THROWS_AS(linear(v, w, b), ShapeError);
    }
}

TEST_CASE("softmax cross-entropy examples") {
    SUBCASE("all-zero logits over 45 classes") {
        VarPtr logits = Variable::leaf(Tensor({1, 45, 1, 1}), false);
        int label = 0;
        auto r = softmax_cross_entropy(logits, std::span<const int>(&label, 1));
        CHECK(r.loss->value.data()[0] ==
              doctest::Approx(std::log(45.0)).epsilon(1e-12));
        for (int c = 0; c < 45; ++c) {
            CHECK(r.probs.at(0, c, 0, 0) == doctest::Approx(1.0 / 45).epsilon(1e-12));
        }
    }
    SUBCASE("saturated logits give near-zero loss") {
        VarPtr logits = Variable::leaf(Tensor({1, 2, 1, 1}, {10.0, -10.0}), false);
        int label = 0;
        auto r = softmax_cross_entropy(logits, std::span<const int>(&label, 1));
        CHECK(r.loss->value.data()[0] < 1e-8);
    }
    SUBCASE("logits [1,2], label 1 -> ln(1+e^-1)") {
        VarPtr logits = Variable::leaf(Tensor({1, 2, 1, 1}, {1.0, 2.0}), false);
        int label = 1;
        auto r = softmax_cross_entropy(logits, std::span<const int>(&label, 1));
        CHECK(r.loss->value.data()[0] ==
              doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
    }
    SUBCASE("invalid label") {
        VarPtr logits = Variable::leaf(Tensor({1, 2, 1, 1}), false);
        int label = 2;
        CHECK_THROWS_AS(
            softmax_cross_entropy(logits, std::span<const int>(&label, 1)), Error);
    }
}

TEST_CASE("softmax probabilities: rows sum to 1, entries in (0,1)") {
    Tensor logits = random_tensor({3, 11, 1, 1}, 4, 3.0);
    Tensor p = softmax(logits);
    for (int n = 0; n < 3; ++n) {
        double s = 0.0;
        for (int c = 0; c < 11; ++c) {
            const double v = p.at(n, c, 0, 0);
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("loss invariant to constant logit shifts") {
    Tensor logits = random_tensor({2, 6, 1, 1}, 5, 2.0);
    Tensor shifted = logits;
    for (double& v : shifted.data()) v += 137.25;
    std::vector<int> labels = {3, 1};
    auto a = softmax_cross_entropy(Variable::leaf(logits), labels);
    auto b = softmax_cross_entropy(Variable::leaf(shifted), labels);
    CHECK(std::abs(a.loss->value.data()[0] - b.loss->value.data()[0]) < 1e-10);
}

TEST_CASE("sgd examples") {
    auto one_param = [](double p0) {
        auto param = make_param("p", Tensor({1, 1, 1, 1}, {p0}));
        param->var->value.ensure_grad();
        return param;
    };
    SUBCASE("p=1, g=1, lr=0.1, m=0, wd=0 -> 0.9") {
        auto p = one_param(1.0);
        p->var->value.grad()[0] = 1.0;
        std::vector<ParamPtr> ps = {p};
        sgd_step({0.1, 0.0, 0.0}, ps);
        CHECK(p->value().data()[0] == doctest::Approx(0.9).epsilon(1e-15));
    }
    SUBCASE("zero gradient with zero velocity is a fixed point") {
        auto p = one_param(2.5);
        p->var->value.grad()[0] = 0.0;
        std::vector<ParamPtr> ps = {p};
        sgd_step({0.3, 0.9, 0.0}, ps);
        CHECK(p->value().data()[0] == 2.5);
    }
    SUBCASE("momentum hand-iteration: p=0 -> -1 -> -2.5") {
        auto p = one_param(0.0);
        std::vector<ParamPtr> ps = {p};
        p->var->value.grad()[0] = 1.0;
        sgd_step({1.0, 0.5, 0.0}, ps);
        CHECK(p->value().data()[0] == doctest::Approx(-1.0).epsilon(1e-15));
        p->var->value.grad()[0] = 1.0;
        sgd_step({1.0, 0.5, 0.0}, ps);
        CHECK(p->value().data()[0] == doctest::Approx(-2.5).epsilon(1e-15));
    }
    SUBCASE("lr = 0 is the identity") {
        auto p = one_param(1.25);
        p->var->value.grad()[0] = 3.0;
        std::vector<ParamPtr> ps = {p};
        sgd_step({0.0, 0.9, 0.0005}, ps);
        CHECK(p->value().data()[0] == 1.25);
    }
    SUBCASE("missing gradient is a usage error") {
        auto p = make_param("p", Tensor({1, 1, 1, 1}, {1.0}));
        std::vector<ParamPtr> ps = {p};
        CHECK_THROWS_AS(sgd_step({0.1, 0.9, 0.0}, ps), UsageError);
    }
}

TEST_CASE("lr schedule follows the step-decay recipe") {
    const std::vector<int> milestones = {90, 150};
    CHECK(lr_schedule(0, 0.005, milestones) == doctest::Approx(0.005).epsilon(1e-15));
    CHECK(lr_schedule(89, 0.005, milestones) == doctest::Approx(0.005).epsilon(1e-15));
    CHECK(lr_schedule(90, 0.005, milestones) == doctest::Approx(0.0005).epsilon(1e-12));
    CHECK(lr_schedule(150, 0.005, milestones) ==
          doctest::Approx(0.00005).epsilon(1e-12));
    CHECK(lr_schedule(199, 0.005, milestones) ==
          doctest::Approx(0.00005).epsilon(1e-12));
}

TEST_CASE("initialization is a pure function of (seed, shape)") {
    Tensor a = he_normal_init({4, 3, 3, 3}, 27, 42);
    Tensor b = he_normal_init({4, 3, 3, 3}, 27, 42);
    Tensor c = he_normal_init({4, 3, 3, 3}, 27, 43);
    REQUIRE(a.numel() == b.numel());
    bool identical = true, different = false;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        identical = identical && a.data()[i] == b.data()[i];
        different = different || a.data()[i] != c.data()[i];
    }
    CHECK(identical);
    CHECK(different);
}

TEST_CASE("finite-difference gradients: conv, linear, cross-entropy") {
    SUBCASE("conv2d stride 1 and 2, all inputs") {
        for (int stride : {1, 2}) {
            Tensor x = random_tensor({1, 2, 5, 5}, 10 + stride);
            Tensor w = random_tensor({3, 2, 3, 3}, 20 + stride, 0.5);
            Tensor b = random_tensor({1, 3, 1, 1}, 30 + stride, 0.1);
            auto r = grad_check({x, w, b}, [stride](const std::vector<VarPtr>& v) {
                return weighted_sum(conv2d(v[0], v[1], v[2], stride), 11);
            });
            CHECK(r.max_rel_err < 1e-6);
        }
    }
    SUBCASE("linear") {
        Tensor x = random_tensor({2, 6, 1, 1}, 13);
        Tensor w = random_tensor({4, 6, 1, 1}, 14, 0.5);
        Tensor b = random_tensor({1, 4, 1, 1}, 15, 0.1);
        auto r = grad_check({x, w, b}, [](const std::vector<VarPtr>& v) {
            return weighted_sum(linear(v[0], v[1], v[2]), 13);
        });
        CHECK(r.max_rel_err < 1e-6);
    }
    SUBCASE("softmax cross-entropy") {
        Tensor logits = random_tensor({3, 5, 1, 1}, 16, 2.0);
        std::vector<int> labels = {0, 4, 2};
        auto r = grad_check({logits}, [&](const std::vector<VarPtr>& v) {
            return softmax_cross_entropy(v[0], labels).loss;
        });
        CHECK(r.max_rel_err < 1e-6);
    }
    SUBCASE("conv block with residual projection") {
        ConvBlock block("b", 2, 3, 2, true, 99);
        Tensor x = random_tensor({1, 2, 4, 4}, 17);
        auto r = grad_check({x}, [&](const std::vector<VarPtr>& v) {
            return weighted_sum(block.forward(v[0]), 17);
        });
        CHECK(r.max_rel_err < 1e-6);
    }
}
