#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mgml/net.hpp"
#include "test_util.hpp"

using namespace mgml;
using mgml::testing::random_tensor;

namespace {

ModelConfig tiny_config(int input = 64, int classes = 8) {
    ModelConfig cfg;
    cfg.backbone = BackboneConfig::tiny();
    cfg.num_classes = classes;
    cfg.input_size = input;
    return cfg;
}

Tensor sample_image(int size, std::uint64_t seed) {
    Tensor x = random_tensor({1, 3, size, size}, seed, 0.3);
    for (double& v : x.data()) v = std::abs(v);
    return x;
}

} // namespace

TEST_CASE("tiny preset shape algebra at 64x64") {
    MgmlNet net(tiny_config(), 1);
    BranchOutputs out = net.forward(sample_image(64, 1), BranchSelect{true, true},
                                    /*retain_features=*/true);
    REQUIRE(out.features_main.size() == 5);
    CHECK(out.features_main[0].shape() == Shape{1, 16, 16, 16});
    CHECK(out.features_main[1].shape() == Shape{1, 16, 16, 16});
    CHECK(out.features_main[2].shape() == Shape{1, 32, 8, 8});
    CHECK(out.features_main[3].shape() == Shape{1, 64, 4, 4});
    CHECK(out.features_main[4].shape() == Shape{1, 128, 2, 2});

    REQUIRE(out.features_ffb.size() == 5);
    CHECK(out.features_ffb[0].shape() == Shape{1, 16, 8, 8});
    CHECK(out.features_ffb[4].shape() == Shape{1, 128, 1, 1});

    CHECK(out.v3.shape() == Shape{1, 448, 1, 1});   // 64 * 7
    CHECK(out.v4.shape() == Shape{1, 896, 1, 1});   // 128 * 7
}

TEST_CASE("grid crop changes the fem vector length: 64*9 = 576") {
    ModelConfig cfg = tiny_config();
    cfg.crop.strategy = CropStrategy::GridCrop;
    cfg.crop.grid_k = 2;
    MgmlNet net(cfg, 1);
    BranchOutputs out = net.forward(sample_image(64, 2), BranchSelect{true, true},
                                    true);
    CHECK(out.v3.shape() == Shape{1, 576, 1, 1});
    CHECK(out.v4.shape() == Shape{1, 1152, 1, 1});
}

TEST_CASE("ffb recurrence is shape-legal for both presets (construction audit)") {
    CHECK_NOTHROW(MgmlNet(tiny_config(64), 1));
    ModelConfig big;
    big.backbone = BackboneConfig::resnet34_like();
    big.num_classes = 30;
    big.input_size = 224;
    CHECK_NOTHROW(MgmlNet(big, 1));
}

TEST_CASE("probability vectors are normalized; p_sum rows total 4") {
    MgmlNet net(tiny_config(), 3);
    BranchOutputs out = net.forward(sample_image(64, 3));
    auto row_sum = [&](const Tensor& p) {
        double s = 0.0;
        for (int c = 0; c < p.shape().c; ++c) s += p.at(0, c, 0, 0);
        return s;
    };
    CHECK(row_sum(out.p_mb) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(row_sum(out.p_ffb) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(row_sum(out.p_fem3) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(row_sum(out.p_fem4) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(row_sum(out.p_sum) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("ensemble additivity: p_sum equals the exact sum of branch vectors") {
    MgmlNet net(tiny_config(), 4);
    BranchOutputs out = net.forward(sample_image(64, 4));
    for (int c = 0; c < 8; ++c) {
        const double manual = out.p_mb.at(0, c, 0, 0) + out.p_ffb.at(0, c, 0, 0) +
                              out.p_fem3.at(0, c, 0, 0) + out.p_fem4.at(0, c, 0, 0);
        CHECK(out.p_sum.at(0, c, 0, 0) == manual);
    }
}

TEST_CASE("branch selection controls which terms enter p_sum") {
    MgmlNet net(tiny_config(), 5);
    Tensor x = sample_image(64, 5);

    BranchOutputs main_only = net.forward(x, BranchSelect{false, false});
    for (int c = 0; c < 8; ++c) {
        CHECK(main_only.p_sum.at(0, c, 0, 0) == main_only.p_mb.at(0, c, 0, 0));
    }
    CHECK(main_only.p_ffb.numel() == 0);

    BranchOutputs with_fem = net.forward(x, BranchSelect{false, true});
    for (int c = 0; c < 8; ++c) {
        const double manual = with_fem.p_mb.at(0, c, 0, 0) +
                              with_fem.p_fem3.at(0, c, 0, 0) +
                              with_fem.p_fem4.at(0, c, 0, 0);
        CHECK(with_fem.p_sum.at(0, c, 0, 0) == manual);
    }

    BranchOutputs full = net.forward(x, BranchSelect{true, true});
    BranchOutputs main_again = net.forward(x, BranchSelect{false, false});
    for (int c = 0; c < 8; ++c) {
        CHECK(full.p_mb.at(0, c, 0, 0) == main_again.p_mb.at(0, c, 0, 0));
    }
}

TEST_CASE("branch independence: perturbing ffb weights leaves p_mb bit-identical") {
    MgmlNet net(tiny_config(), 6);
    Tensor x = sample_image(64, 6);
    BranchOutputs before = net.forward(x, BranchSelect{true, true});

    for (const ParamPtr& p : net.params()) {
        if (p->name.rfind("ffb", 0) == 0) {
            for (double& v : p->value().data()) v += 0.37;
        }
    }
    BranchOutputs after = net.forward(x, BranchSelect{true, true});
    bool mb_identical = true, ffb_changed = false;
    for (int c = 0; c < 8; ++c) {
        mb_identical = mb_identical &&
                       before.p_mb.at(0, c, 0, 0) == after.p_mb.at(0, c, 0, 0);
        ffb_changed = ffb_changed ||
                      before.p_ffb.at(0, c, 0, 0) != after.p_ffb.at(0, c, 0, 0);
    }
    CHECK(mb_identical);
    CHECK(ffb_changed);
}

TEST_CASE("uniform branches tie-break to class 0") {
    MgmlNet net(tiny_config(), 7);
    // zero every head weight and bias: all four branches emit uniform rows
    for (const ParamPtr& p : net.params()) {
        if (p->name.find("head") != std::string::npos) {
            for (double& v : p->value().data()) v = 0.0;
        }
    }
    BranchOutputs out = net.forward(sample_image(64, 7), BranchSelect{true, true});
    for (int c = 0; c < 8; ++c) {
        CHECK(out.p_mb.at(0, c, 0, 0) == doctest::Approx(0.125).epsilon(1e-12));
        CHECK(out.p_ffb.at(0, c, 0, 0) == doctest::Approx(0.125).epsilon(1e-12));
    }
    CHECK(out.predicted[0] == 0);
}

TEST_CASE("argmax invariant under common positive rescaling") {
    MgmlNet net(tiny_config(), 8);
    BranchOutputs out = net.forward(sample_image(64, 8));
    int manual = 0;
    for (int c = 1; c < 8; ++c) {
        if (3.7 * out.p_sum.at(0, c, 0, 0) > 3.7 * out.p_sum.at(0, manual, 0, 0)) {
            manual = c;
        }
    }
    CHECK(out.predicted[0] == manual);
}

TEST_CASE("branch parse accepts mb,ffb,fem forms and requires mb") {
    BranchSelect all = BranchSelect::parse("mb,ffb,fem");
    CHECK(all.ffb);
    CHECK(all.fem);
    BranchSelect mb = BranchSelect::parse("mb");
    CHECK(!mb.ffb);
    CHECK(!mb.fem);
    CHECK_THROWS_AS(BranchSelect::parse("ffb"), ConfigError);
    CHECK_THROWS_AS(BranchSelect::parse("mb,bogus"), ConfigError);
    CHECK_THROWS_AS(BranchSelect::parse(""), ConfigError);
}

TEST_CASE("model config validation") {
    ModelConfig cfg = tiny_config();
    cfg.num_classes = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.lambda[2] = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.crop.sigma = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("same seed constructs bit-identical models") {
    MgmlNet a(tiny_config(), 12345);
    MgmlNet b(tiny_config(), 12345);
    const auto& pa = a.params();
    const auto& pb = b.params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->name == pb[i]->name);
        REQUIRE(pa[i]->value().numel() == pb[i]->value().numel());
        for (std::size_t j = 0; j < pa[i]->value().numel(); ++j) {
            CHECK(pa[i]->value().data()[j] == pb[i]->value().data()[j]);
        }
    }
}

TEST_CASE("params_for covers exactly the trainable branches") {
    MgmlNet net(tiny_config(), 9);
    const std::size_t all = net.params().size();
    const std::size_t main_only = net.params_for(BranchSelect{false, false}).size();
    const std::size_t with_ffb = net.params_for(BranchSelect{true, false}).size();
    const std::size_t full = net.params_for(BranchSelect{true, true}).size();
    CHECK(main_only < with_ffb);
    CHECK(with_ffb < full);
    CHECK(full == all);
}
