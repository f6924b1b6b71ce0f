#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mgml/generators.hpp"
#include "mgml/nn.hpp"

namespace mgml {

struct StemSpec {
    int kernel = 7;   // 7 or 3
    int stride = 2;
    bool pool = true; // extra 2x spatial downsample after the stem conv
};

struct StageSpec {
    int blocks = 1;
    int out_channels = 64;
    int stride = 1;   // stride of the stage's first block
    bool residual = true;
};

struct BackboneConfig {
    StemSpec stem;
    std::array<StageSpec, 4> stages;

    static BackboneConfig resnet34_like();
    static BackboneConfig tiny();
    static BackboneConfig preset(const std::string& name);
};

struct ModelConfig {
    BackboneConfig backbone = BackboneConfig::tiny();
    CropConfig crop;
    int num_classes = 8;
    std::array<double, 4> lambda = {1.0, 0.5, 0.2, 0.5};
    // Input side length used for the construction-time shape audit of the
    // fusion-branch recurrence.
    int input_size = 64;
    int input_channels = 3;

    void validate() const;
};

// Which auxiliary branches participate; the main branch always runs.
struct BranchSelect {
    bool ffb = true;
    bool fem = true;

    static BranchSelect parse(const std::string& spec);  // e.g. "mb,ffb,fem"
    std::string str() const;
};

struct BranchOutputs {
    // Per-branch class probabilities (n, num_classes, 1, 1); unselected
    // branches are left empty.
    Tensor p_mb, p_ffb, p_fem3, p_fem4;
    Tensor p_sum;                   // element-wise sum over selected branches
    std::vector<int> predicted;     // argmax of p_sum, ties to lowest index

    // Pre-softmax logits, kept alive for the training objective.
    VarPtr logits_mb, logits_ffb, logits_fem3, logits_fem4;

    // Intermediate features, filled only on request.
    std::vector<Tensor> features_main;  // F_0..F_4
    std::vector<Tensor> features_ffb;   // G_0..G_4
    Tensor v3, v4;
};

// Full model: main branch, feature-fusion branch, and the two
// full-channel ensemble heads over the last two feature levels.
class MgmlNet {
public:
    MgmlNet(ModelConfig cfg, std::uint64_t seed);

    BranchOutputs forward(const VarPtr& x, const BranchSelect& select = {},
                          bool retain_features = false) const;
    BranchOutputs forward(const Tensor& x, const BranchSelect& select = {},
                          bool retain_features = false) const;

    const ModelConfig& config() const { return cfg_; }

    // All parameters, in fixed construction order (checkpoint order).
    const std::vector<ParamPtr>& params() const { return params_; }
    // Parameters actually trained under a branch selection.
    std::vector<ParamPtr> params_for(const BranchSelect& select) const;

private:
    struct Stage {
        std::vector<ConvBlock> blocks;
        VarPtr forward(VarPtr x) const;
    };

    Stage make_stage(const std::string& name, int in_channels, const StageSpec& spec,
                     std::uint64_t seed, std::vector<ParamPtr>& sink);
    void audit_ffb_shapes() const;

    ModelConfig cfg_;
    std::optional<Conv2d> stem_;
    std::array<Stage, 4> main_stages_;
    std::array<Stage, 4> ffb_stages_;
    std::optional<LinearHead> head_mb_, head_ffb_, head_fem3_, head_fem4_;

    std::vector<ParamPtr> params_;
    std::vector<ParamPtr> params_main_, params_ffb_, params_fem_;
};

} // namespace mgml
