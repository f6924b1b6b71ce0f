#include "mgml/net.hpp"

#include <algorithm>
#include <sstream>

namespace mgml {

BackboneConfig BackboneConfig::resnet34_like() {
    BackboneConfig cfg;
    cfg.stem = {7, 2, true};
    cfg.stages = {StageSpec{3, 64, 1, true}, StageSpec{4, 128, 2, true},
                  StageSpec{6, 256, 2, true}, StageSpec{3, 512, 2, true}};
    return cfg;
}

BackboneConfig BackboneConfig::tiny() {
    BackboneConfig cfg;
    cfg.stem = {3, 2, true};
    cfg.stages = {StageSpec{1, 16, 1, true}, StageSpec{1, 32, 2, true},
                  StageSpec{1, 64, 2, true}, StageSpec{1, 128, 2, true}};
    return cfg;
}

BackboneConfig BackboneConfig::preset(const std::string& name) {
    if (name == "resnet34-like") return resnet34_like();
    if (name == "tiny") return tiny();
    throw ConfigError("unknown backbone preset '" + name +
                      "' (expected 'tiny' or 'resnet34-like')");
}

void ModelConfig::validate() const {
    crop.validate();
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    for (double l : lambda)
        if (l < 0.0) throw ConfigError("lambda weights must be >= 0");
    for (const StageSpec& s : backbone.stages) {
        if (s.stride != 1 && s.stride != 2)
            throw ConfigError("stage stride must be 1 or 2");
        if (s.blocks < 1) throw ConfigError("stage must have at least one block");
    }
    if (backbone.stem.kernel != 3 && backbone.stem.kernel != 7)
        throw ConfigError("stem kernel must be 3 or 7");
    if (input_size < 32) throw ConfigError("input_size must be >= 32");
}

BranchSelect BranchSelect::parse(const std::string& spec) {
    BranchSelect sel{false, false};
    bool has_mb = false;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "mb") has_mb = true;
        else if (tok == "ffb") sel.ffb = true;
        else if (tok == "fem") sel.fem = true;
        else if (!tok.empty())
            throw ConfigError("unknown branch '" + tok + "' (expected mb, ffb, fem)");
    }
    if (!has_mb) throw ConfigError("branch selection must include the main branch 'mb'");
    return sel;
}

std::string BranchSelect::str() const {
    std::string s = "mb";
    if (ffb) s += ",ffb";
    if (fem) s += ",fem";
    return s;
}

// ----------------------------------------------------------------- stages

VarPtr MgmlNet::Stage::forward(VarPtr x) const {
    for (const ConvBlock& b : blocks) x = b.forward(x);
    return x;
}

MgmlNet::Stage MgmlNet::make_stage(const std::string& name, int in_channels,
                                   const StageSpec& spec, std::uint64_t seed,
                                   std::vector<ParamPtr>& sink) {
    Stage stage;
    int in_c = in_channels;
    for (int b = 0; b < spec.blocks; ++b) {
        const int stride = (b == 0) ? spec.stride : 1;
        stage.blocks.emplace_back(name + ".block" + std::to_string(b), in_c,
                                  spec.out_channels, stride, spec.residual,
                                  Rng::derive(seed, b));
        in_c = spec.out_channels;
    }
    std::size_t before = params_.size();
    for (const ConvBlock& b : stage.blocks) b.collect(params_);
    sink.insert(sink.end(), params_.begin() + before, params_.end());
    return stage;
}

// ------------------------------------------------------------ shape audit

namespace {

struct Dim {
    int c, h, w;
};

int ceil_div(int a, int b) { return (a + b - 1) / b; }

} // namespace

// Verifies at construction that cs_fg(F_{i+1}) and g_i(G_i) agree in shape
// at every fused level, for the configured nominal input size.
void MgmlNet::audit_ffb_shapes() const {
    const BackboneConfig& bb = cfg_.backbone;
    Dim f{bb.stages[0].out_channels, ceil_div(cfg_.input_size, bb.stem.stride),
          ceil_div(cfg_.input_size, bb.stem.stride)};
    if (bb.stem.pool) {
        f.h /= 2;
        f.w /= 2;
    }
    std::array<Dim, 5> F;
    F[0] = f;
    for (int i = 0; i < 4; ++i) {
        const StageSpec& s = bb.stages[i];
        F[i + 1] = {s.out_channels, ceil_div(F[i].h, s.stride), ceil_div(F[i].w, s.stride)};
    }
    Dim g{F[0].c, F[0].h / 2, F[0].w / 2};  // G_0 = cs_fg(F_0)
    for (int i = 0; i < 3; ++i) {
        const StageSpec& s = bb.stages[i];
        Dim gi{s.out_channels, ceil_div(g.h, s.stride), ceil_div(g.w, s.stride)};
        Dim hs{F[i + 1].c, F[i + 1].h / 2, F[i + 1].w / 2};  // cs_fg(F_{i+1})
        if (gi.c != hs.c || gi.h != hs.h || gi.w != hs.w) {
            throw ShapeError(
                "fusion branch level " + std::to_string(i) + " is shape-illegal: cs_fg "
                "gives " + std::to_string(hs.c) + "x" + std::to_string(hs.h) + "x" +
                std::to_string(hs.w) + " but the fused path gives " +
                std::to_string(gi.c) + "x" + std::to_string(gi.h) + "x" +
                std::to_string(gi.w));
        }
        g = gi;
    }
}

// ------------------------------------------------------------ construction

MgmlNet::MgmlNet(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const BackboneConfig& bb = cfg_.backbone;
    const int stem_out = bb.stages[0].out_channels;
    const int k = cfg_.crop.patch_count();
    const int c3 = bb.stages[2].out_channels;
    const int c4 = bb.stages[3].out_channels;

    stem_.emplace("stem", cfg_.input_channels, stem_out, bb.stem.kernel,
                  bb.stem.stride, Rng::derive(seed, 100));
    {
        std::size_t before = params_.size();
        stem_->collect(params_);
        params_main_.insert(params_main_.end(), params_.begin() + before, params_.end());
    }

    int in_c = stem_out;
    for (int i = 0; i < 4; ++i) {
        main_stages_[i] = make_stage("main.stage" + std::to_string(i + 1), in_c,
                                     bb.stages[i], Rng::derive(seed, 200 + i),
                                     params_main_);
        in_c = bb.stages[i].out_channels;
    }
    head_mb_.emplace("head.mb", c4, cfg_.num_classes, Rng::derive(seed, 300));
    {
        std::size_t before = params_.size();
        head_mb_->collect(params_);
        params_main_.insert(params_main_.end(), params_.begin() + before, params_.end());
    }

    // g_i mirrors main stage i+1's configuration with independent weights,
    // which is what makes the fusion addition shape-legal.
    in_c = stem_out;
    for (int i = 0; i < 4; ++i) {
        ffb_stages_[i] = make_stage("ffb.stage" + std::to_string(i + 1), in_c,
                                    bb.stages[i], Rng::derive(seed, 400 + i),
                                    params_ffb_);
        in_c = bb.stages[i].out_channels;
    }
    head_ffb_.emplace("head.ffb", c4, cfg_.num_classes, Rng::derive(seed, 500));
    {
        std::size_t before = params_.size();
        head_ffb_->collect(params_);
        params_ffb_.insert(params_ffb_.end(), params_.begin() + before, params_.end());
    }

    head_fem3_.emplace("head.fem3", c3 * k, cfg_.num_classes, Rng::derive(seed, 600));
    head_fem4_.emplace("head.fem4", c4 * k, cfg_.num_classes, Rng::derive(seed, 601));
    {
        std::size_t before = params_.size();
        head_fem3_->collect(params_);
        head_fem4_->collect(params_);
        params_fem_.insert(params_fem_.end(), params_.begin() + before, params_.end());
    }

    audit_ffb_shapes();
}

std::vector<ParamPtr> MgmlNet::params_for(const BranchSelect& select) const {
    std::vector<ParamPtr> out = params_main_;
    if (select.ffb) out.insert(out.end(), params_ffb_.begin(), params_ffb_.end());
    if (select.fem) out.insert(out.end(), params_fem_.begin(), params_fem_.end());
    return out;
}

// ---------------------------------------------------------------- forward

namespace {

void accumulate_probs(Tensor& sum, const Tensor& p) {
    if (sum.numel() == 0) {
        sum = p;
    } else {
        sum = add(sum, p);
    }
}

std::vector<int> argmax_rows(const Tensor& p) {
    const Shape s = p.shape();
    std::vector<int> out(s.n);
    for (int n = 0; n < s.n; ++n) {
        int best = 0;
        double best_v = p.at(n, 0, 0, 0);
        for (int j = 1; j < s.c; ++j) {
            const double v = p.at(n, j, 0, 0);
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        out[n] = best;
    }
    return out;
}

} // namespace

BranchOutputs MgmlNet::forward(const VarPtr& x, const BranchSelect& select,
                               bool retain_features) const {
    const Shape xs = x->value.shape();
    if (xs.c != cfg_.input_channels) {
        throw ShapeError("model expects " + std::to_string(cfg_.input_channels) +
                         " input channels, got " + xs.str());
    }
    BranchOutputs out;

    // Main branch (Eq. 1-2): F_i = f_i(F_{i-1}).
    std::array<VarPtr, 5> F;
    VarPtr cur = relu(stem_->forward(x));
    if (cfg_.backbone.stem.pool) {
        const Shape s = cur->value.shape();
        cur = adaptive_avg_pool(cur, s.h / 2, s.w / 2);
    }
    F[0] = cur;
    for (int i = 0; i < 4; ++i) F[i + 1] = main_stages_[i].forward(F[i]);
    out.logits_mb = head_mb_->forward(global_avg_pool(F[4]));
    out.p_mb = softmax(out.logits_mb->value);
    accumulate_probs(out.p_sum, out.p_mb);

    // Fusion branch: G_0 = cs_fg(F_0); G_{i+1} = cs_fg(F_{i+1}) + g_i(G_i).
    std::array<VarPtr, 5> G;
    if (select.ffb) {
        G[0] = cs_fg(F[0], cfg_.crop).tensor;
        for (int i = 0; i < 3; ++i) {
            VarPtr fused = ffb_stages_[i].forward(G[i]);
            VarPtr fresh = cs_fg(F[i + 1], cfg_.crop).tensor;
            if (fused->value.shape() != fresh->value.shape()) {
                throw ShapeError("fusion branch level " + std::to_string(i) +
                                 ": cannot add " + fresh->value.shape().str() +
                                 " and " + fused->value.shape().str());
            }
            G[i + 1] = add(fresh, fused);
        }
        G[4] = ffb_stages_[3].forward(G[3]);
        out.logits_ffb = head_ffb_->forward(global_avg_pool(G[4]));
        out.p_ffb = softmax(out.logits_ffb->value);
        accumulate_probs(out.p_sum, out.p_ffb);
    }

    // Ensemble heads over the last two levels.
    if (select.fem) {
        FcFgOutput v3 = fc_fg(F[3], cfg_.crop);
        FcFgOutput v4 = fc_fg(F[4], cfg_.crop);
        out.logits_fem3 = head_fem3_->forward(v3.tensor);
        out.logits_fem4 = head_fem4_->forward(v4.tensor);
        out.p_fem3 = softmax(out.logits_fem3->value);
        out.p_fem4 = softmax(out.logits_fem4->value);
        accumulate_probs(out.p_sum, out.p_fem3);
        accumulate_probs(out.p_sum, out.p_fem4);
        if (retain_features) {
            out.v3 = v3.tensor->value;
            out.v4 = v4.tensor->value;
        }
    }

    out.predicted = argmax_rows(out.p_sum);
    if (retain_features) {
        for (const VarPtr& f : F) out.features_main.push_back(f->value);
        if (select.ffb)
            for (const VarPtr& g : G) out.features_ffb.push_back(g->value);
    }
    return out;
}

BranchOutputs MgmlNet::forward(const Tensor& x, const BranchSelect& select,
                               bool retain_features) const {
    return forward(Variable::leaf(x), select, retain_features);
}

} // namespace mgml
