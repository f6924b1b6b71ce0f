// Command-line front end for the MGML-FENet library. Talks to the core
// exclusively through the C API, exactly as an external consumer would.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "mgml/mgml_c.h"

namespace {

int report(mgml_status status) {
    if (status != MGML_OK) {
        std::fprintf(stderr, "error: %s\n", mgml_last_error());
    }
    return static_cast<int>(status);
}

int print_and_free(mgml_status status, char* text) {
    if (status == MGML_OK && text != nullptr) {
        std::fputs(text, stdout);
        mgml_string_free(text);
    }
    return report(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MGML-FENet: multi-granularity multi-level feature "
                 "ensemble network for scene classification"};
    app.require_subcommand(1);

    std::string config, out_dir, checkpoint, branches, strategy = "7crop";
    long long seed = -1;
    int sample = 0, h = 8, w = 8, k = 2;
    double sigma = 0.5;

    auto* train = app.add_subcommand("train", "Train one model");
    train->add_option("--config", config, "Config file")->required();
    train->add_option("--out", out_dir, "Output directory")->required();
    train->add_option("--seed", seed, "Override train.seed");
    train->add_option("--branches", branches, "Branch list, e.g. mb,ffb,fem");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--config", config, "Config file")->required();
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    eval->add_option("--branches", branches, "Branch list, e.g. mb,ffb,fem");

    auto* ablate = app.add_subcommand("ablate", "Run the branch ablation grid");
    ablate->add_option("--config", config, "Config file")->required();
    ablate->add_option("--out", out_dir, "Output directory for ablation.csv");
    ablate->add_option("--seed", seed, "Override train.seed");

    auto* cropcmp = app.add_subcommand("crop-compare",
                                       "Compare 7-crop vs grid anchors");
    cropcmp->add_option("--config", config, "Config file")->required();
    cropcmp->add_option("--out", out_dir, "Output directory for crop_compare.csv");
    cropcmp->add_option("--seed", seed, "Override train.seed");

    auto* dump = app.add_subcommand("dump-features",
                                    "Dump per-stage features for one sample");
    dump->add_option("--config", config, "Config file")->required();
    dump->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    dump->add_option("--sample", sample, "Test-set sample index");
    dump->add_option("--out", out_dir, "Output directory")->required();

    auto* gen = app.add_subcommand("gen-data", "Write the synthetic dataset");
    gen->add_option("--config", config, "Config file")->required();
    gen->add_option("--out", out_dir, "Output directory")->required();

    auto* anchors = app.add_subcommand("inspect-anchors",
                                       "Print anchor windows for a feature map");
    anchors->add_option("--h,--height", h, "Feature-map height");
    anchors->add_option("--w,--width", w, "Feature-map width");
    anchors->add_option("--sigma", sigma, "Crop scale in (0, 1)");
    anchors->add_option("--strategy", strategy, "'7crop' or 'grid'");
    anchors->add_option("--k", k, "Grid refinement (grid strategy)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage errors are config errors
    }

    const char* branch_arg = branches.empty() ? nullptr : branches.c_str();
    char* text = nullptr;
    if (train->parsed()) {
        return report(mgml_train(config.c_str(), out_dir.c_str(), seed, branch_arg));
    }
    if (eval->parsed()) {
        const mgml_status st =
            mgml_eval(config.c_str(), checkpoint.c_str(), branch_arg, &text);
        return print_and_free(st, text);
    }
    if (ablate->parsed()) {
        const char* out = out_dir.empty() ? nullptr : out_dir.c_str();
        const mgml_status st = mgml_ablate(config.c_str(), out, seed, &text);
        return print_and_free(st, text);
    }
    if (cropcmp->parsed()) {
        const char* out = out_dir.empty() ? nullptr : out_dir.c_str();
        const mgml_status st = mgml_crop_compare(config.c_str(), out, seed, &text);
        return print_and_free(st, text);
    }
    if (dump->parsed()) {
        return report(mgml_dump_features(config.c_str(), checkpoint.c_str(),
                                         sample, out_dir.c_str()));
    }
    if (gen->parsed()) {
        return report(mgml_gen_data(config.c_str(), out_dir.c_str()));
    }
    if (anchors->parsed()) {
        const mgml_status st =
            mgml_inspect_anchors(h, w, sigma, strategy.c_str(), k, &text);
        return print_and_free(st, text);
    }
    return 2;
}
