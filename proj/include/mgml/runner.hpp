#pragma once

#include <string>

#include "mgml/config.hpp"
#include "mgml/train.hpp"

namespace mgml {

// High-level command implementations behind the C API and CLI. Each call
// parses its config fully before touching the output directory, so a
// config error never leaves partial artifacts.

// Trains one model; writes metrics.csv, checkpoint.mgc and summary.json
// under out_dir. seed_override < 0 keeps the config seed.
void run_train(const std::string& config_path, const std::string& out_dir,
               long long seed_override, const std::string& branches);

// Evaluates a checkpoint on the configured test split; returns a plain
// JSON summary.
std::string run_eval(const std::string& config_path,
                     const std::string& checkpoint_path,
                     const std::string& branches);

// Trains the four ablation variants (baseline, +FFB, +FEM, full) over
// `train.runs` derived seeds; returns the mean +- std table and writes it
// (plus per-variant pairwise accuracies) under out_dir.
std::string run_ablate(const std::string& config_path, const std::string& out_dir,
                       long long seed_override);

// Table 4 style harness: full model under 7-crop and grid crop, identical
// seeds; two rows, no ordering asserted.
std::string run_crop_compare(const std::string& config_path,
                             const std::string& out_dir, long long seed_override);

// Re-runs one test sample through a checkpoint and dumps the input,
// F_0..F_4, G_0..G_4, v_3, v_4 as MGT1 files plus predictions.txt.
void run_dump_features(const std::string& config_path,
                       const std::string& checkpoint_path, int sample_index,
                       const std::string& out_dir);

// Writes the configured synthetic dataset as a PPM tree with a manifest.
void run_gen_data(const std::string& config_path, const std::string& out_dir);

std::string run_inspect_anchors(int h, int w, double sigma,
                                const std::string& strategy, int k);

} // namespace mgml
