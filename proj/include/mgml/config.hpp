#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mgml/net.hpp"

namespace mgml {

struct TrainConfig {
    int epochs = 60;
    int batch_size = 16;
    double base_lr = 0.005;
    std::vector<int> milestones = {90, 150};
    double lr_factor = 10.0;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    std::uint64_t seed = 0;
    int runs = 5;  // repetitions for mean/std reporting

    void validate() const;
};

enum class DataKind { Synthetic, Directory };

struct DataConfig {
    DataKind kind = DataKind::Synthetic;
    std::string path;      // dataset root for kind = Directory
    std::string manifest;  // optional manifest file
    int image_size = 64;
    int per_class = 50;
    double noise_std = 0.10;
    double training_rate = 0.5;
    std::uint64_t seed = 1;
};

// One experiment description: model, optimizer schedule, and data source.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    DataConfig data;
};

// Flat "key = value" file, '#' comments. Parsing is strict: unknown keys
// and missing required keys are configuration errors.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

} // namespace mgml
