#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mgml/tensor.hpp"

namespace mgml {

// A labeled image set; every image is (1, 3, size, size) with values in [0, 1].
struct Dataset {
    std::vector<Tensor> images;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    int num_classes() const { return static_cast<int>(class_names.size()); }
    std::size_t size() const { return images.size(); }
};

// Synthetic structured-scene generator. Classes are told apart by WHERE
// motifs sit, not which motifs appear: several class pairs share the same
// motif multiset with swapped regions, so global intensity statistics
// cannot separate them. Regions coincide with the 7-crop windows at
// sigma = 0.5 (corners, center, middle bands).
struct SceneSpec {
    int num_classes = 8;   // 2..8
    int image_size = 64;
    double noise_std = 0.10;
    std::uint64_t seed = 0;

    void validate() const;
};

// Class pairs that differ only in motif arrangement (for the structural
// ablation check); indices into the class list, valid under num_classes = 8.
std::vector<std::pair<int, int>> arrangement_confusable_pairs();

Dataset generate_scenes(const SceneSpec& spec, int count_per_class);

struct SplitSpec {
    double training_rate = 0.5;  // in (0, 1)
    std::uint64_t seed = 0;
};

// Stratified, seeded, disjoint train/test partition.
std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec);

// Reads `<root>/<class_name>/*.ppm|*.pgm` (binary P6/P5, maxval 255),
// classes ordered by sorted directory name. An optional manifest file
// (one "relative_path<TAB>class_name" per line) overrides the scan.
Dataset load_image_dir(const std::string& root);
Dataset load_image_dir(const std::string& root, const std::string& manifest_path);

// Loads a single binary PPM/PGM into (1, 3, h, w); grayscale is broadcast.
Tensor load_pnm(const std::string& path);
// Writes an image tensor as binary PPM, quantized to 8 bits.
void write_ppm(const Tensor& image, const std::string& path);

} // namespace mgml
