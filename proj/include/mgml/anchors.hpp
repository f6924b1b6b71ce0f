#pragma once

#include <string>
#include <vector>

#include "mgml/errors.hpp"

namespace mgml {

// Integer crop rectangle in feature-map pixels, half-open on both axes:
// [x1, x2) x [y1, y2).
struct Anchor {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    bool operator==(const Anchor&) const = default;

    int width() const { return x2 - x1; }
    int height() const { return y2 - y1; }
    std::string str() const;
};

using AnchorList = std::vector<Anchor>;

enum class CropStrategy { SevenCrop, GridCrop };

struct CropConfig {
    CropStrategy strategy = CropStrategy::SevenCrop;
    double sigma = 0.5;  // crop scale, in (0, 1)
    int grid_k = 2;      // grid loop bound; the grid has (k+1)^2 windows

    void validate() const;
    // Number of patches this configuration produces.
    int patch_count() const;
};

// The seven fixed-position windows: four corners, center, middle-row
// band, middle-column band, in that order. Fractional coordinates are
// floored.
AnchorList propose_seven(int h, int w, double sigma);

// (k+1)^2 sliding windows of size floor(w*sigma) x floor(h*sigma) with
// strides h*(1-sigma)/k and w*(1-sigma)/k. Column index is the outer
// loop, row index the inner one.
AnchorList propose_grid(int h, int w, double sigma, int k);

// Dispatch on the configured strategy.
AnchorList propose(const CropConfig& cfg, int h, int w);

} // namespace mgml
