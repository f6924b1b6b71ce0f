#include "mgml/anchors.hpp"

#include <cmath>

namespace mgml {

std::string Anchor::str() const {
    return "(" + std::to_string(x1) + "," + std::to_string(y1) + "," +
           std::to_string(x2) + "," + std::to_string(y2) + ")";
}

void CropConfig::validate() const {
    if (!(sigma > 0.0 && sigma < 1.0)) {
        throw ConfigError("crop sigma must lie in (0, 1), got " + std::to_string(sigma));
    }
    if (grid_k < 1) {
        throw ConfigError("grid_k must be >= 1, got " + std::to_string(grid_k));
    }
}

int CropConfig::patch_count() const {
    return strategy == CropStrategy::SevenCrop ? 7 : (grid_k + 1) * (grid_k + 1);
}

namespace {

int fl(double v) { return static_cast<int>(std::floor(v)); }

void check_degenerate(const AnchorList& anchors, int h, int w, double sigma) {
    for (const Anchor& a : anchors) {
        if (a.x1 >= a.x2 || a.y1 >= a.y2) {
            throw ConfigError("degenerate crop window " + a.str() + " on " +
                              std::to_string(h) + "x" + std::to_string(w) +
                              " map with sigma " + std::to_string(sigma) +
                              "; use a larger sigma or input");
        }
    }
}

} // namespace

AnchorList propose_seven(int h, int w, double sigma) {
    if (!(sigma > 0.0 && sigma < 1.0)) {
        throw ConfigError("crop sigma must lie in (0, 1), got " + std::to_string(sigma));
    }
    const double W = w, H = h;
    AnchorList a(7);
    a[0] = {0, 0, fl(W * sigma), fl(H * sigma)};
    a[1] = {0, fl(H * (1 - sigma)), fl(W * sigma), h};
    a[2] = {fl(W * (1 - sigma)), 0, w, fl(H * sigma)};
    a[3] = {fl(W * (1 - sigma)), fl(H * (1 - sigma)), w, h};
    a[4] = {fl(W * (1 - sigma) / 2), fl(H * (1 - sigma) / 2),
            fl(W * (1 + sigma) / 2), fl(H * (1 + sigma) / 2)};
    a[5] = {0, fl(H * (1 - sigma) / 2), w, fl(H * (1 + sigma) / 2)};
    a[6] = {fl(W * (1 - sigma) / 2), 0, fl(W * (1 + sigma) / 2), h};
    check_degenerate(a, h, w, sigma);
    return a;
}

AnchorList propose_grid(int h, int w, double sigma, int k) {
    if (!(sigma > 0.0 && sigma < 1.0)) {
        throw ConfigError("crop sigma must lie in (0, 1), got " + std::to_string(sigma));
    }
    if (k < 1) throw ConfigError("grid k must be >= 1, got " + std::to_string(k));
    const double sh = h * (1 - sigma) / k;
    const double sw = w * (1 - sigma) / k;
    AnchorList a;
    a.reserve(static_cast<std::size_t>(k + 1) * (k + 1));
    for (int m = 0; m <= k; ++m) {
        for (int n = 0; n <= k; ++n) {
            a.push_back({fl(m * sw), fl(n * sh),
                         fl(m * sw + w * sigma), fl(n * sh + h * sigma)});
        }
    }
    check_degenerate(a, h, w, sigma);
    return a;
}

AnchorList propose(const CropConfig& cfg, int h, int w) {
    cfg.validate();
    return cfg.strategy == CropStrategy::SevenCrop
               ? propose_seven(h, w, cfg.sigma)
               : propose_grid(h, w, cfg.sigma, cfg.grid_k);
}

} // namespace mgml
