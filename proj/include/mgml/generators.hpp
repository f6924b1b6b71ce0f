#pragma once

#include <utility>
#include <vector>

#include "mgml/anchors.hpp"
#include "mgml/autograd.hpp"
#include "mgml/ops.hpp"

namespace mgml {

// Channel range [lo, hi) owned by one crop patch.
using ChannelRange = std::pair<int, int>;

// Disjoint channel partition of [0, C) over k patches: each patch takes
// floor(C/k) channels, the last absorbs the remainder.
std::vector<ChannelRange> patch_channel_ranges(int channels, int patches);

struct CsFgOutput {
    VarPtr tensor;  // (n, C, floor(H/2), floor(W/2))
    std::vector<ChannelRange> patch_channel_ranges;
};

struct FcFgOutput {
    VarPtr tensor;  // (n, C*k, 1, 1)
};

// Channel-separate extractor: patch j keeps its channel slice, is cropped
// by anchor j, pooled to (floor(H/2), floor(W/2)), and the patches are
// re-concatenated in anchor order.
CsFgOutput channel_separate_extract(const VarPtr& f, const AnchorList& anchors);

// Full-channel extractor: every patch keeps all channels and collapses to
// a per-channel mean; the k pooled vectors are concatenated.
FcFgOutput full_channel_extract(const VarPtr& f, const AnchorList& anchors);

// Region proposal composed with the extractors; anchors are a pure
// function of (H, W, cfg) and cached per shape.
CsFgOutput cs_fg(const VarPtr& f, const CropConfig& cfg);
FcFgOutput fc_fg(const VarPtr& f, const CropConfig& cfg);

} // namespace mgml
