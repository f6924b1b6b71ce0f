#include "mgml/generators.hpp"

#include <map>
#include <tuple>

namespace mgml {

std::vector<ChannelRange> patch_channel_ranges(int channels, int patches) {
    if (patches < 1) throw ConfigError("patch count must be >= 1");
    if (channels < patches) {
        throw ConfigError("channel-separate extraction needs at least one channel "
                          "per patch: " + std::to_string(channels) + " channels for " +
                          std::to_string(patches) + " patches");
    }
    const int per_patch = channels / patches;
    std::vector<ChannelRange> ranges;
    ranges.reserve(patches);
    for (int j = 0; j < patches; ++j) {
        const int lo = j * per_patch;
        const int hi = (j == patches - 1) ? channels : (j + 1) * per_patch;
        ranges.emplace_back(lo, hi);
    }
    return ranges;
}

CsFgOutput channel_separate_extract(const VarPtr& f, const AnchorList& anchors) {
    const Shape s = f->value.shape();
    if (s.h < 2 || s.w < 2) {
        throw ShapeError("channel_separate_extract: spatial dims must be >= 2, got " +
                         s.str());
    }
    const int k = static_cast<int>(anchors.size());
    auto ranges = patch_channel_ranges(s.c, k);
    const int out_h = s.h / 2;
    const int out_w = s.w / 2;
    std::vector<VarPtr> patches;
    patches.reserve(k);
    for (int j = 0; j < k; ++j) {
        VarPtr patch = slice_channels(f, ranges[j].first, ranges[j].second);
        patch = crop_spatial(patch, anchors[j]);
        patch = adaptive_avg_pool(patch, out_h, out_w);
        patches.push_back(std::move(patch));
    }
    return {concat_channels(patches), std::move(ranges)};
}

FcFgOutput full_channel_extract(const VarPtr& f, const AnchorList& anchors) {
    std::vector<VarPtr> parts;
    parts.reserve(anchors.size());
    for (const Anchor& a : anchors) {
        parts.push_back(global_avg_pool(crop_spatial(f, a)));
    }
    return {concat_channels(parts)};
}

namespace {

// Anchor lists are pure in (h, w, cfg); memoized per thread.
const AnchorList& cached_anchors(const CropConfig& cfg, int h, int w) {
    using Key = std::tuple<int, int, int, double, int>;
    thread_local std::map<Key, AnchorList> cache;
    Key key{h, w, static_cast<int>(cfg.strategy), cfg.sigma, cfg.grid_k};
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, propose(cfg, h, w)).first;
    return it->second;
}

} // namespace

CsFgOutput cs_fg(const VarPtr& f, const CropConfig& cfg) {
    const Shape s = f->value.shape();
    return channel_separate_extract(f, cached_anchors(cfg, s.h, s.w));
}

FcFgOutput fc_fg(const VarPtr& f, const CropConfig& cfg) {
    const Shape s = f->value.shape();
    return full_channel_extract(f, cached_anchors(cfg, s.h, s.w));
}

} // namespace mgml
