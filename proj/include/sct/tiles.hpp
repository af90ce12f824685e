#pragma once

#include "sct/volume.hpp"

#include <random>
#include <utility>
#include <vector>

namespace sct::tiles {

// Inference tiling geometry: patches of edge `patch`, placed every `stride`
// voxels, with `crop` border voxels of each output patch discarded before
// fusion (except on edges that touch the slice border).
struct TileSpec {
    int patch = 32;
    int stride = 32;
    int crop = 0;

    void validate() const;
    std::string label() const;             // e.g. "P32s8c4"
    std::string paper_label() const;       // same geometry scaled to the paper's P=128
};

struct AugmentParams {
    float rot_deg_min = -3.5f, rot_deg_max = 3.5f;
    float scale_min = 0.9f, scale_max = 1.1f;
    float shear_min = 0.97f, shear_max = 1.03f;
    int cuts_per_slice = 5;
    int max_tries = 100;
    bool mirror = true;

    void validate() const;
};

// Patch origins along one axis: 0, s, 2s, ... plus a final origin clamped so
// the last patch ends exactly at the border.
std::vector<int> axis_origins(int extent, const TileSpec& spec);

// All (ox, oy) patch origins for a W x H slice. Requires W, H >= patch.
std::vector<std::pair<int, int>> plan_tiles(int width, int height, const TileSpec& spec);

// Retained half-open interval [begin, end) of a patch at `origin`: the crop
// border is dropped except where the patch edge coincides with the slice
// border, so border voxels always receive at least one estimate.
std::pair<int, int> retained_interval(int origin, int extent, const TileSpec& spec);

// Interior maximum of per-voxel estimate counts for one view:
// ceil((P - 2c) / s)^2.
int estimates_per_voxel(const TileSpec& spec);

// One paired training patch in network units [0, 255].
struct PatchPair {
    Image2D mr;
    Image2D ct;
};

// Applies one shared affine draw (rotation/scale/shear about the slice
// center, bilinear) to the pair, then takes cuts_per_slice random windows.
// All-air cuts (MR all zero and CT all air in network units) are redrawn up
// to max_tries, after which the last draw is kept.
std::vector<PatchPair> augment_slice(const Image2D& mr_slice, const Image2D& ct_slice, int patch,
                                     const AugmentParams& params, std::mt19937_64& rng);

// slices x (mirror ? 2 : 1) x cuts_per_slice x epochs
std::int64_t epoch_patch_count(std::int64_t slices_per_view, const AugmentParams& params,
                               int epochs);

} // namespace sct::tiles
