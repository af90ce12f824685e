#pragma once

#include "sct/volume.hpp"

namespace sct::prep {

// MR clip rule applied before scaling to the [0,255] network range.
struct ClipPolicy {
    enum class Kind { DynamicPercentile, Static };
    Kind kind = Kind::Static;
    double value = 2500.0; // percent for DynamicPercentile, raw intensity for Static

    static ClipPolicy dynamic_percentile(double p = 99.0);
    static ClipPolicy static_clip(double v = 2500.0);
    void validate() const;
};

struct BodyMask {
    Volume mask; // kind Mask
    int dilation_voxels = 0;
};

// Largest 6-connected nonzero component of the MR, interior holes filled by a
// 3-D border flood fill, then dilated with a Euclidean ball of the given
// radius. Throws on an all-zero volume.
BodyMask build_body_mask(const Volume& mr, int dilate = 12);

// Euclidean-ball dilation (exact squared distance transform, radius in voxels).
Volume dilate_mask(const Volume& mask, int radius);

// Resolved clip value for a policy: the static value, or the nearest-rank
// p-th percentile of the masked voxel intensities.
double resolve_clip(const Volume& mr, const BodyMask& mask, const ClipPolicy& policy);

// clip + scale: out = clamp(in, 0, clip) / clip * 255, everywhere in [0, 255].
Volume standardize(const Volume& mr, const BodyMask& mask, const ClipPolicy& policy);
Volume standardize_with_clip(const Volume& mr, double clip_value);

// Linear bijection HU [-1000, 3071] <-> network units [0, 255]. Out-of-range
// inputs are clamped (and assert in debug builds); the round trip is exact to
// one quantization step, kHuRange/255 ~ 15.96 HU.
float hu_to_net(float hu);
float net_to_hu(float net);

// Whole-volume conversions (CT-like <-> network-unit volumes).
Volume hu_to_net_volume(const Volume& ct);

} // namespace sct::prep
