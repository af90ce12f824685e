#pragma once

#include "sct/volume.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sct::metrics {

// Evaluation regions, thresholded on the reference CT and expanded so the
// bone/air transition zones are captured. Expansion must stay under 5 mm.
struct RegionSpec {
    enum class Kind { Body, Bone, Air };
    Kind kind = Kind::Body;
    float threshold = 0.0f; // HU; unused for Body
    int expand = 4;         // voxels

    static RegionSpec body(int expand = 4) { return {Kind::Body, 0.0f, expand}; }
    static RegionSpec bone(float thr = 200.0f, int expand = 4) { return {Kind::Bone, thr, expand}; }
    static RegionSpec air(float thr = -300.0f, int expand = 4) { return {Kind::Air, thr, expand}; }
};

const char* to_string(RegionSpec::Kind k);

// body = un-dilated body mask (largest component + hole fill, no processing
// dilation). Bone: ct_ref > threshold inside body; Air: ct_ref < threshold
// inside body (exterior air excluded by construction); both then expanded.
// Bone/Air may come out empty (the caller decides whether that is an error).
Volume region_mask(const Volume& ct_ref, const Volume& body, const RegionSpec& spec);

// ME sign convention: me = mean(CT - sCT), positive when the real CT is
// higher valued than the sCT.
double mae(const Volume& ct, const Volume& sct, const Volume& mask);
double me(const Volume& ct, const Volume& sct, const Volume& mask);

struct RegionStats {
    double mae = 0.0;
    double mae_sd = 0.0; // sample std of |CT - sCT| over the region voxels
    double me = 0.0;
    double me_sd = 0.0; // sample std of (CT - sCT)
    std::int64_t voxels = 0;
};

RegionStats region_stats(const Volume& ct, const Volume& sct, const Volume& mask);

// Parallel-ray projection along the view axis of a(x) = max(0, HU+1000) *
// spacing. Sagittal integrates over x (image ny x nz), Coronal over y
// (image nx x nz). drr() rescales the raw integrals to [0,255] by the max.
Image2D drr_raw(const Volume& v, View view);
Image2D drr(const Volume& v, View view);

// 8-bit binary PGM (P5), values rounded and clamped to [0,255].
void write_pgm(const Image2D& img, const std::string& path);

// One row of the metrics CSV (the per-case, per-region report shape).
struct MetricsRow {
    std::string case_id, model, policy, tilespec, region;
    RegionStats stats;
};

// Documented column order for every metrics CSV this project writes.
inline constexpr const char* kMetricsHeader =
    "case_id,model,policy,tilespec,region,mae_hu,mae_sd_hu,me_hu,me_sd_hu,voxels";

std::string csv_row(const MetricsRow& row);

// Per-case rows plus, per (model, policy, tilespec, region) group, an `avg`
// row (means over cases) and a `std_dev` row (population std over cases for
// mae_hu and me_hu).
std::string report(const std::vector<MetricsRow>& rows);

std::string format_g6(double x); // fixed "%.6g" float formatting

} // namespace sct::metrics
