#include "sct/tiles.hpp"

#include "sct/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sct::tiles {

void TileSpec::validate() const {
    if (patch <= 0) throw std::invalid_argument("patch must be positive");
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    if (crop < 0 || 2 * crop >= patch) throw std::invalid_argument("need 0 <= 2*crop < patch");
    if (stride > patch - 2 * crop)
        throw std::invalid_argument("stride > patch - 2*crop leaves uncovered voxels");
}

std::string TileSpec::label() const {
    return "P" + std::to_string(patch) + "s" + std::to_string(stride) + "c" + std::to_string(crop);
}

std::string TileSpec::paper_label() const {
    const double f = 128.0 / patch;
    return "P128s" + std::to_string(int(std::lround(stride * f))) + "c" +
           std::to_string(int(std::lround(crop * f)));
}

void AugmentParams::validate() const {
    if (cuts_per_slice < 1) throw std::invalid_argument("cuts_per_slice must be >= 1");
    if (max_tries < 1) throw std::invalid_argument("max_tries must be >= 1");
    if (rot_deg_min > rot_deg_max || scale_min > scale_max || shear_min > shear_max)
        throw std::invalid_argument("augment range is inverted");
}

std::vector<int> axis_origins(int extent, const TileSpec& spec) {
    spec.validate();
    if (extent < spec.patch) throw std::invalid_argument("extent smaller than patch");
    std::vector<int> origins;
    for (int o = 0; o + spec.patch <= extent; o += spec.stride) origins.push_back(o);
    if (origins.back() + spec.patch < extent) origins.push_back(extent - spec.patch);
    return origins;
}

std::vector<std::pair<int, int>> plan_tiles(int width, int height, const TileSpec& spec) {
    const std::vector<int> xs = axis_origins(width, spec);
    const std::vector<int> ys = axis_origins(height, spec);
    std::vector<std::pair<int, int>> tiles;
    tiles.reserve(xs.size() * ys.size());
    for (int oy : ys)
        for (int ox : xs) tiles.emplace_back(ox, oy);
    return tiles;
}

std::pair<int, int> retained_interval(int origin, int extent, const TileSpec& spec) {
    const int begin = origin == 0 ? 0 : origin + spec.crop;
    const int end = origin + spec.patch == extent ? extent : origin + spec.patch - spec.crop;
    return {begin, end};
}

int estimates_per_voxel(const TileSpec& spec) {
    spec.validate();
    const int per_axis = (spec.patch - 2 * spec.crop + spec.stride - 1) / spec.stride;
    return per_axis * per_axis;
}

namespace {

float bilinear(const Image2D& img, double x, double y) {
    // outside the source: air (0 in network units)
    const int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    const auto sample = [&](int xx, int yy) -> double {
        if (xx < 0 || xx >= img.width || yy < 0 || yy >= img.height) return 0.0;
        return img.at(xx, yy);
    };
    const double top = sample(x0, y0) * (1.0 - fx) + sample(x0 + 1, y0) * fx;
    const double bot = sample(x0, y0 + 1) * (1.0 - fx) + sample(x0 + 1, y0 + 1) * fx;
    return float(top * (1.0 - fy) + bot * fy);
}

struct Affine {
    // row-major 2x2 plus translation; maps output pixel -> source pixel
    double m00, m01, m10, m11, tx, ty;

    std::pair<double, double> apply(double x, double y) const {
        return {m00 * x + m01 * y + tx, m10 * x + m11 * y + ty};
    }
};

// Inverse of rotate(theta) * scale(s) * shear(h) about the image center.
Affine inverse_affine(double theta_rad, double scale, double shear, double cx, double cy) {
    const double c = std::cos(theta_rad), s = std::sin(theta_rad);
    // forward: A = R * S * Sh, Sh = [[1, shear-1],[0,1]]
    const double k = shear - 1.0;
    const double a00 = scale * c, a01 = scale * (c * k - s);
    const double a10 = scale * s, a11 = scale * (s * k + c);
    const double det = a00 * a11 - a01 * a10;
    Affine inv;
    inv.m00 = a11 / det;
    inv.m01 = -a01 / det;
    inv.m10 = -a10 / det;
    inv.m11 = a00 / det;
    // p_src = C + A^-1 (p_out - C)
    inv.tx = cx - (inv.m00 * cx + inv.m01 * cy);
    inv.ty = cy - (inv.m10 * cx + inv.m11 * cy);
    return inv;
}

Image2D warp(const Image2D& img, const Affine& inv) {
    Image2D out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto [sx, sy] = inv.apply(x, y);
            out.at(x, y) = bilinear(img, sx, sy);
        }
    return out;
}

bool all_air(const Image2D& img, int ox, int oy, int patch) {
    for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x)
            if (img.at(ox + x, oy + y) > 1e-6f) return false;
    return true;
}

} // namespace

std::vector<PatchPair> augment_slice(const Image2D& mr_slice, const Image2D& ct_slice, int patch,
                                     const AugmentParams& params, std::mt19937_64& rng) {
    params.validate();
    if (mr_slice.width != ct_slice.width || mr_slice.height != ct_slice.height)
        throw std::invalid_argument("augment_slice needs paired slices of equal dims");
    if (mr_slice.width < patch || mr_slice.height < patch)
        throw std::invalid_argument("slice smaller than patch");

    const double theta = uniform_range(rng, params.rot_deg_min, params.rot_deg_max) * M_PI / 180.0;
    const double scale = uniform_range(rng, params.scale_min, params.scale_max);
    const double shear = uniform_range(rng, params.shear_min, params.shear_max);
    const Affine inv = inverse_affine(theta, scale, shear, (mr_slice.width - 1) / 2.0,
                                      (mr_slice.height - 1) / 2.0);

    // identical geometric transform for both images of the pair
    const Image2D mr_w = warp(mr_slice, inv);
    const Image2D ct_w = warp(ct_slice, inv);

    const int max_ox = mr_slice.width - patch;
    const int max_oy = mr_slice.height - patch;
    std::vector<PatchPair> out;
    out.reserve(size_t(params.cuts_per_slice));
    for (int cut = 0; cut < params.cuts_per_slice; ++cut) {
        int ox = 0, oy = 0;
        for (int attempt = 0; attempt < params.max_tries; ++attempt) {
            ox = int(uniform_index(rng, std::uint64_t(max_ox) + 1));
            oy = int(uniform_index(rng, std::uint64_t(max_oy) + 1));
            if (!(all_air(mr_w, ox, oy, patch) && all_air(ct_w, ox, oy, patch))) break;
            // after max_tries the last draw is kept
        }
        PatchPair pair{Image2D(patch, patch), Image2D(patch, patch)};
        for (int y = 0; y < patch; ++y)
            for (int x = 0; x < patch; ++x) {
                pair.mr.at(x, y) = mr_w.at(ox + x, oy + y);
                pair.ct.at(x, y) = ct_w.at(ox + x, oy + y);
            }
        out.push_back(std::move(pair));
    }
    return out;
}

std::int64_t epoch_patch_count(std::int64_t slices_per_view, const AugmentParams& params,
                               int epochs) {
    if (slices_per_view < 0 || epochs < 0) throw std::invalid_argument("negative count");
    return slices_per_view * (params.mirror ? 2 : 1) * params.cuts_per_slice * epochs;
}

} // namespace sct::tiles
