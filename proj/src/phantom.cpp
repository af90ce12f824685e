#include "sct/phantom.hpp"

#include "sct/errors.hpp"
#include "sct/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sct::phantom {

float class_hu(TissueClass c) {
    switch (c) {
        case TissueClass::ExteriorAir: return -1000.0f;
        case TissueClass::InteriorAir: return -1000.0f;
        case TissueClass::SoftTissue: return 40.0f;
        case TissueClass::Bone: return 700.0f;
        case TissueClass::Tumor: return 60.0f;
    }
    return -1000.0f;
}

void PhantomSpec::validate() const {
    if (edge < 16) throw std::invalid_argument("phantom edge too small");
    if (spacing <= 0.0f) throw std::invalid_argument("phantom spacing must be positive");
    for (float a : body)
        if (a <= 0.0f || a > 0.5f)
            throw std::invalid_argument("body semi-axes must be in (0, 0.5]");
    if (n_bone_shells < 1) throw std::invalid_argument("need at least one bone shell");
    if (n_air_cavities < 0) throw std::invalid_argument("negative cavity count");
    if (noise_sigma < 0.0f) throw std::invalid_argument("negative noise sigma");
}

namespace {

struct Ellipsoid {
    double cx, cy, cz; // center, voxel coordinates
    double ax, ay, az; // semi-axes, voxels

    double radius(double x, double y, double z) const {
        const double dx = (x - cx) / ax, dy = (y - cy) / ay, dz = (z - cz) / az;
        return std::sqrt(dx * dx + dy * dy + dz * dz);
    }
};

struct Geometry {
    Ellipsoid body;
    std::vector<std::pair<double, double>> shells; // normalized body-radius bands [lo, hi]
    std::vector<Ellipsoid> cavities;
    bool has_tumor = false;
    Ellipsoid tumor;
    // artifact pieces
    bool has_artifact = false;
    double streak_nx, streak_ny, streak_nz; // slab normal
    Ellipsoid void_region;
    double bias_amp, bias_px, bias_py, bias_pz; // bias field amplitude and phases
    // per-case intensity table (MR raw units)
    double mr_soft, mr_tumor, mr_tumor_core, mr_bone, mr_air;
};

Geometry build_geometry(const PhantomSpec& spec) {
    Geometry g;
    auto rng = rng_stream(spec.seed, 0);
    const double c = (spec.edge - 1) / 2.0; // midplane for even edges falls between voxels
    g.body = {c, c, c, spec.body[0] * spec.edge, spec.body[1] * spec.edge,
              spec.body[2] * spec.edge};

    double hi = uniform_range(rng, 0.84, 0.92);
    for (int i = 0; i < spec.n_bone_shells; ++i) {
        const double w = uniform_range(rng, 0.06, 0.10);
        g.shells.emplace_back(std::max(0.10, hi - w), hi);
        hi -= 0.28;
        if (hi < 0.18) break;
    }

    for (int i = 0; i < spec.n_air_cavities; ++i) {
        // Cavities sit on the sagittal midplane so the tumor-free phantom stays
        // left-right symmetric; radial offset keeps the body center soft tissue.
        const double r = uniform_range(rng, 0.20, 0.42);
        const double th = uniform_range(rng, 0.0, 2.0 * M_PI);
        Ellipsoid cav;
        cav.cx = c;
        cav.cy = c + r * std::cos(th) * g.body.ay;
        cav.cz = c + r * std::sin(th) * g.body.az;
        cav.ax = uniform_range(rng, 2.5, 4.5);
        cav.ay = uniform_range(rng, 2.5, 4.5);
        cav.az = uniform_range(rng, 2.5, 4.5);
        g.cavities.push_back(cav);
    }

    if (spec.tumor) {
        g.has_tumor = true;
        const double side = uniform01(rng) < 0.5 ? -1.0 : 1.0;
        const double rad = uniform_range(rng, 4.5, 6.5);
        g.tumor.cx = c + side * uniform_range(rng, 0.32, 0.42) * g.body.ax;
        g.tumor.cy = c + uniform_range(rng, -0.2, 0.2) * g.body.ay;
        g.tumor.cz = c + uniform_range(rng, -0.2, 0.2) * g.body.az;
        g.tumor.ax = g.tumor.ay = g.tumor.az = rad;
    }

    if (spec.artifact) {
        g.has_artifact = true;
        double nx = uniform_range(rng, -1.0, 1.0);
        double ny = uniform_range(rng, -1.0, 1.0);
        double nz = uniform_range(rng, 0.3, 1.0);
        const double n = std::sqrt(nx * nx + ny * ny + nz * nz);
        g.streak_nx = nx / n;
        g.streak_ny = ny / n;
        g.streak_nz = nz / n;

        const double r = uniform_range(rng, 0.25, 0.45);
        const double th = uniform_range(rng, 0.0, 2.0 * M_PI);
        g.void_region.cx = c + uniform_range(rng, -0.3, 0.3) * g.body.ax;
        g.void_region.cy = c + r * std::cos(th) * g.body.ay;
        g.void_region.cz = c + r * std::sin(th) * g.body.az;
        g.void_region.ax = g.void_region.ay = g.void_region.az = uniform_range(rng, 3.0, 5.0);

        g.bias_amp = uniform_range(rng, 0.10, 0.18);
        g.bias_px = uniform_range(rng, 0.0, 2.0 * M_PI);
        g.bias_py = uniform_range(rng, 0.0, 2.0 * M_PI);
        g.bias_pz = uniform_range(rng, 0.0, 2.0 * M_PI);
    }

    // Scan-to-scan contrast variation: the soft-tissue MR level differs per
    // case, which is what the clip policies have to absorb.
    g.mr_soft = uniform_range(rng, 1800.0, 2200.0);
    g.mr_tumor = g.mr_soft + 400.0;
    g.mr_tumor_core = 80.0;
    g.mr_bone = 60.0;
    g.mr_air = 40.0;
    return g;
}

TissueClass classify(const Geometry& g, int x, int y, int z) {
    if (g.body.radius(x, y, z) > 1.0) return TissueClass::ExteriorAir;
    if (g.has_tumor && g.tumor.radius(x, y, z) <= 1.0) return TissueClass::Tumor;
    for (const auto& cav : g.cavities)
        if (cav.radius(x, y, z) <= 1.0) return TissueClass::InteriorAir;
    const double s = g.body.radius(x, y, z);
    for (const auto& [lo, hi] : g.shells)
        if (s >= lo && s <= hi) return TissueClass::Bone;
    return TissueClass::SoftTissue;
}

} // namespace

PhantomPair generate_pair(const PhantomSpec& spec) {
    spec.validate();
    const Geometry g = build_geometry(spec);
    const int n = spec.edge;

    Volume labels(n, n, n, spec.spacing, VolumeKind::Label);
    Volume ct(n, n, n, spec.spacing, VolumeKind::CTLike);
    Volume mr(n, n, n, spec.spacing, VolumeKind::MRLike);

    auto rng_ct = rng_stream(spec.seed, 1);
    auto rng_mr = rng_stream(spec.seed, 2);

    for (int z = 0; z < n; ++z) {
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                const TissueClass cls = classify(g, x, y, z);
                labels.at(x, y, z) = static_cast<float>(cls);

                if (cls == TissueClass::ExteriorAir) {
                    ct.at(x, y, z) = -1000.0f; // exact: mask logic depends on it
                    mr.at(x, y, z) = 0.0f;
                    continue;
                }

                double hu = class_hu(cls) + spec.noise_sigma * gaussian(rng_ct);
                ct.at(x, y, z) = static_cast<float>(std::clamp(hu, double(kHuMin), double(kHuMax)));

                double mi = 0.0;
                switch (cls) {
                    case TissueClass::SoftTissue: mi = g.mr_soft; break;
                    case TissueClass::Bone: mi = g.mr_bone; break;
                    case TissueClass::InteriorAir: mi = g.mr_air; break;
                    case TissueClass::Tumor:
                        mi = g.tumor.radius(x, y, z) < 0.55 ? g.mr_tumor_core : g.mr_tumor;
                        break;
                    case TissueClass::ExteriorAir: break;
                }
                if (g.has_artifact) {
                    const double f = 1.0 + g.bias_amp * std::sin(2.0 * M_PI * x / n + g.bias_px) *
                                               std::sin(2.0 * M_PI * y / n + g.bias_py) *
                                               std::sin(2.0 * M_PI * z / n + g.bias_pz);
                    mi *= f;
                }
                mi += spec.noise_sigma * gaussian(rng_mr);
                mr.at(x, y, z) = static_cast<float>(std::max(0.0, mi));
            }
        }
    }

    if (g.has_artifact) {
        const double c = (n - 1) / 2.0;
        for (int z = 0; z < n; ++z)
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) {
                    if (g.body.radius(x, y, z) > 0.95) continue;
                    const double d = (x - c) * g.streak_nx + (y - c) * g.streak_ny +
                                     (z - c) * g.streak_nz;
                    if (std::abs(d) <= 0.8) ct.at(x, y, z) = 2500.0f;
                    if (g.void_region.radius(x, y, z) <= 1.0) mr.at(x, y, z) = 0.0f;
                }
    }

    ct.validate();
    return {std::move(mr), std::move(ct), std::move(labels)};
}

Volume oracle_translate(const Volume& labels) {
    if (labels.kind() != VolumeKind::Label)
        throw std::invalid_argument("oracle_translate expects a Label volume");
    Volume out(labels.nx(), labels.ny(), labels.nz(), labels.spacing(), VolumeKind::CTLike);
    for (std::int64_t i = 0; i < labels.size(); ++i) {
        const int code = static_cast<int>(std::lround(labels.values()[i]));
        if (code < 0 || code > static_cast<int>(TissueClass::Tumor))
            throw std::invalid_argument("label volume carries a non-class code");
        out.values()[i] = class_hu(static_cast<TissueClass>(code));
    }
    return out;
}

} // namespace sct::phantom
