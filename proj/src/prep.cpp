#include "sct/prep.hpp"

#include "sct/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sct::prep {

ClipPolicy ClipPolicy::dynamic_percentile(double p) {
    return {Kind::DynamicPercentile, p};
}

ClipPolicy ClipPolicy::static_clip(double v) {
    return {Kind::Static, v};
}

void ClipPolicy::validate() const {
    if (kind == Kind::DynamicPercentile) {
        if (value <= 0.0 || value >= 100.0)
            throw std::invalid_argument("percentile must be in (0, 100)");
    } else if (value <= 0.0) {
        throw std::invalid_argument("static clip value must be positive");
    }
}

namespace {

// Largest 6-connected component of the predicate, iterative BFS.
std::vector<std::uint8_t> largest_component(const Volume& v,
                                            const std::vector<std::uint8_t>& fg) {
    const int nx = v.nx(), ny = v.ny(), nz = v.nz();
    const std::int64_t n = v.size();
    std::vector<std::int32_t> comp(n, -1);
    std::vector<std::int64_t> queue;
    std::int64_t best_size = 0;
    std::int32_t best_id = -1, next_id = 0;

    for (std::int64_t seed = 0; seed < n; ++seed) {
        if (!fg[seed] || comp[seed] >= 0) continue;
        const std::int32_t id = next_id++;
        std::int64_t size = 0;
        queue.clear();
        queue.push_back(seed);
        comp[seed] = id;
        while (!queue.empty()) {
            const std::int64_t i = queue.back();
            queue.pop_back();
            ++size;
            const int x = int(i % nx), y = int((i / nx) % ny), z = int(i / (std::int64_t(nx) * ny));
            const auto push = [&](int xx, int yy, int zz) {
                if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || zz < 0 || zz >= nz) return;
                const std::int64_t j = v.index(xx, yy, zz);
                if (fg[j] && comp[j] < 0) {
                    comp[j] = id;
                    queue.push_back(j);
                }
            };
            push(x - 1, y, z);
            push(x + 1, y, z);
            push(x, y - 1, z);
            push(x, y + 1, z);
            push(x, y, z - 1);
            push(x, y, z + 1);
        }
        if (size > best_size) {
            best_size = size;
            best_id = id;
        }
    }

    std::vector<std::uint8_t> keep(n, 0);
    if (best_id >= 0)
        for (std::int64_t i = 0; i < n; ++i) keep[i] = comp[i] == best_id ? 1 : 0;
    return keep;
}

// Marks background voxels 6-connected to the volume border.
std::vector<std::uint8_t> border_connected_background(const Volume& v,
                                                      const std::vector<std::uint8_t>& fg) {
    const int nx = v.nx(), ny = v.ny(), nz = v.nz();
    const std::int64_t n = v.size();
    std::vector<std::uint8_t> reached(n, 0);
    std::vector<std::int64_t> queue;

    const auto seed = [&](int x, int y, int z) {
        const std::int64_t i = v.index(x, y, z);
        if (!fg[i] && !reached[i]) {
            reached[i] = 1;
            queue.push_back(i);
        }
    };
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                if (x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1)
                    seed(x, y, z);

    while (!queue.empty()) {
        const std::int64_t i = queue.back();
        queue.pop_back();
        const int x = int(i % nx), y = int((i / nx) % ny), z = int(i / (std::int64_t(nx) * ny));
        const auto push = [&](int xx, int yy, int zz) {
            if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || zz < 0 || zz >= nz) return;
            const std::int64_t j = v.index(xx, yy, zz);
            if (!fg[j] && !reached[j]) {
                reached[j] = 1;
                queue.push_back(j);
            }
        };
        push(x - 1, y, z);
        push(x + 1, y, z);
        push(x, y - 1, z);
        push(x, y + 1, z);
        push(x, y, z - 1);
        push(x, y, z + 1);
    }
    return reached;
}

// Felzenszwalb-Huttenlocher 1-D squared distance transform.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
    const int n = int(f.size());
    d.assign(n, 0.0);
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

} // namespace

Volume dilate_mask(const Volume& mask, int radius) {
    if (mask.kind() != VolumeKind::Mask)
        throw std::invalid_argument("dilate_mask expects a Mask volume");
    if (radius < 0) throw std::invalid_argument("negative dilation radius");
    if (radius == 0) return mask;

    const int nx = mask.nx(), ny = mask.ny(), nz = mask.nz();
    const double inf = 1e30;
    std::vector<double> dist(mask.size());
    for (std::int64_t i = 0; i < mask.size(); ++i)
        dist[i] = mask.values()[i] != 0.0f ? 0.0 : inf;

    std::vector<double> f, d, z;
    std::vector<int> vtx;
    // squared EDT = three sequential 1-D passes
    f.resize(nx);
    for (int zz = 0; zz < nz; ++zz)
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) f[x] = dist[mask.index(x, y, zz)];
            edt_1d(f, d, vtx, z);
            for (int x = 0; x < nx; ++x) dist[mask.index(x, y, zz)] = d[x];
        }
    f.resize(ny);
    for (int zz = 0; zz < nz; ++zz)
        for (int x = 0; x < nx; ++x) {
            for (int y = 0; y < ny; ++y) f[y] = dist[mask.index(x, y, zz)];
            edt_1d(f, d, vtx, z);
            for (int y = 0; y < ny; ++y) dist[mask.index(x, y, zz)] = d[y];
        }
    f.resize(nz);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            for (int zz = 0; zz < nz; ++zz) f[zz] = dist[mask.index(x, y, zz)];
            edt_1d(f, d, vtx, z);
            for (int zz = 0; zz < nz; ++zz) dist[mask.index(x, y, zz)] = d[zz];
        }

    Volume out(nx, ny, nz, mask.spacing(), VolumeKind::Mask);
    const double r2 = double(radius) * radius;
    for (std::int64_t i = 0; i < out.size(); ++i) out.values()[i] = dist[i] <= r2 ? 1.0f : 0.0f;
    return out;
}

BodyMask build_body_mask(const Volume& mr, int dilate) {
    if (mr.kind() != VolumeKind::MRLike)
        throw std::invalid_argument("build_body_mask expects an MRLike volume");
    const std::int64_t n = mr.size();
    std::vector<std::uint8_t> fg(n, 0);
    bool any = false;
    for (std::int64_t i = 0; i < n; ++i) {
        fg[i] = mr.values()[i] != 0.0f ? 1 : 0;
        any = any || fg[i];
    }
    if (!any) throw std::invalid_argument("empty body mask: MR volume is all zero");

    std::vector<std::uint8_t> comp = largest_component(mr, fg);
    // Hole fill: everything not reachable from the border through non-component
    // voxels is interior and joins the mask.
    std::vector<std::uint8_t> outside = border_connected_background(mr, comp);

    Volume mask(mr.nx(), mr.ny(), mr.nz(), mr.spacing(), VolumeKind::Mask);
    for (std::int64_t i = 0; i < n; ++i)
        mask.values()[i] = (comp[i] || !outside[i]) ? 1.0f : 0.0f;

    return {dilate_mask(mask, dilate), dilate};
}

double resolve_clip(const Volume& mr, const BodyMask& mask, const ClipPolicy& policy) {
    policy.validate();
    if (policy.kind == ClipPolicy::Kind::Static) return policy.value;

    if (mask.mask.size() != mr.size())
        throw std::invalid_argument("mask dims do not match MR dims");
    std::vector<float> vals;
    vals.reserve(size_t(mr.size()));
    for (std::int64_t i = 0; i < mr.size(); ++i)
        if (mask.mask.values()[i] != 0.0f) vals.push_back(mr.values()[i]);
    if (vals.empty())
        throw std::invalid_argument("dynamic percentile clip needs a nonempty mask");

    // nearest-rank: k = ceil(p/100 * N), 1-indexed
    const std::int64_t k =
        std::clamp<std::int64_t>(std::int64_t(std::ceil(policy.value / 100.0 * double(vals.size()))),
                                 1, std::int64_t(vals.size()));
    std::nth_element(vals.begin(), vals.begin() + (k - 1), vals.end());
    return double(vals[size_t(k - 1)]);
}

Volume standardize_with_clip(const Volume& mr, double clip_value) {
    if (clip_value <= 0.0) throw std::invalid_argument("clip value must be positive");
    Volume out(mr.nx(), mr.ny(), mr.nz(), mr.spacing(), VolumeKind::MRLike);
    const float clip = float(clip_value);
    out.values() = mr.values().min(clip).max(0.0f) * (255.0f / clip);
    return out;
}

Volume standardize(const Volume& mr, const BodyMask& mask, const ClipPolicy& policy) {
    return standardize_with_clip(mr, resolve_clip(mr, mask, policy));
}

float hu_to_net(float hu) {
    assert(hu >= kHuMin - 0.5f && hu <= kHuMax + 0.5f && "HU outside [-1000, 3071]");
    const float clamped = std::clamp(hu, kHuMin, kHuMax);
    return (clamped - kHuMin) * (255.0f / kHuRange);
}

float net_to_hu(float net) {
    assert(net >= -0.5f && net <= 255.5f && "network value outside [0, 255]");
    const float clamped = std::clamp(net, 0.0f, 255.0f);
    return std::clamp(kHuMin + clamped * (kHuRange / 255.0f), kHuMin, kHuMax);
}

Volume hu_to_net_volume(const Volume& ct) {
    if (ct.kind() != VolumeKind::CTLike && ct.kind() != VolumeKind::Synthetic)
        throw std::invalid_argument("hu_to_net_volume expects a CT-like volume");
    Volume out(ct.nx(), ct.ny(), ct.nz(), ct.spacing(), VolumeKind::MRLike);
    for (std::int64_t i = 0; i < ct.size(); ++i) out.values()[i] = hu_to_net(ct.values()[i]);
    return out;
}

} // namespace sct::prep
