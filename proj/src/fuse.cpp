#include "sct/fuse.hpp"

#include "sct/errors.hpp"
#include "sct/prep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace sct::fuse {

void FusionPolicy::validate() const {
    if (!(air_hi > kHuMin && air_hi < bone_lo && bone_lo < kHuMax))
        throw std::invalid_argument("class bands must partition [-1000, 3071]");
    for (float f : {majority_frac, minority_frac})
        if (f <= 0.5f || f > 1.0f)
            throw std::invalid_argument("win fractions must be in (0.5, 1]");
}

const char* to_string(FusionPolicy::Kind k) {
    switch (k) {
        case FusionPolicy::Kind::Average: return "average";
        case FusionPolicy::Kind::Median: return "median";
        case FusionPolicy::Kind::Vote: return "vote";
    }
    return "?";
}

FusionPolicy::Kind policy_kind_from_string(const std::string& s) {
    if (s == "average") return FusionPolicy::Kind::Average;
    if (s == "median") return FusionPolicy::Kind::Median;
    if (s == "vote") return FusionPolicy::Kind::Vote;
    throw std::invalid_argument("unknown fusion policy: " + s);
}

EstimateAccumulator::EstimateAccumulator(int nx, int ny, int nz)
    : nx_(nx), ny_(ny), nz_(nz), est_(std::size_t(std::int64_t(nx) * ny * nz)) {}

void EstimateAccumulator::merge_from(const EstimateAccumulator& other) {
    if (nx_ != other.nx_ || ny_ != other.ny_ || nz_ != other.nz_)
        throw std::invalid_argument("accumulator dims mismatch");
    for (std::size_t i = 0; i < est_.size(); ++i)
        est_[i].insert(est_[i].end(), other.est_[i].begin(), other.est_[i].end());
}

Volume EstimateAccumulator::count_map(float spacing) const {
    Volume out(nx_, ny_, nz_, spacing, VolumeKind::Label);
    for (std::int64_t i = 0; i < out.size(); ++i) out.values()[i] = float(est_[std::size_t(i)].size());
    return out;
}

namespace {

// inverse of grid slicing: in-plane (u, v) at slice k -> volume (x, y, z)
inline void plane_to_volume(View view, int u, int v, int k, int& x, int& y, int& z) {
    switch (view) {
        case View::Axial: x = u; y = v; z = k; return;
        case View::Coronal: x = u; y = k; z = v; return;
        case View::Sagittal: x = k; y = u; z = v; return;
    }
}

bool window_touches_mask(const Image2D& mask_slice, int ox, int oy, int patch) {
    for (int y = oy; y < oy + patch; ++y)
        for (int x = ox; x < ox + patch; ++x)
            if (mask_slice.at(x, y) != 0.0f) return true;
    return false;
}

} // namespace

void synthesize_view(const Volume& mr, const Volume& mask, gan::Translator& translator, View view,
                     const tiles::TileSpec& spec, EstimateAccumulator& acc) {
    spec.validate();
    if (mask.nx() != mr.nx() || mask.ny() != mr.ny() || mask.nz() != mr.nz())
        throw std::invalid_argument("mask dims do not match input volume");
    if (translator.patch_size() != 0 && translator.patch_size() != spec.patch)
        throw std::invalid_argument("translator patch size does not match tile spec");

    const auto [w, h] = slice_dims(mr, view);
    const auto plan = tiles::plan_tiles(w, h, spec);
    const int extent = view_extent(mr, view);

    Image2D patch(spec.patch, spec.patch);
    for (int k = 0; k < extent; ++k) {
        const Image2D mask_slice = slice(mask, view, k);
        if ((mask_slice.v == 0.0f).all()) continue;
        const Image2D mr_slice = slice(mr, view, k);

        for (const auto& [ox, oy] : plan) {
            if (!window_touches_mask(mask_slice, ox, oy, spec.patch)) continue;
            for (int y = 0; y < spec.patch; ++y)
                for (int x = 0; x < spec.patch; ++x) patch.at(x, y) = mr_slice.at(ox + x, oy + y);
            const Image2D out = gan::translate_patch(translator, patch);

            const auto [rx0, rx1] = tiles::retained_interval(ox, w, spec);
            const auto [ry0, ry1] = tiles::retained_interval(oy, h, spec);
            for (int y = ry0; y < ry1; ++y)
                for (int x = rx0; x < rx1; ++x) {
                    if (mask_slice.at(x, y) == 0.0f) continue;
                    int vx, vy, vz;
                    plane_to_volume(view, x, y, k, vx, vy, vz);
                    acc.push(vx, vy, vz, prep::net_to_hu(out.at(x - ox, y - oy)));
                }
        }
    }
}

namespace {

float fuse_vote(const std::vector<float>& est, const FusionPolicy& p) {
    std::array<int, 3> count{0, 0, 0};
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    for (float e : est) {
        const int cls = e < p.air_hi ? 0 : (e < p.bone_lo ? 1 : 2);
        ++count[std::size_t(cls)];
        sum[std::size_t(cls)] += e;
    }
    // rank classes by count, ties broken by class order air < tissue < bone
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return count[std::size_t(a)] != count[std::size_t(b)] ? count[std::size_t(a)] > count[std::size_t(b)]
                                                              : a < b;
    });
    const double total = double(est.size());
    const int c0 = count[std::size_t(order[0])], c1 = count[std::size_t(order[1])];
    if (double(c0) / total >= p.majority_frac)
        return float(sum[std::size_t(order[0])] / double(c0));
    if (double(c0 + c1) / total >= p.minority_frac)
        return float((sum[std::size_t(order[0])] + sum[std::size_t(order[1])]) / double(c0 + c1));
    return float((sum[0] + sum[1] + sum[2]) / total); // no winner: mean of all
}

} // namespace

Volume fuse(const EstimateAccumulator& acc, const FusionPolicy& policy, float spacing,
            float fill) {
    policy.validate();
    Volume out(acc.nx(), acc.ny(), acc.nz(), spacing, VolumeKind::Synthetic);
    std::vector<float> scratch;
    for (int z = 0; z < acc.nz(); ++z)
        for (int y = 0; y < acc.ny(); ++y)
            for (int x = 0; x < acc.nx(); ++x) {
                const auto& est = acc.at(x, y, z);
                float value;
                if (est.empty()) {
                    value = fill;
                } else if (policy.kind == FusionPolicy::Kind::Average) {
                    double s = 0.0;
                    for (float e : est) s += e;
                    value = float(s / double(est.size()));
                } else if (policy.kind == FusionPolicy::Kind::Median) {
                    scratch.assign(est.begin(), est.end());
                    std::sort(scratch.begin(), scratch.end());
                    const std::size_t n = scratch.size();
                    value = n % 2 == 1 ? scratch[n / 2]
                                       : 0.5f * (scratch[n / 2 - 1] + scratch[n / 2]);
                } else {
                    value = fuse_vote(est, policy);
                }
                out.at(x, y, z) = std::clamp(value, kHuMin, kHuMax);
            }
    return out;
}

Volume synthesize_volume(const Volume& mr, const Volume& mask,
                         const std::map<View, gan::Translator*>& translators,
                         const tiles::TileSpec& spec, const FusionPolicy& policy,
                         EstimateAccumulator* acc_out) {
    if (translators.empty()) throw std::invalid_argument("no views supplied");
    EstimateAccumulator acc(mr.nx(), mr.ny(), mr.nz());
    // std::map iterates Axial, Coronal, Sagittal in enum order
    for (const auto& [view, translator] : translators) {
        if (!translator) throw std::invalid_argument("null translator");
        synthesize_view(mr, mask, *translator, view, spec, acc);
    }
    Volume out = fuse(acc, policy, mr.spacing());
    if (acc_out) *acc_out = std::move(acc);
    return out;
}

} // namespace sct::fuse
