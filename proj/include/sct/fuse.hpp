#pragma once

#include "sct/gan.hpp"
#include "sct/tiles.hpp"
#include "sct/volume.hpp"

#include <map>
#include <string>
#include <vector>

namespace sct::fuse {

// Rule for collapsing the overlapping per-voxel HU estimates.
struct FusionPolicy {
    enum class Kind { Average, Median, Vote };
    Kind kind = Kind::Average;
    // class bands: air [-1000, air_hi), tissue [air_hi, tissue_lo_of_bone),
    // bone [bone_lo, 3071]; they partition the HU range
    float air_hi = -200.0f;
    float bone_lo = 200.0f;
    float majority_frac = 0.65f;
    float minority_frac = 0.65f;

    static FusionPolicy average() { return {Kind::Average}; }
    static FusionPolicy median() { return {Kind::Median}; }
    static FusionPolicy vote() { return {Kind::Vote}; }
    void validate() const;
};

const char* to_string(FusionPolicy::Kind k);
FusionPolicy::Kind policy_kind_from_string(const std::string& s);

// Per-voxel growable list of HU estimates. Median and Vote need the full
// distribution, so raw lists are kept rather than running sums.
class EstimateAccumulator {
  public:
    EstimateAccumulator(int nx, int ny, int nz);

    void push(int x, int y, int z, float hu) { est_[index(x, y, z)].push_back(hu); }
    const std::vector<float>& at(int x, int y, int z) const { return est_[index(x, y, z)]; }
    int count(int x, int y, int z) const { return int(est_[index(x, y, z)].size()); }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }

    // Appends the other accumulator's per-voxel estimates (same dims required);
    // per-view accumulators merged in view order reproduce sequential runs.
    void merge_from(const EstimateAccumulator& other);

    Volume count_map(float spacing) const; // kind Label, value = estimate count

  private:
    std::int64_t index(int x, int y, int z) const {
        return x + std::int64_t(nx_) * (y + std::int64_t(ny_) * z);
    }
    int nx_, ny_, nz_;
    std::vector<std::vector<float>> est_;
};

// Slides the tile plan over every slice of `view` that intersects the mask,
// translates each patch that touches the mask, converts to HU and pushes the
// retained, masked voxel values into the accumulator.
void synthesize_view(const Volume& mr, const Volume& mask, gan::Translator& translator, View view,
                     const tiles::TileSpec& spec, EstimateAccumulator& acc);

// Collapses per-voxel estimate lists with the policy; voxels without
// estimates get `fill`.
Volume fuse(const EstimateAccumulator& acc, const FusionPolicy& policy, float spacing,
            float fill = -1000.0f);

// Runs synthesize_view for each supplied view (in Axial, Coronal, Sagittal
// order) into one shared accumulator, then fuses. Output kind is Synthetic.
Volume synthesize_volume(const Volume& mr, const Volume& mask,
                         const std::map<View, gan::Translator*>& translators,
                         const tiles::TileSpec& spec, const FusionPolicy& policy,
                         EstimateAccumulator* acc_out = nullptr);

} // namespace sct::fuse
