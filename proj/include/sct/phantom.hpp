#pragma once

#include "sct/volume.hpp"

#include <array>
#include <cstdint>

namespace sct::phantom {

enum class TissueClass : std::uint8_t {
    ExteriorAir = 0,
    InteriorAir = 1,
    SoftTissue = 2,
    Bone = 3,
    Tumor = 4,
};

// Class -> HU means. Chosen inside the fusion vote bands (air < -200,
// tissue in [-200,200), bone >= 200) so vote behavior is analyzable.
float class_hu(TissueClass c);

struct PhantomSpec {
    std::uint64_t seed = 0;
    int edge = 64;
    float spacing = 1.0f;
    // Body ellipsoid semi-axes as fractions of the edge, each in (0, 0.5].
    std::array<float, 3> body = {0.35f, 0.42f, 0.45f};
    int n_bone_shells = 2;
    int n_air_cavities = 2;
    bool tumor = false;    // off-midplane lesion with a dark MR core
    bool artifact = false; // high-HU CT streak, MR void, multiplicative bias field
    float noise_sigma = 25.0f; // HU on the CT side, raw intensity units on the MR side

    void validate() const;
};

struct PhantomPair {
    Volume mr;     // MRLike, raw intensities >= 0, exterior exactly 0
    Volume ct;     // CTLike, exterior exactly -1000
    Volume labels; // Label, TissueClass codes
};

// Deterministic in spec.seed: same spec gives a bit-identical triple.
// Gaussian noise (sigma = spec.noise_sigma) is applied only inside the body;
// the per-case soft-tissue MR level is jittered by the seed so the training
// set carries scan-to-scan contrast variation.
PhantomPair generate_pair(const PhantomSpec& spec);

// Noise-free CT from the class -> HU table. A perfect translator for testing
// tiling/fusion independently of learning. Rejects non-Label volumes.
Volume oracle_translate(const Volume& labels);

} // namespace sct::phantom
