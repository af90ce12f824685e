#include "sct/phantom.hpp"
#include "sct/prep.hpp"
#include "sct/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace sct;
using namespace sct::prep;

namespace {

Volume mr_volume(int n) {
    return Volume(n, n, n, 1.0f, VolumeKind::MRLike);
}

std::int64_t mask_count(const Volume& m) {
    return std::int64_t((m.values() != 0.0f).count());
}

} // namespace

TEST_CASE("largest component wins, smaller blobs are dropped") {
    Volume v = mr_volume(16);
    // blob A: 100 voxels, blob B: 10 voxels, disjoint
    int placed = 0;
    for (int z = 1; z < 6 && placed < 100; ++z)
        for (int y = 1; y < 6; ++y)
            for (int x = 1; x < 6 && placed < 100; ++x) {
                v.at(x, y, z) = 1.0f;
                ++placed;
            }
    for (int x = 10; x < 15; ++x) {
        v.at(x, 12, 12) = 1.0f;
        v.at(x, 13, 12) = 1.0f;
    }
    const BodyMask m = build_body_mask(v, 0);
    CHECK(mask_count(m.mask) == 100);
    CHECK(m.mask.at(11, 12, 12) == 0.0f);
}

TEST_CASE("dilate=0 on a solid cube is exactly the cube") {
    Volume v = mr_volume(12);
    for (int z = 3; z < 9; ++z)
        for (int y = 3; y < 9; ++y)
            for (int x = 3; x < 9; ++x) v.at(x, y, z) = 2.0f;
    const BodyMask m = build_body_mask(v, 0);
    CHECK(mask_count(m.mask) == 6 * 6 * 6);
    for (int z = 3; z < 9; ++z)
        for (int y = 3; y < 9; ++y)
            for (int x = 3; x < 9; ++x) CHECK(m.mask.at(x, y, z) == 1.0f);
}

TEST_CASE("interior holes are filled") {
    Volume v = mr_volume(12);
    for (int z = 2; z < 10; ++z)
        for (int y = 2; y < 10; ++y)
            for (int x = 2; x < 10; ++x) v.at(x, y, z) = 1.0f;
    // hollow out a cavity that does not touch the border
    for (int z = 5; z < 7; ++z)
        for (int y = 5; y < 7; ++y)
            for (int x = 5; x < 7; ++x) v.at(x, y, z) = 0.0f;
    const BodyMask m = build_body_mask(v, 0);
    CHECK(m.mask.at(5, 5, 5) == 1.0f);
    CHECK(mask_count(m.mask) == 8 * 8 * 8);
}

TEST_CASE("euclidean dilation uses a ball structuring element") {
    Volume m(11, 11, 11, 1.0f, VolumeKind::Mask);
    m.at(5, 5, 5) = 1.0f;
    const Volume d = dilate_mask(m, 3);
    std::int64_t count = 0;
    for (int z = 0; z < 11; ++z)
        for (int y = 0; y < 11; ++y)
            for (int x = 0; x < 11; ++x) {
                const int r2 = (x - 5) * (x - 5) + (y - 5) * (y - 5) + (z - 5) * (z - 5);
                CHECK(d.at(x, y, z) == (r2 <= 9 ? 1.0f : 0.0f));
                count += d.at(x, y, z) != 0.0f;
            }
    CHECK(count == 123); // lattice points with x^2+y^2+z^2 <= 9
}

TEST_CASE("phantom body mask covers the analytic ellipsoid and dilation grows it") {
    const phantom::PhantomSpec spec{/*seed=*/5};
    const auto [mr, ct, labels] = phantom::generate_pair(spec);
    const BodyMask undilated = build_body_mask(mr, 0);
    const BodyMask dilated = build_body_mask(mr, 4);

    std::int64_t inside = 0, covered = 0;
    for (std::int64_t i = 0; i < labels.size(); ++i) {
        if (labels.values()[i] != float(phantom::TissueClass::ExteriorAir)) {
            ++inside;
            if (undilated.mask.values()[i] != 0.0f) ++covered;
        }
    }
    CHECK(covered == inside); // mask contains the body ellipsoid
    CHECK(mask_count(dilated.mask) > inside);
}

TEST_CASE("all-zero MR has no body mask") {
    CHECK_THROWS_AS(build_body_mask(mr_volume(8), 0), std::invalid_argument);
}

TEST_CASE("standardize closed forms") {
    Volume v = mr_volume(4);
    v.values().setConstant(100.0f);
    BodyMask all{Volume(4, 4, 4, 1.0f, VolumeKind::Mask), 0};
    all.mask.values().setConstant(1.0f);

    const Volume out = standardize(v, all, ClipPolicy::static_clip(2500.0));
    CHECK(out.values()[0] == doctest::Approx(100.0 / 2500.0 * 255.0)); // 10.2

    // clip at the max maps the max to 255
    Volume w = mr_volume(4);
    auto rng = rng_stream(2, 0);
    for (std::int64_t i = 0; i < w.size(); ++i) w.values()[i] = float(uniform_range(rng, 0, 90));
    w.values()[10] = 90.0f;
    const Volume wout = standardize(w, all, ClipPolicy::static_clip(90.0));
    CHECK(wout.values()[10] == 255.0f);
    CHECK(wout.values().maxCoeff() == 255.0f);
}

TEST_CASE("dynamic percentile uses nearest-rank over masked voxels") {
    // masked intensities 1..100 in a 100-voxel region
    Volume v = mr_volume(8);
    BodyMask mask{Volume(8, 8, 8, 1.0f, VolumeKind::Mask), 0};
    int val = 1;
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5 && val <= 100; ++x) {
                v.at(x, y, z) = float(val++);
                mask.mask.at(x, y, z) = 1.0f;
            }
    CHECK(resolve_clip(v, mask, ClipPolicy::dynamic_percentile(99.0)) == 99.0);

    const Volume out = standardize(v, mask, ClipPolicy::dynamic_percentile(99.0));
    for (int i = 99; i <= 100; ++i) {
        // values >= 99 saturate at 255
        bool found = false;
        for (std::int64_t j = 0; j < v.size(); ++j)
            if (v.values()[j] == float(i)) {
                CHECK(out.values()[j] == 255.0f);
                found = true;
            }
        CHECK(found);
    }

    // arithmetic sequence: nearest-rank percentile is analytic
    CHECK(resolve_clip(v, mask, ClipPolicy::dynamic_percentile(50.0)) == 50.0);
    CHECK(resolve_clip(v, mask, ClipPolicy::dynamic_percentile(1.0)) == 1.0);
}

TEST_CASE("dynamic percentile with an empty mask is an error") {
    Volume v = mr_volume(4);
    v.values().setConstant(5.0f);
    BodyMask empty{Volume(4, 4, 4, 1.0f, VolumeKind::Mask), 0};
    CHECK_THROWS_AS(standardize(v, empty, ClipPolicy::dynamic_percentile(99.0)),
                    std::invalid_argument);
}

TEST_CASE("standardize output is always inside [0,255] and re-clipping at 255 is identity") {
    auto rng = rng_stream(9, 0);
    Volume v = mr_volume(8);
    for (std::int64_t i = 0; i < v.size(); ++i)
        v.values()[i] = float(uniform_range(rng, -500.0, 9000.0)); // hostile inputs
    const Volume out = standardize_with_clip(v, 2500.0);
    CHECK((out.values() >= 0.0f).all());
    CHECK((out.values() <= 255.0f).all());

    // a volume already in network range is unchanged by a clip at 255
    const Volume again = standardize_with_clip(out, 255.0);
    CHECK((again.values() == out.values()).all());
}

TEST_CASE("hu_to_net endpoints and closed form") {
    CHECK(hu_to_net(-1000.0f) == 0.0f);
    CHECK(hu_to_net(3071.0f) == 255.0f);
    CHECK(hu_to_net(40.0f) == doctest::Approx(1040.0 / 4071.0 * 255.0)); // ~65.14
    CHECK(net_to_hu(0.0f) == -1000.0f);
    CHECK(net_to_hu(255.0f) == 3071.0f);
}

TEST_CASE("hu/net round trip stays within one quantization step") {
    const float step = kHuRange / 255.0f; // ~15.96 HU
    auto rng = rng_stream(13, 0);
    for (int i = 0; i < 1000; ++i) {
        const float hu = float(uniform_range(rng, -1000.0, 3071.0));
        CHECK(std::abs(net_to_hu(hu_to_net(hu)) - hu) <= step);
    }
}
