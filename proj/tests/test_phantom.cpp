#include "sct/phantom.hpp"
#include "sct/volume.hpp"

#include <doctest.h>

#include <cmath>

using namespace sct;
using namespace sct::phantom;

namespace {

PhantomSpec default_spec(std::uint64_t seed = 7) {
    PhantomSpec s;
    s.seed = seed;
    s.edge = 64;
    return s;
}

} // namespace

TEST_CASE("phantom spec validation") {
    PhantomSpec s = default_spec();
    s.body[0] = 0.6f;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = default_spec();
    s.n_bone_shells = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = default_spec();
    s.n_air_cavities = -1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("body center is soft tissue with ct about 40 HU") {
    const PhantomSpec spec = default_spec();
    const auto [mr, ct, labels] = generate_pair(spec);
    const int c = spec.edge / 2;
    CHECK(labels.at(c, c, c) == float(TissueClass::SoftTissue));
    CHECK(std::abs(ct.at(c, c, c) - 40.0f) <= 3.0f * spec.noise_sigma);
}

TEST_CASE("exterior air carries no noise") {
    const auto [mr, ct, labels] = generate_pair(default_spec());
    CHECK(labels.at(0, 0, 0) == float(TissueClass::ExteriorAir));
    CHECK(ct.at(0, 0, 0) == -1000.0f);
    CHECK(mr.at(0, 0, 0) == 0.0f);
    for (std::int64_t i = 0; i < labels.size(); ++i)
        if (labels.values()[i] == float(TissueClass::ExteriorAir)) {
            CHECK(ct.values()[i] == -1000.0f);
            CHECK(mr.values()[i] == 0.0f);
        }
}

TEST_CASE("same seed gives a bit-identical triple") {
    const auto a = generate_pair(default_spec(42));
    const auto b = generate_pair(default_spec(42));
    CHECK((a.mr.values() == b.mr.values()).all());
    CHECK((a.ct.values() == b.ct.values()).all());
    CHECK((a.labels.values() == b.labels.values()).all());

    const auto c = generate_pair(default_spec(43));
    CHECK_FALSE((a.ct.values() == c.ct.values()).all());
}

TEST_CASE("ct respects the HU clamp invariant") {
    PhantomSpec spec = default_spec(3);
    spec.noise_sigma = 400.0f; // force clamping traffic
    const auto pair = generate_pair(spec);
    CHECK_NOTHROW(pair.ct.validate());
}

TEST_CASE("bone and interior air MR intensities overlap") {
    const PhantomSpec spec = default_spec(11);
    const auto [mr, ct, labels] = generate_pair(spec);
    double sum_bone = 0.0, sum_air = 0.0;
    std::int64_t n_bone = 0, n_air = 0;
    for (std::int64_t i = 0; i < labels.size(); ++i) {
        if (labels.values()[i] == float(TissueClass::Bone)) {
            sum_bone += mr.values()[i];
            ++n_bone;
        } else if (labels.values()[i] == float(TissueClass::InteriorAir)) {
            sum_air += mr.values()[i];
            ++n_air;
        }
    }
    REQUIRE(n_bone > 100);
    REQUIRE(n_air > 100);
    // the MR mapping is non-one-to-one: both classes sit near zero
    CHECK(std::abs(sum_bone / double(n_bone) - sum_air / double(n_air)) <= double(spec.noise_sigma));
}

TEST_CASE("tumor-free artifact-free phantom is left-right symmetric") {
    const auto [mr, ct, labels] = generate_pair(default_spec(19));
    const Volume mlab = mirror_volume(labels);
    CHECK((mlab.values() == labels.values()).all());

    // CT differs only by independent noise draws inside the body: the voxel
    // difference is N(0, sigma*sqrt(2)) there and exactly 0 outside, so the
    // volume-wide mean abs diff stays far below the soft-tissue/bone contrast.
    const Volume mct = mirror_volume(ct);
    const double mean_abs = double((mct.values() - ct.values()).abs().mean());
    CHECK(mean_abs < 15.0);

    PhantomSpec abnormal = default_spec(19);
    abnormal.tumor = true;
    const auto t = generate_pair(abnormal);
    CHECK_FALSE((mirror_volume(t.labels).values() == t.labels.values()).all());
}

TEST_CASE("artifact flag injects a streak, a void and a bias field") {
    PhantomSpec spec = default_spec(23);
    spec.artifact = true;
    const auto art = generate_pair(spec);
    CHECK((art.ct.values() == 2500.0f).any());

    // void: zero MR strictly inside the body
    bool interior_zero = false;
    for (std::int64_t i = 0; i < art.labels.size(); ++i)
        if (art.labels.values()[i] != float(TissueClass::ExteriorAir) && art.mr.values()[i] == 0.0f)
            interior_zero = true;
    CHECK(interior_zero);
}

TEST_CASE("oracle_translate reproduces the class map") {
    Volume labels(8, 8, 8, 1.0f, VolumeKind::Label);
    labels.values().setConstant(float(TissueClass::SoftTissue));
    const Volume out = oracle_translate(labels);
    CHECK((out.values() == 40.0f).all());

    Volume not_labels(8, 8, 8, 1.0f, VolumeKind::MRLike);
    CHECK_THROWS_AS(oracle_translate(not_labels), std::invalid_argument);
}

TEST_CASE("oracle equals the noise-free phantom CT exactly") {
    PhantomSpec spec = default_spec(29);
    spec.noise_sigma = 0.0f;
    const auto pair = generate_pair(spec);
    const Volume oracle = oracle_translate(pair.labels);
    CHECK((oracle.values() == pair.ct.values()).all());
}

TEST_CASE("oracle-vs-noisy MAE matches the analytic Gaussian expectation") {
    const PhantomSpec spec = default_spec(31);
    const auto [mr, ct, labels] = generate_pair(spec);
    const Volume oracle = oracle_translate(labels);

    // restrict to classes whose noise is never clamped at the HU bounds
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::int64_t i = 0; i < labels.size(); ++i) {
        const float l = labels.values()[i];
        if (l == float(TissueClass::SoftTissue) || l == float(TissueClass::Bone) ||
            l == float(TissueClass::Tumor)) {
            sum += std::abs(double(oracle.values()[i]) - double(ct.values()[i]));
            ++n;
        }
    }
    REQUIRE(n > 10000);
    const double mae = sum / double(n);
    const double expect = double(spec.noise_sigma) * std::sqrt(2.0 / M_PI);
    CHECK(mae == doctest::Approx(expect).epsilon(0.10));
}
