#include "sct/errors.hpp"
#include "sct/rng.hpp"
#include "sct/volume.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace sct;

namespace {

Volume random_volume(int nx, int ny, int nz, std::uint64_t seed, VolumeKind kind = VolumeKind::MRLike) {
    Volume v(nx, ny, nz, 1.0f, kind);
    auto rng = rng_stream(seed, 0);
    for (std::int64_t i = 0; i < v.size(); ++i) v.values()[i] = float(uniform_range(rng, 1.0, 100.0));
    return v;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("volume invariants are enforced") {
    CHECK_THROWS_AS(Volume(0, 4, 4, 1.0f, VolumeKind::MRLike), std::invalid_argument);
    CHECK_THROWS_AS(Volume(4, 4, 4, 0.0f, VolumeKind::MRLike), std::invalid_argument);
    CHECK_THROWS_AS(Volume(4, 4, 4, 1.0f, VolumeKind::MRLike, Eigen::ArrayXf::Zero(5)),
                    std::invalid_argument);

    Volume ct(2, 2, 2, 1.0f, VolumeKind::CTLike);
    ct.values()[0] = 5000.0f;
    CHECK_THROWS_AS(ct.validate(), std::invalid_argument);
    ct.values()[0] = 3071.0f;
    CHECK_NOTHROW(ct.validate());

    Volume mask(2, 2, 2, 1.0f, VolumeKind::Mask);
    mask.values()[3] = 0.5f;
    CHECK_THROWS_AS(mask.validate(), std::invalid_argument);
}

TEST_CASE("resample_to_cube identity at matching edge") {
    const Volume v = random_volume(64, 64, 64, 11);
    const Volume out = resample_to_cube(v, 64, 0.0f);
    CHECK(out.nx() == 64);
    CHECK((out.values() == v.values()).all());
}

TEST_CASE("resample_to_cube pads a 32x32x16 CT with 8 air slabs per z side") {
    Volume v(32, 32, 16, 1.0f, VolumeKind::CTLike);
    v.values().setConstant(40.0f);
    const Volume out = resample_to_cube(v, 32, -1000.0f);
    CHECK(out.nx() == 32);
    CHECK(out.ny() == 32);
    CHECK(out.nz() == 32);

    std::int64_t padded = 0;
    for (std::int64_t i = 0; i < out.size(); ++i)
        if (out.values()[i] == -1000.0f) ++padded;
    CHECK(padded == 32 * 32 * 16);
    for (int z = 0; z < 32; ++z) {
        const float expect = (z < 8 || z >= 24) ? -1000.0f : 40.0f;
        CHECK(out.at(16, 16, z) == expect);
    }
}

TEST_CASE("resample_to_cube rejects any cropping") {
    const Volume v = random_volume(8, 8, 8, 3);
    CHECK_THROWS_AS(resample_to_cube(v, 6, 0.0f), std::invalid_argument);
}

TEST_CASE("resample_to_cube reaches the paper-scale 512 cube") {
    Volume v(4, 4, 4, 1.0f, VolumeKind::CTLike);
    v.values().setConstant(40.0f);
    const Volume out = resample_to_cube(v, 512, -1000.0f);
    CHECK(out.nx() == 512);
    CHECK(out.ny() == 512);
    CHECK(out.nz() == 512);
    CHECK(out.at(254, 254, 254) == 40.0f); // centered content
    CHECK(out.at(0, 0, 0) == -1000.0f);
}

TEST_CASE("resample_to_cube conserves the multiset of original values") {
    const Volume v = random_volume(3, 4, 5, 17);
    const Volume out = resample_to_cube(v, 8, -1000.0f);

    std::vector<float> expect(v.values().data(), v.values().data() + v.size());
    expect.insert(expect.end(), std::size_t(out.size() - v.size()), -1000.0f);
    std::vector<float> got(out.values().data(), out.values().data() + out.size());
    std::sort(expect.begin(), expect.end());
    std::sort(got.begin(), got.end());
    CHECK(expect == got);
}

TEST_CASE("slice maps a hot voxel to the documented in-plane coordinates") {
    Volume v(5, 6, 7, 1.0f, VolumeKind::MRLike);
    const int i = 2, j = 4, k = 5;
    v.at(i, j, k) = 1.0f;

    const Image2D ax = slice(v, View::Axial, k);
    CHECK(ax.width == 5);
    CHECK(ax.height == 6);
    CHECK(ax.at(i, j) == 1.0f);
    CHECK(ax.v.sum() == 1.0f);

    const Image2D co = slice(v, View::Coronal, j);
    CHECK(co.width == 5);
    CHECK(co.height == 7);
    CHECK(co.at(i, k) == 1.0f);
    CHECK(co.v.sum() == 1.0f);

    const Image2D sa = slice(v, View::Sagittal, i);
    CHECK(sa.width == 6);
    CHECK(sa.height == 7);
    CHECK(sa.at(j, k) == 1.0f);
    CHECK(sa.v.sum() == 1.0f);
}

TEST_CASE("slice of a constant volume is constant and shaped per view") {
    Volume v(64, 64, 64, 1.0f, VolumeKind::MRLike);
    v.values().setConstant(7.0f);
    const Image2D img = slice(v, View::Axial, 10);
    CHECK(img.width == 64);
    CHECK(img.height == 64);
    CHECK((img.v == 7.0f).all());
}

TEST_CASE("slice then reinsert is the identity for every view and index") {
    const Volume v = random_volume(4, 5, 6, 23);
    for (View view : {View::Axial, View::Coronal, View::Sagittal}) {
        for (int k = 0; k < view_extent(v, view); ++k) {
            Volume w = v;
            insert_slice(w, view, k, slice(v, view, k));
            CHECK((w.values() == v.values()).all());
        }
    }
    CHECK_THROWS_AS(slice(v, View::Axial, 6), std::invalid_argument);
    CHECK_THROWS_AS(slice(v, View::Axial, -1), std::invalid_argument);
}

TEST_CASE("mirror_volume is an involution that flips x") {
    const Volume v = random_volume(6, 5, 4, 31);
    const Volume m = mirror_volume(v);
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 6; ++x) CHECK(m.at(x, y, z) == v.at(5 - x, y, z));
    const Volume mm = mirror_volume(m);
    CHECK((mm.values() == v.values()).all());

    Volume hot(8, 8, 8, 1.0f, VolumeKind::MRLike);
    hot.at(2, 3, 4) = 1.0f;
    CHECK(mirror_volume(hot).at(5, 3, 4) == 1.0f);
}

TEST_CASE("VOXV1 write/read round trip is bit exact") {
    const std::string path = temp_path("sct_vol_roundtrip.vox");
    Volume v = random_volume(9, 7, 5, 41, VolumeKind::CTLike);
    v.values() = v.values().min(3071.0f).max(-1000.0f);
    write_volume(v, path);

    const Volume r = read_volume(path);
    CHECK(r.nx() == v.nx());
    CHECK(r.ny() == v.ny());
    CHECK(r.nz() == v.nz());
    CHECK(r.spacing() == v.spacing());
    CHECK(r.kind() == v.kind());
    CHECK(std::memcmp(r.values().data(), v.values().data(), std::size_t(v.size()) * 4) == 0);
    std::remove(path.c_str());
}

TEST_CASE("VOXV1 header implies the payload length") {
    const std::string path = temp_path("sct_vol_len.vox");
    write_volume(Volume(64, 64, 64, 1.0f, VolumeKind::MRLike), path);
    CHECK(std::filesystem::file_size(path) == 5 + 1 + 12 + 4 + std::uintmax_t(64) * 64 * 64 * 4);
    std::remove(path.c_str());
}

TEST_CASE("VOXV1 rejects bad magic, truncation and trailing bytes") {
    const std::string path = temp_path("sct_vol_bad.vox");
    write_volume(random_volume(4, 4, 4, 5), path);

    SUBCASE("corrupt magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
        f.close();
        CHECK_THROWS_WITH_AS(read_volume(path), doctest::Contains("magic"), io_error);
    }
    SUBCASE("truncated payload") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
        CHECK_THROWS_AS(read_volume(path), io_error);
    }
    SUBCASE("trailing bytes") {
        std::ofstream f(path, std::ios::app | std::ios::binary);
        f.put('\0');
        f.close();
        CHECK_THROWS_AS(read_volume(path), io_error);
    }
    std::remove(path.c_str());
}

TEST_CASE("read_volume on a missing path reports a missing artifact") {
    CHECK_THROWS_AS(read_volume(temp_path("sct_does_not_exist.vox")), missing_artifact_error);
}
