#include "sct/volume.hpp"

#include "sct/errors.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sct {

const char* to_string(VolumeKind k) {
    switch (k) {
        case VolumeKind::MRLike: return "mr";
        case VolumeKind::CTLike: return "ct";
        case VolumeKind::Synthetic: return "sct";
        case VolumeKind::Label: return "label";
        case VolumeKind::Mask: return "mask";
    }
    return "?";
}

const char* to_string(View v) {
    switch (v) {
        case View::Axial: return "axial";
        case View::Coronal: return "coronal";
        case View::Sagittal: return "sagittal";
    }
    return "?";
}

View view_from_string(const std::string& s) {
    if (s == "axial") return View::Axial;
    if (s == "coronal") return View::Coronal;
    if (s == "sagittal") return View::Sagittal;
    throw std::invalid_argument("unknown view: " + s);
}

Volume::Volume(int nx, int ny, int nz, float spacing, VolumeKind kind)
    : Volume(nx, ny, nz, spacing, kind, Eigen::ArrayXf::Zero(std::int64_t(nx) * ny * nz)) {}

Volume::Volume(int nx, int ny, int nz, float spacing, VolumeKind kind, Eigen::ArrayXf values)
    : nx_(nx), ny_(ny), nz_(nz), spacing_(spacing), kind_(kind), v_(std::move(values)) {
    if (nx_ <= 0 || ny_ <= 0 || nz_ <= 0)
        throw std::invalid_argument("volume dims must be positive");
    if (spacing_ <= 0.0f)
        throw std::invalid_argument("volume spacing must be positive");
    if (v_.size() != size())
        throw std::invalid_argument("volume value buffer length does not match dims");
}

void Volume::validate() const {
    if (kind_ == VolumeKind::CTLike || kind_ == VolumeKind::Synthetic) {
        if ((v_ < kHuMin).any() || (v_ > kHuMax).any())
            throw std::invalid_argument("CT-like volume has values outside [-1000, 3071] HU");
    } else if (kind_ == VolumeKind::Mask) {
        if (((v_ != 0.0f) && (v_ != 1.0f)).any())
            throw std::invalid_argument("mask volume has values outside {0, 1}");
    }
}

int view_extent(const Volume& v, View view) {
    switch (view) {
        case View::Axial: return v.nz();
        case View::Coronal: return v.ny();
        case View::Sagittal: return v.nx();
    }
    return 0;
}

std::pair<int, int> slice_dims(const Volume& v, View view) {
    switch (view) {
        case View::Axial: return {v.nx(), v.ny()};
        case View::Coronal: return {v.nx(), v.nz()};
        case View::Sagittal: return {v.ny(), v.nz()};
    }
    return {0, 0};
}

Image2D slice(const Volume& v, View view, int index) {
    if (index < 0 || index >= view_extent(v, view))
        throw std::invalid_argument("slice index out of range");
    auto [w, h] = slice_dims(v, view);
    Image2D img(w, h);
    switch (view) {
        case View::Axial:
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) img.at(x, y) = v.at(x, y, index);
            break;
        case View::Coronal:
            for (int z = 0; z < h; ++z)
                for (int x = 0; x < w; ++x) img.at(x, z) = v.at(x, index, z);
            break;
        case View::Sagittal:
            for (int z = 0; z < h; ++z)
                for (int y = 0; y < w; ++y) img.at(y, z) = v.at(index, y, z);
            break;
    }
    return img;
}

void insert_slice(Volume& v, View view, int index, const Image2D& img) {
    if (index < 0 || index >= view_extent(v, view))
        throw std::invalid_argument("slice index out of range");
    auto [w, h] = slice_dims(v, view);
    if (img.width != w || img.height != h)
        throw std::invalid_argument("slice dims do not match volume");
    switch (view) {
        case View::Axial:
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) v.at(x, y, index) = img.at(x, y);
            break;
        case View::Coronal:
            for (int z = 0; z < h; ++z)
                for (int x = 0; x < w; ++x) v.at(x, index, z) = img.at(x, z);
            break;
        case View::Sagittal:
            for (int z = 0; z < h; ++z)
                for (int y = 0; y < w; ++y) v.at(index, y, z) = img.at(y, z);
            break;
    }
}

Volume mirror_volume(const Volume& v) {
    Volume out(v.nx(), v.ny(), v.nz(), v.spacing(), v.kind());
    const int nx = v.nx();
    for (int z = 0; z < v.nz(); ++z)
        for (int y = 0; y < v.ny(); ++y)
            for (int x = 0; x < nx; ++x) out.at(x, y, z) = v.at(nx - 1 - x, y, z);
    return out;
}

Volume resample_to_cube(const Volume& v, int edge, float pad_value) {
    if (edge < v.nx() || edge < v.ny() || edge < v.nz())
        throw std::invalid_argument("cube edge smaller than input dims (no cropping path)");
    Volume out(edge, edge, edge, v.spacing(), v.kind(),
               Eigen::ArrayXf::Constant(std::int64_t(edge) * edge * edge, pad_value));
    const int ox = (edge - v.nx()) / 2;
    const int oy = (edge - v.ny()) / 2;
    const int oz = (edge - v.nz()) / 2;
    for (int z = 0; z < v.nz(); ++z)
        for (int y = 0; y < v.ny(); ++y)
            for (int x = 0; x < v.nx(); ++x) out.at(ox + x, oy + y, oz + z) = v.at(x, y, z);
    return out;
}

namespace {

constexpr char kMagic[5] = {'V', 'O', 'X', 'V', '1'};

void put_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                          static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw io_error("truncated VOXV1 header while reading " + what);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

} // namespace

void write_volume(const Volume& v, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open for writing: " + path);
    os.write(kMagic, 5);
    const auto kind = static_cast<unsigned char>(v.kind());
    os.write(reinterpret_cast<const char*>(&kind), 1);
    put_u32(os, static_cast<std::uint32_t>(v.nx()));
    put_u32(os, static_cast<std::uint32_t>(v.ny()));
    put_u32(os, static_cast<std::uint32_t>(v.nz()));
    std::uint32_t sp;
    float spacing = v.spacing();
    std::memcpy(&sp, &spacing, 4);
    put_u32(os, sp);
    static_assert(sizeof(float) == 4);
    os.write(reinterpret_cast<const char*>(v.values().data()), v.size() * 4);
    if (!os) throw io_error("write failed: " + path);
}

Volume read_volume(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw missing_artifact_error("cannot open volume file: " + path);
    char magic[5];
    if (!is.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0)
        throw io_error("bad VOXV1 magic in " + path);
    unsigned char kind_code;
    if (!is.read(reinterpret_cast<char*>(&kind_code), 1))
        throw io_error("truncated VOXV1 header in " + path);
    if (kind_code > static_cast<unsigned char>(VolumeKind::Mask))
        throw io_error("unknown volume kind code in " + path);
    const std::uint32_t nx = get_u32(is, "nx");
    const std::uint32_t ny = get_u32(is, "ny");
    const std::uint32_t nz = get_u32(is, "nz");
    const std::uint32_t sp_bits = get_u32(is, "spacing");
    float spacing;
    std::memcpy(&spacing, &sp_bits, 4);

    const std::int64_t n = std::int64_t(nx) * ny * nz;
    if (n <= 0) throw io_error("bad dims in " + path);
    Eigen::ArrayXf values(n);
    if (!is.read(reinterpret_cast<char*>(values.data()), n * 4))
        throw io_error("payload shorter than dims promise in " + path);
    char extra;
    if (is.read(&extra, 1))
        throw io_error("payload longer than dims promise in " + path);
    return Volume(int(nx), int(ny), int(nz), spacing, static_cast<VolumeKind>(kind_code),
                  std::move(values));
}

} // namespace sct
