#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace sct {

enum class VolumeKind : std::uint8_t {
    MRLike = 0,
    CTLike = 1,
    Synthetic = 2,
    Label = 3,
    Mask = 4,
};

const char* to_string(VolumeKind k);

// Slicing axes. Axis convention for the whole project:
//   x : left-right        (sagittal slices are x = const planes)
//   y : anterior-posterior (coronal  slices are y = const planes)
//   z : inferior-superior  (axial    slices are z = const planes)
enum class View { Axial = 0, Coronal = 1, Sagittal = 2 };

const char* to_string(View v);
View view_from_string(const std::string& s);

// HU range carried by CT-like volumes. 4071 distinct HU map onto [0,255]
// network units, so one network quantum is kHuRange/255 ~ 15.96 HU.
inline constexpr float kHuMin = -1000.0f;
inline constexpr float kHuMax = 3071.0f;
inline constexpr float kHuRange = kHuMax - kHuMin;

// Plain 2-D image, row-major with u fastest: v(u + width * row).
struct Image2D {
    int width = 0;
    int height = 0;
    Eigen::ArrayXf v;

    Image2D() = default;
    Image2D(int w, int h) : width(w), height(h), v(Eigen::ArrayXf::Zero(std::int64_t(w) * h)) {}

    float& at(int u, int vv) { return v[u + std::int64_t(width) * vv]; }
    float at(int u, int vv) const { return v[u + std::int64_t(width) * vv]; }
    std::int64_t size() const { return std::int64_t(width) * height; }
};

// 3-D scalar grid with isotropic spacing, row-major x-fastest:
// index(x,y,z) = x + nx*(y + ny*z). Values are 32-bit float for every kind,
// including HU. Immutable in spirit: operations return new volumes.
class Volume {
  public:
    Volume() = default;
    Volume(int nx, int ny, int nz, float spacing, VolumeKind kind);
    Volume(int nx, int ny, int nz, float spacing, VolumeKind kind, Eigen::ArrayXf values);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    float spacing() const { return spacing_; }
    VolumeKind kind() const { return kind_; }
    void set_kind(VolumeKind k) { kind_ = k; }

    std::int64_t size() const { return std::int64_t(nx_) * ny_ * nz_; }
    std::int64_t index(int x, int y, int z) const {
        return x + std::int64_t(nx_) * (y + std::int64_t(ny_) * z);
    }
    float at(int x, int y, int z) const { return v_[index(x, y, z)]; }
    float& at(int x, int y, int z) { return v_[index(x, y, z)]; }

    Eigen::ArrayXf& values() { return v_; }
    const Eigen::ArrayXf& values() const { return v_; }

    // Enforces the kind-dependent invariants (HU bounds for CTLike/Synthetic,
    // {0,1} for Mask). Throws std::invalid_argument on violation.
    void validate() const;

  private:
    int nx_ = 0, ny_ = 0, nz_ = 0;
    float spacing_ = 1.0f;
    VolumeKind kind_ = VolumeKind::MRLike;
    Eigen::ArrayXf v_;
};

// Extent of the slicing axis for a view (Axial -> nz, Coronal -> ny, Sagittal -> nx).
int view_extent(const Volume& v, View view);

// In-plane dimensions of a slice for a view, as {width, height}:
//   Axial    k: img(u,v) = vol(u, v, k)   width = nx, height = ny
//   Coronal  j: img(u,v) = vol(u, j, v)   width = nx, height = nz
//   Sagittal i: img(u,v) = vol(i, u, v)   width = ny, height = nz
std::pair<int, int> slice_dims(const Volume& v, View view);

Image2D slice(const Volume& v, View view, int index);
void insert_slice(Volume& v, View view, int index, const Image2D& img);

// Left-right flip about the sagittal midplane: out(x,y,z) = in(nx-1-x, y, z).
// Involution: mirror(mirror(v)) == v.
Volume mirror_volume(const Volume& v);

// Pads to an edge^3 cube with the original content centered and new voxels
// set to pad_value (-1000 for CT-like, 0 for MR-like inputs). When edge - n
// is odd the extra voxel goes on the far side. Rejects edge < any input dim.
Volume resample_to_cube(const Volume& v, int edge, float pad_value);

// VOXV1 container: 5 magic bytes "VOXV1", u8 kind, 3x u32 LE dims,
// f32 LE spacing, then nx*ny*nz f32 LE values, x fastest.
void write_volume(const Volume& v, const std::string& path);
Volume read_volume(const std::string& path);

} // namespace sct
