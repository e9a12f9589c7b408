#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mcinr {

using Vec3 = Eigen::Vector3d;
using Mat4 = Eigen::Matrix4d;

struct Dims {
  int nx = 1;
  int ny = 1;
  int nz = 1;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  int operator[](int axis) const noexcept { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// A 3D intensity grid with a voxel-to-world (mm) affine.
///
/// Voxels are stored with i fastest, then j, then k (the NIfTI order), so the
/// flat index of (i, j, k) is i + nx * (j + ny * k).
class Volume {
 public:
  Volume() = default;
  Volume(Dims dims, const Mat4& affine);
  Volume(Dims dims, const Mat4& affine, std::vector<float> data);

  const Dims& dims() const noexcept { return dims_; }
  const Mat4& affine() const noexcept { return affine_; }
  void set_affine(const Mat4& affine);

  /// Column norms of the affine's linear block.
  Vec3 spacing() const;

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(k));
  }
  float& at(int i, int j, int k) noexcept { return data_[index(i, j, k)]; }
  float at(int i, int j, int k) const noexcept { return data_[index(i, j, k)]; }

  /// World position (mm) of a continuous voxel index.
  Vec3 world(const Vec3& ijk) const { return affine_.topLeftCorner<3, 3>() * ijk + affine_.topRightCorner<3, 1>(); }
  Vec3 world(int i, int j, int k) const { return world(Vec3(i, j, k)); }
  /// Continuous voxel index of a world position.
  Vec3 voxel(const Vec3& world) const;

  std::pair<float, float> minmax() const;

 private:
  Dims dims_{};
  Mat4 affine_ = Mat4::Identity();
  Mat4 inverse_ = Mat4::Identity();
  std::vector<float> data_ = std::vector<float>(1, 0.0f);
};

/// Diagonal affine with the given spacing and origin (world position of voxel 0,0,0).
Mat4 make_affine(const Vec3& spacing, const Vec3& origin = Vec3::Zero());

bool same_grid(const Volume& a, const Volume& b, double tol = 1e-6);

}  // namespace mcinr
