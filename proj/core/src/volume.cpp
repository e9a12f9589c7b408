#include "mcinr/volume.hpp"

#include "mcinr/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mcinr {

namespace {

void check_dims(const Dims& d) {
  if (d.nx < 1 || d.ny < 1 || d.nz < 1) {
    fail(ErrorCode::InvalidArgument, "volume dims must be >= 1, got (" + std::to_string(d.nx) + "," +
                                         std::to_string(d.ny) + "," + std::to_string(d.nz) + ")");
  }
}

}  // namespace

Volume::Volume(Dims dims, const Mat4& affine) : Volume(dims, affine, std::vector<float>(dims.count(), 0.0f)) {}

Volume::Volume(Dims dims, const Mat4& affine, std::vector<float> data) : dims_(dims), data_(std::move(data)) {
  check_dims(dims_);
  if (data_.size() != dims_.count()) {
    fail(ErrorCode::ShapeMismatch, "data length " + std::to_string(data_.size()) + " does not match dims (" +
                                       std::to_string(dims_.count()) + " voxels)");
  }
  set_affine(affine);
}

void Volume::set_affine(const Mat4& affine) {
  const double det = affine.topLeftCorner<3, 3>().determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12) {
    fail(ErrorCode::InvalidArgument, "affine linear block is singular");
  }
  affine_ = affine;
  affine_.row(3) << 0.0, 0.0, 0.0, 1.0;
  inverse_ = affine_.inverse();
}

Vec3 Volume::spacing() const { return affine_.topLeftCorner<3, 3>().colwise().norm().transpose(); }

Vec3 Volume::voxel(const Vec3& world) const {
  return inverse_.topLeftCorner<3, 3>() * world + inverse_.topRightCorner<3, 1>();
}

std::pair<float, float> Volume::minmax() const {
  const auto [lo, hi] = std::minmax_element(data_.begin(), data_.end());
  return {*lo, *hi};
}

Mat4 make_affine(const Vec3& spacing, const Vec3& origin) {
  Mat4 a = Mat4::Identity();
  a(0, 0) = spacing.x();
  a(1, 1) = spacing.y();
  a(2, 2) = spacing.z();
  a.topRightCorner<3, 1>() = origin;
  return a;
}

bool same_grid(const Volume& a, const Volume& b, double tol) {
  return a.dims() == b.dims() && (a.affine() - b.affine()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace mcinr
