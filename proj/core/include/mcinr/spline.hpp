#pragma once

#include "mcinr/geometry.hpp"
#include "mcinr/volume.hpp"

#include <span>
#include <vector>

namespace mcinr {

/// Interpolating cubic B-spline over a 3D sample grid.
///
/// Samples are extended past each edge by point reflection about the edge
/// sample (f(-k) = 2 f(0) - f(k)) before prefiltering, which keeps linear
/// signals exactly linear up to the boundary. Evaluation positions are
/// clamped to [0, n - 1] on every axis.
class CubicSplineVolume {
 public:
  explicit CubicSplineVolume(const Volume& samples);

  /// Value at a continuous voxel index of the source volume.
  double evaluate(const Vec3& ijk) const;

  const Dims& dims() const noexcept { return dims_; }

 private:
  double coeff(int i, int j, int k) const;

  Dims dims_;
  int pad_ = 0;
  Dims padded_;
  std::vector<double> coeffs_;
};

/// 1D interpolating cubic B-spline evaluated at fractional sample positions.
std::vector<double> resample_line(std::span<const double> samples, std::span<const double> positions);

/// Evaluates the cubic spline of `lr` at every voxel of `target` (world
/// positions outside the source voxel centres are clamped to the edge).
Volume cubic_spline_upsample(const Volume& lr, const GridSpec& target);

}  // namespace mcinr
