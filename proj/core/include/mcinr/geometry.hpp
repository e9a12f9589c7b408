#pragma once

#include "mcinr/volume.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace mcinr {

using Coords = Eigen::Matrix3Xd;

/// The shared coordinate frame both contrasts are fitted in. World positions
/// map to [-1, 1]^3 with a single isotropic scale, so angles are preserved.
struct CoordinateDomain {
  Vec3 world_min = Vec3::Zero();
  Vec3 world_max = Vec3::Zero();
  Vec3 center = Vec3::Zero();
  double half_extent = 1.0;

  Vec3 normalize(const Vec3& world) const { return (world - center) / half_extent; }
  Vec3 denormalize(const Vec3& unit) const { return unit * half_extent + center; }
};

/// Bounding box of the union of both volumes' voxel centres.
CoordinateDomain build_domain(const Volume& v1, const Volume& v2);

/// Min-max map of source intensities onto [0, 1].
struct IntensityNormalizer {
  double lo = 0.0;
  double hi = 1.0;

  double forward(double x) const { return (x - lo) / (hi - lo); }
  double inverse(double y) const { return lo + y * (hi - lo); }
};

struct NormalizerOptions {
  /// Percentiles in [0, 100]; the defaults give plain min-max.
  double lo_percentile = 0.0;
  double hi_percentile = 100.0;
};

IntensityNormalizer fit_normalizer(const Volume& v, const NormalizerOptions& options = {});

struct SampleSet {
  Coords coords;                    // 3 x N, normalized
  std::vector<double> intensities;  // in [0, 1]
  int contrast_id = 1;

  std::size_t size() const noexcept { return intensities.size(); }
};

struct SampleOptions {
  /// When set, only voxels whose raw intensity exceeds the threshold are kept.
  std::optional<double> mask_threshold;
};

/// One sample per voxel in storage order (k outer, then j, then i).
SampleSet extract_samples(const Volume& v, const CoordinateDomain& domain, const IntensityNormalizer& normalizer,
                          int contrast_id, const SampleOptions& options = {});

constexpr std::uint64_t kDefaultGridVoxelCap = std::uint64_t{1} << 31;

/// An axis-aligned isotropic output grid.
struct GridSpec {
  Dims dims;
  Mat4 affine = Mat4::Identity();

  Vec3 origin() const { return affine.topRightCorner<3, 1>(); }
  double spacing() const { return affine(0, 0); }
};

/// Plans an isotropic grid of step `spacing` over the voxel-extent bounding
/// box of `reference` (voxel centres +- half a voxel). Along each axis the
/// count is floor((extent - s) / s) + 1 and the grid is centred in the box.
GridSpec plan_isotropic_grid(const Volume& reference, double spacing,
                             std::uint64_t voxel_cap = kDefaultGridVoxelCap);

/// Normalized coordinates of every grid voxel, in storage order.
Coords grid_coordinates(const GridSpec& grid, const CoordinateDomain& domain);

struct IsotropicGrid {
  GridSpec spec;
  Coords coords;
};

IsotropicGrid isotropic_grid(const CoordinateDomain& domain, const Volume& reference, double spacing,
                             std::uint64_t voxel_cap = kDefaultGridVoxelCap);

}  // namespace mcinr
