#pragma once

#include "mcinr/kvconfig.hpp"
#include "mcinr/volume.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mcinr {

/// Tissue labels used by the default phantom.
namespace tissue {
inline constexpr int background = 0;
inline constexpr int scalp = 1;
inline constexpr int csf = 2;
inline constexpr int gray_matter = 3;
inline constexpr int white_matter = 4;
inline constexpr int nuclei = 5;
inline constexpr int lesion = 6;
inline constexpr int septum = 7;
inline constexpr int count = 8;
}  // namespace tissue

enum class ShapeKind { ellipsoid, cuboid, halfspace };

struct Shape {
  ShapeKind kind = ShapeKind::ellipsoid;
  int label = 1;
  Vec3 center = Vec3::Zero();  // world mm
  Vec3 radii = Vec3::Ones();   // semi-axes (ellipsoid) or half sizes (cuboid), mm
  /// Columns are the shape's local axes in world space. A half-space keeps the
  /// side with (p - center) . rotation.col(0) <= 0.
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  /// Radial ripple of an ellipsoid's surface: r' = r (1 + amplitude *
  /// sin(theta_freq * theta + phase) * cos(phi_freq * phi)).
  double wave_amplitude = 0.0;
  int wave_theta = 0;
  int wave_phi = 0;
  double wave_phase = 0.0;
  /// Paint only over voxels that currently hold this label.
  std::optional<int> within_label;

  bool contains(const Vec3& p) const;
};

struct PhantomSpec {
  Dims dims{96, 96, 96};
  double spacing = 1.0;
  std::uint64_t seed = 0;
  /// Painted in order; later shapes overwrite earlier ones.
  std::vector<Shape> shapes;
  /// Intensity per label for each contrast (index = label).
  std::vector<double> g1;
  std::vector<double> g2;
  /// Peak deviation of the smooth multiplicative bias field of each contrast.
  double bias_amplitude = 0.05;
  /// Sub-samples per axis averaged into each voxel (partial-volume effect).
  int supersample = 2;
  double noise_sigma = 0.0;
};

/// Nested head-like ellipsoids (scalp, CSF, rippled cortex and white matter),
/// ventricles, deep nuclei, thin randomly oriented septa and small lesions
/// inside white matter. Geometry is randomized by `seed`.
PhantomSpec default_phantom_spec(std::uint64_t seed, Dims dims = {96, 96, 96}, double spacing = 1.0,
                                 int lesion_count = 10, int septum_count = 6);

/// Reads a phantom description from `key = value` entries; see README for keys.
PhantomSpec phantom_spec_from_config(const KeyValueConfig& cfg);

struct Phantom {
  Volume gt1;
  Volume gt2;
  Volume labels;
};

/// Both contrasts share one label map (the anatomy) and differ only in their
/// label-to-intensity tables and bias fields.
Phantom make_phantom(const PhantomSpec& spec);

/// Sum of Gaussian blobs with standard deviation >= min_feature_mm, kept
/// clear of the borders, min-max scaled to [0, 1].
Volume make_smooth_volume(Dims dims, double spacing, std::uint64_t seed, double min_feature_mm, int blobs = 12);

}  // namespace mcinr
