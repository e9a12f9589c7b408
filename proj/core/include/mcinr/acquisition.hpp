#pragma once

#include "mcinr/volume.hpp"

#include <cstdint>
#include <string_view>

namespace mcinr {

enum class Plane { axial, sagittal, coronal };

std::string_view to_string(Plane plane) noexcept;
Plane parse_plane(std::string_view text);

/// Voxel axis orthogonal to the acquired slices: sagittal -> i, coronal -> j,
/// axial -> k.
int slice_axis(Plane plane) noexcept;

enum class SliceProfile {
  spline,  // cubic-spline decimation: sample the spline at each slice centre
  box,     // average the high-resolution voxels covered by each slice
};

struct AcquisitionSpec {
  Plane plane = Plane::axial;
  double in_plane_spacing = 1.0;
  double thickness = 4.0;
  SliceProfile profile = SliceProfile::spline;
  /// Permits thickness / spacing ratios that are not whole numbers (spline
  /// profile only); the slab then covers floor(n * spacing / thickness) slices.
  bool allow_non_integral = false;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
};

/// Simulates a 2D multi-slice acquisition of `gt`: resolution along the slice
/// axis drops to `thickness`; in-plane sampling is left untouched.
///
/// Slice s covers high-resolution voxels [s f, (s + 1) f) along the slice
/// axis, f = thickness / spacing, and its centre sits at index s f + (f - 1) / 2.
/// The output affine places every slice centre at that world position.
Volume simulate_acquisition(const Volume& gt, const AcquisitionSpec& acq);

}  // namespace mcinr
