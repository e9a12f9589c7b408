#include "mcinr/acquisition.hpp"

#include "mcinr/error.hpp"
#include "mcinr/spline.hpp"

#include <array>
#include <cmath>
#include <random>
#include <string>

namespace mcinr {

std::string_view to_string(Plane plane) noexcept {
  switch (plane) {
    case Plane::axial: return "axial";
    case Plane::sagittal: return "sagittal";
    case Plane::coronal: return "coronal";
  }
  return "axial";
}

Plane parse_plane(std::string_view text) {
  if (text == "axial") return Plane::axial;
  if (text == "sagittal") return Plane::sagittal;
  if (text == "coronal") return Plane::coronal;
  fail(ErrorCode::InvalidArgument, "unknown plane '" + std::string(text) + "'");
}

int slice_axis(Plane plane) noexcept {
  switch (plane) {
    case Plane::sagittal: return 0;
    case Plane::coronal: return 1;
    case Plane::axial: return 2;
  }
  return 2;
}

Volume simulate_acquisition(const Volume& gt, const AcquisitionSpec& acq) {
  if (!(acq.thickness > 0.0)) fail(ErrorCode::InvalidArgument, "slice thickness must be > 0");
  const int axis = slice_axis(acq.plane);
  const Vec3 spacing = gt.spacing();
  for (int a = 0; a < 3; ++a) {
    if (a == axis) continue;
    if (std::abs(spacing[a] - acq.in_plane_spacing) > 1e-6 * std::max(1.0, spacing[a])) {
      fail(ErrorCode::InvalidArgument, "in-plane spacing " + std::to_string(acq.in_plane_spacing) +
                                           " mm differs from the source spacing " + std::to_string(spacing[a]) +
                                           " mm; in-plane resolution is preserved, not resampled");
    }
  }
  const double factor = acq.thickness / spacing[axis];
  const double rounded = std::round(factor);
  const bool integral = std::abs(factor - rounded) <= 1e-6 * std::max(1.0, factor);
  if (factor < 1.0 - 1e-9) fail(ErrorCode::InvalidArgument, "slice thickness is finer than the source spacing");
  if (!integral && (!acq.allow_non_integral || acq.profile == SliceProfile::box)) {
    fail(ErrorCode::NonIntegralFactor, "thickness / spacing = " + std::to_string(factor) + " is not a whole number");
  }
  const double f = integral ? rounded : factor;

  const Dims& in = gt.dims();
  const int n_in = in[axis];
  const int n_out = static_cast<int>(std::floor(n_in / f + 1e-9));
  if (n_out < 1) fail(ErrorCode::InvalidArgument, "slice thickness exceeds the field of view");

  Dims out_dims = in;
  if (axis == 0) out_dims.nx = n_out;
  if (axis == 1) out_dims.ny = n_out;
  if (axis == 2) out_dims.nz = n_out;

  Mat4 affine = gt.affine();
  const Vec3 column = gt.affine().block<3, 1>(0, axis);
  affine.block<3, 1>(0, 3) += column * ((f - 1.0) / 2.0);
  affine.block<3, 1>(0, axis) = column * f;
  Volume out(out_dims, affine);

  std::vector<double> positions(n_out);
  for (int s = 0; s < n_out; ++s) positions[s] = s * f + (f - 1.0) / 2.0;

  // Walk every line along the slice axis.
  const int other_a = axis == 0 ? 1 : 0;
  const int other_b = axis == 2 ? 1 : 2;
  const auto src = gt.data();
  std::vector<double> line(n_in);
  for (int b = 0; b < in[other_b]; ++b) {
    for (int a = 0; a < in[other_a]; ++a) {
      auto idx = [&](int along) {
        std::array<int, 3> ijk{};
        ijk[axis] = along;
        ijk[other_a] = a;
        ijk[other_b] = b;
        return ijk;
      };
      for (int t = 0; t < n_in; ++t) {
        const auto ijk = idx(t);
        line[t] = src[gt.index(ijk[0], ijk[1], ijk[2])];
      }
      std::vector<double> values;
      if (acq.profile == SliceProfile::spline) {
        values = resample_line(line, positions);
      } else {
        const int fi = static_cast<int>(f);
        values.assign(n_out, 0.0);
        for (int s = 0; s < n_out; ++s) {
          double sum = 0.0;
          for (int t = 0; t < fi; ++t) sum += line[s * fi + t];
          values[s] = sum / fi;
        }
      }
      for (int s = 0; s < n_out; ++s) {
        const auto ijk = idx(s);
        out.at(ijk[0], ijk[1], ijk[2]) = static_cast<float>(values[s]);
      }
    }
  }

  if (acq.noise_sigma > 0.0) {
    std::mt19937_64 rng(acq.noise_seed);
    std::normal_distribution<double> noise(0.0, acq.noise_sigma);
    for (float& v : out.data()) v = static_cast<float>(v + noise(rng));
  }
  return out;
}

}  // namespace mcinr
