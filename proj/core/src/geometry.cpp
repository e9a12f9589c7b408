#include "mcinr/geometry.hpp"

#include "mcinr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mcinr {

namespace {

void extend_box(const Volume& v, double lo_index_shift, Vec3& lo, Vec3& hi) {
  const Dims& d = v.dims();
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 ijk((corner & 1) ? d.nx - 1 - lo_index_shift : lo_index_shift,
                   (corner & 2) ? d.ny - 1 - lo_index_shift : lo_index_shift,
                   (corner & 4) ? d.nz - 1 - lo_index_shift : lo_index_shift);
    const Vec3 w = v.world(ijk);
    lo = lo.cwiseMin(w);
    hi = hi.cwiseMax(w);
  }
}

}  // namespace

CoordinateDomain build_domain(const Volume& v1, const Volume& v2) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Vec3 lo = Vec3::Constant(inf);
  Vec3 hi = Vec3::Constant(-inf);
  extend_box(v1, 0.0, lo, hi);
  extend_box(v2, 0.0, lo, hi);

  CoordinateDomain d;
  d.world_min = lo;
  d.world_max = hi;
  const Vec3 extent = hi - lo;
  for (int axis = 0; axis < 3; ++axis) {
    if (!(extent[axis] > 1e-9)) {
      fail(ErrorCode::DegenerateDomain, "voxel centres span zero extent along axis " + std::to_string(axis));
    }
  }
  d.center = 0.5 * (lo + hi);
  d.half_extent = 0.5 * extent.maxCoeff();
  return d;
}

IntensityNormalizer fit_normalizer(const Volume& v, const NormalizerOptions& options) {
  const auto data = v.data();
  IntensityNormalizer n;
  if (options.lo_percentile <= 0.0 && options.hi_percentile >= 100.0) {
    const auto [lo, hi] = v.minmax();
    n.lo = lo;
    n.hi = hi;
  } else {
    if (options.lo_percentile < 0.0 || options.hi_percentile > 100.0 ||
        options.lo_percentile >= options.hi_percentile) {
      fail(ErrorCode::InvalidArgument, "normalizer percentiles must satisfy 0 <= lo < hi <= 100");
    }
    std::vector<float> sorted(data.begin(), data.end());
    auto pick = [&](double pct) {
      const auto idx = static_cast<std::size_t>(std::llround(pct / 100.0 * static_cast<double>(sorted.size() - 1)));
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
      return static_cast<double>(sorted[idx]);
    };
    n.lo = pick(options.lo_percentile);
    n.hi = pick(options.hi_percentile);
  }
  if (!(n.hi > n.lo)) fail(ErrorCode::ConstantVolume, "volume has a single intensity value; cannot normalize");
  return n;
}

SampleSet extract_samples(const Volume& v, const CoordinateDomain& domain, const IntensityNormalizer& normalizer,
                          int contrast_id, const SampleOptions& options) {
  if (contrast_id != 1 && contrast_id != 2) fail(ErrorCode::InvalidArgument, "contrast_id must be 1 or 2");
  const Dims& d = v.dims();
  const auto data = v.data();

  std::size_t kept = data.size();
  if (options.mask_threshold) {
    kept = static_cast<std::size_t>(
        std::count_if(data.begin(), data.end(), [&](float x) { return x > *options.mask_threshold; }));
  }
  if (kept == 0) fail(ErrorCode::InvalidArgument, "sample mask removed every voxel");

  SampleSet s;
  s.contrast_id = contrast_id;
  s.coords.resize(3, static_cast<Eigen::Index>(kept));
  s.intensities.resize(kept);
  const Eigen::Matrix3d linear = v.affine().topLeftCorner<3, 3>();
  const Vec3 offset = v.affine().topRightCorner<3, 1>();

  std::size_t n = 0;
  for (int k = 0; k < d.nz; ++k) {
    for (int j = 0; j < d.ny; ++j) {
      for (int i = 0; i < d.nx; ++i) {
        const float raw = data[v.index(i, j, k)];
        if (options.mask_threshold && !(raw > *options.mask_threshold)) continue;
        const Vec3 world = linear * Vec3(i, j, k) + offset;
        s.coords.col(static_cast<Eigen::Index>(n)) = domain.normalize(world);
        s.intensities[n] = std::clamp(normalizer.forward(raw), 0.0, 1.0);
        ++n;
      }
    }
  }
  return s;
}

GridSpec plan_isotropic_grid(const Volume& reference, double spacing, std::uint64_t voxel_cap) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) fail(ErrorCode::InvalidArgument, "grid spacing must be > 0");
  constexpr double inf = std::numeric_limits<double>::infinity();
  Vec3 lo = Vec3::Constant(inf);
  Vec3 hi = Vec3::Constant(-inf);
  extend_box(reference, -0.5, lo, hi);
  const Vec3 extent = hi - lo;

  std::array<double, 3> counts{};
  double total = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    // The small slack absorbs rounding when the extent is an exact multiple.
    counts[axis] = std::max(1.0, std::floor((extent[axis] - spacing) / spacing + 1e-9) + 1.0);
    total *= counts[axis];
  }
  if (total > static_cast<double>(voxel_cap) || total > static_cast<double>(std::numeric_limits<int>::max())) {
    fail(ErrorCode::GridTooLarge, "isotropic grid would hold " + std::to_string(total) + " voxels (cap " +
                                      std::to_string(voxel_cap) + ")");
  }
  for (double c : counts) {
    if (c > static_cast<double>(std::numeric_limits<int>::max())) fail(ErrorCode::GridTooLarge, "grid axis too long");
  }

  GridSpec g;
  g.dims = Dims{static_cast<int>(counts[0]), static_cast<int>(counts[1]), static_cast<int>(counts[2])};
  Vec3 origin;
  for (int axis = 0; axis < 3; ++axis) {
    origin[axis] = lo[axis] + 0.5 * (extent[axis] - (counts[axis] - 1.0) * spacing);
  }
  g.affine = make_affine(Vec3::Constant(spacing), origin);
  return g;
}

Coords grid_coordinates(const GridSpec& grid, const CoordinateDomain& domain) {
  const Dims& d = grid.dims;
  Coords coords(3, static_cast<Eigen::Index>(d.count()));
  const Vec3 origin = grid.origin();
  const double s = grid.spacing();
  Eigen::Index n = 0;
  for (int k = 0; k < d.nz; ++k) {
    for (int j = 0; j < d.ny; ++j) {
      for (int i = 0; i < d.nx; ++i) {
        coords.col(n++) = domain.normalize(origin + s * Vec3(i, j, k));
      }
    }
  }
  return coords;
}

IsotropicGrid isotropic_grid(const CoordinateDomain& domain, const Volume& reference, double spacing,
                             std::uint64_t voxel_cap) {
  IsotropicGrid g;
  g.spec = plan_isotropic_grid(reference, spacing, voxel_cap);
  g.coords = grid_coordinates(g.spec, domain);
  return g;
}

}  // namespace mcinr
