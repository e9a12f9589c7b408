#include "mcinr/spline.hpp"

#include "mcinr/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mcinr {

namespace {

// Pole of the cubic B-spline prefilter; |z|^kPad is below 1e-14.
const double kPole = std::sqrt(3.0) - 2.0;
constexpr int kPad = 26;

/// In-place conversion of samples to B-spline coefficients (Unser's recursive
/// filter, mirror-symmetric initialisation). Callers pad the signal so the
/// boundary initialisation decays before reaching the region of interest.
void prefilter(std::span<double> c) {
  const std::size_t n = c.size();
  if (n < 2) return;
  const double z = kPole;
  const double gain = (1.0 - z) * (1.0 - 1.0 / z);
  for (double& v : c) v *= gain;

  // Causal initialisation: truncated sum over the mirrored signal.
  double sum = c[0];
  double zk = z;
  const std::size_t horizon = std::min<std::size_t>(n, 40);
  for (std::size_t k = 1; k < horizon; ++k) {
    sum += zk * c[k];
    zk *= z;
  }
  c[0] = sum;
  for (std::size_t k = 1; k < n; ++k) c[k] += z * c[k - 1];
  c[n - 1] = (z / (z * z - 1.0)) * (z * c[n - 2] + c[n - 1]);
  for (std::size_t k = n - 1; k-- > 0;) c[k] = z * (c[k + 1] - c[k]);
}

std::array<double, 4> bspline_weights(double t) {
  // Cubic B-spline weights for offsets -1, 0, 1, 2 relative to floor(x).
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double omt = 1.0 - t;
  return {omt * omt * omt / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
          t3 / 6.0};
}

/// Antisymmetric extension of `line` by `pad` samples on each side.
std::vector<double> pad_line(std::span<const double> line, int pad) {
  const int n = static_cast<int>(line.size());
  std::vector<double> out(static_cast<std::size_t>(n + 2 * pad));
  auto sample = [&](int k) -> double {
    // Repeated point reflection about the two end samples.
    if (n == 1) return line[0];
    const int period = 2 * (n - 1);
    int q = k;
    double offset = 0.0;
    // Each full period shifts the value by 2 (f(n-1) - f(0)).
    const double step = 2.0 * (line[n - 1] - line[0]);
    while (q < 0) {
      q += period;
      offset -= step;
    }
    while (q >= period) {
      q -= period;
      offset += step;
    }
    if (q < n) return offset + line[q];
    // Reflection about the last sample.
    return offset + 2.0 * line[n - 1] - line[period - q];
  };
  for (int k = 0; k < n + 2 * pad; ++k) out[k] = sample(k - pad);
  return out;
}

double clamp_position(double x, int n) { return std::clamp(x, 0.0, static_cast<double>(n - 1)); }

}  // namespace

CubicSplineVolume::CubicSplineVolume(const Volume& samples) : dims_(samples.dims()), pad_(kPad) {
  padded_ = Dims{dims_.nx + 2 * pad_, dims_.ny + 2 * pad_, dims_.nz + 2 * pad_};
  const auto data = samples.data();
  // Pad and filter along x into the padded x-extent, then y, then z.
  std::vector<double> stage_x(static_cast<std::size_t>(padded_.nx) * dims_.ny * dims_.nz);
  std::vector<double> line;
  for (int k = 0; k < dims_.nz; ++k) {
    for (int j = 0; j < dims_.ny; ++j) {
      line.resize(dims_.nx);
      for (int i = 0; i < dims_.nx; ++i) line[i] = data[samples.index(i, j, k)];
      std::vector<double> p = pad_line(line, pad_);
      prefilter(p);
      std::copy(p.begin(), p.end(), stage_x.begin() + (static_cast<std::size_t>(k) * dims_.ny + j) * padded_.nx);
    }
  }
  std::vector<double> stage_y(static_cast<std::size_t>(padded_.nx) * padded_.ny * dims_.nz);
  for (int k = 0; k < dims_.nz; ++k) {
    for (int i = 0; i < padded_.nx; ++i) {
      line.resize(dims_.ny);
      for (int j = 0; j < dims_.ny; ++j) line[j] = stage_x[(static_cast<std::size_t>(k) * dims_.ny + j) * padded_.nx + i];
      std::vector<double> p = pad_line(line, pad_);
      prefilter(p);
      for (int j = 0; j < padded_.ny; ++j) {
        stage_y[(static_cast<std::size_t>(k) * padded_.ny + j) * padded_.nx + i] = p[j];
      }
    }
  }
  stage_x = {};
  coeffs_.assign(padded_.count(), 0.0);
  const std::size_t plane = static_cast<std::size_t>(padded_.nx) * padded_.ny;
  for (std::size_t ij = 0; ij < plane; ++ij) {
    line.resize(dims_.nz);
    for (int k = 0; k < dims_.nz; ++k) line[k] = stage_y[static_cast<std::size_t>(k) * plane + ij];
    std::vector<double> p = pad_line(line, pad_);
    prefilter(p);
    for (int k = 0; k < padded_.nz; ++k) coeffs_[static_cast<std::size_t>(k) * plane + ij] = p[k];
  }
}

double CubicSplineVolume::coeff(int i, int j, int k) const {
  return coeffs_[static_cast<std::size_t>(i + pad_) +
                 static_cast<std::size_t>(padded_.nx) *
                     (static_cast<std::size_t>(j + pad_) + static_cast<std::size_t>(padded_.ny) * (k + pad_))];
}

double CubicSplineVolume::evaluate(const Vec3& ijk) const {
  std::array<int, 3> base{};
  std::array<std::array<double, 4>, 3> w{};
  for (int axis = 0; axis < 3; ++axis) {
    const int n = dims_[axis];
    const double x = clamp_position(ijk[axis], n);
    const double f = std::floor(x);
    base[axis] = static_cast<int>(f) - 1;
    w[axis] = bspline_weights(x - f);
  }
  double value = 0.0;
  for (int c = 0; c < 4; ++c) {
    double plane = 0.0;
    for (int b = 0; b < 4; ++b) {
      double row = 0.0;
      for (int a = 0; a < 4; ++a) row += w[0][a] * coeff(base[0] + a, base[1] + b, base[2] + c);
      plane += w[1][b] * row;
    }
    value += w[2][c] * plane;
  }
  return value;
}

std::vector<double> resample_line(std::span<const double> samples, std::span<const double> positions) {
  if (samples.empty()) fail(ErrorCode::InvalidArgument, "resample_line on empty input");
  const int n = static_cast<int>(samples.size());
  std::vector<double> coeffs = pad_line(samples, kPad);
  prefilter(coeffs);
  std::vector<double> out(positions.size());
  for (std::size_t p = 0; p < positions.size(); ++p) {
    const double x = clamp_position(positions[p], n);
    const double f = std::floor(x);
    const int base = static_cast<int>(f) - 1 + kPad;
    const auto w = bspline_weights(x - f);
    double v = 0.0;
    for (int a = 0; a < 4; ++a) v += w[a] * coeffs[static_cast<std::size_t>(base + a)];
    out[p] = v;
  }
  return out;
}

Volume cubic_spline_upsample(const Volume& lr, const GridSpec& target) {
  if (target.dims.nx < 1 || target.dims.ny < 1 || target.dims.nz < 1) {
    fail(ErrorCode::DimsMismatch, "target grid has empty dimensions");
  }
  const CubicSplineVolume spline(lr);
  Volume out(target.dims, target.affine);
  const Eigen::Matrix3d lin = target.affine.topLeftCorner<3, 3>();
  const Vec3 origin = target.affine.topRightCorner<3, 1>();
  const Dims& d = target.dims;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < d.nz; ++k) {
    for (int j = 0; j < d.ny; ++j) {
      for (int i = 0; i < d.nx; ++i) {
        const Vec3 world = lin * Vec3(i, j, k) + origin;
        out.at(i, j, k) = static_cast<float>(spline.evaluate(lr.voxel(world)));
      }
    }
  }
  return out;
}

}  // namespace mcinr
