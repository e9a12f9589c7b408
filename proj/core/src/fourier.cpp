#include "mcinr/fourier.hpp"

#include "mcinr/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mcinr {

FourierBasis sample_basis(int frequency_count, double sigma, std::uint64_t seed, double scale) {
  if (frequency_count < 1) fail(ErrorCode::InvalidArgument, "Fourier basis needs at least one frequency");
  if (!(sigma > 0.0)) fail(ErrorCode::InvalidArgument, "Fourier sigma must be > 0");
  if (!(scale > 0.0)) fail(ErrorCode::InvalidArgument, "Fourier scale must be > 0");
  FourierBasis b;
  b.sigma = sigma;
  b.scale = scale;
  b.seed = seed;
  b.matrix.resize(frequency_count, 3);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (int r = 0; r < frequency_count; ++r)
    for (int c = 0; c < 3; ++c) b.matrix(r, c) = scale * normal(rng);
  return b;
}

Eigen::VectorXd encode(const Vec3& x, const FourierBasis& basis) {
  const int m = basis.frequency_count();
  Eigen::VectorXd v(2 * m);
  for (int r = 0; r < m; ++r) {
    const double phase = 2.0 * std::numbers::pi * basis.matrix.row(r).dot(x);
    v[r] = std::cos(phase);
    v[m + r] = std::sin(phase);
  }
  return v;
}

Eigen::MatrixXd encode_batch(const Eigen::Ref<const Coords>& coords, const FourierBasis& basis) {
  const Eigen::Index m = basis.frequency_count();
  const Eigen::Index n = coords.cols();
  const Eigen::MatrixXd phase = (2.0 * std::numbers::pi) * (basis.matrix * coords);
  Eigen::MatrixXd features(2 * m, n);
  features.topRows(m) = phase.array().cos();
  features.bottomRows(m) = phase.array().sin();
  return features;
}

}  // namespace mcinr
