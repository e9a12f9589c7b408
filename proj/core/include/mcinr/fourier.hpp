#pragma once

#include "mcinr/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace mcinr {

/// Random Fourier feature basis: rows of `matrix` are frequency vectors drawn
/// i.i.d. from N(0, sigma^2) and multiplied by `scale`.
struct FourierBasis {
  Eigen::MatrixX3d matrix;
  double sigma = 4.0;
  double scale = 1.0;
  std::uint64_t seed = 0;

  int frequency_count() const noexcept { return static_cast<int>(matrix.rows()); }
  int feature_count() const noexcept { return 2 * frequency_count(); }
};

FourierBasis sample_basis(int frequency_count, double sigma, std::uint64_t seed, double scale = 1.0);

/// [cos(2 pi B x); sin(2 pi B x)] for one normalized coordinate.
Eigen::VectorXd encode(const Vec3& x, const FourierBasis& basis);

/// Column-wise encoding of a 3 x N coordinate block into a 2m x N feature block.
Eigen::MatrixXd encode_batch(const Eigen::Ref<const Coords>& coords, const FourierBasis& basis);

}  // namespace mcinr
