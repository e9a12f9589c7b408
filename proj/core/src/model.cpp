#include "mcinr/model.hpp"

#include "mcinr/error.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace mcinr {

namespace {

constexpr Eigen::Index kBackwardChunk = 256;
constexpr Eigen::Index kForwardChunk = 4096;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Double-precision copy of the float parameters, taken once per pass.
struct Weights {
  std::vector<Matrix> w;
  std::vector<Vector> b;
};

Weights snapshot(std::span<const DenseLayer> layers, std::span<const float> params) {
  Weights out;
  out.w.reserve(layers.size());
  out.b.reserve(layers.size());
  for (const DenseLayer& l : layers) {
    out.w.push_back(Eigen::Map<const Eigen::MatrixXf>(params.data() + l.weight_offset, l.out, l.in).cast<double>());
    out.b.push_back(Eigen::Map<const Eigen::VectorXf>(params.data() + l.bias_offset, l.out).cast<double>());
  }
  return out;
}

Matrix dense(const Weights& w, int layer, const Eigen::Ref<const Matrix>& input, bool relu) {
  Matrix z = w.w[layer] * input;
  z.colwise() += w.b[layer];
  if (relu) z = z.cwiseMax(0.0);
  return z;
}

void accumulate_dense_grad(std::span<double> grads, const DenseLayer& l, const Eigen::Ref<const Matrix>& dz,
                           const Eigen::Ref<const Matrix>& input) {
  Eigen::Map<Matrix> gw(grads.data() + l.weight_offset, l.out, l.in);
  Eigen::Map<Vector> gb(grads.data() + l.bias_offset, l.out);
  gw.noalias() += dz * input.transpose();
  // Column by column: a vectorized row sum would peel rows depending on the
  // address of `grads` and change the summation order between runs.
  for (Eigen::Index j = 0; j < dz.cols(); ++j) gb += dz.col(j);
}

}  // namespace

std::string_view to_string(HeadMode mode) noexcept {
  switch (mode) {
    case HeadMode::split_head: return "split_head";
    case HeadMode::vanilla: return "vanilla";
    case HeadMode::single_contrast: return "single_contrast";
  }
  return "split_head";
}

HeadMode parse_head_mode(std::string_view text) {
  if (text == "split_head") return HeadMode::split_head;
  if (text == "vanilla") return HeadMode::vanilla;
  if (text == "single_contrast") return HeadMode::single_contrast;
  fail(ErrorCode::InvalidArgument, "unknown mode '" + std::string(text) + "'");
}

bool GradientBuffer::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double g) { return std::isfinite(g); });
}

SplitHeadModel::SplitHeadModel(const ModelShape& shape, std::size_t) : shape_(shape) { build_layout(); }

SplitHeadModel::SplitHeadModel(const ModelShape& shape, std::vector<float> parameters) : shape_(shape) {
  build_layout();
  if (parameters.size() != params_.size()) {
    fail(ErrorCode::ShapeMismatch, "parameter vector has " + std::to_string(parameters.size()) +
                                       " entries, shape needs " + std::to_string(params_.size()));
  }
  params_ = std::move(parameters);
}

void SplitHeadModel::build_layout() {
  if (shape_.input_dim < 1 || shape_.trunk_width < 1 || shape_.trunk_depth < 1 || shape_.head_width < 1) {
    fail(ErrorCode::InvalidArgument, "model widths and depth must be >= 1");
  }
  layers_.clear();
  trunk_.clear();
  heads_ = {};
  std::size_t offset = 0;
  auto add = [&](int in, int out, bool relu) {
    DenseLayer l;
    l.in = in;
    l.out = out;
    l.relu = relu;
    l.weight_offset = offset;
    offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
    l.bias_offset = offset;
    offset += static_cast<std::size_t>(out);
    layers_.push_back(l);
    return static_cast<int>(layers_.size()) - 1;
  };

  int width = shape_.input_dim;
  for (int d = 0; d < shape_.trunk_depth; ++d) {
    trunk_.push_back(add(width, shape_.trunk_width, true));
    width = shape_.trunk_width;
  }
  switch (shape_.mode) {
    case HeadMode::split_head:
      shared_output_ = false;
      for (int c = 0; c < 2; ++c) {
        heads_[c].push_back(add(width, shape_.head_width, true));
        heads_[c].push_back(add(shape_.head_width, 1, false));
      }
      break;
    case HeadMode::vanilla:
    case HeadMode::single_contrast: {
      shared_output_ = true;
      const int out = add(width, shape_.output_channels(), false);
      heads_[0] = {out};
      if (shape_.mode == HeadMode::vanilla) heads_[1] = {out};
      break;
    }
  }
  params_.assign(offset, 0.0f);
}

SplitHeadModel SplitHeadModel::initialize(const ModelShape& shape, std::uint64_t seed) {
  SplitHeadModel m(shape, std::size_t{0});
  std::mt19937_64 rng(seed);
  for (const DenseLayer& l : m.layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    const std::size_t n = static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out);
    for (std::size_t i = 0; i < n; ++i) m.params_[l.weight_offset + i] = static_cast<float>(uniform(rng));
  }
  return m;
}

Prediction SplitHeadModel::forward(std::span<const double> features) const {
  const Eigen::Map<const Matrix> v(features.data(), static_cast<Eigen::Index>(features.size()), 1);
  const Matrix y = forward_batch(v);
  Prediction p;
  p.c1 = y(0, 0);
  if (y.rows() > 1) p.c2 = y(1, 0);
  return p;
}

Matrix SplitHeadModel::trunk_output(const Eigen::Ref<const Matrix>& features) const {
  if (features.rows() != shape_.input_dim) {
    fail(ErrorCode::ShapeMismatch, "feature length " + std::to_string(features.rows()) + " != model input " +
                                       std::to_string(shape_.input_dim));
  }
  const Weights w = snapshot(layers_, params_);
  Matrix a = features;
  for (int l : trunk_) a = dense(w, l, a, true);
  return a;
}

Matrix SplitHeadModel::forward_batch(const Eigen::Ref<const Matrix>& features) const {
  if (features.rows() != shape_.input_dim) {
    fail(ErrorCode::ShapeMismatch, "feature length " + std::to_string(features.rows()) + " != model input " +
                                       std::to_string(shape_.input_dim));
  }
  const Weights w = snapshot(layers_, params_);
  const Eigen::Index n = features.cols();
  const int channels = shape_.output_channels();
  Matrix out(channels, n);
  const Eigen::Index chunks = (n + kForwardChunk - 1) / kForwardChunk;

#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index start = c * kForwardChunk;
    const Eigen::Index len = std::min(kForwardChunk, n - start);
    Matrix a = features.middleCols(start, len);
    for (int l : trunk_) a = dense(w, l, a, true);
    if (shared_output_) {
      out.middleCols(start, len) = dense(w, heads_[0].back(), a, false);
    } else {
      for (int ch = 0; ch < 2; ++ch) {
        const Matrix h = dense(w, heads_[ch][0], a, true);
        out.row(ch).segment(start, len) = dense(w, heads_[ch][1], h, false).row(0);
      }
    }
  }
  return out;
}

LossValue SplitHeadModel::backward(const Batch& batch, const LossWeights& weights, GradientBuffer& grads) const {
  const Eigen::Index n = batch.features.cols();
  if (n == 0) fail(ErrorCode::InvalidArgument, "empty batch");
  if (batch.features.rows() != shape_.input_dim) {
    fail(ErrorCode::ShapeMismatch, "feature length " + std::to_string(batch.features.rows()) + " != model input " +
                                       std::to_string(shape_.input_dim));
  }
  if (batch.targets.size() != static_cast<std::size_t>(n) || batch.channel.size() != static_cast<std::size_t>(n)) {
    fail(ErrorCode::ShapeMismatch, "batch targets/channels do not match feature count");
  }
  if (grads.size() != params_.size()) grads = GradientBuffer(params_.size());

  const int channels = shape_.output_channels();
  LossValue loss;
  for (std::uint8_t c : batch.channel) {
    if (c >= channels) fail(ErrorCode::ShapeMismatch, "sample supervises channel " + std::to_string(c) +
                                                          " but the model has " + std::to_string(channels));
    ++loss.count[c];
  }
  const std::array<double, 2> coef{weights.alpha, weights.beta};
  std::array<double, 2> scale{0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    if (loss.count[c] == 0) continue;
    scale[c] = 2.0 * coef[c];
    if (weights.reduction == LossReduction::mean) scale[c] /= static_cast<double>(loss.count[c]);
  }

  const Weights w = snapshot(layers_, params_);
  const Eigen::Index chunks = (n + kBackwardChunk - 1) / kBackwardChunk;
  const int threads = static_cast<int>(std::min<Eigen::Index>(std::max(1, omp_get_max_threads()), chunks));
  std::vector<std::vector<double>> scratch(threads, std::vector<double>(params_.size()));
  std::vector<std::array<double, 2>> chunk_sse(chunks, {0.0, 0.0});

  auto run_chunk = [&](Eigen::Index chunk, std::span<double> g) {
    const Eigen::Index start = chunk * kBackwardChunk;
    const Eigen::Index len = std::min(kBackwardChunk, n - start);
    std::vector<Matrix> acts;
    acts.reserve(trunk_.size());
    for (std::size_t t = 0; t < trunk_.size(); ++t) {
      if (t == 0) {
        acts.push_back(dense(w, trunk_[t], batch.features.middleCols(start, len), true));
      } else {
        acts.push_back(dense(w, trunk_[t], acts.back(), true));
      }
    }
    const Matrix& top = acts.back();
    Matrix d_top = Matrix::Zero(top.rows(), len);
    std::array<double, 2>& sse = chunk_sse[chunk];

    if (shared_output_) {
      const DenseLayer& out_layer = layers_[heads_[0].back()];
      const Matrix y = dense(w, heads_[0].back(), top, false);
      Matrix dy = Matrix::Zero(y.rows(), len);
      for (Eigen::Index j = 0; j < len; ++j) {
        const int c = batch.channel[start + j];
        const double err = y(c, j) - batch.targets[start + j];
        sse[c] += err * err;
        dy(c, j) = scale[c] * err;
      }
      accumulate_dense_grad(g, out_layer, dy, top);
      d_top.noalias() = w.w[heads_[0].back()].transpose() * dy;
    } else {
      for (int c = 0; c < 2; ++c) {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index j = 0; j < len; ++j) {
          if (batch.channel[start + j] == c) cols.push_back(j);
        }
        if (cols.empty()) continue;
        const auto m = static_cast<Eigen::Index>(cols.size());
        Matrix x(top.rows(), m);
        for (Eigen::Index k = 0; k < m; ++k) x.col(k) = top.col(cols[k]);
        const int hidden = heads_[c][0];
        const int output = heads_[c][1];
        const Matrix h = dense(w, hidden, x, true);
        const Matrix y = dense(w, output, h, false);
        Matrix dy(1, m);
        for (Eigen::Index k = 0; k < m; ++k) {
          const double err = y(0, k) - batch.targets[start + cols[k]];
          sse[c] += err * err;
          dy(0, k) = scale[c] * err;
        }
        accumulate_dense_grad(g, layers_[output], dy, h);
        Matrix dh = w.w[output].transpose() * dy;
        dh = dh.cwiseProduct((h.array() > 0.0).cast<double>().matrix());
        accumulate_dense_grad(g, layers_[hidden], dh, x);
        const Matrix dx = w.w[hidden].transpose() * dh;
        for (Eigen::Index k = 0; k < m; ++k) d_top.col(cols[k]) += dx.col(k);
      }
    }

    Matrix da = std::move(d_top);
    for (std::size_t t = trunk_.size(); t-- > 0;) {
      const int l = trunk_[t];
      const Matrix dz = da.cwiseProduct((acts[t].array() > 0.0).cast<double>().matrix());
      if (t == 0) {
        accumulate_dense_grad(g, layers_[l], dz, batch.features.middleCols(start, len));
      } else {
        accumulate_dense_grad(g, layers_[l], dz, acts[t - 1]);
        da.noalias() = w.w[l].transpose() * dz;
      }
    }
  };

  grads.zero();
  auto total = grads.values();
  for (Eigen::Index wave = 0; wave < chunks; wave += threads) {
    const int active = static_cast<int>(std::min<Eigen::Index>(threads, chunks - wave));
#pragma omp parallel for num_threads(active) schedule(static, 1)
    for (int t = 0; t < active; ++t) {
      std::fill(scratch[t].begin(), scratch[t].end(), 0.0);
      run_chunk(wave + t, scratch[t]);
    }
    for (int t = 0; t < active; ++t) {
      const auto& s = scratch[t];
      for (std::size_t i = 0; i < s.size(); ++i) total[i] += s[i];
    }
  }

  for (const auto& s : chunk_sse) {
    loss.sse[0] += s[0];
    loss.sse[1] += s[1];
  }
  for (int c = 0; c < 2; ++c) {
    if (loss.count[c] == 0) continue;
    double term = coef[c] * loss.sse[c];
    if (weights.reduction == LossReduction::mean) term /= static_cast<double>(loss.count[c]);
    loss.total += term;
  }
  if (!std::isfinite(loss.total) || !grads.all_finite()) {
    fail(ErrorCode::NonFiniteLoss, "loss or gradient became non-finite (loss = " + std::to_string(loss.total) + ")");
  }
  return loss;
}

}  // namespace mcinr
