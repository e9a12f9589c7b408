#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mcinr {

/// split_head: shared trunk, one two-layer head per contrast.
/// vanilla: shared trunk, a single linear layer with two outputs.
/// single_contrast: shared trunk, a single linear layer with one output.
enum class HeadMode { split_head, vanilla, single_contrast };

std::string_view to_string(HeadMode mode) noexcept;
HeadMode parse_head_mode(std::string_view text);

struct ModelShape {
  int input_dim = 512;
  int trunk_width = 1024;
  int trunk_depth = 4;
  int head_width = 512;
  HeadMode mode = HeadMode::split_head;

  int output_channels() const noexcept { return mode == HeadMode::single_contrast ? 1 : 2; }
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::size_t weight_offset = 0;  // out x in, column-major
  std::size_t bias_offset = 0;
  bool relu = false;
};

/// Gradients in the same flat layout as the model parameters, accumulated in
/// double precision.
class GradientBuffer {
 public:
  GradientBuffer() = default;
  explicit GradientBuffer(std::size_t size) : values_(size, 0.0) {}

  void zero() { std::fill(values_.begin(), values_.end(), 0.0); }
  bool all_finite() const;
  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

enum class LossReduction { mean, sum };

/// Weights of the two per-contrast terms of the masked squared-error loss.
///
/// With `mean`, each contrast's squared errors are averaged over that
/// contrast's samples in the batch before weighting, so alpha and beta absorb
/// the 1/n factor of the plain sum.
struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  LossReduction reduction = LossReduction::mean;
};

/// A training batch: features are 2m x N, `channel[n]` names the output
/// channel (0 or 1) that sample n supervises.
struct Batch {
  Eigen::MatrixXd features;
  std::vector<double> targets;
  std::vector<std::uint8_t> channel;

  std::size_t size() const noexcept { return targets.size(); }
};

struct LossValue {
  double total = 0.0;
  std::array<double, 2> sse{0.0, 0.0};
  std::array<std::size_t, 2> count{0, 0};
};

struct Prediction {
  double c1 = 0.0;
  std::optional<double> c2;
};

class SplitHeadModel {
 public:
  /// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
  static SplitHeadModel initialize(const ModelShape& shape, std::uint64_t seed);

  /// An empty placeholder with no layers; assign a real model before use.
  SplitHeadModel() = default;
  SplitHeadModel(const ModelShape& shape, std::vector<float> parameters);

  const ModelShape& shape() const noexcept { return shape_; }
  std::span<const DenseLayer> layers() const noexcept { return layers_; }
  std::span<float> parameters() noexcept { return params_; }
  std::span<const float> parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  GradientBuffer make_gradient_buffer() const { return GradientBuffer(params_.size()); }

  /// Indices into layers(): trunk first, then head layers for each channel.
  std::span<const int> trunk_layers() const noexcept { return trunk_; }
  std::span<const int> head_layers(int channel) const noexcept { return heads_[channel]; }

  Prediction forward(std::span<const double> features) const;

  /// Channels x N outputs for a 2m x N feature block.
  Eigen::MatrixXd forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& features) const;

  /// Activations after the last trunk layer (trunk_width x N).
  Eigen::MatrixXd trunk_output(const Eigen::Ref<const Eigen::MatrixXd>& features) const;

  /// Masked squared-error loss of the batch and its exact gradient with
  /// respect to every parameter, written into `grads` (overwritten, not added).
  ///
  /// The batch is processed in fixed-size column chunks whose partial
  /// gradients are summed in chunk order, so the result is bit-identical
  /// regardless of how many threads evaluate the chunks.
  LossValue backward(const Batch& batch, const LossWeights& weights, GradientBuffer& grads) const;

 private:
  SplitHeadModel(const ModelShape& shape, std::size_t count_hint);
  void build_layout();

  ModelShape shape_;
  std::vector<DenseLayer> layers_;
  std::vector<int> trunk_;
  std::array<std::vector<int>, 2> heads_;
  bool shared_output_ = false;  // vanilla / single_contrast: one output layer
  std::vector<float> params_;
};

}  // namespace mcinr
