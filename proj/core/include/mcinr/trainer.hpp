#pragma once

#include "mcinr/checkpoint.hpp"
#include "mcinr/geometry.hpp"
#include "mcinr/kvconfig.hpp"
#include "mcinr/model.hpp"
#include "mcinr/optimizer.hpp"
#include "mcinr/volume.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mcinr {

/// What to do once the MI trajectory plateaus.
///  stop:    end training and keep the model from that epoch.
///  observe: keep the model from that epoch but train to the epoch cap.
///  none:    no plateau detection; the final model is kept.
enum class StopPolicy { stop, observe, none };

/// Cosine schedule advances once per epoch or once per optimizer step.
enum class ScheduleUnit { epoch, batch };

struct TrainConfig {
  int epochs = 50;
  int batch_size = 1000;
  double lr = 4e-4;
  double lr_min = 0.0;
  ScheduleUnit schedule = ScheduleUnit::epoch;
  AdamConfig adam;
  double clip_norm = 0.0;  // 0 disables clipping

  int fourier_dim = 512;  // encoded feature count (two per frequency)
  double sigma = 4.0;
  double fourier_scale = 1.0;
  int trunk_width = 1024;
  int trunk_depth = 4;
  int head_width = 512;
  HeadMode mode = HeadMode::split_head;
  int single_contrast = 1;  // contrast fitted in single_contrast mode

  double alpha = 1.0;
  double beta = 1.0;
  LossReduction reduction = LossReduction::mean;

  std::uint64_t seed = 0;
  bool deterministic = true;

  int mi_interval = 1;
  int mi_bins = 32;
  int mi_grid_stride = 1;
  int plateau_window = 5;
  double plateau_tol = 1e-3;
  StopPolicy stop_policy = StopPolicy::stop;

  double target_spacing = 1.0;
  int grid_reference = 1;  // volume whose extent the output grid covers

  NormalizerOptions normalizer;
  std::optional<double> mask_threshold_c1;
  std::optional<double> mask_threshold_c2;

  /// Return after this epoch as if interrupted; used to produce resumable states.
  std::optional<int> halt_after_epoch;

  void validate() const;
  ModelShape model_shape() const;

  KeyValueConfig to_config() const;
  /// Keys present in `cfg` override `base`; unknown keys are rejected.
  static TrainConfig from_config(const KeyValueConfig& cfg);
  static TrainConfig from_config(const KeyValueConfig& cfg, TrainConfig base);
};

std::string_view to_string(StopPolicy policy) noexcept;
std::string_view to_string(ScheduleUnit unit) noexcept;

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  std::optional<double> loss_c1;  // per-sample MSE over the epoch
  std::optional<double> loss_c2;
  double loss_total = 0.0;
  std::optional<double> mi;
};

struct TrainingRun {
  Checkpoint best;         // model at the plateau epoch, else at the last epoch
  Checkpoint final_state;  // model and optimizer after the last completed epoch
  std::vector<EpochRecord> history;
  std::vector<double> mi_history;
  std::vector<int> mi_epochs;
  int stop_epoch = 0;
  std::optional<int> plateau_epoch;
  bool stopped_early = false;
  double wall_seconds = 0.0;
  GridSpec grid;
  std::vector<std::string> warnings;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Fits one representation to both volumes (or to one of them in
/// single_contrast mode). `resume`, when given, continues from a state
/// previously returned as `final_state` under the same config and inputs.
TrainingRun train(const Volume& v1, const Volume& v2, const TrainConfig& cfg, const Checkpoint* resume = nullptr,
                  const EpochCallback& on_epoch = {});

/// Network outputs, clamped to [0, 1], for normalized coordinates.
Eigen::MatrixXd predict_normalized(const FittedModel& fitted, const Eigen::Ref<const Coords>& coords);

struct Reconstruction {
  std::optional<Volume> c1;
  std::optional<Volume> c2;
};

/// Evaluates the model on every voxel of `grid` and maps each channel back to
/// its contrast's source intensity range.
Reconstruction reconstruct(const FittedModel& fitted, const GridSpec& grid);

/// Tab-separated, one line per epoch, `NA` for values not computed.
void write_training_log(std::ostream& out, const std::vector<EpochRecord>& history);
std::vector<EpochRecord> read_training_log(std::istream& in);

}  // namespace mcinr
