#pragma once

#include "mcinr/fourier.hpp"
#include "mcinr/geometry.hpp"
#include "mcinr/model.hpp"
#include "mcinr/optimizer.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace mcinr {

/// Everything needed to evaluate a trained representation at new coordinates.
struct FittedModel {
  SplitHeadModel model;
  FourierBasis basis;
  CoordinateDomain domain;
  /// Indexed by contrast (0 -> contrast 1); absent for a contrast the model never saw.
  std::array<std::optional<IntensityNormalizer>, 2> normalizers;
  /// Contrast (1 or 2) predicted by each output channel; 0 marks an unused channel.
  std::array<int, 2> channel_contrast{1, 2};
  std::uint64_t seed = 0;
};

struct Checkpoint {
  FittedModel fitted;
  std::optional<AdamState> optimizer;
  std::int64_t epochs_completed = 0;
  std::vector<double> mi_history;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian binary file; parameters are stored as raw float32 so a
/// reloaded model reproduces forward outputs bit for bit.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mcinr
