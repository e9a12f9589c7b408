#pragma once

#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

namespace mcinr {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  static AdamState for_size(std::size_t n, const AdamConfig& config = {});
};

/// One bias-corrected Adam update in place. Moments are kept in double
/// whatever the parameter type.
template <std::floating_point P>
void adam_step(std::span<P> params, std::span<const double> grads, AdamState& state, double lr);

/// Rescales `grads` so their L2 norm is at most `max_norm`; returns the norm
/// before clipping.
double clip_by_norm(std::span<double> grads, double max_norm);

/// Single cosine arc from lr_max at step 0 to lr_min at total_steps.
struct LrSchedule {
  double lr_max = 4e-4;
  double lr_min = 0.0;
  std::int64_t total_steps = 50;
};

double lr_at(const LrSchedule& schedule, std::int64_t step);

}  // namespace mcinr
