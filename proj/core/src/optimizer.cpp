#include "mcinr/optimizer.hpp"

#include "mcinr/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mcinr {

AdamState AdamState::for_size(std::size_t n, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

template <std::floating_point P>
void adam_step(std::span<P> params, std::span<const double> grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    fail(ErrorCode::ShapeMismatch, "Adam: parameter, gradient and moment sizes differ");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail(ErrorCode::InvalidArgument, "Adam: learning rate must be >= 0");

  const AdamConfig& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    const double updated = static_cast<double>(params[i]) - lr * m_hat / (std::sqrt(v_hat) + c.eps);
    if (!std::isfinite(updated)) {
      fail(ErrorCode::NonFiniteUpdate, "Adam produced a non-finite value for parameter " + std::to_string(i));
    }
    params[i] = static_cast<P>(updated);
  }
}

template void adam_step<float>(std::span<float>, std::span<const double>, AdamState&, double);
template void adam_step<double>(std::span<double>, std::span<const double>, AdamState&, double);

double clip_by_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& g : grads) g *= s;
  }
  return norm;
}

double lr_at(const LrSchedule& schedule, std::int64_t step) {
  if (schedule.total_steps < 1) fail(ErrorCode::InvalidArgument, "schedule needs total_steps >= 1");
  if (step < 0 || step > schedule.total_steps) {
    fail(ErrorCode::StepOutOfRange,
         "step " + std::to_string(step) + " outside [0, " + std::to_string(schedule.total_steps) + "]");
  }
  const double frac = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return schedule.lr_min + (schedule.lr_max - schedule.lr_min) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace mcinr
