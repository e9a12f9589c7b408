#include "mcinr/error.hpp"
#include "mcinr/optimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "test_errors.hpp"
#include "test_support.hpp"

namespace mcinr {
namespace {

using test::error_of;

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> w{0.0};
  const std::vector<double> g{1.0};
  AdamState s = AdamState::for_size(1);
  adam_step<double>(w, g, s, 0.1);
  EXPECT_NEAR(w[0], -0.1, 1e-8);
  EXPECT_EQ(s.t, 1);
}

TEST(Adam, ZeroGradientIsIdentity) {
  std::vector<float> w{1.5f, -2.0f, 0.25f};
  const std::vector<float> before = w;
  const std::vector<double> g(3, 0.0);
  AdamState s = AdamState::for_size(3);
  for (int i = 0; i < 5; ++i) adam_step<float>(w, g, s, 0.1);
  EXPECT_EQ(w, before);
  EXPECT_EQ(s.t, 5);
}

TEST(Adam, MatchesScalarReferenceOnQuadratic) {
  // Hand-rolled scalar Adam on f(w) = w^2 / 2.
  double w_ref = 1.0, m = 0.0, v = 0.0;
  std::vector<double> w{1.0};
  AdamState s = AdamState::for_size(1);
  for (int t = 1; t <= 10; ++t) {
    const double g_ref = w_ref;
    m = 0.9 * m + 0.1 * g_ref;
    v = 0.999 * v + 0.001 * g_ref * g_ref;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    w_ref -= 0.05 * mh / (std::sqrt(vh) + 1e-8);

    const std::vector<double> g{w[0]};
    adam_step<double>(w, g, s, 0.05);
    EXPECT_NEAR(w[0], w_ref, 1e-12) << "step " << t;
  }
}

TEST(Adam, ConvergesOnQuadratic) {
  std::vector<double> w{1.0};
  AdamState s = AdamState::for_size(1);
  for (int t = 0; t < 1000; ++t) {
    const std::vector<double> g{w[0]};
    adam_step<double>(w, g, s, 1e-2);
  }
  EXPECT_LT(std::abs(w[0]), 1e-3);
}

TEST(Adam, SecondMomentStaysNonNegative) {
  test::Lcg lcg(3);
  std::vector<float> w(50, 0.0f);
  AdamState s = AdamState::for_size(w.size());
  for (int t = 0; t < 20; ++t) {
    std::vector<double> g(w.size());
    for (double& x : g) x = lcg.next() - 0.5;
    adam_step<float>(w, g, s, 1e-3);
  }
  for (double x : s.v) EXPECT_GE(x, 0.0);
}

TEST(Adam, Errors) {
  std::vector<double> w{1.0, 2.0};
  AdamState s = AdamState::for_size(2);
  const std::vector<double> short_grad{1.0};
  EXPECT_EQ(error_of([&] { adam_step<double>(w, short_grad, s, 0.1); }), ErrorCode::ShapeMismatch);
  const std::vector<double> g{1.0, 1.0};
  EXPECT_EQ(error_of([&] { adam_step<double>(w, g, s, -1.0); }), ErrorCode::InvalidArgument);
  const std::vector<double> bad{std::nan(""), 1.0};
  EXPECT_EQ(error_of([&] { adam_step<double>(w, bad, s, 0.1); }), ErrorCode::NonFiniteUpdate);
}

TEST(ClipByNorm, RescalesOnlyAboveThreshold) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_by_norm(g, 10.0), 5.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 4.0}));
  EXPECT_DOUBLE_EQ(clip_by_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0], 0.6, 1e-15);
  EXPECT_NEAR(g[1], 0.8, 1e-15);
}

TEST(LrSchedule, Examples) {
  const LrSchedule s{4e-4, 0.0, 50};
  EXPECT_DOUBLE_EQ(lr_at(s, 0), 4e-4);
  EXPECT_NEAR(lr_at(s, 25), 2e-4, 1e-18);
  EXPECT_NEAR(lr_at(s, 50), 0.0, 1e-18);
  const LrSchedule floor{1e-3, 1e-5, 10};
  EXPECT_NEAR(lr_at(floor, 10), 1e-5, 1e-18);
  EXPECT_NEAR(lr_at(floor, 3), 1e-5 + (1e-3 - 1e-5) * (1 + std::cos(std::numbers::pi * 0.3)) / 2, 1e-18);
}

TEST(LrSchedule, OutOfRange) {
  const LrSchedule s{4e-4, 0.0, 50};
  EXPECT_EQ(error_of([&] { lr_at(s, -1); }), ErrorCode::StepOutOfRange);
  EXPECT_EQ(error_of([&] { lr_at(s, 51); }), ErrorCode::StepOutOfRange);
}

TEST(LrSchedule, MonotoneNonIncreasing) {
  for (std::int64_t total : {1, 2, 7, 50, 1000}) {
    const LrSchedule s{1e-2, 1e-4, total};
    for (std::int64_t t = 0; t < total; ++t) EXPECT_LE(lr_at(s, t + 1), lr_at(s, t));
  }
}

}  // namespace
}  // namespace mcinr
