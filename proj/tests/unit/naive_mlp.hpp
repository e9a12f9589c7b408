#pragma once

// Loop-based forward pass and loss used as an independent oracle for the
// model's reverse-mode gradients.

#include "mcinr/model.hpp"

#include <vector>

namespace mcinr::test {

struct NaiveResult {
  double loss = 0.0;
  std::vector<char> pattern;  // rectifier on/off for every hidden unit and sample
};

inline std::vector<double> naive_layer(const DenseLayer& l, const std::vector<double>& p, const std::vector<double>& x,
                                       std::vector<char>& pattern) {
  std::vector<double> y(l.out);
  for (int o = 0; o < l.out; ++o) {
    double s = p[l.bias_offset + o];
    for (int i = 0; i < l.in; ++i) s += p[l.weight_offset + static_cast<std::size_t>(i) * l.out + o] * x[i];
    if (l.relu) {
      pattern.push_back(s > 0.0);
      s = s > 0.0 ? s : 0.0;
    }
    y[o] = s;
  }
  return y;
}

/// Loss of `batch` for the model layout of `m`, evaluated with parameters `p`.
inline NaiveResult naive_loss(const SplitHeadModel& m, const std::vector<double>& p, const Batch& batch,
                              const LossWeights& w) {
  NaiveResult r;
  const auto layers = m.layers();
  const std::array<double, 2> coef{w.alpha, w.beta};
  std::array<double, 2> sse{0, 0};
  std::array<std::size_t, 2> count{0, 0};
  for (Eigen::Index n = 0; n < batch.features.cols(); ++n) {
    std::vector<double> a(batch.features.rows());
    for (Eigen::Index i = 0; i < batch.features.rows(); ++i) a[i] = batch.features(i, n);
    for (int l : m.trunk_layers()) a = naive_layer(layers[l], p, a, r.pattern);
    const int c = batch.channel[n];
    std::vector<double> h = a;
    for (int l : m.head_layers(c)) h = naive_layer(layers[l], p, h, r.pattern);
    const double y = h.size() == 1 ? h[0] : h[c];
    const double err = y - batch.targets[n];
    sse[c] += err * err;
    ++count[c];
  }
  for (int c = 0; c < 2; ++c) {
    if (count[c] == 0) continue;
    r.loss += coef[c] * sse[c] / (w.reduction == LossReduction::mean ? static_cast<double>(count[c]) : 1.0);
  }
  return r;
}

}  // namespace mcinr::test
