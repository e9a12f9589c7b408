#pragma once

#include "mcinr/volume.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcinr {

constexpr int kDefaultMiBins = 32;

/// Joint intensity histogram over uniform-width bins on [0, 1]. Each input is
/// min-max normalized onto [0, 1] first; a constant input falls in bin 0.
struct JointHistogram {
  int bins = kDefaultMiBins;
  std::vector<std::uint64_t> counts;  // bins x bins, index a_bin * bins + b_bin
  std::vector<std::uint64_t> marginal_a;
  std::vector<std::uint64_t> marginal_b;
  std::uint64_t total = 0;

  std::uint64_t at(int a_bin, int b_bin) const { return counts[static_cast<std::size_t>(a_bin) * bins + b_bin]; }

  /// In nats; tiny negative rounding is clamped to zero.
  double mutual_information() const;
};

JointHistogram joint_histogram(std::span<const float> a, std::span<const float> b, int bins = kDefaultMiBins);

double mutual_information(std::span<const float> a, std::span<const float> b, int bins = kDefaultMiBins);
double mutual_information(const Volume& a, const Volume& b, int bins = kDefaultMiBins);

struct MiErrors {
  double c1 = 0.0;     // |MI(pred1, gt2) - MI(gt1, gt2)|
  double c2 = 0.0;     // |MI(pred2, gt1) - MI(gt1, gt2)|
  double joint = 0.0;  // |MI(pred1, pred2) - MI(gt1, gt2)|
};

MiErrors eps_mi(const Volume& pred1, const Volume& pred2, const Volume& gt1, const Volume& gt2,
                int bins = kDefaultMiBins);

/// 10 log10(range^2 / MSE); +inf for identical inputs.
double psnr(std::span<const float> pred, std::span<const float> gt, double data_range = 1.0);
double psnr(const Volume& pred, const Volume& gt, double data_range = 1.0);

struct SsimOptions {
  int window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean SSIM over every position where a window^3 uniform window fits
/// entirely inside the volume. Local variances use the unbiased (n - 1)
/// normalization.
double ssim(const Volume& pred, const Volume& gt, const SsimOptions& options = {});

/// True when the last `window` values span no more than
/// rel_tol * max(|last|, 1e-12).
bool mi_plateau(std::span<const double> history, int window, double rel_tol);

struct MetricsReport {
  std::optional<double> psnr_c1, psnr_c2;
  std::optional<double> ssim_c1, ssim_c2;
  std::optional<double> mi_pred;
  std::optional<double> mi_gt;
  std::optional<double> eps_mi_c1, eps_mi_c2, eps_mi_joint;

  /// `name = value` lines; absent metrics are omitted.
  std::string to_key_value() const;
  /// `name<TAB>value` records, one per line.
  std::string to_records() const;
};

/// Full comparison against ground truth. PSNR and SSIM are computed after
/// mapping each prediction and its ground truth through the ground truth's
/// min-max normalizer, with a data range of 1.
MetricsReport evaluate(const Volume& pred1, const Volume& pred2, const Volume& gt1, const Volume& gt2,
                       int bins = kDefaultMiBins);

std::string format_metric(double value);

}  // namespace mcinr
