#include "mcinr/metrics.hpp"

#include "mcinr/error.hpp"
#include "mcinr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace mcinr {

namespace {

void require_same_dims(const Volume& a, const Volume& b, const char* what) {
  if (!(a.dims() == b.dims())) {
    const Dims& x = a.dims();
    const Dims& y = b.dims();
    fail(ErrorCode::DimsMismatch, std::string(what) + ": (" + std::to_string(x.nx) + "," + std::to_string(x.ny) +
                                      "," + std::to_string(x.nz) + ") vs (" + std::to_string(y.nx) + "," +
                                      std::to_string(y.ny) + "," + std::to_string(y.nz) + ")");
  }
}

std::vector<int> bin_indices(std::span<const float> x, int bins) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double range = static_cast<double>(*hi_it) - lo;
  std::vector<int> out(x.size(), 0);
  if (!(range > 0.0)) return out;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double u = (static_cast<double>(x[n]) - lo) / range;
    out[n] = std::min(static_cast<int>(u * bins), bins - 1);
  }
  return out;
}

/// Sums of `window` consecutive entries along one axis ("valid" positions only).
std::vector<double> box_sum_axis(const std::vector<double>& in, const Dims& d, int axis, int window, Dims& out_dims) {
  out_dims = d;
  if (axis == 0) out_dims.nx -= window - 1;
  if (axis == 1) out_dims.ny -= window - 1;
  if (axis == 2) out_dims.nz -= window - 1;
  std::vector<double> out(out_dims.count());
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(d.nx) : static_cast<std::size_t>(d.nx) * d.ny);
  std::size_t n = 0;
  for (int k = 0; k < out_dims.nz; ++k) {
    for (int j = 0; j < out_dims.ny; ++j) {
      for (int i = 0; i < out_dims.nx; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) + static_cast<std::size_t>(d.nx) * (j + static_cast<std::size_t>(d.ny) * k);
        double s = 0.0;
        for (int w = 0; w < window; ++w) s += in[base + w * stride];
        out[n++] = s;
      }
    }
  }
  return out;
}

std::vector<double> box_sum(std::vector<double> v, const Dims& d, int window) {
  Dims cur = d;
  for (int axis = 0; axis < 3; ++axis) {
    Dims next;
    v = box_sum_axis(v, cur, axis, window, next);
    cur = next;
  }
  return v;
}

}  // namespace

double JointHistogram::mutual_information() const {
  if (total == 0) return 0.0;
  const double n = static_cast<double>(total);
  std::vector<double> terms;
  for (int a = 0; a < bins; ++a) {
    if (marginal_a[a] == 0) continue;
    for (int b = 0; b < bins; ++b) {
      const std::uint64_t c = at(a, b);
      if (c == 0) continue;
      const double pab = static_cast<double>(c) / n;
      terms.push_back(pab * std::log(static_cast<double>(c) * n /
                                     (static_cast<double>(marginal_a[a]) * static_cast<double>(marginal_b[b]))));
    }
  }
  // Swapping the inputs transposes the table but yields the same terms;
  // summing them in sorted order makes MI(a, b) == MI(b, a) exactly.
  std::sort(terms.begin(), terms.end());
  double mi = 0.0;
  for (double t : terms) mi += t;
  return std::max(mi, 0.0);
}

JointHistogram joint_histogram(std::span<const float> a, std::span<const float> b, int bins) {
  if (a.size() != b.size()) fail(ErrorCode::DimsMismatch, "joint histogram inputs differ in length");
  if (bins < 2) fail(ErrorCode::InvalidArgument, "MI needs at least 2 bins");
  JointHistogram h;
  h.bins = bins;
  h.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
  h.marginal_a.assign(bins, 0);
  h.marginal_b.assign(bins, 0);
  if (a.empty()) return h;
  const std::vector<int> ia = bin_indices(a, bins);
  const std::vector<int> ib = bin_indices(b, bins);
  for (std::size_t n = 0; n < ia.size(); ++n) {
    ++h.counts[static_cast<std::size_t>(ia[n]) * bins + ib[n]];
    ++h.marginal_a[ia[n]];
    ++h.marginal_b[ib[n]];
  }
  h.total = ia.size();
  return h;
}

double mutual_information(std::span<const float> a, std::span<const float> b, int bins) {
  return joint_histogram(a, b, bins).mutual_information();
}

double mutual_information(const Volume& a, const Volume& b, int bins) {
  require_same_dims(a, b, "mutual_information");
  return mutual_information(a.data(), b.data(), bins);
}

MiErrors eps_mi(const Volume& pred1, const Volume& pred2, const Volume& gt1, const Volume& gt2, int bins) {
  require_same_dims(pred1, gt1, "eps_mi");
  require_same_dims(pred2, gt1, "eps_mi");
  require_same_dims(gt2, gt1, "eps_mi");
  const double ref = mutual_information(gt1, gt2, bins);
  MiErrors e;
  e.c1 = std::abs(mutual_information(pred1, gt2, bins) - ref);
  e.c2 = std::abs(mutual_information(pred2, gt1, bins) - ref);
  e.joint = std::abs(mutual_information(pred1, pred2, bins) - ref);
  return e;
}

double psnr(std::span<const float> pred, std::span<const float> gt, double data_range) {
  if (pred.size() != gt.size()) fail(ErrorCode::DimsMismatch, "psnr inputs differ in length");
  if (pred.empty()) fail(ErrorCode::InvalidArgument, "psnr of empty input");
  double sse = 0.0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const double d = static_cast<double>(pred[n]) - static_cast<double>(gt[n]);
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(pred.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

double psnr(const Volume& pred, const Volume& gt, double data_range) {
  require_same_dims(pred, gt, "psnr");
  return psnr(pred.data(), gt.data(), data_range);
}

double ssim(const Volume& pred, const Volume& gt, const SsimOptions& options) {
  require_same_dims(pred, gt, "ssim");
  const Dims& d = pred.dims();
  const int w = options.window;
  if (w < 2) fail(ErrorCode::InvalidArgument, "SSIM window must be >= 2");
  if (d.nx < w || d.ny < w || d.nz < w) {
    fail(ErrorCode::VolumeTooSmall, "SSIM needs every dimension >= " + std::to_string(w));
  }
  const std::size_t count = d.count();
  std::vector<double> x(count), y(count), xx(count), yy(count), xy(count);
  const auto p = pred.data();
  const auto g = gt.data();
  for (std::size_t n = 0; n < count; ++n) {
    x[n] = p[n];
    y[n] = g[n];
    xx[n] = x[n] * x[n];
    yy[n] = y[n] * y[n];
    xy[n] = x[n] * y[n];
  }
  const std::vector<double> sx = box_sum(std::move(x), d, w);
  const std::vector<double> sy = box_sum(std::move(y), d, w);
  const std::vector<double> sxx = box_sum(std::move(xx), d, w);
  const std::vector<double> syy = box_sum(std::move(yy), d, w);
  const std::vector<double> sxy = box_sum(std::move(xy), d, w);

  const double np = static_cast<double>(w) * w * w;
  const double cov_norm = np / (np - 1.0);
  const double c1 = std::pow(options.k1 * options.data_range, 2);
  const double c2 = std::pow(options.k2 * options.data_range, 2);
  double total = 0.0;
  for (std::size_t n = 0; n < sx.size(); ++n) {
    const double ux = sx[n] / np;
    const double uy = sy[n] / np;
    const double vx = cov_norm * (sxx[n] / np - ux * ux);
    const double vy = cov_norm * (syy[n] / np - uy * uy);
    const double vxy = cov_norm * (sxy[n] / np - ux * uy);
    total += ((2.0 * ux * uy + c1) * (2.0 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(sx.size());
}

bool mi_plateau(std::span<const double> history, int window, double rel_tol) {
  if (window < 2) fail(ErrorCode::InvalidArgument, "plateau window must be >= 2");
  if (history.size() < static_cast<std::size_t>(window)) return false;
  const auto tail = history.last(static_cast<std::size_t>(window));
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
  return (*hi - *lo) <= rel_tol * std::max(std::abs(tail.back()), 1e-12);
}

std::string format_metric(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  std::ostringstream os;
  os.precision(10);
  os << value;
  return os.str();
}

namespace {

std::vector<std::pair<const char*, std::optional<double>>> report_fields(const MetricsReport& r) {
  return {{"psnr_c1", r.psnr_c1},   {"psnr_c2", r.psnr_c2},     {"ssim_c1", r.ssim_c1},
          {"ssim_c2", r.ssim_c2},   {"mi_pred", r.mi_pred},     {"mi_gt", r.mi_gt},
          {"eps_mi_c1", r.eps_mi_c1}, {"eps_mi_c2", r.eps_mi_c2}, {"eps_mi_joint", r.eps_mi_joint}};
}

}  // namespace

std::string MetricsReport::to_key_value() const {
  std::ostringstream os;
  for (const auto& [name, value] : report_fields(*this)) {
    if (value) os << name << " = " << format_metric(*value) << '\n';
  }
  return os.str();
}

std::string MetricsReport::to_records() const {
  std::ostringstream os;
  for (const auto& [name, value] : report_fields(*this)) {
    if (value) os << name << '\t' << format_metric(*value) << '\n';
  }
  return os.str();
}

MetricsReport evaluate(const Volume& pred1, const Volume& pred2, const Volume& gt1, const Volume& gt2, int bins) {
  require_same_dims(pred1, gt1, "evaluate");
  require_same_dims(pred2, gt2, "evaluate");
  require_same_dims(gt1, gt2, "evaluate");

  auto normalized = [](const Volume& v, const IntensityNormalizer& n) {
    std::vector<float> out(v.size());
    const auto src = v.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(n.forward(src[i]));
    return Volume(v.dims(), v.affine(), std::move(out));
  };

  MetricsReport r;
  const IntensityNormalizer n1 = fit_normalizer(gt1);
  const IntensityNormalizer n2 = fit_normalizer(gt2);
  const Volume p1 = normalized(pred1, n1), g1 = normalized(gt1, n1);
  const Volume p2 = normalized(pred2, n2), g2 = normalized(gt2, n2);
  r.psnr_c1 = psnr(p1, g1);
  r.psnr_c2 = psnr(p2, g2);
  r.ssim_c1 = ssim(p1, g1);
  r.ssim_c2 = ssim(p2, g2);
  r.mi_pred = mutual_information(pred1, pred2, bins);
  r.mi_gt = mutual_information(gt1, gt2, bins);
  const MiErrors e = eps_mi(pred1, pred2, gt1, gt2, bins);
  r.eps_mi_c1 = e.c1;
  r.eps_mi_c2 = e.c2;
  r.eps_mi_joint = e.joint;
  return r;
}

}  // namespace mcinr
