#include "mcinr/phantom.hpp"

#include "mcinr/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace mcinr {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

Eigen::Matrix3d axis_angle(const Vec3& axis, double degrees) {
  if (axis.norm() == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(degrees * kPi / 180.0, axis.normalized()).toRotationMatrix();
}

double bounding_radius(const Shape& s) {
  if (s.kind == ShapeKind::halfspace) return std::numeric_limits<double>::infinity();
  const double r = s.kind == ShapeKind::cuboid ? s.radii.norm() : s.radii.maxCoeff();
  return r * (1.0 + std::abs(s.wave_amplitude));
}

int label_at(const std::vector<Shape>& shapes, const std::vector<double>& bound2, const Vec3& p) {
  int label = tissue::background;
  for (std::size_t n = 0; n < shapes.size(); ++n) {
    const Shape& s = shapes[n];
    if ((p - s.center).squaredNorm() > bound2[n]) continue;
    if (s.within_label && label != *s.within_label) continue;
    if (s.contains(p)) label = s.label;
  }
  return label;
}

/// Smooth multiplicative field 1 + amplitude * (weighted sum of three cosines).
struct BiasField {
  double amplitude = 0.0;
  std::array<Vec3, 3> freq{};
  std::array<double, 3> phase{};
  std::array<double, 3> weight{0.5, 0.3, 0.2};

  double at(const Vec3& unit) const {
    if (amplitude == 0.0) return 1.0;
    double s = 0.0;
    for (int t = 0; t < 3; ++t) s += weight[t] * std::cos(kPi * freq[t].dot(unit) + phase[t]);
    return 1.0 + amplitude * s;
  }
};

BiasField make_bias(std::mt19937_64& rng, double amplitude) {
  BiasField b;
  b.amplitude = amplitude;
  std::uniform_real_distribution<double> f(0.2, 1.0);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
  for (int t = 0; t < 3; ++t) {
    b.freq[t] = Vec3(f(rng), f(rng), f(rng));
    b.phase[t] = ph(rng);
  }
  return b;
}

Vec3 parse_vec3(const std::string& text, const std::string& what) {
  const auto parts = split_list(text);
  if (parts.size() != 3) fail(ErrorCode::InvalidArgument, what + " expects three comma-separated numbers");
  return Vec3(std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]));
}

Shape parse_shape(const std::string& text) {
  std::vector<std::string> words;
  {
    std::string cur;
    for (char c : text) {
      if (c == ' ' || c == '\t') {
        if (!cur.empty()) words.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) words.push_back(cur);
  }
  if (words.empty()) fail(ErrorCode::InvalidArgument, "empty shape entry");
  Shape s;
  if (words[0] == "ellipsoid") s.kind = ShapeKind::ellipsoid;
  else if (words[0] == "cuboid") s.kind = ShapeKind::cuboid;
  else if (words[0] == "halfspace") s.kind = ShapeKind::halfspace;
  else fail(ErrorCode::InvalidArgument, "unknown shape kind '" + words[0] + "'");

  Vec3 axis = Vec3::Zero();
  double angle = 0.0;
  for (std::size_t n = 1; n < words.size(); ++n) {
    const auto eq = words[n].find('=');
    if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "shape attribute '" + words[n] + "' lacks '='");
    const std::string key = words[n].substr(0, eq);
    const std::string value = words[n].substr(eq + 1);
    try {
      if (key == "label") s.label = std::stoi(value);
      else if (key == "center") s.center = parse_vec3(value, "center");
      else if (key == "radii") s.radii = parse_vec3(value, "radii");
      else if (key == "normal") {
        const Vec3 normal = parse_vec3(value, "normal").normalized();
        s.rotation = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitX(), normal).toRotationMatrix();
      } else if (key == "axis") axis = parse_vec3(value, "axis");
      else if (key == "angle") angle = std::stod(value);
      else if (key == "within") s.within_label = std::stoi(value);
      else if (key == "wave") {
        const auto p = split_list(value);
        if (p.size() != 3) fail(ErrorCode::InvalidArgument, "wave expects amplitude,theta_freq,phi_freq");
        s.wave_amplitude = std::stod(p[0]);
        s.wave_theta = std::stoi(p[1]);
        s.wave_phi = std::stoi(p[2]);
      } else {
        fail(ErrorCode::InvalidArgument, "unknown shape attribute '" + key + "'");
      }
    } catch (const std::logic_error&) {
      fail(ErrorCode::InvalidArgument, "bad value in shape attribute '" + words[n] + "'");
    }
  }
  if (angle != 0.0) s.rotation = axis_angle(axis, angle) * s.rotation;
  return s;
}

std::vector<double> parse_table(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& p : split_list(text)) {
    try {
      out.push_back(std::stod(p));
    } catch (const std::logic_error&) {
      fail(ErrorCode::InvalidArgument, key + ": bad number '" + p + "'");
    }
  }
  return out;
}

}  // namespace

bool Shape::contains(const Vec3& p) const {
  const Vec3 d = p - center;
  switch (kind) {
    case ShapeKind::halfspace: return d.dot(rotation.col(0)) <= 0.0;
    case ShapeKind::cuboid: {
      const Vec3 q = rotation.transpose() * d;
      return std::abs(q.x()) <= radii.x() && std::abs(q.y()) <= radii.y() && std::abs(q.z()) <= radii.z();
    }
    case ShapeKind::ellipsoid: {
      const Vec3 u = (rotation.transpose() * d).cwiseQuotient(radii);
      const double s = u.squaredNorm();
      if (wave_amplitude == 0.0) return s <= 1.0;
      const double lo = 1.0 - std::abs(wave_amplitude);
      const double hi = 1.0 + std::abs(wave_amplitude);
      if (s <= lo * lo) return true;
      if (s > hi * hi) return false;
      const double r = std::sqrt(s);
      const double theta = std::atan2(u.y(), u.x());
      const double phi = std::acos(std::clamp(u.z() / r, -1.0, 1.0));
      const double ripple = std::sin(wave_theta * theta + wave_phase) * std::cos(wave_phi * phi);
      return r <= 1.0 + wave_amplitude * ripple;
    }
  }
  return false;
}

PhantomSpec default_phantom_spec(std::uint64_t seed, Dims dims, double spacing, int lesion_count, int septum_count) {
  PhantomSpec spec;
  spec.dims = dims;
  spec.spacing = spacing;
  spec.seed = seed;
  //                 bg   scalp csf   gm    wm    nuclei lesion septum
  spec.g1 = {0.00, 0.45, 0.12, 0.55, 0.85, 0.68, 0.62, 0.30};
  spec.g2 = {0.00, 0.55, 0.08, 0.65, 0.42, 0.52, 0.95, 0.80};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.95, 1.05);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);

  const Vec3 half = 0.5 * spacing * Vec3(dims.nx - 1, dims.ny - 1, dims.nz - 1);
  const Vec3 c = half;
  const Eigen::Matrix3d tilt = axis_angle(Vec3(unit(rng), unit(rng), unit(rng)), 8.0 * unit(rng));

  auto ellipsoid = [&](int label, const Vec3& center, const Vec3& radii, const Eigen::Matrix3d& rot) {
    Shape s;
    s.label = label;
    s.center = center;
    s.radii = radii;
    s.rotation = rot;
    return s;
  };

  spec.shapes.push_back(ellipsoid(tissue::scalp, c, half.cwiseProduct(Vec3(0.93, 0.90, 0.86)) * jitter(rng), tilt));
  spec.shapes.push_back(ellipsoid(tissue::csf, c, half.cwiseProduct(Vec3(0.85, 0.82, 0.78)) * jitter(rng), tilt));
  Shape gm = ellipsoid(tissue::gray_matter, c, half.cwiseProduct(Vec3(0.80, 0.77, 0.73)) * jitter(rng), tilt);
  gm.wave_amplitude = 0.035;
  gm.wave_theta = 9;
  gm.wave_phi = 7;
  gm.wave_phase = phase(rng);
  spec.shapes.push_back(gm);
  Shape wm = ellipsoid(tissue::white_matter, c, half.cwiseProduct(Vec3(0.64, 0.60, 0.56)) * jitter(rng), tilt);
  std::uniform_int_distribution<int> freq_theta(5, 8);
  std::uniform_int_distribution<int> freq_phi(3, 6);
  wm.wave_amplitude = 0.13;
  wm.wave_theta = freq_theta(rng);
  wm.wave_phi = freq_phi(rng);
  wm.wave_phase = phase(rng);
  spec.shapes.push_back(wm);

  // Ventricles: a mirrored pair of elongated ellipsoids.
  const double vent_angle = 10.0 * unit(rng);
  for (int side : {-1, 1}) {
    const Vec3 center = c + half.cwiseProduct(Vec3(0.11 * side, 0.05 * unit(rng), 0.05));
    const Vec3 radii = half.cwiseProduct(Vec3(0.06, 0.24, 0.11)) * jitter(rng);
    spec.shapes.push_back(ellipsoid(tissue::csf, center, radii, tilt * axis_angle(Vec3::UnitZ(), side * vent_angle)));
  }

  std::uniform_real_distribution<double> nucleus_size(0.07, 0.12);
  for (int n = 0; n < 3; ++n) {
    const Vec3 center = c + half.cwiseProduct(Vec3(0.3 * unit(rng), 0.3 * unit(rng), 0.25 * unit(rng)));
    const Vec3 radii = half.cwiseProduct(Vec3(nucleus_size(rng), nucleus_size(rng), nucleus_size(rng)));
    spec.shapes.push_back(ellipsoid(tissue::nuclei, center, radii, random_rotation(rng)));
  }

  // Thin plates with random orientation: fine detail along arbitrary axes.
  std::uniform_real_distribution<double> plate_extent(0.16, 0.28);
  std::uniform_real_distribution<double> plate_thickness(0.035, 0.06);
  for (int n = 0; n < septum_count; ++n) {
    const Vec3 center = c + half.cwiseProduct(Vec3(0.4 * unit(rng), 0.4 * unit(rng), 0.35 * unit(rng)));
    const Vec3 radii = half.cwiseProduct(Vec3(plate_extent(rng), plate_extent(rng), plate_thickness(rng)));
    Shape s = ellipsoid(tissue::septum, center, radii, random_rotation(rng));
    s.within_label = tissue::white_matter;
    spec.shapes.push_back(s);
  }

  // Lesions: centres drawn inside white matter by rejection.
  std::vector<double> bound2;
  for (const Shape& s : spec.shapes) bound2.push_back(std::pow(bounding_radius(s), 2));
  std::uniform_real_distribution<double> radius(1.0, 3.0);
  int placed = 0;
  for (int attempt = 0; attempt < 20000 && placed < lesion_count; ++attempt) {
    const Vec3 p = c + half.cwiseProduct(Vec3(0.6 * unit(rng), 0.6 * unit(rng), 0.55 * unit(rng)));
    if (label_at(spec.shapes, bound2, p) != tissue::white_matter) continue;
    Shape s = ellipsoid(tissue::lesion, p, Vec3::Constant(radius(rng) * spacing), Eigen::Matrix3d::Identity());
    s.within_label = tissue::white_matter;
    spec.shapes.push_back(s);
    ++placed;
  }
  return spec;
}

PhantomSpec phantom_spec_from_config(const KeyValueConfig& cfg) {
  Dims dims{96, 96, 96};
  if (const auto d = cfg.get("dims")) {
    const auto parts = split_list(*d);
    try {
      if (parts.size() == 1) dims = Dims{std::stoi(parts[0]), std::stoi(parts[0]), std::stoi(parts[0])};
      else if (parts.size() == 3) dims = Dims{std::stoi(parts[0]), std::stoi(parts[1]), std::stoi(parts[2])};
      else fail(ErrorCode::InvalidArgument, "dims expects one or three integers");
    } catch (const std::logic_error&) {
      fail(ErrorCode::InvalidArgument, "dims expects integers");
    }
  }
  const double spacing = cfg.get_double("spacing").value_or(1.0);
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed").value_or(0));
  const auto shape_entries = cfg.get_all("shape");
  const std::string preset = cfg.get("preset").value_or(shape_entries.empty() ? "default" : "empty");

  PhantomSpec spec;
  if (preset == "default") {
    spec = default_phantom_spec(seed, dims, spacing, static_cast<int>(cfg.get_int("lesion_count").value_or(10)),
                                static_cast<int>(cfg.get_int("septum_count").value_or(6)));
  } else if (preset == "empty") {
    spec.dims = dims;
    spec.spacing = spacing;
    spec.seed = seed;
    spec.shapes.clear();
    spec.g1 = {0.0};
    spec.g2 = {0.0};
  } else {
    fail(ErrorCode::InvalidArgument, "unknown phantom preset '" + preset + "'");
  }
  for (const auto& entry : shape_entries) spec.shapes.push_back(parse_shape(entry));
  if (const auto g = cfg.get("g1")) spec.g1 = parse_table(*g, "g1");
  if (const auto g = cfg.get("g2")) spec.g2 = parse_table(*g, "g2");
  if (const auto v = cfg.get_double("bias_amplitude")) spec.bias_amplitude = *v;
  if (const auto v = cfg.get_int("supersample")) spec.supersample = static_cast<int>(*v);
  if (const auto v = cfg.get_double("noise_sigma")) spec.noise_sigma = *v;
  return spec;
}

Phantom make_phantom(const PhantomSpec& spec) {
  if (spec.dims.nx < 1 || spec.dims.ny < 1 || spec.dims.nz < 1) fail(ErrorCode::InvalidArgument, "phantom dims must be >= 1");
  if (!(spec.spacing > 0.0)) fail(ErrorCode::InvalidArgument, "phantom spacing must be > 0");
  if (spec.supersample < 1) fail(ErrorCode::InvalidArgument, "supersample must be >= 1");
  int max_label = 0;
  for (const Shape& s : spec.shapes) {
    if (s.label < 0) fail(ErrorCode::InvalidArgument, "shape labels must be >= 0");
    max_label = std::max(max_label, s.label);
  }
  if (spec.g1.size() <= static_cast<std::size_t>(max_label) || spec.g2.size() <= static_cast<std::size_t>(max_label)) {
    fail(ErrorCode::InvalidArgument, "intensity tables need an entry for every label up to " + std::to_string(max_label));
  }

  const Mat4 affine = make_affine(Vec3::Constant(spec.spacing));
  Phantom out{Volume(spec.dims, affine), Volume(spec.dims, affine), Volume(spec.dims, affine)};

  std::mt19937_64 rng(spec.seed ^ 0x9E3779B97F4A7C15ull);
  const BiasField bias1 = make_bias(rng, spec.bias_amplitude);
  const BiasField bias2 = make_bias(rng, spec.bias_amplitude);

  std::vector<double> bound2;
  for (const Shape& s : spec.shapes) bound2.push_back(std::pow(bounding_radius(s), 2));

  const Vec3 half = 0.5 * spec.spacing * Vec3(spec.dims.nx - 1, spec.dims.ny - 1, spec.dims.nz - 1);
  const int ss = spec.supersample;
  const double inv = 1.0 / (ss * ss * ss);
  const Dims& d = spec.dims;

#pragma omp parallel for schedule(static)
  for (int k = 0; k < d.nz; ++k) {
    for (int j = 0; j < d.ny; ++j) {
      for (int i = 0; i < d.nx; ++i) {
        const Vec3 p = spec.spacing * Vec3(i, j, k);
        double a1 = 0.0, a2 = 0.0;
        for (int sz = 0; sz < ss; ++sz)
          for (int sy = 0; sy < ss; ++sy)
            for (int sx = 0; sx < ss; ++sx) {
              const Vec3 off = spec.spacing * (Vec3(sx, sy, sz) + Vec3::Constant(0.5)) / ss -
                               Vec3::Constant(0.5 * spec.spacing);
              const int l = label_at(spec.shapes, bound2, p + off);
              a1 += spec.g1[l];
              a2 += spec.g2[l];
            }
        Vec3 unit = Vec3::Zero();
        for (int axis = 0; axis < 3; ++axis) unit[axis] = half[axis] > 0 ? (p[axis] - half[axis]) / half[axis] : 0.0;
        out.gt1.at(i, j, k) = static_cast<float>(a1 * inv * bias1.at(unit));
        out.gt2.at(i, j, k) = static_cast<float>(a2 * inv * bias2.at(unit));
        out.labels.at(i, j, k) = static_cast<float>(label_at(spec.shapes, bound2, p));
      }
    }
  }

  if (spec.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (float& v : out.gt1.data()) v = static_cast<float>(v + noise(rng));
    for (float& v : out.gt2.data()) v = static_cast<float>(v + noise(rng));
  }
  return out;
}

Volume make_smooth_volume(Dims dims, double spacing, std::uint64_t seed, double min_feature_mm, int blobs) {
  if (!(min_feature_mm > 0.0)) fail(ErrorCode::InvalidArgument, "min_feature_mm must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sigma_dist(min_feature_mm, 1.5 * min_feature_mm);
  std::uniform_real_distribution<double> amp(0.3, 1.0);
  std::uniform_real_distribution<double> sign(-1.0, 1.0);

  struct Blob {
    Vec3 center;
    double sigma;
    double amplitude;
  };
  const Vec3 extent = spacing * Vec3(dims.nx - 1, dims.ny - 1, dims.nz - 1);
  std::vector<Blob> list;
  for (int n = 0; n < blobs; ++n) {
    Blob b;
    b.sigma = sigma_dist(rng);
    Vec3 center;
    for (int axis = 0; axis < 3; ++axis) {
      const double margin = std::min(3.0 * b.sigma, 0.5 * extent[axis]);
      std::uniform_real_distribution<double> pos(margin, extent[axis] - margin);
      center[axis] = pos(rng);
    }
    b.center = center;
    b.amplitude = amp(rng) * (sign(rng) < 0.0 ? -0.5 : 1.0);
    list.push_back(b);
  }
  Volume v(dims, make_affine(Vec3::Constant(spacing)));
  for (int k = 0; k < dims.nz; ++k)
    for (int j = 0; j < dims.ny; ++j)
      for (int i = 0; i < dims.nx; ++i) {
        const Vec3 p = spacing * Vec3(i, j, k);
        double s = 0.0;
        for (const Blob& b : list) s += b.amplitude * std::exp(-0.5 * (p - b.center).squaredNorm() / (b.sigma * b.sigma));
        v.at(i, j, k) = static_cast<float>(s);
      }
  const auto [lo, hi] = v.minmax();
  if (hi > lo) {
    for (float& x : v.data()) x = (x - lo) / (hi - lo);
  }
  return v;
}

}  // namespace mcinr
