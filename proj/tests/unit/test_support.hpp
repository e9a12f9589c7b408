#pragma once

#include "mcinr/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace mcinr::test {

/// 64-bit LCG; tests/oracles/make_fixtures.py uses the same constants.
struct Lcg {
  std::uint64_t state;
  explicit Lcg(std::uint64_t seed) : state(seed) {}
  double next() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  }
};

inline Volume lcg_volume(Lcg& lcg, Dims dims, const Mat4& affine = Mat4::Identity()) {
  Volume v(dims, affine);
  for (float& x : v.data()) x = static_cast<float>(lcg.next());
  return v;
}

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(MCINR_TEST_DATA) / name;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mcinr_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Affine with linear part (rotation about z by `angle`) * diag(spacing).
inline Mat4 rotated_affine(const Vec3& spacing, double angle, const Vec3& origin) {
  Mat4 a = Mat4::Identity();
  a.topLeftCorner<3, 3>() = Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix() * spacing.asDiagonal();
  a.topRightCorner<3, 1>() = origin;
  return a;
}

}  // namespace mcinr::test
