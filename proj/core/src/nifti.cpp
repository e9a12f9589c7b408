#include "mcinr/nifti.hpp"

#include "mcinr/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace mcinr {

namespace {

constexpr int kHeaderSize = 348;
constexpr int kNifti2HeaderSize = 540;
constexpr int kDefaultVoxOffset = 352;
constexpr std::int32_t kCommentExtension = 6;
constexpr std::string_view kAffineTag = "mcinr-affine";

enum Datatype : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
};

template <typename T>
T byteswap(T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  std::reverse(bytes.begin(), bytes.end());
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    T value;
    std::memcpy(&value, bytes_.data() + offset, sizeof(T));
    return swap_ ? byteswap(value) : value;
  }

 private:
  const std::vector<unsigned char>& bytes_;
  bool swap_;
};

/// Output is always little-endian regardless of host order.
class ByteWriter {
 public:
  explicit ByteWriter(std::size_t size) : bytes_(size, 0) {}

  template <typename T>
  void put(std::size_t offset, T value) {
    if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
    std::memcpy(bytes_.data() + offset, &value, sizeof(T));
  }
  void put_bytes(std::size_t offset, std::string_view s) { std::memcpy(bytes_.data() + offset, s.data(), s.size()); }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::IoFailure, "read error on " + path.string());
  return bytes;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& compressed, const std::string& name) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) fail(ErrorCode::IoFailure, "zlib init failed");
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> chunk;
  zs.next_in = const_cast<Bytef*>(compressed.data());
  zs.avail_in = static_cast<uInt>(compressed.size());
  int rc = Z_OK;
  while (true) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    if (rc == Z_STREAM_END) {
      // Concatenated gzip members.
      if (zs.avail_in == 0) break;
      inflateReset(&zs);
      continue;
    }
    if (rc != Z_OK) break;
    if (zs.avail_in == 0 && zs.avail_out != 0) break;
  }
  inflateEnd(&zs);
  // A short stream surfaces below as TruncatedData when the payload is missing.
  if (rc != Z_STREAM_END && rc != Z_OK && rc != Z_BUF_ERROR) {
    fail(ErrorCode::IoFailure, "corrupt gzip stream in " + name);
  }
  return out;
}

Mat4 quaternion_affine(double b, double c, double d, const Vec3& offset, const std::array<float, 8>& pixdim) {
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    const double s = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= s;
    c *= s;
    d *= s;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  const double qfac = pixdim[0] < 0.0f ? -1.0 : 1.0;
  const double dx = pixdim[1] > 0.0f ? pixdim[1] : 1.0;
  const double dy = pixdim[2] > 0.0f ? pixdim[2] : 1.0;
  const double dz = (pixdim[3] > 0.0f ? pixdim[3] : 1.0) * qfac;

  Mat4 m = Mat4::Identity();
  m(0, 0) = (a * a + b * b - c * c - d * d) * dx;
  m(0, 1) = 2.0 * (b * c - a * d) * dy;
  m(0, 2) = 2.0 * (b * d + a * c) * dz;
  m(1, 0) = 2.0 * (b * c + a * d) * dx;
  m(1, 1) = (a * a + c * c - b * b - d * d) * dy;
  m(1, 2) = 2.0 * (c * d - a * b) * dz;
  m(2, 0) = 2.0 * (b * d - a * c) * dx;
  m(2, 1) = 2.0 * (c * d + a * b) * dy;
  m(2, 2) = (a * a + d * d - c * c - b * b) * dz;
  m.topRightCorner<3, 1>() = offset;
  return m;
}

struct Quatern {
  double b = 0, c = 0, d = 0, qfac = 1;
};

// Assumes the linear block is a rotation times a positive diagonal scale
// (possibly with a reflection); shear is not representable in a qform.
Quatern affine_quaternion(const Mat4& affine) {
  Eigen::Matrix3d r = affine.topLeftCorner<3, 3>();
  for (int col = 0; col < 3; ++col) r.col(col).normalize();
  Quatern q;
  if (r.determinant() < 0.0) {
    q.qfac = -1.0;
    r.col(2) = -r.col(2);
  }
  const double r11 = r(0, 0), r12 = r(0, 1), r13 = r(0, 2);
  const double r21 = r(1, 0), r22 = r(1, 1), r23 = r(1, 2);
  const double r31 = r(2, 0), r32 = r(2, 1), r33 = r(2, 2);
  double a = r11 + r22 + r33 + 1.0;
  double b, c, d;
  if (a > 0.5) {
    a = 0.5 * std::sqrt(a);
    b = 0.25 * (r32 - r23) / a;
    c = 0.25 * (r13 - r31) / a;
    d = 0.25 * (r21 - r12) / a;
  } else {
    const double xd = 1.0 + r11 - (r22 + r33);
    const double yd = 1.0 + r22 - (r11 + r33);
    const double zd = 1.0 + r33 - (r11 + r22);
    if (xd > 1.0) {
      b = 0.5 * std::sqrt(xd);
      c = 0.25 * (r12 + r21) / b;
      d = 0.25 * (r13 + r31) / b;
      a = 0.25 * (r32 - r23) / b;
    } else if (yd > 1.0) {
      c = 0.5 * std::sqrt(yd);
      b = 0.25 * (r12 + r21) / c;
      d = 0.25 * (r23 + r32) / c;
      a = 0.25 * (r13 - r31) / c;
    } else {
      d = 0.5 * std::sqrt(zd);
      b = 0.25 * (r13 + r31) / d;
      c = 0.25 * (r23 + r32) / d;
      a = 0.25 * (r21 - r12) / d;
    }
    if (a < 0.0) {
      b = -b;
      c = -c;
      d = -d;
    }
  }
  q.b = b;
  q.c = c;
  q.d = d;
  return q;
}

std::string encode_affine_extension(const Mat4& affine) {
  std::ostringstream os;
  os.precision(17);
  os << kAffineTag;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) os << ' ' << affine(r, c);
  return os.str();
}

// Returns true and fills `out` when an extension carries a double affine that
// rounds to the float32 sform.
bool decode_affine_extension(const std::vector<unsigned char>& bytes, const ByteReader& rd, std::size_t vox_offset,
                             const Mat4& sform, Mat4& out) {
  std::size_t pos = kHeaderSize + 4;
  if (bytes.size() < pos || bytes[kHeaderSize] == 0) return false;
  while (pos + 8 <= vox_offset && pos + 8 <= bytes.size()) {
    const auto esize = rd.get<std::int32_t>(pos);
    const auto ecode = rd.get<std::int32_t>(pos + 4);
    if (esize < 8 || pos + static_cast<std::size_t>(esize) > bytes.size()) return false;
    if (ecode == kCommentExtension) {
      std::string text(reinterpret_cast<const char*>(bytes.data() + pos + 8), static_cast<std::size_t>(esize - 8));
      std::istringstream is(text);
      std::string tag;
      is >> tag;
      if (tag == kAffineTag) {
        Mat4 m = Mat4::Identity();
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 4; ++c) is >> m(r, c);
        if (!is.fail()) {
          bool agrees = true;
          for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c)
              agrees = agrees && static_cast<float>(m(r, c)) == static_cast<float>(sform(r, c));
          if (agrees) {
            out = m;
            return true;
          }
        }
      }
    }
    pos += static_cast<std::size_t>(esize);
  }
  return false;
}

template <typename T>
void convert(const ByteReader& rd, std::size_t offset, std::size_t count, double slope, double inter,
             std::vector<float>& out) {
  for (std::size_t n = 0; n < count; ++n) {
    const double raw = static_cast<double>(rd.get<T>(offset + n * sizeof(T)));
    out[n] = static_cast<float>(raw * slope + inter);
  }
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& header,
                 std::span<const float> data) {
  const bool gz = path.extension() == ".gz";
  std::vector<unsigned char> payload(data.size() * sizeof(float));
  for (std::size_t n = 0; n < data.size(); ++n) {
    float v = data[n];
    if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
    std::memcpy(payload.data() + n * sizeof(float), &v, sizeof(float));
  }
  if (gz) {
    gzFile f = gzopen(path.c_str(), "wb6");
    if (f == nullptr) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    bool ok = gzwrite(f, header.data(), static_cast<unsigned>(header.size())) == static_cast<int>(header.size());
    // gzwrite takes an unsigned length, so push large payloads in pieces.
    constexpr std::size_t kChunk = std::size_t{1} << 30;
    for (std::size_t pos = 0; ok && pos < payload.size(); pos += kChunk) {
      const auto n = static_cast<unsigned>(std::min(kChunk, payload.size() - pos));
      ok = gzwrite(f, payload.data() + pos, n) == static_cast<int>(n);
    }
    if (gzclose(f) != Z_OK) ok = false;
    if (!ok) fail(ErrorCode::IoFailure, "write failed for " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  out.flush();
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace

Volume load_volume(const std::filesystem::path& path) {
  std::vector<unsigned char> bytes = read_file(path);
  const std::string name = path.string();
  if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B) bytes = gunzip(bytes, name);
  if (bytes.size() < static_cast<std::size_t>(kHeaderSize)) {
    fail(ErrorCode::MalformedHeader, name + ": file shorter than a NIfTI-1 header");
  }

  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data(), sizeof sizeof_hdr);
  bool swap = false;
  if (sizeof_hdr != kHeaderSize) {
    if (byteswap(sizeof_hdr) == kHeaderSize) {
      swap = true;
    } else if (sizeof_hdr == kNifti2HeaderSize || byteswap(sizeof_hdr) == kNifti2HeaderSize) {
      fail(ErrorCode::UnsupportedDatatype, name + ": NIfTI-2 files are not supported");
    } else {
      fail(ErrorCode::MalformedHeader, name + ": sizeof_hdr is " + std::to_string(sizeof_hdr) + ", expected 348");
    }
  }
  const ByteReader rd(bytes, swap);

  const std::string_view magic(reinterpret_cast<const char*>(bytes.data() + 344), 4);
  if (magic == std::string_view("ni1\0", 4)) {
    fail(ErrorCode::UnsupportedDatatype, name + ": .hdr/.img pairs are not supported");
  }
  if (magic != std::string_view("n+1\0", 4)) fail(ErrorCode::MalformedHeader, name + ": bad magic");

  const auto ndim = rd.get<std::int16_t>(40);
  if (ndim < 1 || ndim > 7) fail(ErrorCode::MalformedHeader, name + ": dim[0] out of range");
  std::array<int, 8> dim{};
  for (int n = 1; n <= 7; ++n) dim[n] = n <= ndim ? rd.get<std::int16_t>(40 + 2 * n) : 1;
  for (int n = 1; n <= ndim; ++n) {
    if (dim[n] < 1) fail(ErrorCode::MalformedHeader, name + ": non-positive dimension");
  }
  for (int n = 4; n <= ndim; ++n) {
    if (dim[n] != 1) fail(ErrorCode::UnsupportedDatatype, name + ": only 3D volumes are supported");
  }
  const Dims dims{dim[1], dim[2], dim[3]};

  const auto datatype = rd.get<std::int16_t>(70);
  std::size_t bytes_per_voxel = 0;
  switch (datatype) {
    case kUint8: bytes_per_voxel = 1; break;
    case kInt16: bytes_per_voxel = 2; break;
    case kInt32: bytes_per_voxel = 4; break;
    case kFloat32: bytes_per_voxel = 4; break;
    case kFloat64: bytes_per_voxel = 8; break;
    default: fail(ErrorCode::UnsupportedDatatype, name + ": datatype code " + std::to_string(datatype));
  }

  std::array<float, 8> pixdim{};
  for (int n = 0; n < 8; ++n) pixdim[n] = rd.get<float>(76 + 4 * n);

  const float vox_offset_f = rd.get<float>(108);
  if (!std::isfinite(vox_offset_f) || vox_offset_f < 0.0f) fail(ErrorCode::MalformedHeader, name + ": bad vox_offset");
  const auto vox_offset = std::max<std::size_t>(static_cast<std::size_t>(vox_offset_f), kHeaderSize);
  const std::size_t count = dims.count();
  if (bytes.size() < vox_offset || bytes.size() - vox_offset < count * bytes_per_voxel) {
    fail(ErrorCode::TruncatedData, name + ": payload holds " +
                                       std::to_string(bytes.size() > vox_offset ? bytes.size() - vox_offset : 0) +
                                       " bytes, dims imply " + std::to_string(count * bytes_per_voxel));
  }

  double slope = rd.get<float>(112);
  double inter = rd.get<float>(116);
  if (slope == 0.0 || !std::isfinite(slope)) slope = 1.0;
  if (!std::isfinite(inter)) inter = 0.0;

  std::vector<float> data(count);
  switch (datatype) {
    case kUint8: convert<std::uint8_t>(rd, vox_offset, count, slope, inter, data); break;
    case kInt16: convert<std::int16_t>(rd, vox_offset, count, slope, inter, data); break;
    case kInt32: convert<std::int32_t>(rd, vox_offset, count, slope, inter, data); break;
    case kFloat32: convert<float>(rd, vox_offset, count, slope, inter, data); break;
    case kFloat64: convert<double>(rd, vox_offset, count, slope, inter, data); break;
    default: break;
  }
  for (std::size_t n = 0; n < count; ++n) {
    if (!std::isfinite(data[n])) {
      fail(ErrorCode::TruncatedData, name + ": non-finite voxel value at index " + std::to_string(n));
    }
  }

  const auto qform_code = rd.get<std::int16_t>(252);
  const auto sform_code = rd.get<std::int16_t>(254);
  Mat4 affine = Mat4::Identity();
  if (sform_code > 0) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) affine(r, c) = rd.get<float>(280 + 16 * r + 4 * c);
    Mat4 exact;
    if (decode_affine_extension(bytes, rd, vox_offset, affine, exact)) affine = exact;
  } else if (qform_code > 0) {
    const Vec3 offset(rd.get<float>(268), rd.get<float>(272), rd.get<float>(276));
    affine = quaternion_affine(rd.get<float>(256), rd.get<float>(260), rd.get<float>(264), offset, pixdim);
  } else {
    for (int n = 0; n < 3; ++n) affine(n, n) = pixdim[n + 1] > 0.0f ? pixdim[n + 1] : 1.0;
  }
  if (std::abs(affine.topLeftCorner<3, 3>().determinant()) < 1e-12) {
    fail(ErrorCode::MalformedHeader, name + ": singular orientation matrix");
  }
  return Volume(dims, affine, std::move(data));
}

void save_volume(const Volume& volume, const std::filesystem::path& path) {
  const std::string extension_text = encode_affine_extension(volume.affine());
  // esize covers the 8-byte (esize, ecode) prefix and must be a multiple of 16.
  const std::size_t esize = (extension_text.size() + 1 + 8 + 15) / 16 * 16;
  const std::size_t vox_offset = kDefaultVoxOffset + esize;

  ByteWriter w(vox_offset);
  const Dims& d = volume.dims();
  const Mat4& a = volume.affine();
  const Vec3 spacing = volume.spacing();
  const Quatern q = affine_quaternion(a);

  w.put<std::int32_t>(0, kHeaderSize);
  w.put<char>(38, 'r');  // regular
  w.put<std::int16_t>(40, 3);
  w.put<std::int16_t>(42, static_cast<std::int16_t>(d.nx));
  w.put<std::int16_t>(44, static_cast<std::int16_t>(d.ny));
  w.put<std::int16_t>(46, static_cast<std::int16_t>(d.nz));
  for (int n = 4; n <= 7; ++n) w.put<std::int16_t>(40 + 2 * n, 1);
  w.put<std::int16_t>(70, kFloat32);
  w.put<std::int16_t>(72, 32);
  w.put<float>(76, static_cast<float>(q.qfac));
  for (int n = 0; n < 3; ++n) w.put<float>(80 + 4 * n, static_cast<float>(spacing[n]));
  w.put<float>(108, static_cast<float>(vox_offset));
  w.put<float>(112, 1.0f);
  w.put<float>(116, 0.0f);
  w.put<std::uint8_t>(123, 2);  // xyzt_units: mm
  w.put<std::int16_t>(252, 1);
  w.put<std::int16_t>(254, 1);
  w.put<float>(256, static_cast<float>(q.b));
  w.put<float>(260, static_cast<float>(q.c));
  w.put<float>(264, static_cast<float>(q.d));
  for (int n = 0; n < 3; ++n) w.put<float>(268 + 4 * n, static_cast<float>(a(n, 3)));
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) w.put<float>(280 + 16 * r + 4 * c, static_cast<float>(a(r, c)));
  w.put_bytes(344, std::string_view("n+1\0", 4));

  w.put<std::uint8_t>(kHeaderSize, 1);
  w.put<std::int32_t>(kDefaultVoxOffset, static_cast<std::int32_t>(esize));
  w.put<std::int32_t>(kDefaultVoxOffset + 4, kCommentExtension);
  w.put_bytes(kDefaultVoxOffset + 8, extension_text);

  for (int dim = 0; dim < 3; ++dim) {
    if (d[dim] > 32767) fail(ErrorCode::InvalidArgument, "dimension exceeds NIfTI-1 int16 limit");
  }
  write_bytes(path, w.bytes(), volume.data());
}

}  // namespace mcinr
