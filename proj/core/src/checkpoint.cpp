#include "mcinr/checkpoint.hpp"

#include "mcinr/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace mcinr {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'C', 'I', 'N', 'R', 'C', 'K', '\0'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  template <typename T>
  void put_array(const T* data, std::size_t n) {
    const auto* p = reinterpret_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n * sizeof(T));
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : buf_(std::move(bytes)) {}

  template <typename T>
  T get() {
    T value;
    need(sizeof(T));
    std::memcpy(&value, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  template <typename T>
  void get_array(T* data, std::size_t n) {
    if (n > (buf_.size() - pos_) / sizeof(T)) need(n * sizeof(T));
    std::memcpy(data, buf_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
  }
  std::uint64_t get_count(std::size_t elem_size) {
    const auto n = get<std::uint64_t>();
    if (n > (buf_.size() - pos_) / elem_size) fail(ErrorCode::TruncatedData, "checkpoint array length exceeds file size");
    return n;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) fail(ErrorCode::TruncatedData, "checkpoint ends unexpectedly");
  }
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

void put_vec3(Writer& w, const Vec3& v) {
  for (int i = 0; i < 3; ++i) w.put(v[i]);
}

Vec3 get_vec3(Reader& r) {
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = r.get<double>();
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const FittedModel& f = ckpt.fitted;
  Writer w;
  w.put_array(kMagic, 8);
  w.put(kCheckpointVersion);

  const ModelShape& shape = f.model.shape();
  w.put<std::int32_t>(shape.input_dim);
  w.put<std::int32_t>(shape.trunk_width);
  w.put<std::int32_t>(shape.trunk_depth);
  w.put<std::int32_t>(shape.head_width);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(shape.mode));
  const auto params = f.model.parameters();
  w.put<std::uint64_t>(params.size());
  w.put_array(params.data(), params.size());

  w.put<std::int32_t>(f.basis.frequency_count());
  w.put(f.basis.sigma);
  w.put(f.basis.scale);
  w.put<std::uint64_t>(f.basis.seed);
  for (int r = 0; r < f.basis.frequency_count(); ++r)
    for (int c = 0; c < 3; ++c) w.put(f.basis.matrix(r, c));

  put_vec3(w, f.domain.world_min);
  put_vec3(w, f.domain.world_max);
  put_vec3(w, f.domain.center);
  w.put(f.domain.half_extent);

  for (const auto& n : f.normalizers) {
    w.put<std::uint8_t>(n.has_value());
    w.put(n ? n->lo : 0.0);
    w.put(n ? n->hi : 0.0);
  }
  for (int c : f.channel_contrast) w.put<std::int32_t>(c);
  w.put<std::uint64_t>(f.seed);

  w.put<std::uint8_t>(ckpt.optimizer.has_value());
  if (ckpt.optimizer) {
    const AdamState& s = *ckpt.optimizer;
    w.put(s.config.beta1);
    w.put(s.config.beta2);
    w.put(s.config.eps);
    w.put<std::int64_t>(s.t);
    w.put<std::uint64_t>(s.m.size());
    w.put_array(s.m.data(), s.m.size());
    w.put_array(s.v.data(), s.v.size());
  }
  w.put<std::int64_t>(ckpt.epochs_completed);
  w.put<std::uint64_t>(ckpt.mi_history.size());
  w.put_array(ckpt.mi_history.data(), ckpt.mi_history.size());

  const auto tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot open '" + tmp + "' for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out.flush()) fail(ErrorCode::IoFailure, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::IoFailure, "read failed for '" + path.string() + "'");
  Reader r(std::move(bytes));

  char magic[8];
  r.get_array(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) fail(ErrorCode::MalformedHeader, "'" + path.string() + "' is not a checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::MalformedHeader, "unsupported checkpoint version " + std::to_string(version));
  }

  ModelShape shape;
  shape.input_dim = r.get<std::int32_t>();
  shape.trunk_width = r.get<std::int32_t>();
  shape.trunk_depth = r.get<std::int32_t>();
  shape.head_width = r.get<std::int32_t>();
  const auto mode = r.get<std::uint8_t>();
  if (mode > static_cast<std::uint8_t>(HeadMode::single_contrast)) fail(ErrorCode::MalformedHeader, "bad head mode");
  shape.mode = static_cast<HeadMode>(mode);
  std::vector<float> params(r.get_count(sizeof(float)));
  r.get_array(params.data(), params.size());

  FourierBasis basis;
  const auto m = r.get<std::int32_t>();
  if (m < 0) fail(ErrorCode::MalformedHeader, "negative frequency count");
  basis.sigma = r.get<double>();
  basis.scale = r.get<double>();
  basis.seed = r.get<std::uint64_t>();
  basis.matrix.resize(m, 3);
  for (int row = 0; row < m; ++row)
    for (int c = 0; c < 3; ++c) basis.matrix(row, c) = r.get<double>();

  CoordinateDomain domain;
  domain.world_min = get_vec3(r);
  domain.world_max = get_vec3(r);
  domain.center = get_vec3(r);
  domain.half_extent = r.get<double>();

  std::array<std::optional<IntensityNormalizer>, 2> normalizers;
  for (auto& n : normalizers) {
    const bool present = r.get<std::uint8_t>() != 0;
    const double lo = r.get<double>();
    const double hi = r.get<double>();
    if (present) n = IntensityNormalizer{lo, hi};
  }
  std::array<int, 2> channel_contrast{};
  for (int& c : channel_contrast) c = r.get<std::int32_t>();
  const auto seed = r.get<std::uint64_t>();

  std::optional<AdamState> optimizer;
  if (r.get<std::uint8_t>() != 0) {
    AdamState s;
    s.config.beta1 = r.get<double>();
    s.config.beta2 = r.get<double>();
    s.config.eps = r.get<double>();
    s.t = r.get<std::int64_t>();
    const auto n = r.get_count(2 * sizeof(double));
    s.m.resize(n);
    s.v.resize(n);
    r.get_array(s.m.data(), n);
    r.get_array(s.v.data(), n);
    optimizer = std::move(s);
  }
  const auto epochs = r.get<std::int64_t>();
  std::vector<double> history(r.get_count(sizeof(double)));
  r.get_array(history.data(), history.size());
  if (!r.at_end()) fail(ErrorCode::MalformedHeader, "trailing bytes after checkpoint payload");

  if (basis.feature_count() != shape.input_dim) {
    fail(ErrorCode::ShapeMismatch, "checkpoint basis does not match the model input width");
  }
  Checkpoint ckpt{FittedModel{SplitHeadModel(shape, std::move(params)), std::move(basis), domain, normalizers,
                              channel_contrast, seed},
                  std::move(optimizer), epochs, std::move(history)};
  return ckpt;
}

}  // namespace mcinr
