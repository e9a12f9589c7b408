#include "manifest.hpp"

#include "mcinr/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace mcinr::cli {

using nlohmann::json;

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) fail(ErrorCode::IoFailure, "sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) fail(ErrorCode::IoFailure, "read failed while hashing '" + path.string() + "'");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return os.str();
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot open '" + tmp + "' for writing");
    out << text;
    if (!out.flush()) fail(ErrorCode::IoFailure, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot move '" + tmp + "' into place: " + ec.message());
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  json j;
  j["engine"] = "mcinr";
  j["engine_version"] = m.engine_version;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["params"] = m.params;
  json cfg = json::array();
  for (const auto& [k, v] : m.config) cfg.push_back({k, v});
  j["config"] = cfg;
  json inputs = json::array();
  for (const auto& in : m.inputs) inputs.push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
  j["inputs"] = inputs;
  j["outputs"] = m.outputs;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["wall_seconds"] = m.wall_seconds;
  j["threads"] = m.threads;
  write_text_atomic(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open manifest '" + path.string() + "'");
  RunManifest m;
  try {
    const json j = json::parse(in);
    m.command = j.at("command").get<std::string>();
    m.engine_version = j.value("engine_version", "");
    m.seed = j.value("seed", 0ull);
    m.params = j.at("params").get<std::map<std::string, std::string>>();
    for (const auto& kv : j.at("config")) m.config.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    for (const auto& r : j.at("inputs")) {
      m.inputs.push_back({r.at("role").get<std::string>(), r.at("path").get<std::string>(), r.at("sha256").get<std::string>()});
    }
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.threads = j.value("threads", 0);
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedHeader, "manifest '" + path.string() + "' is not valid: " + e.what());
  }
  return m;
}

}  // namespace mcinr::cli
