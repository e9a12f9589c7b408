#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mcinr::cli {

struct InputRecord {
  std::string role;
  std::string path;
  std::string sha256;
};

/// What a command did, with enough detail to run it again.
struct RunManifest {
  std::string command;
  std::string engine_version;
  unsigned long long seed = 0;
  std::map<std::string, std::string> params;
  std::vector<std::pair<std::string, std::string>> config;  // effective config, in order
  std::vector<InputRecord> inputs;
  std::vector<std::string> outputs;
  std::string started_at;
  std::string finished_at;
  double wall_seconds = 0.0;
  int threads = 0;
};

std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp(std::chrono::system_clock::time_point t);

/// Writes to a temporary sibling and renames it into place.
void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// Text written to a temporary sibling and renamed into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace mcinr::cli
