#include "mcinr/kvconfig.hpp"

#include "mcinr/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mcinr {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig cfg;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidArgument, source + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) fail(ErrorCode::InvalidArgument, source + ":" + std::to_string(number) + ": empty key");
    cfg.append(key, trim(std::string_view(body).substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  return parse(in, source);
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open config " + path.string());
  return parse(in, path.string());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  std::erase_if(entries_, [&](const auto& e) { return e.first == key; });
  entries_.emplace_back(key, value);
}

void KeyValueConfig::append(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

void KeyValueConfig::merge(const KeyValueConfig& overlay) {
  std::vector<std::string> replaced;
  for (const auto& [key, value] : overlay.entries_) {
    if (std::find(replaced.begin(), replaced.end(), key) == replaced.end()) {
      std::erase_if(entries_, [&](const auto& e) { return e.first == key; });
      replaced.push_back(key);
    }
    entries_.emplace_back(key, value);
  }
}

bool KeyValueConfig::contains(std::string_view key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  return std::nullopt;
}

std::vector<std::string> KeyValueConfig::get_all(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (k == key) out.push_back(v);
  }
  return out;
}

std::optional<double> KeyValueConfig::get_double(std::string_view key) const {
  const auto text = get(key);
  if (!text) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(*text, &used);
    if (used != text->size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "config key '" + std::string(key) + "' expects a number, got '" + *text + "'");
  }
}

std::optional<long long> KeyValueConfig::get_int(std::string_view key) const {
  const auto text = get(key);
  if (!text) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
  if (ec != std::errc() || ptr != text->data() + text->size()) {
    fail(ErrorCode::InvalidArgument, "config key '" + std::string(key) + "' expects an integer, got '" + *text + "'");
  }
  return v;
}

std::optional<bool> KeyValueConfig::get_bool(std::string_view key) const {
  const auto text = get(key);
  if (!text) return std::nullopt;
  if (*text == "true" || *text == "1" || *text == "yes" || *text == "on") return true;
  if (*text == "false" || *text == "0" || *text == "no" || *text == "off") return false;
  fail(ErrorCode::InvalidArgument, "config key '" + std::string(key) + "' expects a boolean, got '" + *text + "'");
}

std::string KeyValueConfig::to_string() const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
  return os.str();
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace mcinr
