#include "osnlab/kv_file.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "osnlab/error.hpp"

namespace osnlab {

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  // Trim to the shortest representation that round-trips.
  for (int precision = 1; precision < 17; ++precision) {
    char probe[64];
    std::snprintf(probe, sizeof(probe), "%.*g", precision, value);
    if (std::strtod(probe, nullptr) == value) return probe;
  }
  return buf;
}

void KvFile::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

void KvFile::set_u64(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

void KvFile::set_i64(const std::string& key, std::int64_t value) {
  set(key, std::to_string(value));
}

void KvFile::set_double(const std::string& key, double value) {
  set(key, format_double(value));
}

bool KvFile::has(const std::string& key) const {
  return get(key).has_value();
}

std::optional<std::string> KvFile::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string KvFile::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw Error("missing key '" + key + "'");
  return *v;
}

std::uint64_t KvFile::require_u64(const std::string& key) const {
  const std::string v = require(key);
  errno = 0;
  char* end = nullptr;
  std::uint64_t out = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0')
    throw Error("key '" + key + "' is not an unsigned integer: " + v);
  return out;
}

std::int64_t KvFile::require_i64(const std::string& key) const {
  const std::string v = require(key);
  errno = 0;
  char* end = nullptr;
  std::int64_t out = std::strtoll(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0')
    throw Error("key '" + key + "' is not an integer: " + v);
  return out;
}

double KvFile::require_double(const std::string& key) const {
  const std::string v = require(key);
  errno = 0;
  char* end = nullptr;
  double out = std::strtod(v.c_str(), &end);
  if (errno != 0 || end == v.c_str() || *end != '\0')
    throw Error("key '" + key + "' is not a number: " + v);
  return out;
}

std::uint64_t KvFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? require_u64(key) : fallback;
}

double KvFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? require_double(key) : fallback;
}

std::string KvFile::get_string(const std::string& key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

std::string KvFile::to_string() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  return out.str();
}

KvFile KvFile::parse(const std::string& text, const std::string& source_name) {
  KvFile kv;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(source_name, line_no, "expected key=value");
    std::string key = line.substr(0, eq);
    if (key.empty()) throw ParseError(source_name, line_no, "empty key");
    kv.entries_.emplace_back(std::move(key), line.substr(eq + 1));
  }
  return kv;
}

void KvFile::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << to_string();
  if (!out.flush()) throw Error("write failed for " + path.string());
}

KvFile KvFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.filename().string());
}

}  // namespace osnlab
