#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace osnlab {

/// Flat key=value text file: one pair per line, '#' comments, stable order.
/// Used for configs, crawl meta headers and metric reports.
class KvFile {
 public:
  KvFile() = default;

  void set(const std::string& key, std::string value);
  void set_u64(const std::string& key, std::uint64_t value);
  void set_i64(const std::string& key, std::int64_t value);
  void set_double(const std::string& key, double value);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  std::string require(const std::string& key) const;          // Error if absent
  std::uint64_t require_u64(const std::string& key) const;
  std::int64_t require_i64(const std::string& key) const;
  double require_double(const std::string& key) const;

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key, std::string fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string to_string() const;
  static KvFile parse(const std::string& text, const std::string& source_name);

  void save(const std::filesystem::path& path) const;
  static KvFile load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Serializes a double with enough digits to round-trip.
std::string format_double(double value);

}  // namespace osnlab
