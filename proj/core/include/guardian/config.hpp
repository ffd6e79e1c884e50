#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace guardian {

/// Reader for the TOML subset used by scenario files: [tables], key = value
/// with numbers, booleans, double-quoted strings, numeric/string arrays and
/// arrays of numeric arrays (which may span lines), and # comments.
/// Keys are addressed as "table.key".
class Config {
 public:
  using Matrix = std::vector<std::vector<double>>;
  using Value = std::variant<double, bool, std::string, std::vector<double>,
                             std::vector<std::string>, Matrix>;

  static Config parse(const std::string& text, const std::string& source = "<string>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::vector<std::string> keys() const;

  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  Matrix get_matrix(const std::string& key) const;

  /// A string value interpreted as a path relative to the file's directory.
  std::string get_path(const std::string& key) const;
  std::string get_path(const std::string& key, const std::string& fallback) const;

  /// Overrides or adds a value (used by CLI flags and tests).
  void set(const std::string& key, Value v) { values_[key] = std::move(v); }

  const std::string& source() const { return source_; }
  const std::string& base_dir() const { return base_dir_; }
  /// FNV-1a hash of the source text, hex.
  const std::string& hash() const { return hash_; }

 private:
  const Value& at(const std::string& key) const;

  std::map<std::string, Value> values_;
  std::string source_;
  std::string base_dir_ = ".";
  std::string hash_;
};

}  // namespace guardian
