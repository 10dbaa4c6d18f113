#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace codim::cli {

/// Malformed or unknown configuration entry; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct KeySpec {
  std::string key;
  std::string type;  // int, double, bool, string, doubles, ints
  std::string default_value;
  std::string commands;
  std::string description;
};

/// Every accepted key; unknown keys are errors.
const std::vector<KeySpec>& schema();
std::string schema_text();

/// `key = value` lines, `#` starts a comment. Values are validated against the schema type.
class Config {
 public:
  Config();
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  /// KEY=VALUE
  void apply_override(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

  /// Effective values (defaults merged with explicit entries), sorted by key.
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Whitespace-separated numbers; throws ConfigError naming `key`.
std::vector<double> parse_numbers(const std::string& key, const std::string& text);
/// Splits on ';' and trims.
std::vector<std::string> split_parts(const std::string& text);

}  // namespace codim::cli
