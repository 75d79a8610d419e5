#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace satpose {

// Subset of TOML sufficient for the run configs: [section.sub] headers,
// key = value with strings, integers, floats, booleans, and flat arrays.
// Keys are flattened to dotted paths ("train.lr").
struct TomlValue {
  enum class Kind { String, Integer, Float, Boolean, Array };
  Kind kind = Kind::String;
  std::string str;
  std::int64_t integer = 0;
  double number = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;

  double as_number() const;  // Integer or Float
};

class TomlTable {
 public:
  static TomlTable parse(const std::string& text);
  static TomlTable load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_number_array(const std::string& key,
                                       const std::vector<double>& fallback) const;
  std::vector<std::string> get_string_array(const std::string& key) const;

  // Parses "key=value" (value in TOML syntax) and inserts/overwrites.
  void set_override(const std::string& assignment);

  const std::map<std::string, TomlValue>& values() const { return values_; }

 private:
  std::map<std::string, TomlValue> values_;
};

}  // namespace satpose
