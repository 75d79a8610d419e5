#include "satpose/util/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"

namespace satpose {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Strips a comment that is not inside a string literal.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"') in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_scalar(const std::string& raw) {
  TomlValue v;
  const std::string text = trim(raw);
  if (text.empty()) throw ConfigError("empty TOML value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') throw ConfigError("unterminated string: " + text);
    v.kind = TomlValue::Kind::String;
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
      char c = text[i];
      if (c == '\\' && i + 2 < text.size()) {
        const char n = text[++i];
        c = n == 'n' ? '\n' : n == 't' ? '\t' : n;
      }
      out += c;
    }
    v.str = out;
    return v;
  }
  if (text == "true" || text == "false") {
    v.kind = TomlValue::Kind::Boolean;
    v.boolean = text == "true";
    return v;
  }
  // number: integer if it parses fully without . e E
  const bool looks_float = text.find_first_of(".eE") != std::string::npos &&
                           text.find("0x") != 0;
  char* end = nullptr;
  if (!looks_float) {
    const long long i = std::strtoll(text.c_str(), &end, 10);
    if (end && *end == '\0') {
      v.kind = TomlValue::Kind::Integer;
      v.integer = i;
      v.number = static_cast<double>(i);
      return v;
    }
  }
  const double d = std::strtod(text.c_str(), &end);
  if (end && *end == '\0') {
    v.kind = TomlValue::Kind::Float;
    v.number = d;
    return v;
  }
  throw ConfigError("cannot parse TOML value: " + text);
}

TomlValue parse_value(const std::string& raw) {
  const std::string text = trim(raw);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') throw ConfigError("unterminated array: " + text);
    TomlValue v;
    v.kind = TomlValue::Kind::Array;
    std::string inner = text.substr(1, text.size() - 2);
    std::string item;
    bool in_string = false;
    for (const char c : inner) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(item).empty()) v.array.push_back(parse_scalar(item));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!trim(item).empty()) v.array.push_back(parse_scalar(item));
    return v;
  }
  return parse_scalar(text);
}

}  // namespace

double TomlValue::as_number() const {
  if (kind == Kind::Integer) return static_cast<double>(integer);
  if (kind == Kind::Float) return number;
  throw ConfigError("TOML value is not a number");
}

TomlTable TomlTable::parse(const std::string& text) {
  TomlTable table;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    if (!section.empty()) key = section + "." + key;
    table.values_[key] = parse_value(line.substr(eq + 1));
  }
  return table;
}

TomlTable TomlTable::load(const std::filesystem::path& path) {
  try {
    return parse(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string TomlTable::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.kind != TomlValue::Kind::String) throw ConfigError(key + ": expected string");
  return it->second.str;
}

std::int64_t TomlTable::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.kind == TomlValue::Kind::Integer) return it->second.integer;
  throw ConfigError(key + ": expected integer");
}

double TomlTable::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return it->second.as_number();
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.kind != TomlValue::Kind::Boolean) throw ConfigError(key + ": expected boolean");
  return it->second.boolean;
}

std::vector<double> TomlTable::get_number_array(const std::string& key,
                                                const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.kind != TomlValue::Kind::Array) throw ConfigError(key + ": expected array");
  std::vector<double> out;
  for (const auto& v : it->second.array) out.push_back(v.as_number());
  return out;
}

std::vector<std::string> TomlTable::get_string_array(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return {};
  if (it->second.kind != TomlValue::Kind::Array) throw ConfigError(key + ": expected array");
  std::vector<std::string> out;
  for (const auto& v : it->second.array) {
    if (v.kind != TomlValue::Kind::String) throw ConfigError(key + ": expected string array");
    out.push_back(v.str);
  }
  return out;
}

void TomlTable::set_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value: " + assignment);
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override has empty key: " + assignment);
  values_[key] = parse_value(assignment.substr(eq + 1));
}

}  // namespace satpose
