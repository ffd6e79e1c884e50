#include "guardian/config.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "guardian/error.hpp"

namespace guardian {

namespace {

class Cursor {
 public:
  Cursor(const std::string& s, const std::string& where) : s_(s), where_(where) {}

  void skip_ws() {
    while (i_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
        ++i_;
      } else if (s_[i_] == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }
  bool done() {
    skip_ws();
    return i_ >= s_.size();
  }
  char peek() { return i_ < s_.size() ? s_[i_] : '\0'; }
  char get() { return i_ < s_.size() ? s_[i_++] : '\0'; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(where_ + ": " + msg);
  }

  std::string parse_string() {
    if (get() != '"') fail("expected '\"'");
    std::string out;
    while (true) {
      if (i_ >= s_.size()) fail("unterminated string");
      char c = get();
      if (c == '"') break;
      if (c == '\\') {
        char e = get();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  std::string parse_bare() {
    std::string out;
    while (i_ < s_.size()) {
      char c = s_[i_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+' ||
          c == '_') {
        out += c;
        ++i_;
      } else {
        break;
      }
    }
    return out;
  }

  double parse_number() {
    const std::string tok = parse_bare();
    if (tok.empty()) fail("expected a number");
    std::string clean;
    for (char c : tok)
      if (c != '_') clean += c;
    if (clean == "inf" || clean == "+inf") return INFINITY;
    if (clean == "-inf") return -INFINITY;
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(clean, &pos);
    } catch (const std::exception&) {
      fail("invalid number '" + tok + "'");
    }
    if (pos != clean.size()) fail("invalid number '" + tok + "'");
    return v;
  }

  Config::Value parse_value() {
    skip_ws();
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    if (c == 't' || c == 'f') {
      const std::string tok = parse_bare();
      if (tok == "true") return true;
      if (tok == "false") return false;
      fail("invalid value '" + tok + "'");
    }
    return parse_number();
  }

  Config::Value parse_array() {
    get();  // '['
    std::vector<double> nums;
    std::vector<std::string> strs;
    Config::Matrix rows;
    int kind = 0;  // 1 numbers, 2 strings, 3 arrays
    while (true) {
      skip_ws();
      if (peek() == ']') {
        get();
        break;
      }
      const char c = peek();
      const int k = c == '"' ? 2 : (c == '[' ? 3 : 1);
      if (kind != 0 && kind != k) fail("mixed element types in array");
      kind = k;
      if (k == 1) {
        nums.push_back(parse_number());
      } else if (k == 2) {
        strs.push_back(parse_string());
      } else {
        auto inner = parse_array();
        auto* row = std::get_if<std::vector<double>>(&inner);
        if (!row) fail("nested arrays must contain numbers");
        rows.push_back(*row);
      }
      skip_ws();
      if (peek() == ',') {
        get();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    if (kind == 2) return strs;
    if (kind == 3) return rows;
    return nums;
  }

  std::size_t line() const {
    std::size_t n = 1;
    for (std::size_t k = 0; k < i_ && k < s_.size(); ++k)
      if (s_[k] == '\n') ++n;
    return n;
  }
  void set_where(const std::string& w) { where_ = w; }

 private:
  const std::string& s_;
  std::string where_;
  std::size_t i_ = 0;
};

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream o;
  o << std::hex << h;
  return o.str();
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  cfg.hash_ = fnv1a(text);
  Cursor cur(text, source);
  std::string table;
  while (!cur.done()) {
    cur.set_where(source + ":" + std::to_string(cur.line()));
    if (cur.peek() == '[') {
      cur.get();
      cur.skip_ws();
      table = cur.parse_bare();
      cur.skip_ws();
      if (table.empty() || cur.get() != ']') cur.fail("malformed table header");
      continue;
    }
    std::string key = cur.peek() == '"' ? cur.parse_string() : cur.parse_bare();
    if (key.empty()) cur.fail(std::string("unexpected character '") + cur.peek() + "'");
    cur.skip_ws();
    if (cur.get() != '=') cur.fail("expected '=' after key '" + key + "'");
    const std::string full = table.empty() ? key : table + "." + key;
    if (cfg.values_.count(full)) cur.fail("duplicate key '" + full + "'");
    cfg.values_[full] = cur.parse_value();
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Config c = parse(ss.str(), path);
  const auto parent = std::filesystem::path(path).parent_path();
  c.base_dir_ = parent.empty() ? "." : parent.string();
  return c;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> k;
  for (const auto& [key, v] : values_) k.push_back(key);
  return k;
}

const Config::Value& Config::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ParseError(source_ + ": missing required field '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const auto* v = std::get_if<double>(&at(key));
  if (!v) throw ParseError(source_ + ": field '" + key + "' must be a number");
  return *v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  if (std::floor(v) != v) throw ParseError(source_ + ": field '" + key + "' must be an integer");
  return static_cast<std::int64_t>(v);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto* v = std::get_if<bool>(&at(key));
  if (!v) throw ParseError(source_ + ": field '" + key + "' must be a boolean");
  return *v;
}

std::string Config::get_string(const std::string& key) const {
  const auto* v = std::get_if<std::string>(&at(key));
  if (!v) throw ParseError(source_ + ": field '" + key + "' must be a string");
  return *v;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  if (const auto* d = std::get_if<double>(&v)) return {*d};
  throw ParseError(source_ + ": field '" + key + "' must be a numeric array");
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
  return has(key) ? get_doubles(key) : fallback;
}

Config::Matrix Config::get_matrix(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* m = std::get_if<Matrix>(&v)) return *m;
  if (const auto* a = std::get_if<std::vector<double>>(&v); a && a->empty()) return {};
  throw ParseError(source_ + ": field '" + key + "' must be an array of numeric arrays");
}

std::string Config::get_path(const std::string& key) const {
  const std::filesystem::path p(get_string(key));
  if (p.is_absolute()) return p.string();
  return (std::filesystem::path(base_dir_) / p).lexically_normal().string();
}

std::string Config::get_path(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_path(key) : fallback;
}

}  // namespace guardian
