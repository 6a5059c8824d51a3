#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sdrift/domain.hpp"
#include "sdrift/error.hpp"
#include "sdrift/expression.hpp"
#include "sdrift/vec3.hpp"

namespace sdrift {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) throw Error(Errc::parse, what + ": not a number: '" + s + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(parse_double(p, what));
  return out;
}

inline Vec3 parse_vec3(const std::string& s, const std::string& what) {
  const auto v = parse_list(s, what);
  if (v.size() != 3) throw Error(Errc::parse, what + ": expected three comma separated numbers");
  return {v[0], v[1], v[2]};
}

/// Shortest decimal text that reads back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Flat `key = value` configuration checked against a schema of defaults.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& is, const std::string& source = "config") {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw Error(Errc::parse, source + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw Error(Errc::parse, source + ":" + std::to_string(lineno) + ": empty key");
      c.given_[key] = trim(line.substr(eq + 1));
    }
    return c;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  static Config load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(Errc::io, "cannot read " + path);
    return parse(is, path);
  }

  void set(const std::string& key, const std::string& value) { given_[key] = value; }
  bool has(const std::string& key) const { return given_.count(key) > 0; }
  const std::map<std::string, std::string>& given() const { return given_; }

  /// Merges defaults and rejects keys the schema does not know.
  Config resolve(const std::map<std::string, std::string>& schema) const {
    for (const auto& [k, v] : given_)
      if (!schema.count(k)) throw Error(Errc::invalid_argument, "unknown config key '" + k + "'");
    Config r;
    r.given_ = schema;
    for (const auto& [k, v] : given_) r.given_[k] = v;
    return r;
  }

  const std::string& str(const std::string& key) const {
    const auto it = given_.find(key);
    if (it == given_.end()) throw Error(Errc::invalid_argument, "missing config key '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const { return parse_double(str(key), key); }
  int integer(const std::string& key) const {
    const double v = num(key);
    if (v != static_cast<double>(static_cast<long long>(v))) throw Error(Errc::parse, key + ": expected an integer");
    return static_cast<int>(v);
  }
  std::vector<double> list(const std::string& key) const { return parse_list(str(key), key); }
  Vec3 vec3(const std::string& key) const { return parse_vec3(str(key), key); }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : given_) os << k << " = " << v << '\n';
  }
  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error(Errc::io, "cannot write " + path);
    write(os);
  }

 private:
  std::map<std::string, std::string> given_;
};

/// Shape keys shared by every command that builds a domain.
inline std::map<std::string, std::string> shape_schema(const std::string& shape = "ball") {
  return {{"shape", shape}, {"radius", "1"}, {"center", "0,0,0"}, {"zmin", "-1"},
          {"zmax", "1"},    {"lo", "-1,-1,-1"}, {"hi", "1,1,1"}};
}

inline Shape shape_from(const Config& c) {
  const std::string& s = c.str("shape");
  if (s == "ball") return Ball{c.vec3("center"), c.num("radius")};
  if (s == "cylinder") return Cylinder{c.num("radius"), c.num("zmin"), c.num("zmax")};
  if (s == "box") return Box{c.vec3("lo"), c.vec3("hi")};
  throw Error(Errc::invalid_argument, "unknown shape '" + s + "' (ball, cylinder, box)");
}

}  // namespace sdrift
