#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sdrift/config.hpp"
#include "sdrift/error.hpp"

namespace sdrift {

/// In-memory CSV table with string cells; numbers go through fmt().
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Table() = default;
  explicit Table(std::vector<std::string> h) : header(std::move(h)) {}

  struct Cell {
    std::string text;
    Cell(double v) : text(fmt(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(long v) : text(std::to_string(v)) {}
    Cell(long long v) : text(std::to_string(v)) {}
    Cell(unsigned long v) : text(std::to_string(v)) {}
    Cell(unsigned long long v) : text(std::to_string(v)) {}
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}
  };

  void add(std::initializer_list<Cell> cells) {
    require(cells.size() == header.size(), Errc::shape_mismatch, "table: row width differs from header");
    std::vector<std::string> r;
    for (const auto& c : cells) r.push_back(c.text);
    rows.push_back(std::move(r));
  }

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), Errc::invalid_argument, "table: no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  const std::string& text(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
  double num(std::size_t row, const std::string& name) const { return parse_double(text(row, name), name); }
  std::vector<double> nums(const std::string& name) const {
    std::vector<double> out;
    for (std::size_t r = 0; r < rows.size(); ++r) out.push_back(num(r, name));
    return out;
  }
};

namespace detail {
inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  require(!quoted, Errc::parse, "csv: unterminated quote");
  out.push_back(cur);
  return out;
}
}  // namespace detail

inline void write_csv(std::ostream& os, const Table& t) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << detail::quote(cells[i]);
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

inline Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::parse, "csv: empty file");
  t.header = detail::split_csv_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    t.rows.push_back(detail::split_csv_line(line));
  }
  return t;
}

inline void save_csv(const std::string& path, const Table& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::io, "cannot write " + path);
  write_csv(os, t);
}

inline Table load_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io, "cannot read " + path);
  return read_csv(is);
}

// ---------------------------------------------------------------------------
// Golden comparison

struct GoldenVerdict {
  bool pass = true;
  std::size_t files = 0;
  std::size_t cells = 0;
  std::vector<std::string> failures;  // "file row R column C (name): golden X, got Y"
};

inline bool numeric_cell(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline bool cells_match(const std::string& golden, const std::string& got, double rtol) {
  double a = 0.0, b = 0.0;
  if (numeric_cell(golden, a) && numeric_cell(got, b)) {
    if (a == b || (std::isnan(a) && std::isnan(b))) return true;
    return std::abs(a - b) <= rtol * std::max(std::abs(a), std::abs(b));
  }
  return golden == got;
}

inline std::vector<std::string> csv_files(const std::filesystem::path& dir) {
  std::vector<std::string> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

/// Numeric cells compared with relative tolerance, text cells exactly.
inline GoldenVerdict compare_golden(const std::string& result_dir, const std::string& golden_dir, double rtol) {
  require(rtol >= 0.0, Errc::invalid_argument, "golden: rtol must be nonnegative");
  const auto golden = csv_files(golden_dir);
  if (golden.empty()) throw Error(Errc::missing_golden, "missing golden: no CSV files in " + golden_dir);
  const auto result = csv_files(result_dir);
  for (const auto& f : result)
    if (!std::binary_search(golden.begin(), golden.end(), f))
      throw Error(Errc::missing_golden, "missing golden: " + f + " has no counterpart in " + golden_dir);
  GoldenVerdict v;
  for (const auto& f : golden) {
    const auto rp = std::filesystem::path(result_dir) / f;
    if (!std::filesystem::exists(rp)) throw Error(Errc::io, "missing file: " + rp.string());
    const Table g = load_csv((std::filesystem::path(golden_dir) / f).string());
    const Table r = load_csv(rp.string());
    require(g.header.size() == r.header.size() && g.rows.size() == r.rows.size(), Errc::shape_mismatch,
            "shape mismatch in " + f + ": golden " + std::to_string(g.rows.size()) + "x" +
                std::to_string(g.header.size()) + ", got " + std::to_string(r.rows.size()) + "x" +
                std::to_string(r.header.size()));
    ++v.files;
    auto check = [&](std::size_t row, std::size_t col, const std::string& a, const std::string& b) {
      ++v.cells;
      if (cells_match(a, b, rtol)) return;
      v.pass = false;
      v.failures.push_back(f + " row " + std::to_string(row) + " column " + std::to_string(col + 1) + " (" +
                           g.header[col] + "): golden " + a + ", got " + b);
    };
    for (std::size_t c = 0; c < g.header.size(); ++c) check(0, c, g.header[c], r.header[c]);
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
      require(g.rows[i].size() == r.rows[i].size() && g.rows[i].size() == g.header.size(), Errc::shape_mismatch,
              "shape mismatch in " + f + " at row " + std::to_string(i + 1));
      for (std::size_t c = 0; c < g.rows[i].size(); ++c) check(i + 1, c, g.rows[i][c], r.rows[i][c]);
    }
  }
  return v;
}

}  // namespace sdrift
