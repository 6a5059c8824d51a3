#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <vector>

#include "sdrift/error.hpp"

namespace sdrift {

/// Compressed sparse row matrix with columns sorted within each row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> rowptr{0};
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }

  /// Appends a row given unsorted (column, value) pairs; duplicates are summed
  /// in insertion order.
  template <class Pairs>
  void push_row(Pairs& entries) {
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < entries.size();) {
      double s = 0.0;
      std::size_t j = i;
      for (; j < entries.size() && entries[j].first == entries[i].first; ++j) s += entries[j].second;
      col.push_back(static_cast<std::uint32_t>(entries[i].first));
      val.push_back(s);
      i = j;
    }
    rowptr.push_back(val.size());
    ++rows;
  }

  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t p = rowptr[i]; p < rowptr[i + 1]; ++p) s += val[p] * x[col[p]];
      y[i] = s;
    }
  }
  std::vector<double> operator*(const std::vector<double>& x) const {
    std::vector<double> y;
    multiply(x, y);
    return y;
  }

  double at(std::size_t i, std::size_t j) const {
    const auto b = col.begin() + static_cast<std::ptrdiff_t>(rowptr[i]);
    const auto e = col.begin() + static_cast<std::ptrdiff_t>(rowptr[i + 1]);
    const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(j));
    return (it != e && *it == j) ? val[static_cast<std::size_t>(it - col.begin())] : 0.0;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) d[i] = at(i, i);
    return d;
  }

  /// max |a_ij - a_ji| over stored entries.
  double max_asymmetry() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t p = rowptr[i]; p < rowptr[i + 1]; ++p) m = std::max(m, std::abs(val[p] - at(col[p], i)));
    return m;
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : val) m = std::max(m, std::abs(v));
    return m;
  }

  void write_coo(std::ostream& os) const {
    os << std::setprecision(17);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t p = rowptr[i]; p < rowptr[i + 1]; ++p) os << i << ' ' << col[p] << ' ' << val[p] << '\n';
  }
};

namespace detail {
template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
  put(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error(Errc::parse, "binary read: truncated");
  return v;
}
template <class T>
std::vector<T> get_vec(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (std::uint64_t(1) << 34)) throw Error(Errc::parse, "binary read: implausible length");
  std::vector<T> v(static_cast<std::size_t>(n));
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T))))
    throw Error(Errc::parse, "binary read: truncated");
  return v;
}
}  // namespace detail

inline void write_binary(std::ostream& os, const CsrMatrix& a) {
  detail::put(os, static_cast<std::uint64_t>(a.rows));
  detail::put(os, static_cast<std::uint64_t>(a.cols));
  std::vector<std::uint64_t> rp(a.rowptr.begin(), a.rowptr.end());
  detail::put_vec(os, rp);
  detail::put_vec(os, a.col);
  detail::put_vec(os, a.val);
}

inline CsrMatrix read_binary_csr(std::istream& is) {
  CsrMatrix a;
  a.rows = detail::get<std::uint64_t>(is);
  a.cols = detail::get<std::uint64_t>(is);
  const auto rp = detail::get_vec<std::uint64_t>(is);
  a.rowptr.assign(rp.begin(), rp.end());
  a.col = detail::get_vec<std::uint32_t>(is);
  a.val = detail::get_vec<double>(is);
  if (a.rowptr.size() != a.rows + 1 || a.col.size() != a.val.size() || a.rowptr.back() != a.val.size())
    throw Error(Errc::parse, "binary read: inconsistent matrix");
  return a;
}

}  // namespace sdrift
