#pragma once

#include <stdexcept>
#include <string>

namespace sdrift {

enum class Errc {
  invalid_argument,
  empty_domain,
  resolution,
  budget,
  no_axis,
  breakdown,
  not_converged,
  not_symmetric,
  parse,
  io,
  shape_mismatch,
  missing_golden,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::empty_domain: return "empty_domain";
    case Errc::resolution: return "resolution";
    case Errc::budget: return "budget";
    case Errc::no_axis: return "no_axis";
    case Errc::breakdown: return "breakdown";
    case Errc::not_converged: return "not_converged";
    case Errc::not_symmetric: return "not_symmetric";
    case Errc::parse: return "parse";
    case Errc::io: return "io";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::missing_golden: return "missing_golden";
  }
  return "unknown";
}

/// Single exception type for the library; `code()` tells callers what went wrong.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace sdrift
