#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sdrift/error.hpp"
#include "sdrift/sparse.hpp"

namespace sdrift {

enum class Method { cg, bicgstab };
enum class Precond { none, jacobi, ssor };

inline const char* to_string(Method m) { return m == Method::cg ? "CG" : "BiCGSTAB"; }
inline const char* to_string(Precond p) {
  switch (p) {
    case Precond::none: return "none";
    case Precond::jacobi: return "jacobi";
    case Precond::ssor: return "ssor";
  }
  return "?";
}

struct KrylovConfig {
  Method method = Method::cg;
  double rtol = 1e-10;
  int max_iter = 20000;
  Precond precond = Precond::jacobi;
  double omega = 1.0;

  void validate() const {
    require(rtol > 0.0 && rtol < 1.0, Errc::invalid_argument, "krylov: rtol must lie in (0,1)");
    require(max_iter > 0, Errc::invalid_argument, "krylov: max_iter must be positive");
    require(omega > 0.0 && omega < 2.0, Errc::invalid_argument, "krylov: SSOR omega must lie in (0,2)");
  }
};

struct KrylovResult {
  std::vector<double> x;
  int iterations = 0;
  double residual = 0.0;  // final ||b - Ax|| / ||b||
};

namespace blas {
inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double nrm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }
// y += s x
inline void axpy(double s, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}
}  // namespace blas

/// z = M^{-1} r for the configured preconditioner.
class Preconditioner {
 public:
  Preconditioner(const CsrMatrix& a, Precond kind, double omega) : a_(a), kind_(kind), omega_(omega) {
    if (kind_ == Precond::none) return;
    diag_ = a.diagonal();
    for (double d : diag_) require(d != 0.0, Errc::breakdown, "preconditioner: zero diagonal");
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    const std::size_t n = r.size();
    z.resize(n);
    switch (kind_) {
      case Precond::none:
        z = r;
        return;
      case Precond::jacobi:
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag_[i];
        return;
      case Precond::ssor: {
        // (D/w + L) y = r ; z = (D/w + U)^{-1} (D/w) y * (2-w)/w
        const double w = omega_;
        for (std::size_t i = 0; i < n; ++i) {
          double s = r[i];
          for (std::size_t p = a_.rowptr[i]; p < a_.rowptr[i + 1]; ++p)
            if (a_.col[p] < i) s -= a_.val[p] * z[a_.col[p]];
          z[i] = s * w / diag_[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] *= diag_[i] / w;
        for (std::size_t i = n; i-- > 0;) {
          double s = z[i];
          for (std::size_t p = a_.rowptr[i]; p < a_.rowptr[i + 1]; ++p)
            if (a_.col[p] > i) s -= a_.val[p] * z[a_.col[p]];
          z[i] = s * w / diag_[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] *= (2.0 - w) / w;
        return;
      }
    }
  }

 private:
  const CsrMatrix& a_;
  Precond kind_;
  double omega_;
  std::vector<double> diag_;
};

/// Preconditioned conjugate gradients; a must be symmetric positive definite.
inline KrylovResult conjugate_gradient(const CsrMatrix& a, const std::vector<double>& b, const KrylovConfig& cfg,
                                       std::vector<double> x0 = {}) {
  cfg.validate();
  const std::size_t n = b.size();
  KrylovResult res;
  res.x = x0.empty() ? std::vector<double>(n, 0.0) : std::move(x0);
  const double bnorm = blas::nrm2(b);
  if (bnorm == 0.0) {
    res.x.assign(n, 0.0);
    return res;
  }
  Preconditioner m(a, cfg.precond, cfg.omega);
  std::vector<double> r(n), z(n), p(n), q(n);
  a.multiply(res.x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double rn = blas::nrm2(r);
  if (rn <= cfg.rtol * bnorm) {
    res.residual = rn / bnorm;
    return res;
  }
  m.apply(r, z);
  p = z;
  double rz = blas::dot(r, z);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    a.multiply(p, q);
    const double pq = blas::dot(p, q);
    if (!(pq > 0.0)) throw Error(Errc::breakdown, "CG: operator is not positive definite");
    const double alpha = rz / pq;
    blas::axpy(alpha, p, res.x);
    blas::axpy(-alpha, q, r);
    rn = blas::nrm2(r);
    res.iterations = it;
    if (rn <= cfg.rtol * bnorm) {
      a.multiply(res.x, q);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
      rn = blas::nrm2(r);
      if (rn <= cfg.rtol * bnorm) {
        res.residual = rn / bnorm;
        return res;
      }
    }
    m.apply(r, z);
    const double rz_new = blas::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw Error(Errc::not_converged,
              "CG: no convergence after " + std::to_string(cfg.max_iter) + " iterations (residual " +
                  std::to_string(rn / bnorm) + ")");
}

/// Right-preconditioned BiCGSTAB.
inline KrylovResult bicgstab(const CsrMatrix& a, const std::vector<double>& b, const KrylovConfig& cfg,
                             std::vector<double> x0 = {}) {
  cfg.validate();
  const std::size_t n = b.size();
  KrylovResult res;
  res.x = x0.empty() ? std::vector<double>(n, 0.0) : std::move(x0);
  const double bnorm = blas::nrm2(b);
  if (bnorm == 0.0) {
    res.x.assign(n, 0.0);
    return res;
  }
  Preconditioner m(a, cfg.precond, cfg.omega);
  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n);
  a.multiply(res.x, t);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
  double rn = blas::nrm2(r);
  if (rn <= cfg.rtol * bnorm) {
    res.residual = rn / bnorm;
    return res;
  }
  rhat = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  const double tiny = std::numeric_limits<double>::min() * 1e10;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const double rho_new = blas::dot(rhat, r);
    if (std::abs(rho_new) < tiny * bnorm * bnorm) {
      // Restart with a fresh shadow residual.
      a.multiply(res.x, t);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
      rhat = r;
      const double rr = blas::dot(rhat, r);
      if (std::abs(rr) < tiny * bnorm * bnorm) throw Error(Errc::breakdown, "BiCGSTAB: rho breakdown");
      std::fill(p.begin(), p.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
      rho = alpha = omega = 1.0;
      --it;
      continue;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    m.apply(p, phat);
    a.multiply(phat, v);
    const double rv = blas::dot(rhat, v);
    if (rv == 0.0) throw Error(Errc::breakdown, "BiCGSTAB: breakdown in alpha");
    alpha = rho / rv;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    res.iterations = it;
    if (blas::nrm2(s) <= cfg.rtol * bnorm) {
      blas::axpy(alpha, phat, res.x);
      a.multiply(res.x, t);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
      rn = blas::nrm2(r);
      if (rn <= cfg.rtol * bnorm) {
        res.residual = rn / bnorm;
        return res;
      }
      continue;
    }
    m.apply(s, shat);
    a.multiply(shat, t);
    const double tt = blas::dot(t, t);
    if (tt == 0.0) throw Error(Errc::breakdown, "BiCGSTAB: breakdown in omega");
    omega = blas::dot(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * phat[i] + omega * shat[i];
      r[i] = s[i] - omega * t[i];
    }
    rn = blas::nrm2(r);
    if (rn <= cfg.rtol * bnorm) {
      a.multiply(res.x, t);
      std::vector<double> rt(n);
      for (std::size_t i = 0; i < n; ++i) rt[i] = b[i] - t[i];
      const double tn = blas::nrm2(rt);
      if (tn <= cfg.rtol * bnorm) {
        res.residual = tn / bnorm;
        return res;
      }
      r = rt;
    }
    if (omega == 0.0) throw Error(Errc::breakdown, "BiCGSTAB: omega vanished");
  }
  throw Error(Errc::not_converged,
              "BiCGSTAB: no convergence after " + std::to_string(cfg.max_iter) + " iterations (residual " +
                  std::to_string(rn / bnorm) + ")");
}

}  // namespace sdrift
