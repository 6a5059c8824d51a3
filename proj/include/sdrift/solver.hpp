#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sdrift/assembly.hpp"
#include "sdrift/domain.hpp"
#include "sdrift/error.hpp"
#include "sdrift/fields.hpp"
#include "sdrift/krylov.hpp"

namespace sdrift {

struct FixedPointConfig {
  double tol = 1e-8;
  int max_outer = 50;
  double damping = 1.0;

  void validate() const {
    require(tol > 0.0, Errc::invalid_argument, "fixed point: tol must be positive");
    require(max_outer > 0, Errc::invalid_argument, "fixed point: max_outer must be positive");
    require(damping > 0.0 && damping <= 1.0, Errc::invalid_argument, "fixed point: damping must lie in (0,1]");
  }
};

struct OuterStep {
  int iter = 0;
  double change = 0.0;
};

struct SolveReport {
  ScalarField solution;        // u
  ScalarField darboux;         // v with u = |x'|^|alpha| v (WEIGHTED paths only)
  Formulation formulation = Formulation::direct;
  int iterations = 0;          // Krylov iterations, summed over outer steps
  double residual = 0.0;       // final relative Krylov residual
  std::vector<OuterStep> history;
  bool converged = true;
};

/// Raised when the outer loop stalls; carries the iteration history.
class FixedPointError : public Error {
 public:
  FixedPointError(const std::string& what, std::vector<OuterStep> history)
      : Error(Errc::not_converged, what), history_(std::move(history)) {}
  const std::vector<OuterStep>& history() const { return history_; }

 private:
  std::vector<OuterStep> history_;
};

inline KrylovResult krylov_solve(const DiscreteSystem& sys, const std::vector<double>& rhs, const KrylovConfig& cfg,
                                 std::vector<double> x0 = {}) {
  if (cfg.method == Method::cg) {
    const double asym = sys.A.max_asymmetry();
    require(sys.formulation == Formulation::weighted || asym <= 1e-14 * sys.A.max_abs(), Errc::not_symmetric,
            "CG requires a symmetric system");
    return conjugate_gradient(sys.A, rhs, cfg, std::move(x0));
  }
  return bicgstab(sys.A, rhs, cfg, std::move(x0));
}

inline SolveReport solve_linear(const DiscreteSystem& sys, const KrylovConfig& cfg) {
  const auto k = krylov_solve(sys, sys.rhs, cfg);
  SolveReport rep;
  rep.formulation = sys.formulation;
  rep.solution = scatter(sys.mask, k.x);
  rep.iterations = k.iterations;
  rep.residual = k.residual;
  return rep;
}

/// WEIGHTED operator assembled once and reused for many right-hand sides.
class DarbouxSolver {
 public:
  DarbouxSolver(const DomainMask& mask, double alpha, const KrylovConfig& cfg, FaceMean mean = FaceMean::geometric)
      : sys_(assemble_weighted(mask, alpha, mean)), cfg_(cfg), alpha_(alpha) {
    const Grid& g = mask.grid();
    weight_.resize(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) weight_[n] = darboux_weight(alpha, g.node(n));
  }

  const DiscreteSystem& system() const { return sys_; }
  double alpha() const { return alpha_; }
  double weight(std::size_t n) const { return weight_[n]; }

  /// Solves for v given the interior rhs and returns u = w v.
  SolveReport solve(const std::vector<double>& rhs, std::vector<double> x0 = {}) const {
    const auto k = krylov_solve(sys_, rhs, cfg_, std::move(x0));
    SolveReport rep;
    rep.formulation = Formulation::weighted;
    rep.darboux = scatter(sys_.mask, k.x);
    rep.solution = rep.darboux;
    for (std::size_t n = 0; n < weight_.size(); ++n) rep.solution[n] *= weight_[n];
    rep.iterations = k.iterations;
    rep.residual = k.residual;
    return rep;
  }

  std::vector<double> divergence_rhs(const VectorField& f) const {
    DiscreteSystem tmp;
    tmp.mask = sys_.mask;
    tmp.rhs.assign(sys_.unknowns(), 0.0);
    set_rhs_divergence(tmp, f);
    return tmp.rhs;
  }

 private:
  DiscreteSystem sys_;
  KrylovConfig cfg_;
  double alpha_;
  std::vector<double> weight_;
};

inline KrylovConfig cg_config(KrylovConfig cfg) {
  cfg.method = Method::cg;
  return cfg;
}

/// u = |x'|^|alpha| v with -div(|x'|^|alpha| grad v) = -div f.
inline SolveReport solve_darboux(const DomainMask& mask, double alpha, const VectorField& f, const KrylovConfig& cfg) {
  DarbouxSolver s(mask, alpha, cg_config(cfg));
  return s.solve(s.divergence_rhs(f));
}

/// Same with a pointwise source g in place of -div f.
inline SolveReport solve_darboux(const DomainMask& mask, double alpha, const ScalarField& g, const KrylovConfig& cfg) {
  DarbouxSolver s(mask, alpha, cg_config(cfg));
  return s.solve(gather(mask, g));
}

namespace detail {
inline double rel_change(const ScalarField& a, const ScalarField& b, const DomainMask& mask) {
  double num = 0.0, den = 0.0;
  for (auto n : mask.active_nodes()) {
    num += (a[n] - b[n]) * (a[n] - b[n]);
    den += a[n] * a[n];
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

// f + b u: moving div(b u) = b . grad u to the right of -div f.
inline VectorField shifted_flux(const VectorField& f, const VectorField& b, const ScalarField& u) {
  VectorField out = f;
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = out[n] + u[n] * b[n];
  return out;
}
}  // namespace detail

/// Deterministic pseudo-random interior field in [-amp, amp].
inline ScalarField random_field(const DomainMask& mask, std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  ScalarField u(mask.grid());
  for (auto n : mask.active_nodes()) {
    const double r = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    u[n] = amp * (2.0 * r - 1.0);
  }
  return u;
}

/// Damped Picard iteration u <- (1-t) u + t A(u), A(u) the Darboux solution
/// with flux f + b u.
inline SolveReport solve_full(const DomainMask& mask, const DriftSpec& spec, const VectorField& f,
                              const KrylovConfig& kcfg, const FixedPointConfig& fp, const ScalarField* init = nullptr) {
  spec.validate();
  fp.validate();
  require(spec.alpha < 0.0, Errc::invalid_argument, "solve_full: alpha must be negative");
  require(spec.singular == Singularity::axis, Errc::invalid_argument, "solve_full: axis drift required");
  DarbouxSolver ds(mask, spec.alpha, cg_config(kcfg));
  const VectorField b = spec.has_divfree() ? sample_divfree(mask, spec) : VectorField(mask.grid());
  ScalarField u = init ? restrict_to(mask, *init) : ScalarField(mask.grid());

  SolveReport rep;
  rep.formulation = Formulation::weighted;
  if (!spec.has_divfree()) {
    rep = ds.solve(ds.divergence_rhs(f));
    rep.history.push_back({1, 0.0});
    return rep;
  }
  std::vector<double> vguess;
  int total = 0;
  for (int it = 1; it <= fp.max_outer; ++it) {
    const auto step = ds.solve(ds.divergence_rhs(detail::shifted_flux(f, b, u)), vguess);
    vguess = gather(mask, step.darboux);
    total += step.iterations;
    ScalarField next = step.solution;
    if (fp.damping < 1.0)
      for (std::size_t n = 0; n < next.size(); ++n) next[n] = (1.0 - fp.damping) * u[n] + fp.damping * next[n];
    const double change = detail::rel_change(next, u, mask);
    u = std::move(next);
    rep.history.push_back({it, change});
    rep.residual = step.residual;
    if (change <= fp.tol) {
      rep.solution = u;
      rep.darboux = u;
      for (std::size_t n = 0; n < u.size(); ++n) {
        const double w = ds.weight(n);
        rep.darboux[n] = mask.interior(n) ? u[n] / w : 0.0;
      }
      rep.iterations = total;
      return rep;
    }
    if (!std::isfinite(change)) break;
  }
  throw FixedPointError("solve_full: outer iteration did not converge in " + std::to_string(fp.max_outer) +
                            " steps",
                        rep.history);
}

/// ||W (u/w) - rhs(f + b u)|| / ||rhs||: residual of the fixed-point equation at u.
inline double fixed_point_residual(const DomainMask& mask, const DriftSpec& spec, const VectorField& f,
                                   const ScalarField& u) {
  const KrylovConfig cfg;
  DarbouxSolver ds(mask, spec.alpha, cg_config(cfg));
  const VectorField b = spec.has_divfree() ? sample_divfree(mask, spec) : VectorField(mask.grid());
  const auto rhs = ds.divergence_rhs(detail::shifted_flux(f, b, u));
  std::vector<double> v(mask.active_count());
  const auto& act = mask.active_nodes();
  for (std::size_t i = 0; i < act.size(); ++i) v[i] = u[act[i]] / ds.weight(act[i]);
  const auto av = ds.system().A * v;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    num += (av[i] - rhs[i]) * (av[i] - rhs[i]);
    den += rhs[i] * rhs[i];
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

/// |int |grad u|^2 + B[u,u] - int f . grad u| relative to int |grad u|^2.
inline double energy_identity_residual(const DomainMask& mask, const DriftSpec& spec, const VectorField& f,
                                       const ScalarField& u) {
  const WeakFormEvaluator ev(mask, spec);
  const double e = ev.dirichlet_energy(u);
  const double r = e + bilinear_form(ev, u, u) - ev.pairing(f, u);
  return e == 0.0 ? std::abs(r) : std::abs(r) / e;
}

// ---------------------------------------------------------------------------
// Level-set energy diagnostic

struct TruncationRow {
  double level = 0.0;
  double measure = 0.0;  // |A_k|
  double energy = 0.0;   // int |grad (u-k)_+|^2
  double bound = 0.0;    // ||f||_q^2 |A_k|^(1-2/q)
  double ratio = 0.0;
};

inline std::vector<TruncationRow> truncation_diagnostic(const DomainMask& mask, const ScalarField& u, double f_lq,
                                                        double q, const std::vector<double>& levels) {
  require(q > 2.0, Errc::invalid_argument, "truncation_diagnostic: q must exceed 2");
  for (std::size_t i = 1; i < levels.size(); ++i)
    require(levels[i] >= levels[i - 1], Errc::invalid_argument, "truncation_diagnostic: levels must ascend");
  const Grid& g = mask.grid();
  std::vector<TruncationRow> rows;
  ScalarField t(g);
  for (double k : levels) {
    TruncationRow row;
    row.level = k;
    std::size_t count = 0;
    for (std::size_t n = 0; n < g.size(); ++n) t[n] = std::max((mask.interior(n) ? u[n] : 0.0) - k, 0.0);
    for (auto n : mask.active_nodes()) {
      if (u[n] > k) ++count;
      const Vec3 d = gradient_at(g, t, n);
      row.energy += dot(d, d);
    }
    row.energy *= g.cell_volume();
    row.measure = static_cast<double>(count) * g.cell_volume();
    row.bound = f_lq * f_lq * std::pow(row.measure, 1.0 - 2.0 / q);
    row.ratio = row.bound > 0.0 ? row.energy / row.bound : 0.0;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Ritz probe

struct RitzResult {
  double value = 0.0;
  int iterations = 0;
};

/// Smallest-magnitude Ritz value of a DIRECT operator by inverse iteration.
inline RitzResult ritz_probe(const DiscreteSystem& sys, const KrylovConfig& cfg, int max_steps = 200,
                             double tol = 1e-10) {
  const std::size_t n = sys.unknowns();
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  RitzResult res;
  double prev = 0.0;
  KrylovConfig c = cfg;
  c.method = Method::bicgstab;
  for (int it = 1; it <= max_steps; ++it) {
    auto y = bicgstab(sys.A, x, c, x).x;
    const double ny = blas::nrm2(y);
    require(ny > 0.0 && std::isfinite(ny), Errc::breakdown, "ritz_probe: inverse iteration broke down");
    for (auto& v : y) v /= ny;
    const auto ay = sys.A * y;
    res.value = blas::dot(y, ay);
    res.iterations = it;
    x = std::move(y);
    if (it > 1 && std::abs(res.value - prev) <= tol * std::abs(res.value)) break;
    prev = res.value;
  }
  return res;
}

}  // namespace sdrift
