#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <vector>

#include "mfga/errors.hpp"
#include "mfga/models.hpp"
#include "mfga/solver/bound.hpp"
#include "mfga/solver/grid.hpp"

namespace mfga {

enum class PicardInit { Zero, Terminal };

using Field = std::vector<std::vector<double>>;

struct SolverOptions {
  int t_steps = 500;
  GridSpec grid;
  double tol = 1e-9;
  int max_picard = 100;
  double relaxation = 1.0;
  double t0 = 0.0;
  PicardInit init = PicardInit::Zero;
  /// Initial ∂ₓu guess on the same (t, x) grid; overrides init.
  const Field *warm_start = nullptr;
  /// Mass allowed in the five outermost cells on either side.
  double escape_mass = 1e-6;
};

/// Discrete solution of the coupled HJB/FP system on a (t, x) grid.
struct MfgSolution {
  Grid grid;
  double t0 = 0.0;
  double horizon = 0.0;
  double dt = 0.0;
  std::vector<double> t_grid;
  Field mass; // nodal masses per level, sum 1
  Field u, ux, uxx;
  std::vector<double> picard_residuals;

  std::size_t levels() const { return t_grid.size(); }

  /// Nearest level to t.
  std::size_t level(double t) const {
    if (levels() == 1 || dt <= 0.0)
      return 0;
    const double s = std::round((t - t0) / dt);
    return static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(levels() - 1)));
  }

  double density(std::size_t n, std::size_t i) const { return mass[n][i] / grid.dx; }

  double mean(std::size_t n) const {
    double m = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i)
      m += mass[n][i] * grid.x(i);
    return m;
  }

  double total_mass(std::size_t n) const {
    double m = 0.0;
    for (double v : mass[n])
      m += v;
    return m;
  }

  EmpiricalMeasure measure(std::size_t n) const { return detail::measure_from_masses(mass[n], grid); }

  /// Cubic in x, linear in t.
  double at(const Field &f, double t, double x) const {
    if (levels() == 1 || dt <= 0.0)
      return interp_uniform(f[0], grid, x);
    const double s = std::clamp((t - t0) / dt, 0.0, static_cast<double>(levels() - 1));
    std::size_t n = static_cast<std::size_t>(std::floor(s));
    if (n >= levels() - 1)
      n = levels() - 2;
    const double r = s - static_cast<double>(n);
    const double a = interp_uniform(f[n], grid, x);
    if (r == 0.0)
      return a;
    return (1.0 - r) * a + r * interp_uniform(f[n + 1], grid, x);
  }
};

namespace detail {

inline void check_escape(const std::vector<double> &m, double limit, double t) {
  const std::size_t n = m.size();
  const std::size_t k = std::min<std::size_t>(5, n / 2);
  double left = 0.0, right = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    left += std::abs(m[i]);
    right += std::abs(m[n - 1 - i]);
  }
  if (left > limit || right > limit) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "mass %.3e reached the grid boundary at t = %g", std::max(left, right), t);
    throw GridEscape(buf);
  }
}

/// B(w) = w/(eʷ − 1).
inline double bernoulli(double w) {
  if (std::abs(w) < 1e-10)
    return 1.0 - 0.5 * w;
  return w / std::expm1(w);
}

/// Forward Fokker–Planck on nodal masses with Scharfetter–Gummel
/// (Chang–Cooper type) exponentially fitted fluxes, zero-flux ends, BDF2.
inline Field fp_forward(const ModelSpec &model, const Grid &g, const std::vector<double> &m0, const Field &ux,
                        double t0, double dt, double escape_mass) {
  const std::size_t nt = ux.size() - 1;
  const std::size_t n = g.n;
  const double D = 0.5;
  const double dx = g.dx;
  Field mass(nt + 1);
  mass[0] = m0;
  check_escape(m0, escape_mass, t0);
  std::vector<double> alpha(n - 1), beta(n - 1), sub(n), diag(n), sup(n), rhs(n), hpn(n);
  for (std::size_t k = 0; k < nt; ++k) {
    const BoundH H(model, mass[k], g);
    for (std::size_t i = 0; i < n; ++i)
      hpn[i] = H.hp(g.x(i), ux[k + 1][i]);
    for (std::size_t f = 0; f + 1 < n; ++f) {
      const double w = -0.5 * (hpn[f] + hpn[f + 1]) * dx / D;
      alpha[f] = D / (dx * dx) * bernoulli(-w);
      beta[f] = -D / (dx * dx) * bernoulli(w);
    }
    const bool bdf2 = k > 0;
    const double c0 = bdf2 ? 3.0 : 1.0;
    const double c1 = bdf2 ? 2.0 * dt : dt;
    for (std::size_t i = 0; i < n; ++i) {
      double lsub = 0.0, ldiag = 0.0, lsup = 0.0;
      if (i > 0) {
        lsub = alpha[i - 1];
        ldiag += beta[i - 1];
      }
      if (i + 1 < n) {
        ldiag -= alpha[i];
        lsup = -beta[i];
      }
      sub[i] = -c1 * lsub;
      diag[i] = c0 - c1 * ldiag;
      sup[i] = -c1 * lsup;
      rhs[i] = bdf2 ? 4.0 * mass[k][i] - mass[k - 1][i] : mass[k][i];
    }
    solve_tridiagonal(sub, diag, sup, rhs);
    mass[k + 1] = rhs;
    check_escape(mass[k + 1], escape_mass, t0 + dt * static_cast<double>(k + 1));
  }
  return mass;
}

struct HjbResult {
  Field u, ux, uxx;
};

/// Backward HJB, BDF2, linearized about the extrapolated gradient so each step
/// is one tridiagonal solve. Interior rows use exponential fitting of the
/// advection term; boundary rows use one-sided first differences and the
/// second difference of the neighbouring interior node.
inline HjbResult hjb_backward(const ModelSpec &model, const Grid &g, const Field &mass, double dt) {
  const std::size_t nt = mass.size() - 1;
  const std::size_t n = g.n;
  const double dx = g.dx;
  HjbResult r;
  r.u.assign(nt + 1, std::vector<double>(n));
  r.ux.resize(nt + 1);
  r.uxx.resize(nt + 1);
  {
    const BoundG G(model, mass[nt], g);
    for (std::size_t i = 0; i < n; ++i)
      r.u[nt][i] = G.g(g.x(i));
    differentiate(r.u[nt], dx, r.ux[nt], r.uxx[nt]);
  }
  std::vector<double> ext(n), pstar(n), scratch(n), sub(n), diag(n), sup(n), rhs(n);
  const double idx2 = 1.0 / (dx * dx);
  for (std::size_t k = nt; k-- > 0;) {
    const bool bdf2 = k + 2 <= nt;
    if (bdf2) {
      for (std::size_t i = 0; i < n; ++i)
        ext[i] = 2.0 * r.u[k + 1][i] - r.u[k + 2][i];
      differentiate(ext, dx, pstar, scratch);
    } else {
      pstar = r.ux[k + 1];
    }
    const BoundH H(model, mass[k], g);
    const double c = bdf2 ? 1.5 / dt : 1.0 / dt;
    // Row i of the operator: c·uᵢ − ½D₂u + bᵢ·D₁u, written as
    // (extra, sub, diag, sup, extra) with extra terms only at the ends.
    double e0 = 0.0, eN = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = g.x(i);
      const double b = H.hp(x, pstar[i]);
      const double hs = H.h(x, pstar[i]);
      rhs[i] = (bdf2 ? (4.0 * r.u[k + 1][i] - r.u[k + 2][i]) / (2.0 * dt) : r.u[k + 1][i] / dt) - hs +
               b * pstar[i];
      if (i == 0) {
        diag[i] = c - 0.5 * idx2 + b * (-1.5 / dx);
        sup[i] = idx2 + b * (2.0 / dx);
        e0 = -0.5 * idx2 + b * (-0.5 / dx);
        sub[i] = 0.0;
      } else if (i == n - 1) {
        diag[i] = c - 0.5 * idx2 + b * (1.5 / dx);
        sub[i] = idx2 + b * (-2.0 / dx);
        eN = -0.5 * idx2 + b * (0.5 / dx);
        sup[i] = 0.0;
      } else {
        const double w = b * dx / 0.5;
        const double s = -0.5 * idx2 * bernoulli(-w), p = -0.5 * idx2 * bernoulli(w), d = c - s - p;
        sub[i] = s;
        diag[i] = d;
        sup[i] = p;
      }
    }
    // Eliminate u₂ from row 0 with row 1 and u_{n−3} from row n−1 with row n−2.
    {
      const double f = e0 / sup[1];
      diag[0] -= f * sub[1];
      sup[0] -= f * diag[1];
      rhs[0] -= f * rhs[1];
      const double h = eN / sub[n - 2];
      diag[n - 1] -= h * sup[n - 2];
      sub[n - 1] -= h * diag[n - 2];
      rhs[n - 1] -= h * rhs[n - 2];
    }
    solve_tridiagonal(sub, diag, sup, rhs);
    r.u[k] = rhs;
    differentiate(r.u[k], dx, r.ux[k], r.uxx[k]);
  }
  return r;
}

} // namespace detail

/// Picard iteration on ∂ₓu. Throws NoConvergence when the sup-norm residual
/// fails to decrease strictly or max_picard is reached.
inline MfgSolution solve_mfg(const ModelSpec &model, const EmpiricalMeasure &mu0, const SolverOptions &opt = {}) {
  model.validate();
  if (model.dim != 1)
    throw InvalidArgument("solve_mfg: dim must be 1");
  if (model.beta != 0.0)
    throw UnsupportedFamily("solve_mfg: common noise (beta > 0) is not supported");
  if (mu0.empty())
    throw InvalidArgument("solve_mfg: empty initial measure");
  if (opt.t_steps < 1 || opt.max_picard < 1)
    throw InvalidArgument("solve_mfg: t_steps and max_picard must be >= 1");
  if (!(opt.relaxation > 0.0 && opt.relaxation <= 1.0))
    throw InvalidArgument("solve_mfg: relaxation must be in (0, 1]");
  if (!(opt.t0 >= 0.0 && opt.t0 <= model.horizon))
    throw InvalidArgument("solve_mfg: t0 outside [0, T]");

  const double duration = model.horizon - opt.t0;
  MfgSolution sol;
  sol.grid = make_grid(opt.grid, model, mu0, duration);
  sol.t0 = opt.t0;
  sol.horizon = model.horizon;
  const Grid &g = sol.grid;
  const std::vector<double> m0 = deposit(mu0, g);

  if (duration <= 0.0) {
    sol.dt = 0.0;
    sol.t_grid = {opt.t0};
    sol.mass = {m0};
    sol.u.assign(1, std::vector<double>(g.n));
    const BoundG G(model, m0, g);
    for (std::size_t i = 0; i < g.n; ++i)
      sol.u[0][i] = G.g(g.x(i));
    sol.ux.resize(1);
    sol.uxx.resize(1);
    differentiate(sol.u[0], g.dx, sol.ux[0], sol.uxx[0]);
    return sol;
  }

  const std::size_t nt = static_cast<std::size_t>(opt.t_steps);
  sol.dt = duration / static_cast<double>(nt);
  sol.t_grid.resize(nt + 1);
  for (std::size_t k = 0; k <= nt; ++k)
    sol.t_grid[k] = opt.t0 + sol.dt * static_cast<double>(k);

  Field guess;
  if (opt.warm_start) {
    if (opt.warm_start->size() != nt + 1 || (*opt.warm_start)[0].size() != g.n)
      throw InvalidArgument("solve_mfg: warm start does not match the grid");
    guess = *opt.warm_start;
  } else if (opt.init == PicardInit::Terminal) {
    const BoundG G(model, m0, g);
    std::vector<double> gx(g.n);
    for (std::size_t i = 0; i < g.n; ++i)
      gx[i] = G.gx(g.x(i));
    guess.assign(nt + 1, gx);
  } else {
    guess.assign(nt + 1, std::vector<double>(g.n, 0.0));
  }

  for (int it = 1; it <= opt.max_picard; ++it) {
    Field mass = detail::fp_forward(model, g, m0, guess, opt.t0, sol.dt, opt.escape_mass);
    detail::HjbResult h = detail::hjb_backward(model, g, mass, sol.dt);
    double res = 0.0;
    for (std::size_t k = 0; k <= nt; ++k)
      for (std::size_t i = 0; i < g.n; ++i) {
        const double d = std::abs(h.ux[k][i] - guess[k][i]);
        if (!std::isfinite(d))
          throw BlowUp(sol.t_grid[k]);
        res = std::max(res, d);
      }
    sol.picard_residuals.push_back(res);
    if (res < opt.tol) {
      sol.mass = std::move(mass);
      sol.u = std::move(h.u);
      sol.ux = std::move(h.ux);
      sol.uxx = std::move(h.uxx);
      return sol;
    }
    const auto &pr = sol.picard_residuals;
    if (pr.size() >= 2 && !(res < pr[pr.size() - 2]))
      throw NoConvergence(it, res);
    const double w = opt.relaxation;
    for (std::size_t k = 0; k <= nt; ++k)
      for (std::size_t i = 0; i < g.n; ++i)
        guess[k][i] = w * h.ux[k][i] + (1.0 - w) * guess[k][i];
  }
  throw NoConvergence(opt.max_picard, sol.picard_residuals.back());
}

} // namespace mfga
