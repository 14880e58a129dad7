#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mfga/errors.hpp"
#include "mfga/models.hpp"
#include "mfga/monotonicity.hpp"
#include "mfga/seeds.hpp"
#include "mfga/solver/bound.hpp"
#include "mfga/solver/mfg_solver.hpp"

namespace mfga {

struct FbsdeResult {
  std::vector<double> t_grid;
  Field x_paths; // [step][path]
  Field y_paths;
  std::vector<double> y_error; // mean |Y − u(t, X)| per step
  double y_check = 0.0;
};

namespace detail {

inline void check_inside(const Grid &g, double x, double t) {
  if (!(x >= g.lo && x <= g.hi()))
    throw GridEscape("path left the grid at t = " + std::to_string(t) + " (x = " + std::to_string(x) + ")");
}

inline std::vector<double> time_grid(double t0, double T, int steps) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k)
    t[k] = t0 + (T - t0) * static_cast<double>(k) / static_cast<double>(steps);
  t.back() = T;
  return t;
}

} // namespace detail

/// Euler–Maruyama for X with the solved decoupling field, then a backward
/// reconstruction of Y compared against u(t, X_t). ode_mode freezes the
/// Brownian increments at zero.
inline FbsdeResult simulate_fbsde(const ModelSpec &model, const MfgSolution &sol, const std::vector<double> &xi,
                                  int n_steps, std::uint64_t seed, bool ode_mode = false) {
  if (n_steps < 1)
    throw InvalidArgument("simulate_fbsde: n_steps must be >= 1");
  if (xi.empty())
    throw InvalidArgument("simulate_fbsde: no samples");
  const Grid &g = sol.grid;
  const std::size_t np = xi.size();
  FbsdeResult r;
  const bool degenerate = sol.levels() == 1;
  const int steps = degenerate ? 0 : n_steps;
  r.t_grid = degenerate ? std::vector<double>{sol.t0} : detail::time_grid(sol.t0, sol.horizon, n_steps);
  const double dt = degenerate ? 0.0 : (sol.horizon - sol.t0) / n_steps;
  r.x_paths.assign(steps + 1, std::vector<double>(np));
  r.y_paths.assign(steps + 1, std::vector<double>(np));
  Field dB(steps, std::vector<double>(np, 0.0));
  std::mt19937_64 rng(derive_seed(seed, "fbsde"));
  std::normal_distribution<double> normal(0.0, std::sqrt(std::max(dt, 0.0)));
  for (std::size_t p = 0; p < np; ++p) {
    detail::check_inside(g, xi[p], sol.t0);
    r.x_paths[0][p] = xi[p];
  }
  for (int k = 0; k < steps; ++k) {
    const double t = r.t_grid[k];
    const BoundH H(model, sol.mass[sol.level(t)], g);
    for (std::size_t p = 0; p < np; ++p) {
      const double x = r.x_paths[k][p];
      const double drift = -H.hp(x, sol.at(sol.ux, t, x));
      dB[k][p] = ode_mode ? 0.0 : normal(rng);
      const double xn = x + drift * dt + dB[k][p];
      detail::check_inside(g, xn, r.t_grid[k + 1]);
      r.x_paths[k + 1][p] = xn;
    }
  }
  {
    const BoundG G(model, sol.mass[sol.levels() - 1], g);
    for (std::size_t p = 0; p < np; ++p)
      r.y_paths[steps][p] = G.g(r.x_paths[steps][p]);
  }
  for (int k = steps; k-- > 0;) {
    const double t = r.t_grid[k];
    const BoundH H(model, sol.mass[sol.level(t)], g);
    for (std::size_t p = 0; p < np; ++p) {
      const double x = r.x_paths[k][p];
      const double z = sol.at(sol.ux, t, x);
      const double lhat = z * H.hp(x, z) - H.h(x, z);
      const double uxx = sol.at(sol.uxx, t, x);
      const double b = dB[k][p];
      r.y_paths[k][p] = r.y_paths[k + 1][p] + lhat * dt - z * b - 0.5 * uxx * (b * b - dt);
    }
  }
  r.y_error.assign(steps + 1, 0.0);
  for (int k = 0; k <= steps; ++k) {
    double e = 0.0;
    for (std::size_t p = 0; p < np; ++p)
      e += std::abs(r.y_paths[k][p] - sol.at(sol.u, r.t_grid[k], r.x_paths[k][p]));
    r.y_error[k] = e / static_cast<double>(np);
    r.y_check = std::max(r.y_check, r.y_error[k]);
  }
  return r;
}

struct FlowTrace {
  std::vector<double> t_grid;
  Field x_particles, dx_particles;
  Field upsilon, upsilon_bar;
  std::vector<double> i_series, ibar_series, gamma_series, mean_dx2;
  /// Standard error of Γ_{k+1} − Γ_k over paths.
  std::vector<double> increment_se;
  std::vector<double> weights;
  VecLambda lam{1.0, 0.0, 1.0, 0.0};

  /// Γ recomputed from the stored components at step k.
  double gamma_from_components(std::size_t k) const {
    double ups2 = 0.0, bar2 = 0.0;
    for (std::size_t p = 0; p < weights.size(); ++p) {
      ups2 += weights[p] * upsilon[k][p] * upsilon[k][p];
      bar2 += weights[p] * upsilon_bar[k][p] * upsilon_bar[k][p];
    }
    return lam.l0 * ibar_series[k] + lam.l1 * i_series[k] + bar2 + lam.l2 * ups2 - lam.l3 * mean_dx2[k];
  }
};

struct FlowOptions {
  int paths_per_atom = 8;
  /// Size of the paired perturbation L(ξ ± εη) used for Υ.
  double eps = 1e-2;
  bool ode_mode = false;
  /// Passed to the paired solves; the grid and t_steps are taken from sol.
  double tol = 1e-10;
  int max_picard = 200;
};

/// Directional derivative of ∂ₓu along the initial perturbation η, from two
/// solves started at L(ξ ± εη) on the grid of sol.
inline Field directional_ux(const ModelSpec &model, const MfgSolution &sol, const EmpiricalMeasure &xi,
                            const std::vector<double> &eta, double eps, double tol, int max_picard) {
  SolverOptions o;
  o.t_steps = static_cast<int>(sol.levels() - 1);
  o.grid.dx = sol.grid.dx;
  o.grid.lo = sol.grid.lo;
  o.grid.hi = sol.grid.hi();
  o.tol = tol;
  o.max_picard = max_picard;
  o.t0 = sol.t0;
  o.warm_start = &sol.ux;
  auto bumped = [&](double s) {
    std::vector<double> pts(xi.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
      pts[i] = xi.points()[i] + s * eta[i];
    return solve_mfg(model, make_empirical(pts, xi.weights()), o);
  };
  const MfgSolution plus = bumped(eps), minus = bumped(-eps);
  Field d(sol.levels(), std::vector<double>(sol.grid.n));
  for (std::size_t k = 0; k < sol.levels(); ++k)
    for (std::size_t i = 0; i < sol.grid.n; ++i)
      d[k][i] = (plus.ux[k][i] - minus.ux[k][i]) / (2.0 * eps);
  return d;
}

/// Co-evolves (X, δX) along the solved field and records I, Ī and Γ.
/// xi must be the initial measure of sol with eta aligned to its atoms.
inline FlowTrace simulate_linearized_flow(const ModelSpec &model, const MfgSolution &sol, const VecLambda &lam,
                                          const EmpiricalMeasure &xi, const std::vector<double> &eta, int n_steps,
                                          std::uint64_t seed, const FlowOptions &opt = {}) {
  if (eta.size() != xi.size())
    throw InvalidArgument("simulate_linearized_flow: eta length differs from the atom count");
  if (n_steps < 1 || opt.paths_per_atom < 1)
    throw InvalidArgument("simulate_linearized_flow: n_steps and paths_per_atom must be >= 1");
  const Grid &g = sol.grid;
  const bool degenerate = sol.levels() == 1;
  const int steps = degenerate ? 0 : n_steps;
  const std::size_t M = static_cast<std::size_t>(opt.paths_per_atom);
  const std::size_t np = xi.size() * M;

  FlowTrace tr;
  tr.lam = lam;
  tr.t_grid = degenerate ? std::vector<double>{sol.t0} : detail::time_grid(sol.t0, sol.horizon, n_steps);
  const double dt = degenerate ? 0.0 : (sol.horizon - sol.t0) / n_steps;
  tr.weights.resize(np);
  tr.x_particles.assign(steps + 1, std::vector<double>(np));
  tr.dx_particles.assign(steps + 1, std::vector<double>(np));
  tr.upsilon.assign(steps + 1, std::vector<double>(np));
  tr.upsilon_bar.assign(steps + 1, std::vector<double>(np));
  for (std::size_t i = 0; i < xi.size(); ++i)
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t p = i * M + m;
      tr.weights[p] = xi.weights()[i] / static_cast<double>(M);
      tr.x_particles[0][p] = xi.points()[i];
      tr.dx_particles[0][p] = eta[i];
      detail::check_inside(g, xi.points()[i], sol.t0);
    }

  bool zero_eta = true;
  for (double e : eta)
    zero_eta = zero_eta && e == 0.0;
  Field dux;
  if (!degenerate && !zero_eta)
    dux = directional_ux(model, sol, xi, eta, opt.eps, opt.tol, opt.max_picard);

  std::mt19937_64 rng(derive_seed(seed, "linearized-flow"));
  std::normal_distribution<double> normal(0.0, std::sqrt(std::max(dt, 0.0)));
  const bool quadratic = model.h0_family == Family::Quadratic;

  auto fill_fields = [&](int k) {
    const double t = tr.t_grid[k];
    for (std::size_t p = 0; p < np; ++p) {
      const double x = tr.x_particles[k][p];
      tr.upsilon[k][p] = dux.empty() ? 0.0 : sol.at(dux, t, x);
      tr.upsilon_bar[k][p] = sol.at(sol.uxx, t, x) * tr.dx_particles[k][p];
    }
  };
  if (degenerate && !zero_eta) {
    // Terminal data: Υ = 𝔼̃[∂ₓμG δX̃], Ῡ = ∂ₓₓG δX.
    const EmpiricalMeasure rho = sol.measure(0);
    for (std::size_t p = 0; p < np; ++p) {
      const double x = tr.x_particles[0][p];
      const GDerivs gd = eval_g_derivs(model, x, rho);
      double ups = 0.0;
      for (std::size_t q = 0; q < np; ++q)
        ups += tr.weights[q] * gd.gxmu(tr.x_particles[0][q]) * tr.dx_particles[0][q];
      tr.upsilon[0][p] = ups;
      tr.upsilon_bar[0][p] = gd.gxx * tr.dx_particles[0][p];
    }
  } else {
    fill_fields(0);
  }

  for (int k = 0; k < steps; ++k) {
    const double t = tr.t_grid[k];
    const BoundH H(model, sol.mass[sol.level(t)], g);
    for (std::size_t p = 0; p < np; ++p) {
      const double x = tr.x_particles[k][p];
      const double dxp = tr.dx_particles[k][p];
      const double z = sol.at(sol.ux, t, x);
      double mu_term = 0.0;
      if (!quadratic)
        for (std::size_t q = 0; q < np; ++q)
          mu_term += tr.weights[q] * H.hpmu(x, tr.x_particles[k][q], z) * tr.dx_particles[k][q];
      const double ddx = -(H.hpx(x, z) * dxp + mu_term + H.hpp(x, z) * (tr.upsilon[k][p] + tr.upsilon_bar[k][p]));
      const double xn = x - H.hp(x, z) * dt + (opt.ode_mode ? 0.0 : normal(rng));
      detail::check_inside(g, xn, tr.t_grid[k + 1]);
      tr.x_particles[k + 1][p] = xn;
      tr.dx_particles[k + 1][p] = dxp + ddx * dt;
    }
    fill_fields(k + 1);
  }

  const std::size_t L = tr.t_grid.size();
  tr.i_series.resize(L);
  tr.ibar_series.resize(L);
  tr.mean_dx2.resize(L);
  tr.gamma_series.resize(L);
  std::vector<double> prev_g(np), cur_g(np);
  for (std::size_t k = 0; k < L; ++k) {
    double I = 0.0, Ib = 0.0, d2 = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      const double w = tr.weights[p], u = tr.upsilon[k][p], ub = tr.upsilon_bar[k][p], d = tr.dx_particles[k][p];
      I += w * u * d;
      Ib += w * ub * d;
      d2 += w * d * d;
      cur_g[p] = lam.l0 * ub * d + lam.l1 * u * d + ub * ub + lam.l2 * u * u - lam.l3 * d * d;
    }
    tr.i_series[k] = I;
    tr.ibar_series[k] = Ib;
    tr.mean_dx2[k] = d2;
    tr.gamma_series[k] = tr.gamma_from_components(k);
    if (k > 0) {
      double mean = 0.0, var = 0.0;
      for (std::size_t p = 0; p < np; ++p)
        mean += tr.weights[p] * (cur_g[p] - prev_g[p]);
      for (std::size_t p = 0; p < np; ++p) {
        const double e = cur_g[p] - prev_g[p] - mean;
        var += tr.weights[p] * e * e;
      }
      tr.increment_se.push_back(std::sqrt(var / static_cast<double>(np)));
    }
    std::swap(prev_g, cur_g);
  }
  return tr;
}

} // namespace mfga
