#pragma once

#include <cmath>

#include "mfga/errors.hpp"
#include "mfga/models.hpp"
#include "mfga/solver/bound.hpp"
#include "mfga/solver/mfg_solver.hpp"
#include "mfga/solver/riccati.hpp"

namespace mfga {

/// Vectorial master equation at β = 0 evaluated along the solved flow,
/// −d/dt ∂ₓu − ½∂ₓₓₓu + ∂ₓH + ∂ₚH·∂ₓₓu, where d/dt is the derivative along
/// (t, x, ρ_t) and therefore carries the 𝔼̃ terms.
inline double master_residual(const MfgSolution &sol, const ModelSpec &model, double t, double x) {
  const Grid &g = sol.grid;
  if (!(t >= sol.t0 - 1e-12 && t <= sol.horizon + 1e-12))
    throw InvalidArgument("master_residual: t outside the time grid");
  if (!(x >= g.x(2) && x <= g.x(g.n - 3)))
    throw InvalidArgument("master_residual: x outside the grid interior");
  const std::size_t n = sol.level(t);
  const std::size_t L = sol.levels();
  double dudt = 0.0;
  if (L >= 3) {
    const double h = sol.dt;
    if (n == 0)
      dudt = (-3.0 * interp_uniform(sol.ux[0], g, x) + 4.0 * interp_uniform(sol.ux[1], g, x) -
              interp_uniform(sol.ux[2], g, x)) /
             (2.0 * h);
    else if (n == L - 1)
      dudt = (3.0 * interp_uniform(sol.ux[n], g, x) - 4.0 * interp_uniform(sol.ux[n - 1], g, x) +
              interp_uniform(sol.ux[n - 2], g, x)) /
             (2.0 * h);
    else
      dudt = (interp_uniform(sol.ux[n + 1], g, x) - interp_uniform(sol.ux[n - 1], g, x)) / (2.0 * h);
  }
  const double p = interp_uniform(sol.ux[n], g, x);
  const double uxx = interp_uniform(sol.uxx[n], g, x);
  const double e = 1e-3 * std::max(1.0, std::abs(x)) + g.dx;
  const double uxxx = (interp_uniform(sol.uxx[n], g, x + e) - interp_uniform(sol.uxx[n], g, x - e)) / (2.0 * e);
  const BoundH H(model, sol.mass[n], g);
  return -dudt - 0.5 * uxxx + H.hx(x, p) + H.hp(x, p) * uxx;
}

/// Residual of the Riccati ansatz U = P_t·x + Q_t·m(μ) at (t, x, μ), using the
/// model's derivative closures and discrete Lions-derivative sums.
inline double master_residual(const RiccatiSolution &ric, const ModelSpec &model, double t, double x,
                              const EmpiricalMeasure &mu) {
  if (!(t >= ric.t0() - 1e-12 && t <= ric.horizon() + 1e-12))
    throw InvalidArgument("master_residual: t outside the time grid");
  if (!std::isfinite(x))
    throw InvalidArgument("master_residual: non-finite x");
  const std::size_t k = ric.node(t);
  const double tk = ric.t_grid()[k];
  const double P = ric.p_nodes()[k], Q = ric.q_nodes()[k];
  const double m = mu.mean();
  const double U = P * x + Q * m;
  const HDerivs d = eval_h_derivs(model, x, mu, U);
  double nl = 0.0;
  const auto &pts = mu.points();
  const auto &w = mu.weights();
  for (std::size_t j = 0; j < pts.size(); ++j)
    nl += w[j] * eval_h_derivs(model, pts[j], mu, P * pts[j] + Q * m).hp;
  return -(ric.p_dot(tk) * x + ric.q_dot(tk) * m) + d.hx + d.hp * P + Q * nl;
}

} // namespace mfga
