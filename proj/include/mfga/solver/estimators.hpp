#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mfga/certify.hpp"
#include "mfga/measures.hpp"
#include "mfga/models.hpp"
#include "mfga/monotonicity.hpp"
#include "mfga/seeds.hpp"
#include "mfga/solver/mfg_solver.hpp"

namespace mfga {

struct SolvedFieldOptions {
  double dx = 0.02;
  double dt = 2e-3;
  double eps = 1e-2;
  double tol = 1e-10;
  int max_picard = 200;
};

namespace detail {

inline SolverOptions solve_options_from(const ModelSpec &model, double t0, double dx, double dt, double tol,
                                        int max_picard) {
  SolverOptions o;
  o.t0 = t0;
  o.grid.dx = dx;
  o.t_steps = std::max(1, static_cast<int>(std::lround((model.horizon - t0) / dt)));
  o.tol = tol;
  o.max_picard = max_picard;
  return o;
}

inline SolverOptions same_grid(SolverOptions o, const MfgSolution &base) {
  o.grid.lo = base.grid.lo;
  o.grid.hi = base.grid.hi();
  o.warm_start = base.levels() > 1 ? &base.ux : nullptr;
  return o;
}

inline EmpiricalMeasure displaced(const EmpiricalMeasure &xi, const std::vector<double> &eta, double s) {
  std::vector<double> pts(xi.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = xi.points()[i] + s * eta[i];
  return make_empirical(pts, xi.weights());
}

} // namespace detail

/// V(t, ·) as a field: each evaluation solves from (t, L(ξ)) and from
/// L(ξ ± εη); k is the central difference of ∂ₓu at the atoms and dxx the
/// grid ∂ₓₓu. Uncertainties: central minus forward difference for k, cubic
/// minus linear interpolation for dxx.
inline FieldDerivs solved_field(const ModelSpec &model, double t, const SolvedFieldOptions &opt = {}) {
  if (!(t >= 0.0 && t <= model.horizon))
    throw InvalidArgument("solved_field: t outside [0, T]");
  FieldDerivs F;
  F.evaluate = [model, t, opt](const EmpiricalMeasure &xi, const std::vector<double> &eta) {
    const SolverOptions o = detail::solve_options_from(model, t, opt.dx, opt.dt, opt.tol, opt.max_picard);
    const MfgSolution base = solve_mfg(model, xi, o);
    const SolverOptions po = detail::same_grid(o, base);
    const MfgSolution plus = solve_mfg(model, detail::displaced(xi, eta, opt.eps), po);
    const MfgSolution minus = solve_mfg(model, detail::displaced(xi, eta, -opt.eps), po);
    const Grid &g = base.grid;
    const std::size_t n = xi.size();
    FieldEval e;
    e.dxx.resize(n);
    e.k.resize(n);
    e.dxx_err.resize(n);
    e.k_err.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = xi.points()[i];
      const double up = interp_uniform(plus.ux[0], g, x), um = interp_uniform(minus.ux[0], g, x),
                   u0 = interp_uniform(base.ux[0], g, x);
      e.k[i] = (up - um) / (2.0 * opt.eps);
      e.k_err[i] = std::abs(e.k[i] - (up - u0) / opt.eps) + 2.0 * opt.tol / opt.eps;
      e.dxx[i] = interp_uniform(base.uxx[0], g, x);
      e.dxx_err[i] = std::abs(e.dxx[i] - interp_linear(base.uxx[0], g, x));
    }
    return e;
  };
  return F;
}

struct LipschitzRow {
  double scale;
  std::string direction;
  double wq;
  double ratio;
};

struct LipschitzEstimate {
  double lipschitz_estimate = 0.0;
  std::vector<double> scales;
  std::vector<double> per_scale_max;
  std::vector<LipschitzRow> per_bump;
};

enum class WassersteinMode { W1, W2 };

struct LipschitzOptions {
  double dx = 0.01;
  double dt = 1e-3;
  double tol = 1e-9;
  int max_picard = 200;
  int random_directions = 2;
  std::uint64_t seed = 0;
};

/// Bump directions normalized to 𝔼|η|² = 1: constant, centered linear, then seeded normals.
inline std::vector<std::pair<std::string, std::vector<double>>>
lipschitz_directions(const EmpiricalMeasure &mu, int random_directions, std::uint64_t seed) {
  const std::size_t n = mu.size();
  const auto &w = mu.weights();
  auto normalize = [&](std::vector<double> v) {
    double e2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      e2 += w[i] * v[i] * v[i];
    if (e2 > 0.0)
      for (double &x : v)
        x /= std::sqrt(e2);
    return v;
  };
  std::vector<std::pair<std::string, std::vector<double>>> out;
  out.emplace_back("constant", normalize(std::vector<double>(n, 1.0)));
  if (n > 1) {
    const double m = mu.mean();
    std::vector<double> lin(n);
    for (std::size_t i = 0; i < n; ++i)
      lin[i] = mu.points()[i] - m;
    bool nonzero = std::any_of(lin.begin(), lin.end(), [](double v) { return v != 0.0; });
    if (nonzero)
      out.emplace_back("linear", normalize(lin));
  }
  std::mt19937_64 rng(derive_seed(seed, "lipschitz-directions"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < random_directions; ++r) {
    std::vector<double> v(n);
    for (double &x : v)
      x = normal(rng);
    out.emplace_back("random" + std::to_string(r), normalize(v));
  }
  return out;
}

/// max |∂ₓu(0, x_p; μ₀ + bump) − ∂ₓu(0, x_p; μ₀)| / W_q over probes, directions and scales.
inline LipschitzEstimate estimate_xmu_lipschitz(const ModelSpec &model, const EmpiricalMeasure &mu0,
                                                const std::vector<double> &x_probes,
                                                const std::vector<double> &bump_scales, WassersteinMode mode,
                                                const LipschitzOptions &opt = {}) {
  if (x_probes.empty() || bump_scales.empty())
    throw InvalidArgument("estimate_xmu_lipschitz: need probes and bump scales");
  for (double s : bump_scales)
    if (!(s > 0.0))
      throw InvalidArgument("estimate_xmu_lipschitz: bump scales must be positive");
  const SolverOptions o = detail::solve_options_from(model, 0.0, opt.dx, opt.dt, opt.tol, opt.max_picard);
  SolverOptions base_opt = o;
  // Leave room for the largest bump on the fixed grid.
  const double smax = *std::max_element(bump_scales.begin(), bump_scales.end());
  const auto dirs = lipschitz_directions(mu0, opt.random_directions, opt.seed);
  double reach = 0.0;
  for (const auto &d : dirs)
    for (double v : d.second)
      reach = std::max(reach, std::abs(v));
  {
    const Grid g = make_grid(o.grid, model, mu0, model.horizon);
    base_opt.grid.lo = g.lo - smax * reach;
    base_opt.grid.hi = g.hi() + smax * reach;
  }
  const MfgSolution base = solve_mfg(model, mu0, base_opt);
  const SolverOptions bo = detail::same_grid(base_opt, base);
  const int q = mode == WassersteinMode::W1 ? 1 : 2;
  LipschitzEstimate est;
  for (double s : bump_scales) {
    double best = 0.0;
    for (const auto &[name, eta] : dirs) {
      const EmpiricalMeasure nu = detail::displaced(mu0, eta, s);
      const MfgSolution bumped = solve_mfg(model, nu, bo);
      const double w = wq_distance(mu0, nu, q);
      double diff = 0.0;
      for (double x : x_probes)
        diff = std::max(diff, std::abs(interp_uniform(bumped.ux[0], base.grid, x) -
                                       interp_uniform(base.ux[0], base.grid, x)));
      const double ratio = w > 0.0 ? diff / w : 0.0;
      est.per_bump.push_back({s, name, w, ratio});
      best = std::max(best, ratio);
    }
    est.scales.push_back(s);
    est.per_scale_max.push_back(best);
    est.lipschitz_estimate = std::max(est.lipschitz_estimate, best);
  }
  return est;
}

struct HessianCheck {
  double sup_uxx;
  double bound;
  bool pass;
};

inline HessianCheck hessian_bound_check(const MfgSolution &sol, const ConstantLedger &ledger,
                                        double allowance = 5e-2) {
  double sup = 0.0;
  for (const auto &level : sol.uxx)
    for (double v : level)
      sup = std::max(sup, std::abs(v));
  const double bound = ledger.lxx_u_theta3;
  return {sup, bound, std::isfinite(bound) && sup <= bound * (1.0 + allowance)};
}

} // namespace mfga
