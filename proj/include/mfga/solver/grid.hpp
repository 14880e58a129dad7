#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mfga/errors.hpp"
#include "mfga/measures.hpp"
#include "mfga/models.hpp"

namespace mfga {

/// Spatial grid policy. When lo/hi are unset the domain is
/// [m₀ − R, m₀ + R] with R = max(radius_sd·sd, spread) + 6√(T − t₀)
/// + max(0, −A₀)·(T − t₀)·max(spread, 1).
struct GridSpec {
  double dx = 1e-2;
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  double radius_sd = 8.0;

  bool fixed() const { return std::isfinite(lo) && std::isfinite(hi); }
};

struct Grid {
  double lo = 0.0;
  double dx = 1.0;
  std::size_t n = 0;

  double x(std::size_t i) const { return lo + dx * static_cast<double>(i); }
  double hi() const { return x(n - 1); }
  std::vector<double> nodes() const {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = x(i);
    return v;
  }
};

inline Grid make_grid(const GridSpec &spec, const ModelSpec &model, const EmpiricalMeasure &mu0, double duration) {
  if (!(spec.dx > 0.0))
    throw InvalidArgument("grid: dx must be > 0");
  double lo = spec.lo, hi = spec.hi;
  if (!spec.fixed()) {
    const Moments mo = moments(mu0);
    const double sd = std::sqrt(std::max(0.0, mo.second_moment - mo.mean * mo.mean));
    double spread = 0.0;
    for (double p : mu0.points())
      spread = std::max(spread, std::abs(p - mo.mean));
    const double expand = std::max(0.0, -model.a0_scalar());
    const double R = std::max(spec.radius_sd * sd, spread) + 6.0 * std::sqrt(std::max(duration, 0.0)) +
                     expand * duration * std::max(spread, 1.0) + 10.0 * spec.dx;
    lo = mo.mean - R;
    hi = mo.mean + R;
  }
  if (!(hi > lo))
    throw InvalidArgument("grid: hi must exceed lo");
  Grid g;
  g.dx = spec.dx;
  g.lo = lo;
  g.n = static_cast<std::size_t>(std::ceil((hi - lo) / spec.dx - 1e-9)) + 1;
  if (g.n < 8)
    throw InvalidArgument("grid: fewer than 8 nodes");
  return g;
}

/// Four-point Lagrange interpolation on a uniform grid (exact for cubics).
inline double interp_uniform(const std::vector<double> &f, const Grid &g, double x) {
  const double s = (x - g.lo) / g.dx;
  long i = static_cast<long>(std::floor(s)) - 1;
  i = std::clamp(i, 0L, static_cast<long>(g.n) - 4);
  const double r = s - static_cast<double>(i);
  const double l0 = -(r - 1) * (r - 2) * (r - 3) / 6.0;
  const double l1 = r * (r - 2) * (r - 3) / 2.0;
  const double l2 = -r * (r - 1) * (r - 3) / 2.0;
  const double l3 = r * (r - 1) * (r - 2) / 6.0;
  return l0 * f[i] + l1 * f[i + 1] + l2 * f[i + 2] + l3 * f[i + 3];
}

/// Linear interpolation on a uniform grid.
inline double interp_linear(const std::vector<double> &f, const Grid &g, double x) {
  const double s = (x - g.lo) / g.dx;
  long i = static_cast<long>(std::floor(s));
  i = std::clamp(i, 0L, static_cast<long>(g.n) - 2);
  const double r = s - static_cast<double>(i);
  return (1.0 - r) * f[i] + r * f[i + 1];
}

/// Thomas algorithm; a: sub, b: diag, c: super. Overwrites d with the solution.
inline void solve_tridiagonal(std::vector<double> &a, std::vector<double> &b, std::vector<double> &c,
                              std::vector<double> &d) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    d[i] -= m * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;)
    d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

/// Central first and second differences with second-order one-sided stencils at the ends.
inline void differentiate(const std::vector<double> &u, double dx, std::vector<double> &ux, std::vector<double> &uxx) {
  const std::size_t n = u.size();
  ux.resize(n);
  uxx.resize(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    ux[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
    uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
  }
  ux[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
  ux[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx);
  uxx[0] = uxx[1];
  uxx[n - 1] = uxx[n - 2];
}

/// Cloud-in-cell deposit of atoms onto nodal masses; preserves mass and mean.
inline std::vector<double> deposit(const EmpiricalMeasure &mu, const Grid &g) {
  std::vector<double> m(g.n, 0.0);
  const auto &p = mu.points();
  const auto &w = mu.weights();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double s = (p[k] - g.lo) / g.dx;
    if (!(s >= 0.0 && s <= static_cast<double>(g.n - 1)))
      throw GridEscape("initial atom at " + std::to_string(p[k]) + " lies outside the grid");
    std::size_t i = static_cast<std::size_t>(std::floor(s));
    if (i >= g.n - 1)
      i = g.n - 2;
    const double r = s - static_cast<double>(i);
    m[i] += w[k] * (1.0 - r);
    m[i + 1] += w[k] * r;
  }
  return m;
}

} // namespace mfga
