#pragma once

#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "mfga/errors.hpp"
#include "mfga/measures.hpp"

namespace mfga {

enum class Family { Quadratic, Custom };

inline const char *family_name(Family f) { return f == Family::Quadratic ? "quadratic" : "custom"; }

/// Coefficients of G = ½g0·x² + g1·x·m(μ) and
/// H₀ = ½h_quad·p² + h_xmu·x·m(μ) + ½h_xx·x².
struct QuadraticParams {
  double g0 = 0.0;
  double g1 = 0.0;
  double h_quad = 1.0;
  double h_xmu = 0.0;
  double h_xx = 0.0;
};

struct RegularityConstants {
  double l2_h0 = 1.0;
  double lxx_h0_lo = 1.0;
  double lxx_h0_hi = 1.0;
  double l2_g = 1.0;
  double lxx_g_hi = 1.0;
  double gamma_lo = 0.5;
  double gamma_hi = 2.0;
  double la_bar = 1.0;
};

/// User-supplied H₀ closures; the ⟨A₀x,p⟩ part is added by the library.
struct CustomH0 {
  std::function<double(double, const EmpiricalMeasure &, double)> h, hx, hp, hxx, hxp, hpp;
  std::function<double(double, const EmpiricalMeasure &, double, double)> hxmu, hpmu;
};

struct CustomG {
  std::function<double(double, const EmpiricalMeasure &)> g, gx, gxx;
  std::function<double(double, const EmpiricalMeasure &, double)> gxmu;
};

struct ModelSpec {
  int dim = 1;
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Identity(1, 1);
  Family h0_family = Family::Quadratic;
  Family g_family = Family::Quadratic;
  QuadraticParams quad;
  CustomH0 custom_h0;
  CustomG custom_g;
  double beta = 0.0;
  double horizon = 1.0;
  RegularityConstants reg;

  double a0_scalar() const { return a0(0, 0); }

  void validate() const {
    if (dim < 1)
      throw InvalidArgument("model: dim must be >= 1");
    if (a0.rows() != dim || a0.cols() != dim)
      throw InvalidArgument("model: a0 must be dim x dim");
    if (!(horizon > 0.0))
      throw InvalidArgument("model: horizon must be > 0");
    if (!(beta >= 0.0))
      throw InvalidArgument("model: beta must be >= 0");
    if (!(quad.h_quad >= 0.0))
      throw InvalidArgument("model: h_quad must be >= 0");
    const auto &r = reg;
    if (!(r.l2_h0 > 0 && r.lxx_h0_lo > 0 && r.lxx_h0_hi > 0 && r.l2_g > 0 && r.lxx_g_hi > 0 &&
          r.gamma_lo > 0 && r.gamma_hi > 0))
      throw InvalidArgument("model: regularity constants must be positive");
    if (r.lxx_h0_lo > r.lxx_h0_hi)
      throw InvalidArgument("model: lxx_h0_lo > lxx_h0_hi");
    if (!(r.gamma_lo < r.gamma_hi))
      throw InvalidArgument("model: gamma_lo must be < gamma_hi");
    if (!(r.la_bar >= 1.0))
      throw InvalidArgument("model: la_bar must be >= 1");
    if (g_family == Family::Custom && !(custom_g.g && custom_g.gx && custom_g.gxx && custom_g.gxmu))
      throw InvalidArgument("model: custom G family needs g, gx, gxx, gxmu");
    if (h0_family == Family::Custom &&
        !(custom_h0.h && custom_h0.hx && custom_h0.hp && custom_h0.hxx && custom_h0.hxp &&
          custom_h0.hpp && custom_h0.hxmu && custom_h0.hpmu))
      throw InvalidArgument("model: custom H0 family needs every derivative closure");
  }
};

struct GDerivs {
  double g, gx, gxx;
  std::function<double(double)> gxmu;
};

struct HDerivs {
  double h, hx, hp, hxx, hxp, hpx, hpp;
  std::function<double(double)> hxmu, hpmu;
};

inline GDerivs eval_g_derivs(const ModelSpec &model, double x, const EmpiricalMeasure &mu) {
  if (model.dim != 1)
    throw InvalidArgument("eval_g_derivs: dim must be 1");
  if (model.g_family == Family::Quadratic) {
    const auto &q = model.quad;
    const double m = mu.mean();
    const double g1 = q.g1;
    return {0.5 * q.g0 * x * x + q.g1 * x * m, q.g0 * x + q.g1 * m, q.g0,
            [g1](double) { return g1; }};
  }
  if (model.g_family == Family::Custom) {
    const auto &c = model.custom_g;
    auto gxmu = c.gxmu;
    return {c.g(x, mu), c.gx(x, mu), c.gxx(x, mu),
            [gxmu, x, mu](double xt) { return gxmu(x, mu, xt); }};
  }
  throw UnsupportedFamily("eval_g_derivs: unsupported family");
}

inline HDerivs eval_h_derivs(const ModelSpec &model, double x, const EmpiricalMeasure &mu, double p) {
  if (model.dim != 1)
    throw InvalidArgument("eval_h_derivs: dim must be 1");
  const double a0 = model.a0_scalar();
  if (model.h0_family == Family::Quadratic) {
    const auto &q = model.quad;
    const double m = mu.mean();
    const double hxmu = q.h_xmu;
    return {a0 * x * p + 0.5 * q.h_quad * p * p + q.h_xmu * x * m + 0.5 * q.h_xx * x * x,
            a0 * p + q.h_xmu * m + q.h_xx * x,
            a0 * x + q.h_quad * p,
            q.h_xx,
            a0,
            a0,
            q.h_quad,
            [hxmu](double) { return hxmu; },
            [](double) { return 0.0; }};
  }
  if (model.h0_family == Family::Custom) {
    const auto &c = model.custom_h0;
    auto hxmu = c.hxmu;
    auto hpmu = c.hpmu;
    const double hxp = a0 + c.hxp(x, mu, p);
    return {a0 * x * p + c.h(x, mu, p),
            a0 * p + c.hx(x, mu, p),
            a0 * x + c.hp(x, mu, p),
            c.hxx(x, mu, p),
            hxp,
            hxp,
            c.hpp(x, mu, p),
            [hxmu, x, mu, p](double xt) { return hxmu(x, mu, xt, p); },
            [hpmu, x, mu, p](double xt) { return hpmu(x, mu, xt, p); }};
  }
  throw UnsupportedFamily("eval_h_derivs: unsupported family");
}

/// Lift-gradient coordinate of f at one atom: central difference of the atom
/// location divided by step times the atom weight.
template <class F>
double lions_derivative_fd(F &&f, const EmpiricalMeasure &mu, std::size_t atom_index, double step = 1e-5) {
  if (!(step > 0.0))
    throw InvalidArgument("lions_derivative_fd: step must be > 0");
  if (atom_index >= mu.size())
    throw InvalidArgument("lions_derivative_fd: atom index out of range");
  std::vector<double> plus = mu.points(), minus = mu.points();
  plus[atom_index] += step;
  minus[atom_index] -= step;
  const EmpiricalMeasure mp = make_empirical(plus, mu.weights());
  const EmpiricalMeasure mm = make_empirical(minus, mu.weights());
  return (f(mp) - f(mm)) / (2.0 * step * mu.weights()[atom_index]);
}

} // namespace mfga
