#pragma once

#include <vector>

#include "mfga/models.hpp"
#include "mfga/solver/grid.hpp"

namespace mfga {

namespace detail {

inline EmpiricalMeasure measure_from_masses(const std::vector<double> &mass, const Grid &g) {
  std::vector<double> w(mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i)
    w[i] = std::max(0.0, mass[i]);
  return make_empirical(g.nodes(), w);
}

} // namespace detail

/// H(·, μ, ·) and its derivatives for one fixed measure.
class BoundH {
public:
  BoundH(const ModelSpec &model, const EmpiricalMeasure &mu) : model_(&model), mu_(mu), mean_(mu.mean()) {
    a0_ = model.a0_scalar();
  }

  BoundH(const ModelSpec &model, const std::vector<double> &mass, const Grid &g) : model_(&model) {
    a0_ = model.a0_scalar();
    double m = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i)
      m += mass[i] * g.x(i);
    mean_ = m;
    if (model.h0_family == Family::Custom)
      mu_ = detail::measure_from_masses(mass, g);
  }

  bool quadratic() const { return model_->h0_family == Family::Quadratic; }
  const EmpiricalMeasure &measure() const { return mu_; }
  double mean() const { return mean_; }

  double h(double x, double p) const {
    const auto &q = model_->quad;
    if (quadratic())
      return a0_ * x * p + 0.5 * q.h_quad * p * p + q.h_xmu * x * mean_ + 0.5 * q.h_xx * x * x;
    return a0_ * x * p + model_->custom_h0.h(x, mu_, p);
  }
  double hp(double x, double p) const {
    if (quadratic())
      return a0_ * x + model_->quad.h_quad * p;
    return a0_ * x + model_->custom_h0.hp(x, mu_, p);
  }
  double hx(double x, double p) const {
    const auto &q = model_->quad;
    if (quadratic())
      return a0_ * p + q.h_xmu * mean_ + q.h_xx * x;
    return a0_ * p + model_->custom_h0.hx(x, mu_, p);
  }
  double hpx(double x, double p) const {
    if (quadratic())
      return a0_;
    return a0_ + model_->custom_h0.hxp(x, mu_, p);
  }
  double hpp(double x, double p) const {
    if (quadratic())
      return model_->quad.h_quad;
    return model_->custom_h0.hpp(x, mu_, p);
  }
  double hpmu(double x, double xt, double p) const {
    if (quadratic())
      return 0.0;
    return model_->custom_h0.hpmu(x, mu_, xt, p);
  }

private:
  const ModelSpec *model_;
  EmpiricalMeasure mu_;
  double mean_ = 0.0;
  double a0_ = 0.0;
};

/// G(·, μ) for one fixed measure.
class BoundG {
public:
  BoundG(const ModelSpec &model, const std::vector<double> &mass, const Grid &g) : model_(&model) {
    double m = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i)
      m += mass[i] * g.x(i);
    mean_ = m;
    if (model.g_family == Family::Custom)
      mu_ = detail::measure_from_masses(mass, g);
  }

  double g(double x) const {
    if (model_->g_family == Family::Quadratic)
      return 0.5 * model_->quad.g0 * x * x + model_->quad.g1 * x * mean_;
    return model_->custom_g.g(x, mu_);
  }
  double gx(double x) const {
    if (model_->g_family == Family::Quadratic)
      return model_->quad.g0 * x + model_->quad.g1 * mean_;
    return model_->custom_g.gx(x, mu_);
  }

private:
  const ModelSpec *model_;
  EmpiricalMeasure mu_;
  double mean_ = 0.0;
};

} // namespace mfga
