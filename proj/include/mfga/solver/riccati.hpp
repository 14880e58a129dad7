#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "mfga/errors.hpp"
#include "mfga/models.hpp"

namespace mfga {

/// Coefficients of the ansatz ∂ₓV(t, x, μ) = P_t·x + Q_t·m(μ) for the Quadratic family,
/// with the mean flow m_t of the equilibrium started from m₀.
///
///   Ṗ = 2a₀P + h_quad·P² + h_xx,              P_T = g₀
///   Q̇ = 2(a₀ + h_quad·P)Q + h_quad·Q² + h_xmu, Q_T = g₁
///   ṁ = −(a₀ + h_quad(P + Q))·m
class RiccatiSolution {
public:
  RiccatiSolution() = default;
  RiccatiSolution(std::vector<double> t, std::vector<double> p, std::vector<double> q, QuadraticParams params,
                  double a0)
      : t_(std::move(t)), p_(std::move(p)), q_(std::move(q)), params_(params), a0_(a0) {}

  const std::vector<double> &t_grid() const { return t_; }
  const std::vector<double> &p_nodes() const { return p_; }
  const std::vector<double> &q_nodes() const { return q_; }
  const QuadraticParams &params() const { return params_; }
  double a0() const { return a0_; }
  double t0() const { return t_.front(); }
  double horizon() const { return t_.back(); }
  double dt() const { return t_.size() > 1 ? t_[1] - t_[0] : 0.0; }

  double p_curve(double t) const { return interp(p_, t); }
  double q_curve(double t) const { return interp(q_, t); }

  /// Time derivatives at the nearest node from fourth-order finite differences.
  double p_dot(double t) const { return node_derivative(p_, t); }
  double q_dot(double t) const { return node_derivative(q_, t); }

  /// Mean flow started from m at t₀ (RK4 on the node grid).
  std::vector<double> mean_flow(double m) const {
    std::vector<double> out(t_.size());
    out[0] = m;
    const double hq = params_.h_quad;
    auto f = [&](double pv, double qv, double mv) { return -(a0_ + hq * (pv + qv)) * mv; };
    for (std::size_t k = 0; k + 1 < t_.size(); ++k) {
      const double h = t_[k + 1] - t_[k];
      const double pm = 0.5 * (p_[k] + p_[k + 1]), qm = 0.5 * (q_[k] + q_[k + 1]);
      const double pmid = mid(p_, k, pm), qmid = mid(q_, k, qm);
      const double k1 = f(p_[k], q_[k], out[k]);
      const double k2 = f(pmid, qmid, out[k] + 0.5 * h * k1);
      const double k3 = f(pmid, qmid, out[k] + 0.5 * h * k2);
      const double k4 = f(p_[k + 1], q_[k + 1], out[k] + h * k3);
      out[k + 1] = out[k] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return out;
  }

  double mean_at(double m0, double t) const { return interp(mean_flow(m0), t); }

  std::size_t node(double t) const {
    if (t_.size() < 2)
      return 0;
    const double s = std::round((t - t_.front()) / dt());
    return static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(t_.size() - 1)));
  }

private:
  std::vector<double> t_, p_, q_;
  QuadraticParams params_;
  double a0_ = 0.0;

  double interp(const std::vector<double> &v, double t) const {
    if (t < t_.front() - 1e-12 || t > t_.back() + 1e-12)
      throw InvalidArgument("RiccatiSolution: time outside [t0, T]");
    if (v.size() == 1)
      return v[0];
    const double s = std::clamp((t - t_.front()) / dt(), 0.0, static_cast<double>(v.size() - 1));
    long i = static_cast<long>(std::floor(s)) - 1;
    i = std::clamp(i, 0L, static_cast<long>(v.size()) - 4);
    if (v.size() < 4) {
      const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(s), v.size() - 2);
      const double r = s - static_cast<double>(j);
      return (1 - r) * v[j] + r * v[j + 1];
    }
    const double r = s - static_cast<double>(i);
    const double l0 = -(r - 1) * (r - 2) * (r - 3) / 6.0;
    const double l1 = r * (r - 2) * (r - 3) / 2.0;
    const double l2 = -r * (r - 1) * (r - 3) / 2.0;
    const double l3 = r * (r - 1) * (r - 2) / 6.0;
    return l0 * v[i] + l1 * v[i + 1] + l2 * v[i + 2] + l3 * v[i + 3];
  }

  static double mid(const std::vector<double> &v, std::size_t k, double fallback) {
    if (k == 0 || k + 2 >= v.size())
      return fallback;
    return (-v[k - 1] + 9.0 * v[k] + 9.0 * v[k + 1] - v[k + 2]) / 16.0;
  }

  double node_derivative(const std::vector<double> &v, double t) const {
    const std::size_t n = v.size();
    if (n < 5)
      throw InvalidArgument("RiccatiSolution: too few nodes for a derivative");
    const std::size_t k = node(t);
    const double h = dt();
    if (k >= 2 && k + 2 < n)
      return (v[k - 2] - 8.0 * v[k - 1] + 8.0 * v[k + 1] - v[k + 2]) / (12.0 * h);
    if (k < 2)
      return (-25.0 * v[k] + 48.0 * v[k + 1] - 36.0 * v[k + 2] + 16.0 * v[k + 3] - 3.0 * v[k + 4]) / (12.0 * h);
    return (25.0 * v[k] - 48.0 * v[k - 1] + 36.0 * v[k - 2] - 16.0 * v[k - 3] + 3.0 * v[k - 4]) / (12.0 * h);
  }
};

/// Integrates the P/Q system backward from T to t₀ with classical RK4.
inline RiccatiSolution riccati_oracle(const ModelSpec &model, int t_steps = 4096, double t0 = 0.0,
                                      double blowup = 1e8) {
  if (model.h0_family != Family::Quadratic || model.g_family != Family::Quadratic)
    throw UnsupportedFamily("riccati_oracle: Quadratic families required");
  if (model.dim != 1)
    throw InvalidArgument("riccati_oracle: dim must be 1");
  if (model.beta != 0.0)
    throw UnsupportedFamily("riccati_oracle: beta must be 0");
  if (t_steps < 4)
    throw InvalidArgument("riccati_oracle: t_steps must be >= 4");
  if (!(t0 >= 0.0 && t0 < model.horizon))
    throw InvalidArgument("riccati_oracle: t0 outside [0, T)");
  const QuadraticParams q = model.quad;
  const double a0 = model.a0_scalar();
  const double T = model.horizon;
  const std::size_t n = static_cast<std::size_t>(t_steps);
  const double h = (T - t0) / static_cast<double>(n);
  std::vector<double> t(n + 1), P(n + 1), Q(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    t[k] = t0 + h * static_cast<double>(k);
  t[n] = T;
  auto rhs = [&](const std::array<double, 2> &y) {
    return std::array<double, 2>{2.0 * a0 * y[0] + q.h_quad * y[0] * y[0] + q.h_xx,
                                 2.0 * (a0 + q.h_quad * y[0]) * y[1] + q.h_quad * y[1] * y[1] + q.h_xmu};
  };
  std::array<double, 2> y{q.g0, q.g1};
  P[n] = y[0];
  Q[n] = y[1];
  const double s = -h;
  for (std::size_t k = n; k-- > 0;) {
    auto add = [](const std::array<double, 2> &a, const std::array<double, 2> &b, double c) {
      return std::array<double, 2>{a[0] + c * b[0], a[1] + c * b[1]};
    };
    const auto k1 = rhs(y);
    const auto k2 = rhs(add(y, k1, 0.5 * s));
    const auto k3 = rhs(add(y, k2, 0.5 * s));
    const auto k4 = rhs(add(y, k3, s));
    for (int j = 0; j < 2; ++j)
      y[j] += s / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || std::abs(y[0]) > blowup || std::abs(y[1]) > blowup)
      throw BlowUp(t[k]);
    P[k] = y[0];
    Q[k] = y[1];
  }
  return RiccatiSolution(std::move(t), std::move(P), std::move(Q), q, a0);
}

} // namespace mfga
