#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "mfga/errors.hpp"
#include "mfga/models.hpp"
#include "mfga/monotonicity.hpp"

namespace mfga {

struct SpectralReport {
  double kappa_lo;    ///< smallest eigenvalue of the symmetric part
  double kappa_hi;    ///< largest eigenvalue of the symmetric part
  double kappa_prime; ///< smallest real part of the eigenvalues
  double opnorm;      ///< largest singular value
};

inline SpectralReport spectral(const Eigen::MatrixXd &A) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw InvalidArgument("spectral: matrix must be square and nonempty");
  const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(S, Eigen::EigenvaluesOnly);
  Eigen::EigenSolver<Eigen::MatrixXd> full(A, false);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return {sym.eigenvalues().minCoeff(), sym.eigenvalues().maxCoeff(),
          full.eigenvalues().real().minCoeff(), svd.singularValues()(0)};
}

inline double opnorm(const Eigen::MatrixXd &A) {
  if (A.size() == 0)
    return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()(0);
}

inline bool is_symmetric(const Eigen::MatrixXd &A) {
  return (A - A.transpose()).norm() <= 1e-13 * std::max(1.0, A.norm());
}

/// How the bound on L^{A₀} was obtained.
enum class La0Method { Symmetric, Eigenvectors, ScaledSchur, SymmetricPartFallback, None };

inline const char *la0_method_name(La0Method m) {
  switch (m) {
  case La0Method::Symmetric:
    return "symmetric";
  case La0Method::Eigenvectors:
    return "eigenvectors";
  case La0Method::ScaledSchur:
    return "scaled_schur";
  case La0Method::SymmetricPartFallback:
    return "symmetric_part_fallback";
  default:
    return "none";
  }
}

struct ExpDecayBound {
  double la0_upper;
  int violations;
  La0Method method;
  bool warning;
  double kappa_prime;
};

namespace detail {

inline double condition_squared(const Eigen::MatrixXcd &Q) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Q);
  const auto &s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0))
    return std::numeric_limits<double>::infinity();
  const double c = s(0) / smin;
  return c * c;
}

/// ⎺κ(QQ̄ᵀ)/⎽κ(QQ̄ᵀ) for the unit-column eigenvector matrix, or +inf when the
/// eigenvectors are numerically dependent.
inline double eigenvector_bound(const Eigen::MatrixXd &A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, true);
  if (es.info() != Eigen::Success)
    return std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd V = es.eigenvectors();
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    const double n = V.col(j).norm();
    if (!(n > 0.0))
      return std::numeric_limits<double>::infinity();
    V.col(j) /= n;
  }
  const double c2 = condition_squared(V);
  return c2 < 1e16 ? c2 : std::numeric_limits<double>::infinity();
}

/// Complex Schur form A = U T Uᴴ rescaled by D = diag(1, δ, δ², …) so that the
/// strictly upper part of D⁻¹TD has spectral norm at most one; then
/// |e^{−At}| ≤ cond(D)·e^{(1−⎽κ′)t} by the logarithmic-norm estimate, which is
/// the Jordan-form argument with a triangular canonical form.
inline double scaled_schur_bound(const Eigen::MatrixXd &A) {
  const Eigen::Index n = A.rows();
  if (n == 1)
    return 1.0;
  Eigen::ComplexSchur<Eigen::MatrixXd> cs(A);
  if (cs.info() != Eigen::Success)
    return std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd N = cs.matrixT().triangularView<Eigen::StrictlyUpper>();
  const double nf = N.norm();
  if (nf <= 1.0)
    return 1.0;
  const double delta = 1.0 / nf;
  return std::pow(delta, -2.0 * static_cast<double>(n - 1));
}

} // namespace detail

/// Upper bound on L^{A₀} plus a grid verification of
/// |e^{−A₀t}| ≤ √L·e^{(1−⎽κ′)t} (and e^{−⎽κ′t} for symmetric A₀).
inline ExpDecayBound exp_decay_bound(const Eigen::MatrixXd &A0, const std::vector<double> &t_grid) {
  if (A0.rows() != A0.cols() || A0.rows() == 0)
    throw InvalidArgument("exp_decay_bound: matrix must be square and nonempty");
  for (double t : t_grid)
    if (!(t >= 0.0))
      throw InvalidArgument("exp_decay_bound: negative time in grid");
  const SpectralReport sp = spectral(A0);
  ExpDecayBound out{1.0, 0, La0Method::Symmetric, false, sp.kappa_prime};
  const bool sym = is_symmetric(A0);
  if (!sym) {
    const double ev = detail::eigenvector_bound(A0);
    const double sc = detail::scaled_schur_bound(A0);
    if (std::isfinite(ev) && ev < 1e12 && ev <= sc) {
      out.la0_upper = ev;
      out.method = La0Method::Eigenvectors;
    } else if (std::isfinite(sc)) {
      out.la0_upper = sc;
      out.method = La0Method::ScaledSchur;
      out.warning = !std::isfinite(ev) || ev >= 1e12;
    } else if (sp.kappa_lo >= sp.kappa_prime - 1.0) {
      out.la0_upper = 1.0;
      out.method = La0Method::SymmetricPartFallback;
      out.warning = true;
    } else {
      out.la0_upper = std::numeric_limits<double>::infinity();
      out.method = La0Method::None;
      out.warning = true;
    }
  }
  const double root = std::sqrt(out.la0_upper);
  for (double t : t_grid) {
    const Eigen::MatrixXd E = (-A0 * t).exp();
    const double lhs = opnorm(E);
    const double rhs = sym ? std::exp(-sp.kappa_prime * t) : root * std::exp((1.0 - sp.kappa_prime) * t);
    if (lhs > rhs * (1.0 + 1e-9))
      ++out.violations;
  }
  return out;
}

inline double theta1_value(const VecLambda &lam, double gamma_hi, double gamma_lo, double lvxx) {
  return gamma_hi * (1.0 + lvxx) / std::sqrt(4.0 * (gamma_lo * lam.l0 + 2.0 * lam.l3));
}

/// Right-hand side of the companion inequality λ₀ > (⎺γ²(1+L^V_xx)² − 8λ₃)/(4⎽γ).
inline double lambda0_threshold(const VecLambda &lam, double gamma_lo, double gamma_hi, double lvxx) {
  return (gamma_hi * gamma_hi * (1.0 + lvxx) * (1.0 + lvxx) - 8.0 * lam.l3) / (4.0 * gamma_lo);
}

inline double theta1(const VecLambda &lam, double gamma_lo, double gamma_hi, double lvxx) {
  if (!(gamma_lo > 0.0 && gamma_lo < gamma_hi))
    throw InvalidArgument("theta1: need 0 < gamma_lo < gamma_hi");
  const double th = theta1_value(lam, gamma_hi, gamma_lo, lvxx);
  if (!(th < 1.0))
    throw Theta1NotLessThanOne(th);
  return th;
}

struct ConditionMatrices {
  Eigen::Matrix3d a1;
  Eigen::Matrix3d a2;
  double theta1;
};

inline ConditionMatrices condition_matrices(const VecLambda &lam, double theta1, double gamma_lo, double lvxx) {
  if (!(theta1 < 1.0))
    throw Theta1NotLessThanOne(theta1);
  const double l0 = lam.l0, l1 = lam.l1, l2 = lam.l2, l3 = lam.l3;
  ConditionMatrices c;
  c.theta1 = theta1;
  c.a1.setZero();
  c.a1(0, 0) = 4.0 * (1.0 - theta1);
  c.a1(1, 1) = 2.0 * l2;
  c.a1(2, 2) = (1.0 - theta1) * (l0 * gamma_lo + 2.0 * l3);
  const double e02 = std::abs(l0 - 0.5 * l1) + l3;
  const double e12 = 0.5 * std::abs(l1) + l2 + l3;
  Eigen::Matrix3d base;
  base << l0, l0, e02, l0, std::abs(l1), e12, e02, e12, std::abs(l1) + 2.0 * l3;
  Eigen::Matrix3d extra;
  extra << 0.0, 1.0, 1.0, 1.0, l2, l2, 1.0, l2, 0.0;
  c.a2 = base + lvxx * extra;
  return c;
}

struct XpThreshold {
  double kappa_ratio;    ///< ⎽κ(A₁⁻¹A₂) on the symmetric part
  bool stated_condition; ///< ⎽L_xp ≥ ⎽κ(A₁⁻¹A₂)·L₂
  bool psd_condition;    ///< A₁⎽L_xp − A₂L₂ ⪰ 0
  double psd_min_eig;    ///< smallest eigenvalue of A₁⎽L_xp − A₂L₂
  double psd_threshold;  ///< smallest ⎽L_xp making the PSD form hold
};

inline XpThreshold xp_threshold(const ConditionMatrices &c, double l2h, double lxp_lo, double tol = 1e-9) {
  const Eigen::Vector3d d = c.a1.diagonal();
  const bool diagonal = (c.a1 - Eigen::Matrix3d(d.asDiagonal())).norm() == 0.0;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(c.a1);
  if (!lu.isInvertible())
    throw SingularMatrix("xp_threshold: A1 is singular");
  const Eigen::Matrix3d R = lu.inverse() * c.a2;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> sym(0.5 * (R + R.transpose()), Eigen::EigenvaluesOnly);
  XpThreshold out{};
  out.kappa_ratio = sym.eigenvalues().minCoeff();
  out.stated_condition = lxp_lo - out.kappa_ratio * l2h >= -tol;
  const Eigen::Matrix3d M = c.a1 * lxp_lo - c.a2 * l2h;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> psd(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  out.psd_min_eig = psd.eigenvalues().minCoeff();
  out.psd_condition = out.psd_min_eig >= -tol;
  if (diagonal && (d.array() > 0.0).all()) {
    const Eigen::Vector3d s = d.array().rsqrt();
    const Eigen::Matrix3d W = s.asDiagonal() * c.a2 * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> g(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
    out.psd_threshold = std::max(0.0, l2h * g.eigenvalues().maxCoeff());
  } else {
    out.psd_threshold = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

/// θ₃ and the curve L^u_xx(θ) for θ ≥ θ₃.
class Theta3Lxx {
public:
  Theta3Lxx(double l2h0, double la_bar, double lxxg_hi) : l2_(l2h0), la_(la_bar), lg_(lxxg_hi) {
    if (!(l2h0 > 0.0 && lxxg_hi > 0.0))
      throw InvalidArgument("theta3_lxx: inputs must be positive");
    if (!(la_bar >= 1.0))
      throw InvalidArgument("theta3_lxx: la_bar must be >= 1");
    const double c = lg_ * la_;
    root_ = std::sqrt((1.0 + c) * (1.0 + c) - 1.0);
    theta3_ = 1.0 + l2_ * la_ * (1.0 + c + root_);
    lvxx_ = c + root_;
  }

  double theta3() const { return theta3_; }
  double lvxx() const { return lvxx_; }

  /// (θ−1−L₂⎺L^A)² − 2L₂⎺L^G_xx(⎺L^A)²(θ−1), evaluated in factored form.
  double discriminant(double theta) const {
    const double b = theta - 1.0 - l2_ * la_;
    const double r = std::sqrt(2.0 * l2_ * lg_ * la_ * la_ * (theta - 1.0));
    return (b - r) * (b + r);
  }

  double operator()(double theta) const {
    if (theta < theta3_ * (1.0 - 1e-14))
      throw DomainError("L^u_xx: theta below theta3");
    if (theta <= theta3_)
      return lvxx_;
    const double b = theta - 1.0 - l2_ * la_;
    const double disc = std::max(0.0, discriminant(theta));
    return 2.0 * lg_ * la_ * (theta - 1.0) / (b + std::sqrt(disc));
  }

private:
  double l2_, la_, lg_;
  double root_, theta3_, lvxx_;
};

inline Theta3Lxx theta3_lxx(double l2h0, double la_bar, double lxxg_hi) { return {l2h0, la_bar, lxxg_hi}; }

struct DerivedHBounds {
  double lxp_lo, lxp_hi, lxx_lo, lxx_hi, l2;
};

inline DerivedHBounds derived_h_bounds(const Eigen::MatrixXd &A0, double l2h0, double lxx_lo = 0.0,
                                       double lxx_hi = 0.0) {
  const SpectralReport s = spectral(A0);
  return {s.kappa_lo - l2h0, s.opnorm + l2h0, lxx_lo, lxx_hi, l2h0};
}

struct Check {
  std::string name;
  bool pass;
  double margin;
  double lhs;
  double rhs;
  bool binding = true;
};

struct ConstantLedger {
  SpectralReport spectral{};
  double la0_bound = 1.0;
  La0Method la0_method = La0Method::Symmetric;
  bool la0_warning = false;
  int la0_violations = 0;
  double theta1 = std::numeric_limits<double>::quiet_NaN();
  double theta2 = 0.0;
  double theta3 = 0.0;
  double lxx_u_theta3 = 0.0;
  double lambda0 = 0.0;
  bool has_cond = false;
  ConditionMatrices cond{};
  double kappa_ratio = std::numeric_limits<double>::quiet_NaN();
  XpThreshold xp{};
  DerivedHBounds derived_h{};
  std::vector<Check> checks;

  bool passed() const {
    for (const auto &c : checks)
      if (c.binding && !c.pass)
        return false;
    return true;
  }

  const Check *find(const std::string &name) const {
    for (const auto &c : checks)
      if (c.name == name)
        return &c;
    return nullptr;
  }

  std::vector<std::string> failing() const {
    std::vector<std::string> out;
    for (const auto &c : checks)
      if (c.binding && !c.pass)
        out.push_back(c.name);
    return out;
  }
};

inline constexpr double kMarginTol = 1e-9;

namespace detail {

/// lhs ≥ rhs (or lhs > rhs when strict); margin = lhs − rhs.
inline Check make_check(std::string name, double lhs, double rhs, bool strict = false, bool binding = true) {
  const double margin = lhs - rhs;
  const bool pass = std::isfinite(margin) && (strict ? margin > 0.0 : margin >= -kMarginTol);
  return {std::move(name), pass, margin, lhs, rhs, binding};
}

inline std::vector<double> default_t_grid() {
  std::vector<double> t;
  for (int k = 0; k <= 400; ++k)
    t.push_back(0.05 * k);
  return t;
}

} // namespace detail

/// Full constant ledger of the well-posedness conditions for the given model and λ⃗.
inline ConstantLedger certify_wellposedness(const ModelSpec &model, const VecLambda &lam,
                                            std::uint64_t seed = 0) {
  model.validate();
  using detail::make_check;
  const auto &r = model.reg;
  ConstantLedger L;
  L.lambda0 = lam.l0;
  L.spectral = spectral(model.a0);
  const auto eb = exp_decay_bound(model.a0, detail::default_t_grid());
  L.la0_bound = eb.la0_upper;
  L.la0_method = eb.method;
  L.la0_warning = eb.warning;
  L.la0_violations = eb.violations;

  const Theta3Lxx curve(r.l2_h0, r.la_bar, r.lxx_g_hi);
  L.theta3 = curve.theta3();
  L.lxx_u_theta3 = curve.lvxx();
  L.theta2 = std::max(L.theta3, r.lxx_h0_hi / (2.0 * r.lxx_g_hi) + 1.0);
  L.derived_h = derived_h_bounds(model.a0, r.l2_h0, r.lxx_h0_lo, r.lxx_h0_hi);
  const double kap = L.spectral.kappa_lo, kp = L.spectral.kappa_prime, l2 = r.l2_h0;

  // Curvature constants and λ₀.
  L.checks.push_back(make_check("gamma.lo_le_lxx_g", r.lxx_g_hi, r.gamma_lo));
  L.checks.push_back(make_check("gamma.hi_gt_one", r.gamma_hi, 1.0, true));
  L.checks.push_back(make_check("lambda0.threshold", lam.l0,
                                lambda0_threshold(lam, r.gamma_lo, r.gamma_hi, L.lxx_u_theta3), true));

  // Spectrum of A₀.
  L.checks.push_back(make_check("a0.la_bound", r.la_bar, L.la0_bound));
  const double th1 = theta1_value(lam, r.gamma_hi, r.gamma_lo, L.lxx_u_theta3);
  L.theta1 = th1;
  if (th1 < 1.0) {
    L.cond = condition_matrices(lam, th1, r.gamma_lo, L.lxx_u_theta3);
    L.has_cond = true;
    L.xp = xp_threshold(L.cond, l2, L.derived_h.lxp_lo);
    L.kappa_ratio = L.xp.kappa_ratio;
    L.checks.push_back(make_check("a0.xp_threshold", kap, (1.0 + L.kappa_ratio) * l2));
  } else {
    L.checks.push_back({"a0.xp_threshold", false, -std::numeric_limits<double>::infinity(), kap,
                        std::numeric_limits<double>::infinity(), true});
  }
  L.checks.push_back(make_check("a0.kappa_prime_theta3", kp, L.theta3));
  L.checks.push_back(make_check("a0.gamma_sandwich", r.gamma_hi * (kap - l2), L.spectral.opnorm + l2));

  // Sandwich for the x-curvature of H₀.
  L.checks.push_back(make_check("h0xx.lower", r.lxx_h0_lo, r.gamma_lo * (kap - l2)));
  L.checks.push_back(make_check("h0xx.order", r.lxx_h0_hi, r.lxx_h0_lo));
  L.checks.push_back(make_check("h0xx.upper_gamma", r.gamma_hi * (kap - l2), r.lxx_h0_hi));
  L.checks.push_back(make_check("h0xx.upper_g", 2.0 * r.lxx_g_hi * (kp - 1.0), r.lxx_h0_hi));

  // Consequences and companions.
  L.checks.push_back(make_check("h.lxp_lo_positive", L.derived_h.lxp_lo, 0.0, true));
  L.checks.push_back(make_check("a0.exp_decay_grid", 0.0, static_cast<double>(eb.violations)));
  L.checks.push_back(make_check("hessian.theta2", kp, L.theta2));

  // Terminal cost anti-monotonicity.
  if (model.g_family == Family::Quadratic) {
    const double c1 = lam.l0 * model.quad.g0 + model.quad.g0 * model.quad.g0;
    const double c2 = c1 + lam.l1 * model.quad.g1 + lam.l2 * model.quad.g1 * model.quad.g1;
    L.checks.push_back(make_check("G.anti_monotone", lam.l3, std::max(c1, c2)));
  } else {
    const auto est = mc_certify(terminal_field(model), lam, derive_seed(seed, "certify.G"), 256, 16);
    L.checks.push_back({"G.anti_monotone", est.verdict == Verdict::Holds, -est.value, 0.0, est.value, true});
  }

  // Data consistency of the Quadratic families with the declared constants.
  if (model.dim == 1 && model.h0_family == Family::Quadratic) {
    const auto &q = model.quad;
    L.checks.push_back(make_check("model.h_xx_ge_lo", q.h_xx, r.lxx_h0_lo));
    L.checks.push_back(make_check("model.h_xx_le_hi", r.lxx_h0_hi, q.h_xx));
    L.checks.push_back(make_check("model.h_quad_le_l2", l2, q.h_quad));
    L.checks.push_back(make_check("model.h_xmu_le_l2", l2, std::abs(q.h_xmu)));
  }
  if (model.dim == 1 && model.g_family == Family::Quadratic) {
    L.checks.push_back(make_check("model.g0_le_lxx_g", r.lxx_g_hi, std::abs(model.quad.g0)));
    L.checks.push_back(make_check("model.g1_le_l2_g", r.l2_g, std::abs(model.quad.g1)));
  }

  // The quadratic form the propagation argument closes with; reported, not binding.
  if (L.has_cond) {
    L.checks.push_back({"propagation.psd_form", L.xp.psd_condition, L.xp.psd_min_eig, L.derived_h.lxp_lo,
                        L.xp.psd_threshold, false});
  } else {
    L.checks.push_back({"propagation.psd_form", false, -std::numeric_limits<double>::infinity(), L.derived_h.lxp_lo,
                        std::numeric_limits<double>::infinity(), false});
  }
  return L;
}

struct Example72Options {
  double m0_start = 2.0;
  int max_doublings = 60;
  double horizon = 0.5;
};

struct Example72Result {
  double m0;
  double lambda0;
  ModelSpec model;
  VecLambda lam;
  ConstantLedger ledger;
};

class ConstructionFailed : public Error {
public:
  ConstructionFailed(const std::string &what, ConstantLedger last) : Error(what), ledger(std::move(last)) {}
  ConstantLedger ledger;
};

/// Concrete Quadratic-family model of the constructive example for a given M₀.
inline Example72Result example72_at(double m0, double alpha_lo, double alpha_hi, double gamma_lo, double gamma_hi,
                                    double l1, double l2, double l3, double l2g, double l2h0, double horizon) {
  const double a0 = m0 * m0 * m0;
  ModelSpec m;
  m.dim = 1;
  m.a0 = Eigen::MatrixXd::Constant(1, 1, a0);
  m.horizon = horizon;
  m.quad.g0 = -alpha_lo * m0;
  m.quad.g1 = -std::min(l2g, alpha_lo * m0);
  m.quad.h_quad = std::min(1.0, l2h0);
  m.quad.h_xmu = 0.5 * l2h0;
  m.quad.h_xx = 0.5 * (gamma_lo + gamma_hi) * (a0 - l2h0);
  m.reg.l2_h0 = l2h0;
  m.reg.lxx_h0_lo = gamma_lo * (a0 - l2h0);
  m.reg.lxx_h0_hi = gamma_hi * (a0 - l2h0);
  m.reg.l2_g = l2g;
  m.reg.lxx_g_hi = alpha_hi * m0;
  m.reg.gamma_lo = gamma_lo;
  m.reg.gamma_hi = gamma_hi;
  m.reg.la_bar = 1.0;
  const double lvxx = Theta3Lxx(l2h0, 1.0, alpha_hi * m0).lvxx();
  const double lambda0 = (gamma_hi * gamma_hi * (1.0 + lvxx) * (1.0 + lvxx) - 8.0 * l3) / (4.0 * gamma_lo) + 1.0;
  VecLambda lam(lambda0, l1, l2, l3);
  return {m0, lambda0, m, lam, certify_wellposedness(m, lam)};
}

/// Doubling search for the smallest M₀ whose ledger passes.
inline Example72Result construct_example72(double alpha_lo, double alpha_hi, double gamma_lo, double gamma_hi,
                                           double l1, double l2, double l3, double l2g, double l2h0,
                                           const Example72Options &opt = {}) {
  if (!(alpha_lo > 0.0 && alpha_lo <= alpha_hi))
    throw InvalidArgument("construct_example72: need 0 < alpha_lo <= alpha_hi");
  if (!(gamma_lo > 0.0 && gamma_lo < gamma_hi && gamma_hi > 1.0))
    throw InvalidArgument("construct_example72: need 0 < gamma_lo < gamma_hi and gamma_hi > 1");
  if (!(l2g > 0.0 && l2h0 > 0.0))
    throw InvalidArgument("construct_example72: L2 constants must be positive");
  VecLambda(1.0, l1, l2, l3); // D4 admissibility of (λ₁, λ₂, λ₃)
  double m0 = opt.m0_start;
  ConstantLedger last;
  for (int k = 0; k <= opt.max_doublings; ++k, m0 *= 2.0) {
    if (m0 * m0 * m0 <= l2h0)
      continue;
    auto res = example72_at(m0, alpha_lo, alpha_hi, gamma_lo, gamma_hi, l1, l2, l3, l2g, l2h0, opt.horizon);
    if (res.ledger.passed())
      return res;
    last = res.ledger;
  }
  throw ConstructionFailed("construct_example72: search exhausted", last);
}

} // namespace mfga
