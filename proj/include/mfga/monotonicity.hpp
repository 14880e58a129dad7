#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <future>
#include <random>
#include <string>
#include <vector>

#include "mfga/errors.hpp"
#include "mfga/measures.hpp"
#include "mfga/models.hpp"
#include "mfga/seeds.hpp"

namespace mfga {

/// λ⃗ restricted to D₄: λ₀ > 0, λ₂ > 0, λ₃ ≥ 0.
struct VecLambda {
  double l0, l1, l2, l3;

  VecLambda(double l0_, double l1_, double l2_, double l3_) : l0(l0_), l1(l1_), l2(l2_), l3(l3_) {
    if (!(std::isfinite(l0) && std::isfinite(l1) && std::isfinite(l2) && std::isfinite(l3)))
      throw D4Violation("lambda: non-finite component");
    if (!(l0 > 0.0))
      throw D4Violation("lambda: D4 requires lambda0 > 0");
    if (!(l2 > 0.0))
      throw D4Violation("lambda: D4 requires lambda2 > 0");
    if (!(l3 >= 0.0))
      throw D4Violation("lambda: D4 requires lambda3 >= 0");
  }
};

/// Field values at the atoms of ξ: dxx_i = ∂ₓₓU(ξᵢ) and
/// k_i = Σⱼ wⱼ ∂ₓμU(ξᵢ, ξⱼ) ηⱼ, plus an absolute noise level of the evaluation.
struct FieldEval {
  std::vector<double> dxx;
  std::vector<double> k;
  double noise = 0.0;
  /// Optional per-atom absolute uncertainties of dxx and k.
  std::vector<double> dxx_err;
  std::vector<double> k_err;
};

struct FieldDerivs {
  std::function<double(double, const EmpiricalMeasure &)> dxx;
  std::function<double(double, const EmpiricalMeasure &, double)> dxmu;
  /// Optional batched evaluation; used instead of the pointwise closures when set.
  std::function<FieldEval(const EmpiricalMeasure &, const std::vector<double> &)> evaluate;
  /// Noise per unit 𝔼|η|² for the pointwise closures.
  double noise = 0.0;
};

inline FieldEval evaluate_field(const FieldDerivs &F, const EmpiricalMeasure &xi,
                                const std::vector<double> &eta) {
  if (eta.size() != xi.size())
    throw InvalidArgument("eta length differs from the atom count of xi");
  if (F.evaluate)
    return F.evaluate(xi, eta);
  const auto &x = xi.points();
  const auto &w = xi.weights();
  const std::size_t n = x.size();
  FieldEval out;
  out.dxx.resize(n);
  out.k.assign(n, 0.0);
  double e2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.dxx[i] = F.dxx(x[i], xi);
    for (std::size_t j = 0; j < n; ++j)
      out.k[i] += w[j] * F.dxmu(x[i], xi, x[j]) * eta[j];
    e2 += w[i] * eta[i] * eta[i];
  }
  out.noise = F.noise * e2;
  return out;
}

/// Constant field ∂ₓₓU = a₀, ∂ₓμU = a₁.
inline FieldDerivs example38_field(double a0, double a1) {
  FieldDerivs F;
  F.dxx = [a0](double, const EmpiricalMeasure &) { return a0; };
  F.dxmu = [a1](double, const EmpiricalMeasure &, double) { return a1; };
  return F;
}

/// Terminal cost viewed as a field.
inline FieldDerivs terminal_field(const ModelSpec &model) {
  FieldDerivs F;
  F.dxx = [model](double x, const EmpiricalMeasure &mu) { return eval_g_derivs(model, x, mu).gxx; };
  F.dxmu = [model](double x, const EmpiricalMeasure &mu, double xt) {
    return eval_g_derivs(model, x, mu).gxmu(xt);
  };
  return F;
}

enum class MonotonicityTest { Anti, LasryLions, Displacement };

namespace detail {

struct Terms {
  double value;
  double magnitude; // sum of absolute contributions, for the roundoff floor
};

inline Terms antimono_terms(const FieldEval &e, const VecLambda &lam, const EmpiricalMeasure &xi,
                            const std::vector<double> &eta) {
  const auto &w = xi.weights();
  double v = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = e.dxx[i], k = e.k[i], h = eta[i];
    const double t0 = lam.l0 * d * h * h, t1 = lam.l1 * k * h, t2 = d * d * h * h,
                 t3 = lam.l2 * k * k, t4 = lam.l3 * h * h;
    v += w[i] * (t0 + t1 + t2 + t3 - t4);
    mag += w[i] * (std::abs(t0) + std::abs(t1) + t2 + t3 + t4);
  }
  return {v, mag};
}

inline Terms lasry_lions_terms(const FieldEval &e, const EmpiricalMeasure &xi, const std::vector<double> &eta) {
  const auto &w = xi.weights();
  double v = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    v += w[i] * e.k[i] * eta[i];
    mag += w[i] * std::abs(e.k[i] * eta[i]);
  }
  return {v, mag};
}

inline Terms displacement_terms(const FieldEval &e, const EmpiricalMeasure &xi, const std::vector<double> &eta,
                                double semi_lambda) {
  const auto &w = xi.weights();
  double v = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = e.k[i] * eta[i], b = e.dxx[i] * eta[i] * eta[i], c = semi_lambda * eta[i] * eta[i];
    v += w[i] * (a + b - c);
    mag += w[i] * (std::abs(a) + std::abs(b) + std::abs(c));
  }
  return {v, mag};
}

/// First-order propagation of the per-atom uncertainties into the functional.
inline double propagated_noise(const FieldEval &e, MonotonicityTest test, const VecLambda &lam,
                               const EmpiricalMeasure &xi, const std::vector<double> &eta) {
  if (e.dxx_err.empty() && e.k_err.empty())
    return 0.0;
  const auto &w = xi.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double h = eta[i], h2 = h * h;
    const double dd = e.dxx_err.empty() ? 0.0 : e.dxx_err[i];
    const double dk = e.k_err.empty() ? 0.0 : e.k_err[i];
    switch (test) {
    case MonotonicityTest::Anti:
      s += w[i] * ((lam.l0 + 2.0 * std::abs(e.dxx[i]) + dd) * h2 * dd +
                   (std::abs(lam.l1 * h) + lam.l2 * (2.0 * std::abs(e.k[i]) + dk)) * dk);
      break;
    case MonotonicityTest::LasryLions:
      s += w[i] * std::abs(h) * dk;
      break;
    case MonotonicityTest::Displacement:
      s += w[i] * (std::abs(h) * dk + h2 * dd);
      break;
    }
  }
  return s;
}

} // namespace detail

/// (AntiMon)^λ⃗_ξ U(η,η) with expectations replaced by weighted atom sums.
inline double antimono_functional(const FieldDerivs &F, const VecLambda &lam, const EmpiricalMeasure &xi,
                                  const std::vector<double> &eta) {
  return detail::antimono_terms(evaluate_field(F, xi, eta), lam, xi, eta).value;
}

/// 𝔼̃⟨∂ₓμU η̃, η⟩; Lasry-Lions monotone iff nonnegative for all inputs.
inline double lasry_lions_functional(const FieldDerivs &F, const EmpiricalMeasure &xi,
                                     const std::vector<double> &eta) {
  return detail::lasry_lions_terms(evaluate_field(F, xi, eta), xi, eta).value;
}

/// 𝔼̃[⟨∂ₓμU η̃,η⟩ + ⟨∂ₓₓU η,η⟩] − λ𝔼|η|².
inline double displacement_functional(const FieldDerivs &F, const EmpiricalMeasure &xi,
                                      const std::vector<double> &eta, double semi_lambda) {
  return detail::displacement_terms(evaluate_field(F, xi, eta), xi, eta, semi_lambda).value;
}

/// Displacement monotonicity functional of the full Hamiltonian along p = φ(ξ);
/// monotone iff nonpositive.
inline double hamiltonian_displacement_functional(const ModelSpec &model, const std::function<double(double)> &phi,
                                                  const EmpiricalMeasure &xi, const std::vector<double> &eta) {
  if (eta.size() != xi.size())
    throw InvalidArgument("eta length differs from the atom count of xi");
  const auto &x = xi.points();
  const auto &w = xi.weights();
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const HDerivs d = eval_h_derivs(model, x[i], xi, phi(x[i]));
    if (!(d.hpp > 0.0))
      throw StrictConvexityViolation("hpp = " + std::to_string(d.hpp) + " at x = " + std::to_string(x[i]));
    double kx = 0.0, kp = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      kx += w[j] * d.hxmu(x[j]) * eta[j];
      kp += w[j] * d.hpmu(x[j]) * eta[j];
    }
    v += w[i] * (kx * eta[i] + d.hxx * eta[i] * eta[i] + 0.25 * kp * kp / d.hpp);
  }
  return v;
}

struct QuadraticClass {
  bool lasry_lions;
  bool displacement;
  bool anti;
};

/// The λ₃ comparison is decided up to rounding of its terms, so boundary
/// cases that hold with equality are classified as holding.
inline QuadraticClass classify_quadratic(double a0, double a1, const VecLambda &lam) {
  const double c1 = lam.l0 * a0 + a0 * a0;
  const double c2 = c1 + lam.l1 * a1 + lam.l2 * a1 * a1;
  const double scale = std::abs(lam.l0 * a0) + a0 * a0 + std::abs(lam.l1 * a1) + lam.l2 * a1 * a1 + lam.l3;
  return {a1 >= 0.0, a0 >= 0.0 && a1 >= -a0, lam.l3 - std::max(c1, c2) >= -8.0 * std::numeric_limits<double>::epsilon() * scale};
}

/// Signed slack of the closed-form anti-monotonicity criterion (positive = holds).
inline double quadratic_anti_margin(double a0, double a1, const VecLambda &lam) {
  const double c1 = lam.l0 * a0 + a0 * a0;
  const double c2 = c1 + lam.l1 * a1 + lam.l2 * a1 * a1;
  return lam.l3 - std::max(c1, c2);
}

enum class Verdict { Holds, Violated, Inconclusive };

inline const char *verdict_name(Verdict v) {
  switch (v) {
  case Verdict::Holds:
    return "Holds";
  case Verdict::Violated:
    return "Violated";
  default:
    return "Inconclusive";
  }
}

struct MonotonicityEstimate {
  double value = 0.0;     ///< worst violation-oriented value (≤ 0 means no violation)
  double std_error = 0.0; ///< noise level attached to the worst trial
  int samples = 0;
  Verdict verdict = Verdict::Holds;
  std::vector<double> witness_points;
  std::vector<double> witness_weights;
  std::vector<double> witness_eta;
};

struct McOptions {
  MonotonicityTest test = MonotonicityTest::Anti;
  double radius = 1.0;
  double semi_lambda = 0.0;
  int jobs = 1;
};

namespace detail {

struct Trial {
  EmpiricalMeasure xi;
  std::vector<double> eta;
};

inline Trial sample_trial(std::uint64_t seed, int index, int atoms, double radius) {
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(atoms);
  for (double &v : x)
    v = radius * normal(rng);
  Trial tr{make_empirical(x), std::vector<double>(atoms)};
  if (index == 0) {
    std::fill(tr.eta.begin(), tr.eta.end(), 1.0);
  } else {
    for (double &v : tr.eta)
      v = normal(rng);
    if (index == 1) {
      double m = 0.0;
      for (double v : tr.eta)
        m += v;
      m /= atoms;
      for (double &v : tr.eta)
        v -= m;
    }
  }
  double e2 = 0.0;
  const auto &w = tr.xi.weights();
  for (int i = 0; i < atoms; ++i)
    e2 += w[i] * tr.eta[i] * tr.eta[i];
  if (e2 > 0.0)
    for (double &v : tr.eta)
      v /= std::sqrt(e2);
  return tr;
}

/// Violation-oriented value: positive means the monotonicity notion fails.
inline std::pair<double, double> violation(const FieldDerivs &F, const VecLambda &lam, const Trial &tr,
                                           const McOptions &opt) {
  const FieldEval e = evaluate_field(F, tr.xi, tr.eta);
  Terms t{};
  switch (opt.test) {
  case MonotonicityTest::Anti:
    t = antimono_terms(e, lam, tr.xi, tr.eta);
    break;
  case MonotonicityTest::LasryLions:
    t = lasry_lions_terms(e, tr.xi, tr.eta);
    t.value = -t.value;
    break;
  case MonotonicityTest::Displacement:
    t = displacement_terms(e, tr.xi, tr.eta, opt.semi_lambda);
    t.value = -t.value;
    break;
  }
  return {t.value, e.noise + propagated_noise(e, opt.test, lam, tr.xi, tr.eta) + 1e-12 * t.magnitude};
}

} // namespace detail

/// Randomized search for violations over sampled (ξ, η). Trial 0 uses η ≡ 1,
/// trial 1 a mean-zero η; violations are confirmed by replaying the witness.
inline MonotonicityEstimate mc_certify(const FieldDerivs &F, const VecLambda &lam, std::uint64_t seed, int trials,
                                       int atoms, const McOptions &opt = {}) {
  if (trials < 1)
    throw InvalidArgument("mc_certify: trials must be >= 1");
  if (atoms < 1)
    throw InvalidArgument("mc_certify: atoms must be >= 1");
  std::vector<double> values(trials), noise(trials);
  auto run = [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k) {
      const auto tr = detail::sample_trial(seed, k, atoms, opt.radius);
      std::tie(values[k], noise[k]) = detail::violation(F, lam, tr, opt);
    }
  };
  const int jobs = std::max(1, std::min(opt.jobs, trials));
  if (jobs == 1) {
    run(0, trials);
  } else {
    std::vector<std::future<void>> futs;
    for (int j = 0; j < jobs; ++j)
      futs.push_back(std::async(std::launch::async, run, trials * j / jobs, trials * (j + 1) / jobs));
    for (auto &f : futs)
      f.get();
  }

  int worst = 0;
  for (int k = 1; k < trials; ++k)
    if (values[k] - 3.0 * noise[k] > values[worst] - 3.0 * noise[worst])
      worst = k;

  MonotonicityEstimate est;
  est.samples = trials;
  est.value = *std::max_element(values.begin(), values.end());
  est.std_error = noise[worst];
  const auto tr = detail::sample_trial(seed, worst, atoms, opt.radius);
  est.witness_points = tr.xi.points();
  est.witness_weights = tr.xi.weights();
  est.witness_eta = tr.eta;
  if (values[worst] <= 3.0 * noise[worst]) {
    est.verdict = Verdict::Holds;
  } else {
    const auto [replay, replay_noise] = detail::violation(F, lam, tr, opt);
    est.verdict = replay > 3.0 * replay_noise ? Verdict::Violated : Verdict::Inconclusive;
  }
  return est;
}

} // namespace mfga
