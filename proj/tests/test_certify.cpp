#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mfga/certify.hpp"

using namespace mfga;
using Eigen::MatrixXd;

namespace {

MatrixXd mat2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

/// Matrix exponential by Taylor series with scaling and squaring.
MatrixXd expm_taylor(const MatrixXd &A) {
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (norm / std::ldexp(1.0, s) > 0.25)
    ++s;
  const MatrixXd B = A / std::ldexp(1.0, s);
  MatrixXd term = MatrixXd::Identity(A.rows(), A.cols()), sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * B / k;
    sum += term;
  }
  for (int i = 0; i < s; ++i)
    sum = sum * sum;
  return sum;
}

double min_eig(const Eigen::Matrix3d &M) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (M + M.transpose()));
  return es.eigenvalues().minCoeff();
}

/// Smallest lxp with A₁·lxp − A₂·l2h ⪰ 0, by bisection.
double psd_bisection(const ConditionMatrices &c, double l2h) {
  double lo = 0.0, hi = 1.0;
  while (min_eig(c.a1 * hi - c.a2 * l2h) < 0.0)
    hi *= 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (min_eig(c.a1 * mid - c.a2 * l2h) >= 0.0 ? hi : lo) = mid;
  }
  return hi;
}

Example72Result reference_example() { return construct_example72(1.0, 1.0, 0.5, 2.0, 1.0, 1.0, 0.0, 1.0, 1.0); }

} // namespace

TEST(Spectral, HandExamples) {
  auto s = spectral(MatrixXd::Identity(2, 2));
  EXPECT_DOUBLE_EQ(s.kappa_lo, 1.0);
  EXPECT_DOUBLE_EQ(s.kappa_hi, 1.0);
  EXPECT_DOUBLE_EQ(s.kappa_prime, 1.0);
  EXPECT_DOUBLE_EQ(s.opnorm, 1.0);
  s = spectral(mat2(2, 0, 0, 3));
  EXPECT_DOUBLE_EQ(s.kappa_lo, 2.0);
  EXPECT_DOUBLE_EQ(s.kappa_hi, 3.0);
  EXPECT_DOUBLE_EQ(s.kappa_prime, 2.0);
  EXPECT_DOUBLE_EQ(s.opnorm, 3.0);
  s = spectral(mat2(0, 1, 0, 0));
  EXPECT_NEAR(s.kappa_lo, -0.5, 1e-15);
  EXPECT_NEAR(s.kappa_hi, 0.5, 1e-15);
  EXPECT_NEAR(s.kappa_prime, 0.0, 1e-15);
  EXPECT_NEAR(s.opnorm, 1.0, 1e-15);
  EXPECT_THROW(spectral(MatrixXd::Zero(2, 3)), InvalidArgument);
}

TEST(Spectral, RandomSymmetricProperties) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        A(i, j) = normal(rng);
    const SpectralReport g = spectral(A);
    EXPECT_LE(g.kappa_lo, g.kappa_hi);
    EXPECT_GE(g.opnorm, std::max(std::abs(g.kappa_lo), std::abs(g.kappa_hi)) - 1e-12);
    const MatrixXd S = A + A.transpose();
    const SpectralReport s = spectral(S);
    EXPECT_NEAR(s.kappa_prime, s.kappa_lo, 1e-10);
    EXPECT_NEAR(s.opnorm, std::max(std::abs(s.kappa_lo), std::abs(s.kappa_hi)), 1e-10);
  }
}

TEST(ExpDecayBound, HandExamples) {
  std::vector<double> grid;
  for (int k = 0; k <= 2000; ++k)
    grid.push_back(0.01 * k);
  auto b = exp_decay_bound(mat2(2, 0.5, 0.5, 1), grid);
  EXPECT_EQ(b.la0_upper, 1.0);
  EXPECT_EQ(b.method, La0Method::Symmetric);
  EXPECT_EQ(b.violations, 0);
  b = exp_decay_bound(MatrixXd::Constant(1, 1, 2.0), grid);
  EXPECT_EQ(b.la0_upper, 1.0);
  EXPECT_EQ(b.violations, 0);
  b = exp_decay_bound(mat2(1, 1, 0, 1), grid);
  EXPECT_TRUE(std::isfinite(b.la0_upper));
  EXPECT_GE(b.la0_upper, 1.0);
  EXPECT_EQ(b.violations, 0);
  EXPECT_THROW(exp_decay_bound(mat2(1, 0, 0, 1), {-1.0}), InvalidArgument);
}

TEST(ExpDecayBound, DiagonalizableMatrixUsesEigenvectors) {
  const MatrixXd A = mat2(1, 3, 0, 10);
  const auto b = exp_decay_bound(A, {0.0, 1.0, 5.0});
  EXPECT_EQ(b.method, La0Method::Eigenvectors);
  EXPECT_EQ(b.violations, 0);
  EXPECT_GT(b.la0_upper, 1.0);
  EXPECT_NEAR(b.kappa_prime, 1.0, 1e-12);
}

TEST(ExpDecayBound, NoViolationsOnRandomMatrices) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> grid;
  for (int k = 0; k <= 200; ++k)
    grid.push_back(0.1 * k);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        A(i, j) = normal(rng);
    if (trial % 2 == 0) {
      A = 0.5 * (A + A.transpose());
    } else {
      MatrixXd J = MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        J(i, i) = 0.5 * normal(rng);
        if (i + 1 < n)
          J(i, i + 1) = 1.0;
      }
      MatrixXd S = MatrixXd::Identity(n, n) + 0.3 * A;
      A = S * J * S.inverse();
    }
    const auto b = exp_decay_bound(A, grid);
    EXPECT_EQ(b.violations, 0) << "trial " << trial;
  }
}

TEST(ExpDecayBound, EigenExponentialMatchesTaylorOracle) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd A(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        A(i, j) = normal(rng);
    for (double t : {0.0, 0.5, 3.0}) {
      const MatrixXd E = (-A * t).exp();
      const MatrixXd O = expm_taylor(-A * t);
      EXPECT_LE((E - O).norm(), 1e-10 * std::max(1.0, O.norm()));
    }
  }
}

TEST(Theta1, HandExamples) {
  EXPECT_NEAR(theta1(VecLambda(5.0, 0.0, 1.0, 0.0), 1.0, 2.0, 1.0), 4.0 / std::sqrt(20.0), 1e-15);
  try {
    theta1(VecLambda(1.0, 0.0, 1.0, 0.0), 1.0, 2.0, 0.0);
    FAIL() << "expected Theta1NotLessThanOne";
  } catch (const Theta1NotLessThanOne &e) {
    EXPECT_EQ(e.value, 1.0);
  }
  EXPECT_THROW(theta1(VecLambda(1.0, 0.0, 1.0, 0.0), 2.0, 1.0, 0.0), InvalidArgument);
}

TEST(ConditionMatrices, HandExamples) {
  const auto c = condition_matrices(VecLambda(1.0, 1.0, 1.0, 0.0), 0.5, 1.0, 0.0);
  Eigen::Matrix3d a1 = Eigen::Vector3d(2.0, 2.0, 0.5).asDiagonal();
  Eigen::Matrix3d a2;
  a2 << 1, 1, 0.5, 1, 1, 1.5, 0.5, 1.5, 1;
  EXPECT_LE((c.a1 - a1).norm(), 1e-15);
  EXPECT_LE((c.a2 - a2).norm(), 1e-15);
  EXPECT_THROW(condition_matrices(VecLambda(1.0, 1.0, 1.0, 0.0), 1.0, 1.0, 0.0), Theta1NotLessThanOne);
}

TEST(ConditionMatrices, SecondSummandScalesWithLvxx) {
  const VecLambda lam(1.5, -0.4, 0.7, 0.2);
  const auto c0 = condition_matrices(lam, 0.3, 0.8, 0.0);
  const auto c1 = condition_matrices(lam, 0.3, 0.8, 1.0);
  const auto c2 = condition_matrices(lam, 0.3, 0.8, 2.5);
  EXPECT_LE(((c2.a2 - c0.a2) - 2.5 * (c1.a2 - c0.a2)).norm(), 1e-14);
  EXPECT_LE((c2.a2 - c2.a2.transpose()).norm(), 0.0);
  EXPECT_EQ(c0.a1, c2.a1);
}

TEST(XpThreshold, HandExamples) {
  const auto c = condition_matrices(VecLambda(1.0, 1.0, 1.0, 0.0), 0.5, 1.0, 0.0);
  for (double lxp : {0.1, 1.0, 10.0}) {
    const auto r = xp_threshold(c, 0.0, lxp);
    EXPECT_TRUE(r.stated_condition);
    EXPECT_TRUE(r.psd_condition);
  }
  ConditionMatrices id{Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity(), 0.0};
  EXPECT_TRUE(xp_threshold(id, 1.0, 1.0).psd_condition);
  EXPECT_TRUE(xp_threshold(id, 1.0, 1.0).stated_condition);
  EXPECT_FALSE(xp_threshold(id, 1.0, 0.99).psd_condition);
  EXPECT_FALSE(xp_threshold(id, 1.0, 0.99).stated_condition);
  ConditionMatrices sing{Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Identity(), 0.0};
  EXPECT_THROW(xp_threshold(sing, 1.0, 1.0), SingularMatrix);
}

TEST(XpThreshold, PsdThresholdMatchesBisection) {
  const auto c = condition_matrices(VecLambda(1.0, 1.0, 1.0, 0.0), 0.5, 1.0, 0.0);
  const auto r = xp_threshold(c, 1.0, 1.0);
  EXPECT_NEAR(r.psd_threshold, psd_bisection(c, 1.0), 1e-9);
  const Eigen::Matrix3d R = c.a1.inverse() * c.a2;
  EXPECT_NEAR(r.kappa_ratio, min_eig(R), 1e-12);
  EXPECT_TRUE(xp_threshold(c, 1.0, r.psd_threshold + 1e-9).psd_condition);
  EXPECT_FALSE(xp_threshold(c, 1.0, r.psd_threshold - 1e-3).psd_condition);

  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const VecLambda lam(u(rng), u(rng) - 1.5, u(rng), u(rng) - 0.05);
    const auto cm = condition_matrices(lam, 0.9 * u(rng) / 3.0, u(rng), u(rng));
    const double l2h = u(rng);
    EXPECT_NEAR(xp_threshold(cm, l2h, 1.0).psd_threshold, psd_bisection(cm, l2h),
                1e-9 * std::max(1.0, psd_bisection(cm, l2h)));
  }
}

TEST(XpThreshold, ScalingInvariance) {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const VecLambda lam(u(rng), u(rng) - 1.5, u(rng), u(rng) - 0.05);
    const auto cm = condition_matrices(lam, 0.9 * u(rng) / 3.0, u(rng), u(rng));
    const double l2h = u(rng), lxp = 4.0 * u(rng), c = u(rng);
    const auto a = xp_threshold(cm, l2h, lxp, 0.0);
    const auto b = xp_threshold(cm, c * l2h, c * lxp, 0.0);
    EXPECT_EQ(a.stated_condition, b.stated_condition);
    EXPECT_EQ(a.psd_condition, b.psd_condition);
  }
}

TEST(Theta3Lxx, HandExample) {
  const auto t = theta3_lxx(1.0, 1.0, 0.25);
  EXPECT_NEAR(t.theta3(), 3.0, 1e-15);
  EXPECT_NEAR(t.lvxx(), 1.0, 1e-15);
  EXPECT_NEAR(t(3.0), 1.0, 1e-15);
  EXPECT_NEAR(t.discriminant(3.0), 0.0, 1e-15);
  EXPECT_THROW(t(2.9), DomainError);
  EXPECT_THROW(theta3_lxx(1.0, 0.5, 1.0), InvalidArgument);
  EXPECT_THROW(theta3_lxx(0.0, 1.0, 1.0), InvalidArgument);
}

TEST(Theta3Lxx, IdentitiesOnRandomInputs) {
  std::mt19937_64 rng(46);
  std::uniform_real_distribution<double> u(0.05, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double l2 = u(rng), la = 1.0 + u(rng), lg = u(rng);
    const auto t = theta3_lxx(l2, la, lg);
    const double th3 = t.theta3();
    const double c = lg * la;
    EXPECT_NEAR(t.discriminant(th3), 0.0, 1e-10 * th3 * th3);
    EXPECT_NEAR(t.lvxx(), c + std::sqrt((1.0 + c) * (1.0 + c) - 1.0), 1e-10 * (1.0 + t.lvxx()));
    double prev = t(th3);
    for (int k = 1; k <= 20; ++k) {
      const double th = th3 + 5.0 * k;
      const double L = t(th);
      EXPECT_NEAR(L * (2.0 * (th - 1.0) - l2 * la * (2.0 + L)), 2.0 * lg * la * (th - 1.0),
                  1e-9 * std::max(1.0, 2.0 * lg * la * (th - 1.0)));
      EXPECT_LT(L, prev);
      prev = L;
    }
    EXPECT_NEAR(t(th3 * 1e9), c, 1e-6 * (1.0 + c));
  }
}

TEST(DerivedHBounds, HandExamples) {
  auto d = derived_h_bounds(MatrixXd::Constant(1, 1, 5.0), 1.0);
  EXPECT_DOUBLE_EQ(d.lxp_lo, 4.0);
  EXPECT_DOUBLE_EQ(d.lxp_hi, 6.0);
  EXPECT_DOUBLE_EQ(d.l2, 1.0);
  d = derived_h_bounds(MatrixXd::Identity(2, 2) * 0.5, 0.5);
  EXPECT_DOUBLE_EQ(d.lxp_lo, 0.0);
  d = derived_h_bounds(mat2(3, 1, 0, 3), 0.5);
  EXPECT_NEAR(d.lxp_lo, 2.0, 1e-14);
  const double s = std::sqrt((19.0 + std::sqrt(37.0)) / 2.0);
  EXPECT_NEAR(d.lxp_hi, s + 0.5, 1e-13);
}

TEST(CertifyWellposedness, ConstructedExamplePasses) {
  const auto res = reference_example();
  EXPECT_TRUE(res.ledger.passed());
  EXPECT_EQ(res.m0, 2.0);
  const double lvxx = res.ledger.lxx_u_theta3;
  EXPECT_NEAR(res.lambda0, (4.0 * (1.0 + lvxx) * (1.0 + lvxx)) / 2.0 + 1.0, 1e-12 * res.lambda0);
  EXPECT_LT(res.ledger.theta1, 1.0);
  for (const char *name : {"gamma.lo_le_lxx_g", "gamma.hi_gt_one", "lambda0.threshold", "a0.la_bound",
                           "a0.xp_threshold", "a0.kappa_prime_theta3", "a0.gamma_sandwich", "h0xx.lower",
                           "h0xx.order", "h0xx.upper_gamma", "h0xx.upper_g", "h.lxp_lo_positive",
                           "a0.exp_decay_grid", "hessian.theta2", "G.anti_monotone"}) {
    const Check *c = res.ledger.find(name);
    ASSERT_NE(c, nullptr) << name;
    EXPECT_TRUE(c->pass) << name;
    EXPECT_EQ(c->margin, c->lhs - c->rhs) << name;
  }
}

TEST(CertifyWellposedness, CheckNamesAreUnique) {
  const auto res = reference_example();
  for (std::size_t i = 0; i < res.ledger.checks.size(); ++i)
    for (std::size_t j = i + 1; j < res.ledger.checks.size(); ++j)
      EXPECT_NE(res.ledger.checks[i].name, res.ledger.checks[j].name);
}

TEST(CertifyWellposedness, DoubledM0StillPasses) {
  const auto res = reference_example();
  const auto twice = example72_at(2.0 * res.m0, 1.0, 1.0, 0.5, 2.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.5);
  EXPECT_TRUE(twice.ledger.passed());
}

TEST(CertifyWellposedness, HalvedA0Fails) {
  auto res = reference_example();
  ModelSpec halved = res.model;
  halved.a0 *= 0.5;
  const auto ledger = certify_wellposedness(halved, res.lam);
  EXPECT_FALSE(ledger.passed());
  const Check *c = ledger.find("a0.kappa_prime_theta3");
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->pass);
  EXPECT_LT(c->margin, 0.0);
}

TEST(CertifyWellposedness, NonAntiMonotoneTerminalCostFails) {
  auto res = reference_example();
  ModelSpec m = res.model;
  m.quad.g0 = 0.5;
  const auto ledger = certify_wellposedness(m, res.lam);
  EXPECT_FALSE(ledger.find("G.anti_monotone")->pass);
}

TEST(CertifyWellposedness, CustomTerminalCostUsesSampling) {
  auto res = reference_example();
  ModelSpec m = res.model;
  const double g0 = m.quad.g0, g1 = m.quad.g1;
  m.g_family = Family::Custom;
  m.custom_g.g = [=](double x, const EmpiricalMeasure &mu) { return 0.5 * g0 * x * x + g1 * x * mu.mean(); };
  m.custom_g.gx = [=](double x, const EmpiricalMeasure &mu) { return g0 * x + g1 * mu.mean(); };
  m.custom_g.gxx = [=](double, const EmpiricalMeasure &) { return g0; };
  m.custom_g.gxmu = [=](double, const EmpiricalMeasure &, double) { return g1; };
  const auto ledger = certify_wellposedness(m, res.lam, 9);
  EXPECT_TRUE(ledger.find("G.anti_monotone")->pass);
}

TEST(ConstructExample72, RejectsInvalidInput) {
  EXPECT_THROW(construct_example72(1.0, 1.0, 0.5, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0), D4Violation);
  EXPECT_THROW(construct_example72(1.0, 1.0, 0.5, 0.9, 1.0, 1.0, 0.0, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(construct_example72(2.0, 1.0, 0.5, 2.0, 1.0, 1.0, 0.0, 1.0, 1.0), InvalidArgument);
}

TEST(ConstructExample72, ExhaustedSearchCarriesLedger) {
  Example72Options opt;
  opt.m0_start = 1.1;
  opt.max_doublings = 0;
  try {
    construct_example72(1.0, 1.0, 0.5, 2.0, 1.0, 1.0, 0.0, 1.0, 1.0, opt);
    FAIL() << "expected ConstructionFailed";
  } catch (const ConstructionFailed &e) {
    EXPECT_FALSE(e.ledger.checks.empty());
    EXPECT_FALSE(e.ledger.passed());
  }
}

TEST(ConstructExample72, ModelMatchesDeclaredConstants) {
  const auto res = reference_example();
  const auto &m = res.model;
  EXPECT_DOUBLE_EQ(m.a0_scalar(), 8.0);
  EXPECT_DOUBLE_EQ(m.quad.g0, -2.0);
  EXPECT_DOUBLE_EQ(m.quad.g1, -1.0);
  EXPECT_GE(m.quad.h_xx, m.reg.lxx_h0_lo);
  EXPECT_LE(m.quad.h_xx, m.reg.lxx_h0_hi);
  EXPECT_DOUBLE_EQ(m.horizon, 0.5);
}
