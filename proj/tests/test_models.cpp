#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mfga/models.hpp"

using namespace mfga;

namespace {

ModelSpec quadratic(double a0, QuadraticParams q) {
  ModelSpec m;
  m.a0 = Eigen::MatrixXd::Constant(1, 1, a0);
  m.quad = q;
  return m;
}

double central(const std::function<double(double)> &f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace

TEST(GDerivs, HandExamples) {
  const auto m1 = quadratic(1.0, {-1.0, -1.0, 1.0, 0.0, 0.0});
  const auto mu = make_empirical({0.3, 1.7});
  const GDerivs d = eval_g_derivs(m1, 0.0, mu);
  EXPECT_EQ(d.gxx, -1.0);
  EXPECT_EQ(d.gxmu(0.5), -1.0);

  const auto m0 = quadratic(1.0, {0.0, 0.0, 1.0, 0.0, 0.0});
  const GDerivs z = eval_g_derivs(m0, 1.3, mu);
  EXPECT_EQ(z.g, 0.0);
  EXPECT_EQ(z.gx, 0.0);
  EXPECT_EQ(z.gxx, 0.0);
  EXPECT_EQ(z.gxmu(2.0), 0.0);

  const auto m2 = quadratic(1.0, {2.0, 3.0, 1.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(eval_g_derivs(m2, 1.0, make_empirical({2.0})).gx, 8.0);
}

TEST(HDerivs, HandExamples) {
  const auto zero = quadratic(0.7, {0.0, 0.0, 0.0, 0.0, 0.0});
  const auto mu = make_empirical({1.0, 3.0});
  const HDerivs d = eval_h_derivs(zero, 2.0, mu, 3.0);
  EXPECT_DOUBLE_EQ(d.hp, 0.7 * 2.0);
  EXPECT_DOUBLE_EQ(d.hx, 0.7 * 3.0);
  EXPECT_EQ(d.hpp, 0.0);

  const auto m = quadratic(1.0, {0.0, 0.0, 1.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(eval_h_derivs(m, 2.0, mu, 3.0).hp, 5.0);

  const auto mx = quadratic(0.0, {0.0, 0.0, 1.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(eval_h_derivs(mx, 0.0, mu, 0.0).hx, 2.0);
}

TEST(HDerivs, MixedDerivativeSymmetry) {
  const auto m = quadratic(1.3, {0.1, 0.2, 0.8, 0.4, -0.6});
  const auto mu = make_empirical({-0.5, 0.25, 1.0});
  const HDerivs d = eval_h_derivs(m, 0.4, mu, -1.1);
  EXPECT_EQ(d.hxp, d.hpx);
}

TEST(HDerivs, QuadraticClosuresMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = quadratic(u(rng), {u(rng), u(rng), std::abs(u(rng)), u(rng), u(rng)});
    std::vector<double> pts(5);
    for (auto &p : pts)
      p = u(rng);
    const auto mu = make_empirical(pts);
    const double x = u(rng), p = u(rng);
    const HDerivs d = eval_h_derivs(m, x, mu, p);
    const double tol = 1e-7;
    EXPECT_NEAR(d.hx, central([&](double s) { return eval_h_derivs(m, s, mu, p).h; }, x), tol);
    EXPECT_NEAR(d.hp, central([&](double s) { return eval_h_derivs(m, x, mu, s).h; }, p), tol);
    EXPECT_NEAR(d.hxx, central([&](double s) { return eval_h_derivs(m, s, mu, p).hx; }, x), tol);
    EXPECT_NEAR(d.hpp, central([&](double s) { return eval_h_derivs(m, x, mu, s).hp; }, p), tol);
    EXPECT_NEAR(d.hxp, central([&](double s) { return eval_h_derivs(m, x, mu, s).hx; }, p), tol);
    for (std::size_t j = 0; j < mu.size(); ++j) {
      const double lx = lions_derivative_fd([&](const EmpiricalMeasure &nu) { return eval_h_derivs(m, x, nu, p).hx; },
                                            mu, j);
      const double lp = lions_derivative_fd([&](const EmpiricalMeasure &nu) { return eval_h_derivs(m, x, nu, p).hp; },
                                            mu, j);
      EXPECT_NEAR(d.hxmu(mu.points()[j]), lx, 1e-6);
      EXPECT_NEAR(d.hpmu(mu.points()[j]), lp, 1e-6);
    }
    const GDerivs g = eval_g_derivs(m, x, mu);
    EXPECT_NEAR(g.gx, central([&](double s) { return eval_g_derivs(m, s, mu).g; }, x), tol);
    EXPECT_NEAR(g.gxx, central([&](double s) { return eval_g_derivs(m, s, mu).gx; }, x), tol);
    for (std::size_t j = 0; j < mu.size(); ++j)
      EXPECT_NEAR(g.gxmu(mu.points()[j]),
                  lions_derivative_fd([&](const EmpiricalMeasure &nu) { return eval_g_derivs(m, x, nu).gx; }, mu, j),
                  1e-6);
  }
}

TEST(HDerivs, CustomFamilyAddsDriftTerm) {
  ModelSpec m;
  m.a0 = Eigen::MatrixXd::Constant(1, 1, 2.0);
  m.h0_family = Family::Custom;
  auto &c = m.custom_h0;
  c.h = [](double x, const EmpiricalMeasure &mu, double p) { return std::cosh(p) + x * x * mu.mean(); };
  c.hx = [](double x, const EmpiricalMeasure &mu, double) { return 2.0 * x * mu.mean(); };
  c.hp = [](double, const EmpiricalMeasure &, double p) { return std::sinh(p); };
  c.hxx = [](double, const EmpiricalMeasure &mu, double) { return 2.0 * mu.mean(); };
  c.hxp = [](double, const EmpiricalMeasure &, double) { return 0.0; };
  c.hpp = [](double, const EmpiricalMeasure &, double p) { return std::cosh(p); };
  c.hxmu = [](double x, const EmpiricalMeasure &, double, double) { return 2.0 * x; };
  c.hpmu = [](double, const EmpiricalMeasure &, double, double) { return 0.0; };
  m.validate();
  const auto mu = make_empirical({1.0, 2.0});
  const HDerivs d = eval_h_derivs(m, 0.5, mu, 0.3);
  EXPECT_DOUBLE_EQ(d.h, 2.0 * 0.5 * 0.3 + std::cosh(0.3) + 0.25 * 1.5);
  EXPECT_DOUBLE_EQ(d.hp, 2.0 * 0.5 + std::sinh(0.3));
  EXPECT_DOUBLE_EQ(d.hx, 2.0 * 0.3 + 1.5);
  EXPECT_DOUBLE_EQ(d.hxp, 2.0);
  EXPECT_DOUBLE_EQ(d.hxmu(1.0), 1.0);
  const double lx =
      lions_derivative_fd([&](const EmpiricalMeasure &nu) { return eval_h_derivs(m, 0.5, nu, 0.3).hx; }, mu, 1);
  EXPECT_NEAR(d.hxmu(2.0), lx, 1e-6);
}

TEST(HDerivs, ZeroCoefficientsDegenerateInP) {
  const auto m = quadratic(1.0, {0.0, 0.0, 0.0, 0.0, 0.0});
  const auto mu = make_empirical({0.0});
  for (double p : {-3.0, 0.0, 2.0}) {
    const HDerivs d = eval_h_derivs(m, 1.5, mu, p);
    EXPECT_EQ(d.hpp, 0.0);
    EXPECT_DOUBLE_EQ(d.h, 1.5 * p);
  }
}

TEST(Models, Validation) {
  auto m = quadratic(1.0, {});
  m.dim = 2;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = quadratic(1.0, {});
  m.horizon = 0.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = quadratic(1.0, {});
  m.reg.gamma_lo = 3.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = quadratic(1.0, {});
  m.g_family = Family::Custom;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = quadratic(1.0, {});
  m.dim = 2;
  m.a0 = Eigen::MatrixXd::Identity(2, 2);
  m.validate();
  EXPECT_THROW(eval_h_derivs(m, 0.0, make_empirical({0.0}), 0.0), InvalidArgument);
}

TEST(Models, UnsupportedFamily) {
  auto m = quadratic(1.0, {});
  m.h0_family = static_cast<Family>(7);
  m.g_family = static_cast<Family>(7);
  const auto mu = make_empirical({0.0});
  EXPECT_THROW(eval_h_derivs(m, 0.0, mu, 0.0), UnsupportedFamily);
  EXPECT_THROW(eval_g_derivs(m, 0.0, mu), UnsupportedFamily);
}

TEST(LionsDerivative, HandExamples) {
  const auto mu = make_empirical({-1.0, 0.5, 2.0, 3.0});
  for (std::size_t j = 0; j < mu.size(); ++j)
    EXPECT_NEAR(lions_derivative_fd([](const EmpiricalMeasure &nu) { return nu.mean(); }, mu, j), 1.0, 1e-9);
  EXPECT_NEAR(lions_derivative_fd([](const EmpiricalMeasure &nu) { return moments(nu).second_moment; }, mu, 3), 6.0,
              1e-8);
  EXPECT_EQ(lions_derivative_fd([](const EmpiricalMeasure &) { return 4.0; }, mu, 0), 0.0);
  EXPECT_THROW(lions_derivative_fd([](const EmpiricalMeasure &) { return 0.0; }, mu, 9), InvalidArgument);
}
