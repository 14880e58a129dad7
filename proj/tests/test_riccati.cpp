#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mfga/solver/residual.hpp"
#include "mfga/solver/riccati.hpp"

using namespace mfga;

namespace {

ModelSpec lq(double a0, QuadraticParams q, double T) {
  ModelSpec m;
  m.a0 = Eigen::MatrixXd::Constant(1, 1, a0);
  m.quad = q;
  m.horizon = T;
  return m;
}

/// Solution of ẏ = 2a·y + y², y(T) = y_T, by separation of variables.
double bernoulli_closed_form(double a, double yT, double t, double T) {
  const double K = yT / (2.0 * a + yT);
  const double e = K * std::exp(2.0 * a * (t - T));
  return 2.0 * a * e / (1.0 - e);
}

} // namespace

TEST(Riccati, ClosedFormLogistic) {
  const auto m = lq(1.0, {-0.5, 0.0, 1.0, 0.0, 0.0}, 1.0);
  const auto r = riccati_oracle(m);
  for (double t : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0})
    EXPECT_NEAR(r.p_curve(t), bernoulli_closed_form(1.0, -0.5, t, 1.0), 1e-12);
  for (std::size_t k : {410u, 2048u, 3686u}) {
    const double t = r.t_grid()[k];
    EXPECT_NEAR(r.p_dot(t), 2.0 * r.p_curve(t) + r.p_curve(t) * r.p_curve(t), 1e-9);
  }
}

TEST(Riccati, MeanCoefficientClosedFormWhenPVanishes) {
  const auto m = lq(0.7, {0.0, -0.9, 1.0, 0.0, 0.0}, 0.8);
  const auto r = riccati_oracle(m);
  for (double t : {0.0, 0.2, 0.8}) {
    EXPECT_EQ(r.p_curve(t), 0.0);
    EXPECT_NEAR(r.q_curve(t), bernoulli_closed_form(0.7, -0.9, t, 0.8), 1e-12);
  }
}

TEST(Riccati, TrivialCases) {
  const auto r0 = riccati_oracle(lq(1.3, {0.0, 0.0, 1.0, 0.0, 0.0}, 1.0));
  for (double t : {0.0, 0.5, 1.0}) {
    EXPECT_EQ(r0.p_curve(t), 0.0);
    EXPECT_EQ(r0.q_curve(t), 0.0);
  }
  const auto r1 = riccati_oracle(lq(1.3, {0.4, -0.2, 1.0, 0.1, 0.3}, 1.0));
  EXPECT_EQ(r1.p_curve(1.0), 0.4);
  EXPECT_EQ(r1.q_curve(1.0), -0.2);
  EXPECT_EQ(r1.p_nodes().back(), 0.4);
  EXPECT_EQ(r1.q_nodes().back(), -0.2);
  EXPECT_EQ(r1.t_grid().size(), 4097u);
}

TEST(Riccati, BlowUpIsDetected) {
  const auto m = lq(0.0, {-4.0, 0.0, 1.0, 0.0, 0.0}, 1.0);
  try {
    riccati_oracle(m);
    FAIL() << "expected BlowUp";
  } catch (const BlowUp &e) {
    EXPECT_NEAR(e.time, 0.75, 1e-2);
  }
}

TEST(Riccati, RejectsUnsupportedModels) {
  auto m = lq(1.0, {}, 1.0);
  m.beta = 0.5;
  EXPECT_THROW(riccati_oracle(m), UnsupportedFamily);
  m = lq(1.0, {}, 1.0);
  m.g_family = Family::Custom;
  EXPECT_THROW(riccati_oracle(m), UnsupportedFamily);
  EXPECT_THROW(riccati_oracle(lq(1.0, {}, 1.0), 2), InvalidArgument);
  EXPECT_THROW(riccati_oracle(lq(1.0, {}, 1.0), 16, 1.0), InvalidArgument);
  EXPECT_THROW(riccati_oracle(lq(1.0, {}, 1.0)).p_curve(1.5), InvalidArgument);
}

TEST(Riccati, MeanFlowWithoutFeedback) {
  const auto r = riccati_oracle(lq(0.6, {0.0, 0.0, 1.0, 0.0, 0.0}, 1.0));
  const auto flow = r.mean_flow(2.0);
  for (std::size_t k = 0; k < flow.size(); k += 512)
    EXPECT_NEAR(flow[k], 2.0 * std::exp(-0.6 * r.t_grid()[k]), 1e-12);
}

TEST(Riccati, MeanFlowMatchesIndependentIntegration) {
  const auto m = lq(0.5, {-0.5, 0.8, 1.0, 0.3, 0.2}, 0.5);
  const auto r = riccati_oracle(m);
  // log m_T = log m_0 − ∫(a0 + P + Q) dt, by the trapezoid rule on the node grid.
  double integral = 0.0;
  const auto &t = r.t_grid();
  for (std::size_t k = 0; k + 1 < t.size(); ++k)
    integral += 0.5 * (t[k + 1] - t[k]) *
                (2.0 * 0.5 + r.p_nodes()[k] + r.q_nodes()[k] + r.p_nodes()[k + 1] + r.q_nodes()[k + 1]);
  EXPECT_NEAR(r.mean_flow(0.5).back(), 0.5 * std::exp(-integral), 1e-7);
}

TEST(Riccati, AnsatzSatisfiesMasterEquation) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = lq(0.5 + std::abs(u(rng)), {-std::abs(u(rng)), u(rng), 0.5 + 0.5 * std::abs(u(rng)), u(rng),
                                               std::abs(u(rng))},
                      0.5);
    const auto r = riccati_oracle(m);
    std::vector<double> pts(7);
    for (auto &p : pts)
      p = 2.0 * u(rng);
    const auto mu = make_empirical(pts);
    double worst = 0.0;
    for (double t : {0.01, 0.1, 0.25, 0.4, 0.49})
      for (double x : {-2.0, -0.3, 0.0, 1.1, 3.0})
        worst = std::max(worst, std::abs(master_residual(r, m, t, x, mu)));
    EXPECT_LT(worst, 1e-8) << "trial " << trial;
  }
}

TEST(Riccati, ResidualDetectsWrongCoefficients) {
  const auto m = lq(0.5, {-0.5, 0.8, 1.0, 0.3, 0.2}, 0.5);
  const auto r = riccati_oracle(m);
  RiccatiSolution shifted(r.t_grid(),
                          [&] {
                            auto p = r.p_nodes();
                            for (double &v : p)
                              v += 1e-3;
                            return p;
                          }(),
                          r.q_nodes(), r.params(), r.a0());
  const auto mu = make_empirical({0.0, 1.0});
  const double base = master_residual(r, m, 0.25, 1.0, mu);
  const double bumped = master_residual(shifted, m, 0.25, 1.0, mu);
  EXPECT_GT(std::abs(bumped - base), 1e-4);
  EXPECT_LT(std::abs(bumped - base), 1e-2);
}

TEST(Riccati, TerminalResidualIsDiscretizationOnly) {
  const auto m = lq(0.5, {-0.5, 0.8, 1.0, 0.3, 0.2}, 0.5);
  const auto mu = make_empirical({-0.5, 0.5, 1.5});
  const double coarse = std::abs(master_residual(riccati_oracle(m, 64), m, 0.5, 1.0, mu));
  const double fine = std::abs(master_residual(riccati_oracle(m, 128), m, 0.5, 1.0, mu));
  EXPECT_LT(fine, 1e-6);
  EXPECT_LE(fine, coarse + 1e-12);
}
