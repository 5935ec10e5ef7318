#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "acflow/controllers.hpp"

using namespace acflow;
using Eigen::VectorXd;

namespace {

double vnorm(const VectorXd& v) { return v.norm(); }

VectorXd scalar(double a) { return VectorXd::Constant(1, a); }

}  // namespace

TEST(Alpha1, PublishedValues) {
  EXPECT_DOUBLE_EQ(alpha1(1.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(alpha1(2.0), 6.0 / 5.0);
  EXPECT_LT(alpha1(1e-12), 2e-12);
  EXPECT_THROW(alpha1(0.0), std::invalid_argument);
  EXPECT_THROW(alpha1(-1.0), std::invalid_argument);
}

TEST(Alpha2, HandEvaluatedValues) {
  EXPECT_NEAR(alpha2(1.0, 1.0), 10.0 / 9.0, 1e-15);
  // 1 * (2 + 1 + 1) * (32 + 20 + 2) / (3 * (4 + 8 + 4 + 1 + 1)) = 216 / 54
  EXPECT_NEAR(alpha2(1.0, 2.0), 4.0, 1e-14);
  EXPECT_LT(alpha2(1.0, 1e-10), 1e-9);
  EXPECT_THROW(alpha2(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(alpha2(1.0, -2.0), std::invalid_argument);
}

TEST(StepWindow, RatiosAndValidation) {
  const StepWindow w(0.2, 0.1, 0.4);
  EXPECT_DOUBLE_EQ(w.tau_next(), 2.0);
  EXPECT_DOUBLE_EQ(w.tau_cur(), 0.25);
  EXPECT_THROW(StepWindow(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST(SecondDifference, AnnihilatesConstantsAndLinearTrajectories) {
  const StepWindow w(0.3, 0.1, 0.7);
  EXPECT_NEAR(second_difference(scalar(5.0), scalar(5.0), scalar(5.0), w)[0], 0.0, 1e-15);
  // y = 2 + 3t sampled at t_{n+1} = 0.3, t_n = 0, t_{n-1} = -0.1
  EXPECT_NEAR(second_difference(scalar(2.9), scalar(2.0), scalar(1.7), StepWindow(0.3, 0.1, 0.2))[0], 0.0, 1e-14);
}

TEST(SecondDifference, EqualStepStencil) {
  const StepWindow w(0.1, 0.1, 0.1);
  EXPECT_DOUBLE_EQ(second_difference(scalar(1.0), scalar(0.0), scalar(0.0), w)[0], 1.0);
}

TEST(SecondDifference, ExactOnQuadratics) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.01, 1.0);
  for (int r = 0; r < 100; ++r) {
    const double kn = d(rng), kc = d(rng), t = d(rng);
    const StepWindow w(kn, kc, 1.0);
    auto sq = [](double x) { return scalar(x * x); };
    const double got = second_difference(sq(t + kn), sq(t), sq(t - kc), w)[0];
    EXPECT_NEAR(got / (2.0 * kc * kn), 1.0, 1e-12);
  }
}

TEST(Est1, Values) {
  const StepWindow w(0.1, 0.1, 0.1);
  EXPECT_EQ(est1(scalar(0.0), w, vnorm), 0.0);
  EXPECT_NEAR(est1(scalar(1.0), w, vnorm), 1.0 / 3.0, 1e-15);
  const VectorXd d = VectorXd::Random(5);
  EXPECT_NEAR(est1(VectorXd(-3.0 * d), w, vnorm), 3.0 * est1(d, w, vnorm), 1e-14);
}

TEST(Est1, TaylorOracleOnExponentialGrowth) {
  // y' = y: exact history, backward Euler new value; est1 / (k^2/2 |y''|) -> 1
  const double t = 0.5;
  double prev_dev = 1.0;
  for (double k : {1e-2, 5e-3, 2.5e-3}) {
    const StepWindow w(k, k, k);
    const double y_be = std::exp(t) / (1.0 - k);
    const double e = est1(second_difference(scalar(y_be), scalar(std::exp(t)), scalar(std::exp(t - k)), w), w, vnorm);
    const double dev = std::abs(e / (0.5 * k * k * std::exp(t + k)) - 1.0);
    EXPECT_LT(dev, prev_dev);
    EXPECT_LT(dev, 0.05);
    prev_dev = dev;
  }
}

TEST(Est2, EqualStepValue) {
  const StepWindow w(0.2, 0.2, 0.2);
  const double got = est2(scalar(1.5), scalar(0.5), w, vnorm);
  EXPECT_NEAR(got, (10.0 / 9.0) / 6.0 * 1.0, 1e-15);
  EXPECT_EQ(est2(scalar(0.7), scalar(0.7), w, vnorm), 0.0);
}

TEST(ProposeStep, RawValueAndClamps) {
  const Tolerances t;
  EXPECT_NEAR(propose_step(1.0, 1e-3, 1e-3, 1, t), 0.9, 1e-15);
  EXPECT_NEAR(propose_step(1.0, 8e-3, 1e-3, 2, t), 0.5, 1e-15);  // 0.9 * (1/8)^(1/3) = 0.45 -> clamp
  EXPECT_NEAR(propose_step(1.0, 1e-3 / 4.0, 1e-3, 1, t), 1.8, 1e-14);
  EXPECT_EQ(propose_step(0.1, 0.0, 1e-3, 1, t), 0.2);
  EXPECT_EQ(propose_step(0.1, 1e-12, 1e-3, 2, t), 0.2);
  EXPECT_EQ(propose_step(0.1, 1e6, 1e-3, 1, t), 0.05);
  EXPECT_THROW(propose_step(0.1, 1.0, 1.0, 3, t), std::invalid_argument);
}

TEST(ProposeEpsilon, LinearResponseAndClamps) {
  const Tolerances t;
  EXPECT_NEAR(propose_epsilon(1e-3, 1e-3, 1e-3, t), 0.9e-3, 1e-18);
  EXPECT_NEAR(propose_epsilon(1e-3, 1e-1, 1e-3, t), 0.5e-3, 1e-18);
  EXPECT_NEAR(propose_epsilon(1e-3, 0.0, 1e-3, t), 2e-3, 1e-18);
}

TEST(RejectStep, ResetsOnlyViolatedQuantity) {
  Tolerances t;
  t.tol_m = 1e-3;
  t.tol_c = 1e-2;
  const auto [k1, e1] = reject_step(0.1, 1e-3, {2e-3, 0.0, false, 1e-3}, 1, t);
  EXPECT_NEAR(k1, 0.1 * 0.9 * std::sqrt(0.5), 1e-15);
  EXPECT_EQ(reject_step(0.1, 1e-3, {4e-2, 0.0, false, 1e-3}, 1, t).first, 0.05);
  EXPECT_EQ(e1, 1e-3);
  const auto [k2, e2] = reject_step(0.1, 1e-3, {1e-4, 0.0, false, 2e-2}, 1, t);
  EXPECT_EQ(k2, 0.1);
  EXPECT_NEAR(e2, 0.5e-3, 1e-18);
  EXPECT_THROW(reject_step(0.1, 1e-3, {1e-4, 0.0, false, 1e-3}, 1, t), std::logic_error);
}

TEST(RejectStep, NeverGrowsWhenEstimatorBarelyExceedsTolerance) {
  Tolerances t;
  t.safety = 1.5;  // raw proposal above k_cur; the retry still may not grow
  const auto [k, e] = reject_step(0.1, 1e-3, {1.01e-3, 0.0, false, 0.0}, 1, t);
  EXPECT_LE(k, 0.1);
  EXPECT_EQ(e, 1e-3);
}

TEST(Tolerances, Validation) {
  Tolerances t;
  EXPECT_NO_THROW(t.validate());
  t.clamp_lo = 1.2;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t = {};
  t.tol_c = 0.0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(ControllerContracts, RandomizedTuples) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> lg(-8.0, 1.0);
  for (int r = 0; r < 20000; ++r) {
    const double k = std::pow(10.0, lg(rng)), est = std::pow(10.0, lg(rng)), tol = std::pow(10.0, lg(rng));
    Tolerances t;
    t.tol_m = tol;
    const int order = 1 + (r % 2);
    const double p = propose_step(k, est, tol, order, t);
    ASSERT_GE(p, 0.5 * k * (1 - 1e-15));
    ASSERT_LE(p, 2.0 * k * (1 + 1e-15));
    ASSERT_LE(propose_step(k, 1.5 * est, tol, order, t), p);
    if (est > tol) {
      ASSERT_LE(reject_step(k, 1.0, {est, est, true, 0.0}, order, t).first, k);
    }
  }
}
