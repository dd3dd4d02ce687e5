#include <gtest/gtest.h>

#include <cmath>

#include "steinmap/gaussian.hpp"
#include "steinmap/model.hpp"
#include "steinmap/scenarios/scenario_a.hpp"
#include "steinmap/scenarios/scenario_c.hpp"
#include "steinmap/types.hpp"
#include "test_support.hpp"

using namespace steinmap;
using namespace steinmap::testing;

namespace {

const double kLn2Pi = std::log(2.0 * std::acos(-1.0));

TEST(LogJointStep, StandardNormalsAtTheirMeans) {
  const auto m = gaussian_chain();
  EXPECT_NEAR(log_joint_step(m, 1, v1(0.0), v1(0.0), obs1(0.0)), -kLn2Pi, 1e-12);
  EXPECT_NEAR(log_joint_step(m, 1, v1(0.0), v1(0.0), obs1(0.0)), -1.8379, 1e-4);
}

TEST(LogJointStep, NegativeInfinityPropagates) {
  auto m = gaussian_chain();
  m.likelihood_logpdf_fn = [](const Vec&, const Observation&) { return kNegInf; };
  EXPECT_EQ(log_joint_step(m, 1, v1(0.0), v1(0.0), obs1(0.0)), kNegInf);
}

TEST(LogJointStep, ScenarioAAtBothModes) {
  const UngmModel m;
  Observation z;
  z.values = Eigen::VectorXd::Constant(1, 0.05 * 64.0);
  const double expected = -0.5 * std::log(2.0 * kPi * 5.0) - 0.5 * std::log(2.0 * kPi * 10.0);
  EXPECT_NEAR(log_joint_step(m, 1, UngmModel::State(0.0), UngmModel::State(8.0), z), expected, 1e-12);
  EXPECT_NEAR(expected, -3.79389, 1e-5);
}

TEST(LogJointStep, DimensionMismatchIsAContractViolation) {
  const auto m = gaussian_chain();
  Eigen::VectorXd two = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(log_joint_step(m, 1, v1(0.0), two, obs1(0.0)), ContractViolation);
  Observation bad;
  bad.values = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(log_joint_step(m, 1, v1(0.0), v1(0.0), bad), ContractViolation);
}

TEST(GradLogJointStep, VanishesAtJointMode) {
  // prior mode 1, observation 1: joint mode x = 1
  const auto m = gaussian_chain();
  EXPECT_NEAR(grad_log_joint_step(m, 1, v1(1.0), v1(1.0), obs1(1.0))[0], 0.0, 1e-15);
}

TEST(GradLogJointStep, SumOfTwoLinearScores) {
  const auto m = gaussian_chain();
  EXPECT_DOUBLE_EQ(grad_log_joint_step(m, 1, v1(0.0), v1(1.0), obs1(0.0))[0], -2.0);
}

TEST(GradLogJointStep, MatchesFiniteDifferences) {
  const UngmModel m;
  Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    const UngmModel::State xp(4.0 * standard_normal(rng));
    const UngmModel::State x(6.0 * standard_normal(rng));
    Observation z;
    z.values = Eigen::VectorXd::Constant(1, 0.05 * x[0] * x[0] + standard_normal(rng));
    const auto g = grad_log_joint_step(m, 3, xp, x, z);
    const auto f = [&](const UngmModel::State& y) { return log_joint_step(m, 3, xp, y, z); };
    EXPECT_TRUE(check_gradient<UngmModel::State>(f, g, x).passed) << "x=" << x[0];
  }
}

TEST(GradLogJointStep, NonFiniteComponentIsReported) {
  auto m = gaussian_chain();
  m.n_x = 2;
  m.transition_grad_fn = [](int, const Vec&, const Vec&) {
    Vec g(2);
    g << 0.0, std::nan("");
    return g;
  };
  m.likelihood_grad_fn = [](const Vec&, const Observation&) { return Vec(Vec::Zero(2)); };
  try {
    grad_log_joint_step(m, 1, Vec(Vec::Zero(2)), Vec(Vec::Zero(2)), obs1(0.0));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.index(), 1);
  }
}

TEST(GaussianLogpdf, Examples) {
  EXPECT_NEAR(gaussian_logpdf(v1(0.0), v1(0.0), v1(1.0)), -0.91894, 1e-5);
  EXPECT_NEAR(gaussian_logpdf(v1(1.0), v1(0.0), v1(1.0)), -1.41894, 1e-5);
  const Eigen::Vector2d zero = Eigen::Vector2d::Zero();
  EXPECT_NEAR(gaussian_logpdf(zero, zero, Eigen::Vector2d(5.0, 10.0)),
              -0.5 * std::log(2.0 * kPi * 5.0) - 0.5 * std::log(2.0 * kPi * 10.0), 1e-12);
}

TEST(GaussianLogpdf, GridIntegratesToOne) {
  const Eigen::Vector2d mean(0.3, -0.2);
  const Eigen::Vector2d var(5.0, 10.0);
  const double step = 0.05;
  double mass = 0.0;
  for (double x = -20.0; x <= 20.0; x += step) {
    for (double y = -25.0; y <= 25.0; y += step) {
      mass += std::exp(gaussian_logpdf(Eigen::Vector2d(x, y), mean, var)) * step * step;
    }
  }
  EXPECT_NEAR(mass, 1.0, 1e-3);
}

TEST(GaussianLogpdf, RejectsNonPositiveVariance) {
  EXPECT_THROW(gaussian_logpdf(v1(0.0), v1(0.0), v1(0.0)), ContractViolation);
  EXPECT_THROW(gaussian_logpdf(v1(0.0), v1(0.0), v1(-1.0)), ContractViolation);
}

TEST(WrapAngle, Examples) {
  EXPECT_EQ(wrap_angle(0.0), 0.0);
  EXPECT_NEAR(wrap_angle(1.5 * kPi), -0.5 * kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-7.0 * kPi), -kPi, 1e-12);
  EXPECT_EQ(wrap_angle(kPi), -kPi);
}

double wrap_by_subtraction(double theta) {
  while (theta >= kPi) theta -= kTwoPi;
  while (theta < -kPi) theta += kTwoPi;
  return theta;
}

TEST(WrapAngle, RangeIdempotenceAndRepeatedSubtraction) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  for (int k = 0; k < 2000; ++k) {
    const double th = u(rng);
    const double w = wrap_angle(th);
    ASSERT_GE(w, -kPi);
    ASSERT_LT(w, kPi);
    EXPECT_EQ(wrap_angle(w), w);
    EXPECT_NEAR(w, wrap_by_subtraction(th), 1e-12);
    EXPECT_NEAR(std::remainder(w - th, kTwoPi), 0.0, 1e-12);
  }
}

TEST(FiniteDifference, QuadraticIsExact) {
  const auto g = finite_difference_grad<Vec>([](const Vec& x) { return x[0] * x[0]; }, v1(3.0), 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-8);
}

TEST(FiniteDifference, ConstantHasZeroGradient) {
  const auto g = finite_difference_grad<Vec>([](const Vec&) { return 4.2; }, Vec(Vec::Ones(3)), 1e-5);
  EXPECT_EQ(g, Vec(Vec::Zero(3)));
}

TEST(FiniteDifference, NonFiniteProbeThrows) {
  EXPECT_THROW(finite_difference_grad<Vec>([](const Vec& x) { return std::log(x[0]); }, v1(0.0), 1e-3),
               NumericalError);
}

TEST(MaskedObservations, MaskedComponentLeavesLikelihoodUnchanged) {
  RangeOnlyModel m;
  m.anchors = default_anchor_map().anchors;
  const Eigen::Vector2d x(3.1, 4.7);
  Observation a;
  a.values = Eigen::Vector3d(2.0, 5.0, 6.0);
  a.valid = {0, 1, 1};
  Observation b = a;
  b.values[0] = 1e6;
  EXPECT_EQ(m.likelihood_logpdf(x, a), m.likelihood_logpdf(x, b));
  EXPECT_EQ(m.likelihood_grad(x, a), m.likelihood_grad(x, b));
}

}  // namespace
