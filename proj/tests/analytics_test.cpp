#include <cmath>

#include <gtest/gtest.h>

#include "blockreduce/analytics.hpp"
#include "blockreduce/error.hpp"

namespace blockreduce {
namespace {

// Reference values computed independently with 30-digit arithmetic.
TEST(CD, MatchesReferenceValues) {
  EXPECT_NEAR(c_d(3), 4.29816065090768, 1e-12);
  EXPECT_NEAR(c_d(4), 3.33531833657198, 1e-12);
  EXPECT_NEAR(c_d(8), 2.72304975406877, 1e-12);
  EXPECT_NEAR(c_d(16), 2.55922875071568, 1e-12);
  EXPECT_NEAR(c_d(1000000), 2.44269662226190, 1e-10);
}

TEST(CD, ApproachesOnePlusReciprocalLnTwo) {
  const double limit = 1.0 + 1.0 / std::log(2.0);
  EXPECT_NEAR(limit, 2.44269504088896, 1e-13);
  EXPECT_NEAR(c_d(1000000), limit, 1e-5);
  EXPECT_GT(c_d(1000000), limit);
}

TEST(CD, DecreasesInDegree) {
  for (int d = 3; d < 64; ++d) EXPECT_GT(c_d(d), c_d(d + 1)) << d;
}

TEST(CD, NeedsDegreeThree) {
  try {
    c_d(2);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain_error);
  }
}

TEST(DelayBound, ReferenceValues) {
  EXPECT_NEAR(delay_bound(1.0, 8, 1000), 18.81016131, 1e-8);
  EXPECT_NEAR(delay_bound(1.0, 8, 500), 16.92268705, 1e-8);
  EXPECT_NEAR(delay_bound(1.0, 8, 2000), 20.69763557, 1e-8);
  EXPECT_NEAR(delay_bound(2.5, 8, 1000), 2.5 * 18.81016131, 1e-7);
}

TEST(DelayBound, SubnetworkBoundDropsByLnQ) {
  const double full = delay_bound(1.0, 8, 1000);
  for (int q : {1, 2, 4, 8}) {
    EXPECT_NEAR(delay_bound(1.0, 8, 1000.0 / q), full - c_d(8) * std::log(q), 1e-12) << q;
  }
  EXPECT_THROW(delay_bound(1.0, 8, 1.0), Error);
}

TEST(Efficiency, ClosedForms) {
  EXPECT_DOUBLE_EQ(efficiency(0.0, 5.0), 1.0);
  EXPECT_DOUBLE_EQ(efficiency(1.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(efficiency(1.0, 1.0), 0.5);
  EXPECT_NEAR(efficiency(0.05, 1.0), 0.952380952380952, 1e-15);
  EXPECT_NEAR(efficiency(0.2, 1.0), 0.833333333333333, 1e-15);
  EXPECT_NEAR(efficiency(0.1, 1.0, 0.3), 0.654205607476636, 1e-15);
  EXPECT_NEAR(effective_rate(0.2, 1.0), 0.2 / 1.2, 1e-15);
  EXPECT_THROW(efficiency(-1.0, 1.0), Error);
  EXPECT_THROW(efficiency(1.0, 1.0, 1.0), Error);
}

TEST(ScalingCurve, BaselineAndSuperlinearity) {
  ModelParams p;
  p.d = 8;
  p.nodes = 1000;
  p.delta = 1.0;
  p.lambda1 = 0.01;
  const auto curve = scaling_curve(p, {1, 2, 4, 8});
  ASSERT_EQ(curve.size(), 4u);
  EXPECT_EQ(curve[0].q, 1u);
  EXPECT_DOUBLE_EQ(curve[0].delay_sub, curve[0].delay_root);
  EXPECT_DOUBLE_EQ(curve[0].lambda_r, p.lambda1);
  EXPECT_NEAR(curve[0].lambda_star, effective_rate(p.lambda1, curve[0].delay_root), 1e-15);
  EXPECT_DOUBLE_EQ(curve[0].superlinearity, 1.0);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto& pt = curve[i];
    // Efficiency is held at the root's, so λ_r Δ_r = λ_1 Δ_1.
    EXPECT_NEAR(pt.lambda_r * pt.delay_sub, p.lambda1 * pt.delay_root, 1e-12);
    EXPECT_GT(pt.aggregate, pt.q * curve[0].lambda_star);
    EXPECT_GT(pt.superlinearity, curve[i - 1].superlinearity);
  }
  // q = 4: aggregate = 4 λ_1* Δ_1 / (Δ_1 - C_d ln 4).
  const double d1 = delay_bound(1.0, 8, 1000);
  EXPECT_NEAR(curve[2].superlinearity, d1 / (d1 - c_d(8) * std::log(4.0)), 1e-12);
}

TEST(ScalingCurve, TooManyChainsIsAnError) {
  ModelParams p;
  p.nodes = 1000;
  try {
    scaling_curve(p, {1, 2000});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::q_too_large);
  }
}

TEST(ModelParams, Validation) {
  ModelParams p;
  EXPECT_NO_THROW(p.validate());
  p.d = 2;
  EXPECT_THROW(p.validate(), Error);
  p = ModelParams{};
  p.beta = 1.0;
  EXPECT_THROW(p.validate(), Error);
  p = ModelParams{};
  p.delta_r = 0.5;
  EXPECT_DOUBLE_EQ(p.delta_sub(), 0.5);
}

}  // namespace
}  // namespace blockreduce
