// Copyright 2026 The ConBandit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "conbandit/estimator.h"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "Eigen/Dense"
#include "gtest/gtest.h"

namespace conbandit {
namespace {

struct Observation {
  Eigen::VectorXd x;
  double r;
  FeedbackLevel level;
};

std::vector<Observation> RandomLog(int dim, int count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.3);
  std::vector<Observation> log;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x(dim);
    for (int j = 0; j < dim; ++j) x(j) = normal(rng);
    x.normalize();
    const bool key = coin(rng);
    if (key) x *= 0.5;
    log.push_back({x, normal(rng), key ? FeedbackLevel::kKeyTerm
                                       : FeedbackLevel::kArm});
  }
  return log;
}

double RelativeError(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

TEST(RidgeEstimatorTest, InitialState) {
  RidgeEstimator e(2, 1.0);
  EXPECT_EQ(e.m(), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(e.b(), Eigen::VectorXd::Zero(2));
  RidgeEstimator half(3, 0.5);
  EXPECT_EQ(half.m_inv(), 2.0 * Eigen::MatrixXd::Identity(3, 3));
  RidgeEstimator one(1, 4.0);
  EXPECT_EQ(one.Theta()(0), 0.0);
  EXPECT_EQ(one.num_arm_obs(), 0);
  EXPECT_EQ(one.num_key_obs(), 0);
}

TEST(RidgeEstimatorTest, RejectsBadConstruction) {
  EXPECT_THROW(RidgeEstimator(0, 1.0), std::invalid_argument);
  EXPECT_THROW(RidgeEstimator(2, 0.0), std::invalid_argument);
  EXPECT_THROW(RidgeEstimator(2, -1.0), std::invalid_argument);
}

TEST(RidgeEstimatorTest, ScalarRidge) {
  RidgeEstimator e(1, 1.0);
  e.Update(Eigen::VectorXd::Ones(1), 1.0, FeedbackLevel::kArm);
  EXPECT_DOUBLE_EQ(e.m()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(e.b()(0), 1.0);
  EXPECT_DOUBLE_EQ(e.Theta()(0), 0.5);
}

TEST(RidgeEstimatorTest, SingleArmUpdate) {
  RidgeEstimator e(2, 1.0);
  Eigen::Vector2d x(1.0, 0.0);
  e.Update(x, 2.0, FeedbackLevel::kArm);
  EXPECT_NEAR(e.Theta()(0), 1.0, 1e-15);
  EXPECT_EQ(e.Theta()(1), 0.0);
}

TEST(RidgeEstimatorTest, ZeroVectorOnlyCounts) {
  RidgeEstimator e(3, 1.0);
  e.Update(Eigen::Vector3d(0.2, 0.1, -0.3), 0.7, FeedbackLevel::kArm);
  const Eigen::MatrixXd m = e.m();
  const Eigen::VectorXd b = e.b();
  e.Update(Eigen::VectorXd::Zero(3), 5.0, FeedbackLevel::kKeyTerm);
  EXPECT_EQ(e.m(), m);
  EXPECT_EQ(e.b(), b);
  EXPECT_EQ(e.num_arm_obs(), 1);
  EXPECT_EQ(e.num_key_obs(), 1);
}

TEST(RidgeEstimatorTest, RejectsNonFiniteAndWrongDimension) {
  RidgeEstimator e(2, 1.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(e.Update(Eigen::Vector2d(nan, 0), 1.0, FeedbackLevel::kArm),
               std::invalid_argument);
  EXPECT_THROW(e.Update(Eigen::Vector2d(1, 0), nan, FeedbackLevel::kArm),
               std::invalid_argument);
  EXPECT_THROW(e.Update(Eigen::Vector3d(1, 0, 0), 1.0, FeedbackLevel::kArm),
               std::invalid_argument);
}

// Fifty random updates in d=5 against an independent dense solve.
TEST(RidgeEstimatorTest, MatchesDenseSolve) {
  std::mt19937_64 rng(5);
  const int d = 5;
  const double beta = 1.0;
  RidgeEstimator e(d, beta);
  Eigen::MatrixXd m = beta * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (const Observation& o : RandomLog(d, 50, rng)) {
    e.Update(o.x, o.r, o.level);
    m += o.x * o.x.transpose();
    b += o.r * o.x;
  }
  const Eigen::VectorXd direct = m.colPivHouseholderQr().solve(b);
  EXPECT_LT(RelativeError(e.Theta(), direct), 1e-8);
  EXPECT_LT((e.m() - m).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((e.m() * e.m_inv() - Eigen::MatrixXd::Identity(d, d))
                .cwiseAbs()
                .maxCoeff(),
            1e-6);
  EXPECT_LT((e.m() - e.m().transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

// The joint objective sum (x^T theta - r)^2 + beta |theta|^2 over both
// feedback levels, minimized by plain gradient descent.
TEST(RidgeEstimatorTest, MatchesGradientDescentMinimizer) {
  std::mt19937_64 rng(17);
  const int d = 4;
  const double beta = 0.7;
  const auto log = RandomLog(d, 40, rng);
  RidgeEstimator e(d, beta);
  for (const Observation& o : log) e.Update(o.x, o.r, o.level);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  const double step = 1.0 / (2.0 * (beta + log.size()));
  for (int iter = 0; iter < 200000; ++iter) {
    Eigen::VectorXd grad = 2.0 * beta * theta;
    for (const Observation& o : log) grad += 2.0 * (o.x.dot(theta) - o.r) * o.x;
    theta -= step * grad;
    if (grad.norm() < 1e-12) break;
  }
  EXPECT_LT((e.Theta() - theta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(RidgeEstimatorTest, PeriodicRefreshKeepsInverseAccurate) {
  std::mt19937_64 rng(23);
  const int d = 8;
  RidgeEstimator e(d, 1.0);
  for (const Observation& o : RandomLog(d, 2500, rng)) {
    e.Update(o.x, o.r, o.level);
  }
  const Eigen::MatrixXd dense = e.m().inverse();
  EXPECT_LT((e.m_inv() - dense).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(e.RefreshInverse(), RidgeEstimator::kMaxInverseDrift);
}

TEST(RidgeEstimatorTest, JsonRoundTrip) {
  std::mt19937_64 rng(29);
  RidgeEstimator e(3, 2.0);
  for (const Observation& o : RandomLog(3, 10, rng)) e.Update(o.x, o.r, o.level);
  RidgeEstimator back = RidgeEstimator::FromJson(e.ToJson());
  EXPECT_EQ(back.m(), e.m());
  EXPECT_EQ(back.b(), e.b());
  EXPECT_EQ(back.beta(), 2.0);
  EXPECT_EQ(back.num_arm_obs(), e.num_arm_obs());
  EXPECT_EQ(back.num_key_obs(), e.num_key_obs());
  EXPECT_LT(RelativeError(back.Theta(), e.Theta()), 1e-12);
}

TEST(ConfRadiusTest, IsotropicCase) {
  RidgeEstimator e(3, 4.0);
  Eigen::Vector3d x(0.0, 0.6, 0.8);
  EXPECT_NEAR(e.ConfRadius(x, 3.0), 3.0 / 2.0, 1e-15);
}

TEST(ConfRadiusTest, ShrinksAfterUpdateAlongX) {
  RidgeEstimator e(3, 1.0);
  Eigen::Vector3d x(0.0, 0.6, 0.8);
  const double before = e.ConfRadius(x, 1.0);
  e.Update(x, 0.3, FeedbackLevel::kArm);
  EXPECT_LT(e.ConfRadius(x, 1.0), before);
}

TEST(ConfRadiusTest, MatchesDenseInverse) {
  std::mt19937_64 rng(31);
  const int d = 6;
  RidgeEstimator e(d, 0.5);
  for (const Observation& o : RandomLog(d, 30, rng)) e.Update(o.x, o.r, o.level);
  const Eigen::MatrixXd inv = e.m().inverse();
  for (const Observation& o : RandomLog(d, 20, rng)) {
    const double naive = 1.7 * std::sqrt(o.x.dot(inv * o.x));
    EXPECT_NEAR(e.ConfRadius(o.x, 1.7), naive, 1e-10);
  }
}

// For any fixed direction the width never grows as updates accumulate.
TEST(ConfRadiusTest, WidthNonIncreasingProperty) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 7;
    RidgeEstimator e(d, 1.0);
    const auto probes = RandomLog(d, 5, rng);
    std::vector<double> last(probes.size(), std::numeric_limits<double>::max());
    for (const Observation& o : RandomLog(d, 100, rng)) {
      e.Update(o.x, o.r, o.level);
      for (size_t i = 0; i < probes.size(); ++i) {
        const double w = e.Width(probes[i].x);
        EXPECT_LE(w, last[i] + 1e-12);
        last[i] = w;
      }
    }
  }
}

TEST(ExplorationCoefficientTest, StartValue) {
  ConfidenceParams p{0.05, 1.0, 50};
  const long double expected = std::sqrt(2.0L * std::log(20.0L)) + 1.0L;
  EXPECT_NEAR(ExplorationCoefficient(0, 0, p), static_cast<double>(expected),
              1e-14);
}

TEST(ExplorationCoefficientTest, DeltaNearOneLimit) {
  ConfidenceParams p{1.0 - 1e-12, 2.25, 3};
  EXPECT_NEAR(ExplorationCoefficient(0, 0, p), 1.5, 1e-5);
  p.delta = 1.0;
  EXPECT_THROW(ExplorationCoefficient(0, 0, p), std::invalid_argument);
  p.delta = 0.0;
  EXPECT_THROW(ExplorationCoefficient(0, 0, p), std::invalid_argument);
}

TEST(ExplorationCoefficientTest, MatchesFormula) {
  ConfidenceParams p{0.1, 0.5, 7};
  const long double t = 300, bt = 25, d = 7, beta = 0.5;
  const long double expected =
      std::sqrt(2.0L * std::log(10.0L) +
                d * std::log(1.0L + (t + bt) / (beta * d))) +
      std::sqrt(beta);
  EXPECT_NEAR(ExplorationCoefficient(300, 25, p),
              static_cast<double>(expected), 1e-13);
}

TEST(ExplorationCoefficientTest, MonotoneInRoundAndBudget) {
  ConfidenceParams p{0.05, 1.0, 10};
  double prev = 0.0;
  for (int t = 0; t <= 2000; t += 50) {
    const double a = ExplorationCoefficient(t, 0, p);
    EXPECT_GE(a, prev);
    EXPECT_GE(ExplorationCoefficient(t, 30, p), a);
    prev = a;
  }
  EXPECT_GE(ExplorationCoefficient(1000, 0, p), ExplorationCoefficient(100, 0, p));
}

}  // namespace
}  // namespace conbandit
