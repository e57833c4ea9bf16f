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


#include "conbandit/spanner.h"

#include <cmath>
#include <random>
#include <set>

#include "Eigen/Dense"
#include "gtest/gtest.h"

namespace conbandit {
namespace {

Eigen::MatrixXd RandomUnitColumns(int dim, int count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(dim, count);
  for (int j = 0; j < count; ++j) {
    for (int i = 0; i < dim; ++i) m(i, j) = normal(rng);
    m.col(j).normalize();
  }
  return m;
}

TEST(ComputeSpannerTest, StandardBasisIsItsOwnSpanner) {
  for (int d = 1; d <= 6; ++d) {
    const Spanner s = ComputeSpanner(Eigen::MatrixXd::Identity(d, d));
    EXPECT_EQ(std::set<int>(s.member_ids.begin(), s.member_ids.end()).size(),
              static_cast<size_t>(d));
    EXPECT_EQ(s.swaps, 0);
    EXPECT_NEAR(std::abs(s.basis.determinant()), 1.0, 1e-12);
  }
}

TEST(ComputeSpannerTest, OneDimensionPicksLargestMagnitude) {
  Eigen::MatrixXd f(1, 3);
  f << 0.2, -0.9, 0.5;
  const Spanner s = ComputeSpanner(f);
  ASSERT_EQ(s.member_ids.size(), 1u);
  EXPECT_EQ(s.member_ids[0], 1);
}

TEST(ComputeSpannerTest, RandomCatalogVerifies) {
  std::mt19937_64 rng(2024);
  const Eigen::MatrixXd f = RandomUnitColumns(5, 100, rng);
  const Spanner s = ComputeSpanner(f, 1.05);
  const SpannerCheck check = VerifySpanner(s, f, 1e-6);
  EXPECT_TRUE(check.passed) << check.max_coefficient;
  EXPECT_LE(s.swaps, SpannerSwapBudget(5, 1.05));
  EXPECT_GT(SpannerMinEigenvalue(s), 0.0);
}

// Phase 1 only sees one slot at a time, so a catalog whose best first pick
// is a poor partner forces improvement swaps.
TEST(ComputeSpannerTest, SwapsWhenGreedyBasisIsPoor) {
  Eigen::MatrixXd f(2, 3);
  f << 1.0, 0.8, -0.8,
       0.0, 0.6, 0.6;
  const Spanner s = ComputeSpanner(f, 1.05);
  EXPECT_TRUE(VerifySpanner(s, f, 1e-9).passed);
  EXPECT_NEAR(std::abs(s.basis.determinant()), 0.96, 1e-12);
}

TEST(ComputeSpannerTest, RejectsRankDeficientAndBadFactor) {
  Eigen::MatrixXd f(3, 4);
  f << 1, 0, 0.6, 0.8,
       0, 1, 0.8, 0.6,
       0, 0, 0, 0;
  EXPECT_THROW(ComputeSpanner(f), std::invalid_argument);
  EXPECT_THROW(ComputeSpanner(Eigen::MatrixXd::Identity(2, 2), 1.0),
               std::invalid_argument);
  EXPECT_THROW(ComputeSpanner(Eigen::MatrixXd::Identity(2, 2), 0.5),
               std::invalid_argument);
}

TEST(SpannerSwapBudgetTest, Formula) {
  EXPECT_EQ(SpannerSwapBudget(1, 1.05), 1);
  const int expected =
      static_cast<int>(std::ceil(10 * std::log(10.0) / std::log(1.05))) + 10;
  EXPECT_EQ(SpannerSwapBudget(10, 1.05), expected);
}

TEST(VerifySpannerTest, IdentityBasisCoefficients) {
  Eigen::MatrixXd f(2, 3);
  f << 1, 0, 0.3,
       0, 1, -0.7;
  const Spanner s = SpannerFromMembers(f, {0, 1}, 1.05);
  const SpannerCheck check = VerifySpanner(s, f, 1e-6);
  EXPECT_TRUE(check.passed);
  EXPECT_NEAR(check.max_coefficient, 1.0, 1e-15);
  const Eigen::Vector2d c = s.basis.partialPivLu().solve(f.col(2));
  EXPECT_NEAR(c(0), 0.3, 1e-15);
  EXPECT_NEAR(c(1), -0.7, 1e-15);
}

TEST(VerifySpannerTest, MemberHasUnitCoefficients) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd f = RandomUnitColumns(4, 30, rng);
  const Spanner s = ComputeSpanner(f);
  for (int i = 0; i < 4; ++i) {
    const Eigen::VectorXd c =
        s.basis.partialPivLu().solve(f.col(s.member_ids[i]));
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(c(j), i == j ? 1.0 : 0.0, 1e-12);
  }
}

TEST(VerifySpannerTest, AdversarialCoefficientFails) {
  Eigen::MatrixXd f(2, 3);
  f << 1, 0, 1.5,
       0, 1, 0.2;
  const Spanner fixed = SpannerFromMembers(f, {0, 1}, 1.05);
  const SpannerCheck check = VerifySpanner(fixed, f, 1e-6);
  EXPECT_FALSE(check.passed);
  EXPECT_NEAR(check.max_coefficient, 1.5, 1e-12);
}

TEST(SpannerFromMembersTest, RejectsSingularBasis) {
  Eigen::MatrixXd f(2, 2);
  f << 1, 1,
       0, 0;
  EXPECT_THROW(SpannerFromMembers(f, {0, 1}, 1.05), std::invalid_argument);
}

TEST(SpannerMinEigenvalueTest, StandardBasis) {
  for (int d = 1; d <= 5; ++d) {
    const Spanner s = ComputeSpanner(Eigen::MatrixXd::Identity(d, d));
    EXPECT_NEAR(SpannerMinEigenvalue(s), 1.0 / d, 1e-14);
  }
}

// (1/2)[[2, e], [e, e^2]] has the closed-form smallest eigenvalue
// (tr - sqrt(tr^2 - 4 det)) / 2.
TEST(SpannerMinEigenvalueTest, NearlyParallelPairClosedForm) {
  double prev = 1.0;
  for (double eps : {0.5, 0.1, 0.01, 1e-3}) {
    Eigen::MatrixXd f(2, 2);
    f << 1, 1,
         0, eps;
    const Spanner s = SpannerFromMembers(f, {0, 1}, 1.05);
    const long double e = eps;
    const long double tr = (2.0L + e * e) / 2.0L;
    const long double det = e * e / 4.0L;
    const long double expected = (tr - std::sqrt(tr * tr - 4.0L * det)) / 2.0L;
    const double got = SpannerMinEigenvalue(s);
    EXPECT_NEAR(got, static_cast<double>(expected),
                1e-12 * std::max(1.0, static_cast<double>(expected)) + 1e-15);
    EXPECT_GT(got, 0.0);
    EXPECT_LT(got, prev);
    prev = got;
  }
}

TEST(SpannerMinEigenvalueTest, QuadraticHomogeneity) {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd f = RandomUnitColumns(3, 20, rng);
  const Spanner s = ComputeSpanner(f);
  Spanner half = s;
  half.basis *= 0.5;
  EXPECT_NEAR(SpannerMinEigenvalue(half), SpannerMinEigenvalue(s) / 4.0, 1e-15);
}

TEST(NormCeilingOnsetRoundTest, BoundaryValue) {
  const long double expected = 256.0L * std::log(1024.0L);
  EXPECT_NEAR(NormCeilingOnsetRound(1.0, 1.0, 0.125, 1),
              static_cast<double>(expected), 1e-10);
}

TEST(NormCeilingOnsetRoundTest, Monotonicity) {
  const double base = NormCeilingOnsetRound(0.5, 0.1, 0.05, 5);
  EXPECT_LT(NormCeilingOnsetRound(0.5, 0.2, 0.05, 5), base);
  EXPECT_NEAR(NormCeilingOnsetRound(0.25, 0.1, 0.05, 5), 2.0 * base, 1e-9 * base);
}

TEST(NormCeilingOnsetRoundTest, RejectsOutOfRange) {
  EXPECT_THROW(NormCeilingOnsetRound(0.5, 0.1, 0.2, 5), std::invalid_argument);
  EXPECT_THROW(NormCeilingOnsetRound(0.5, 0.1, 0.0, 5), std::invalid_argument);
  EXPECT_THROW(NormCeilingOnsetRound(0.0, 0.1, 0.1, 5), std::invalid_argument);
  EXPECT_THROW(NormCeilingOnsetRound(1.5, 0.1, 0.1, 5), std::invalid_argument);
  EXPECT_THROW(NormCeilingOnsetRound(0.5, 0.0, 0.1, 5), std::invalid_argument);
}

TEST(SpannerJsonTest, Fields) {
  const Spanner s = ComputeSpanner(Eigen::MatrixXd::Identity(3, 3), 1.1);
  const auto j = SpannerToJson(s);
  EXPECT_EQ(j.at("member_ids").size(), 3u);
  EXPECT_DOUBLE_EQ(j.at("C").get<double>(), 1.1);
}

}  // namespace
}  // namespace conbandit
