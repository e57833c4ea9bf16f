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


#include "conbandit/env.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "Eigen/Dense"
#include "gtest/gtest.h"

#ifndef CONBANDIT_TEST_DATA_DIR
#define CONBANDIT_TEST_DATA_DIR "tests/data"
#endif

namespace conbandit {
namespace {

const std::string kFixture =
    std::string(CONBANDIT_TEST_DATA_DIR) + "/hetrec_fixture.dat";

SyntheticConfig SmallConfig() {
  SyntheticConfig c;
  c.num_arms = 60;
  c.num_key_terms = 15;
  c.dim = 4;
  c.num_users = 3;
  c.pool_size = 10;
  c.seed = 42;
  return c;
}

Environment Noiseless(Environment env) {
  env.noise_sigma = 0.0;
  return env;
}

// --- Synthetic ----------------------------------------------------------------

TEST(GenerateSyntheticTest, ForcedTopology) {
  SyntheticConfig c;
  c.num_arms = 1;
  c.num_key_terms = 1;
  c.nk_low = c.nk_high = 1;
  c.dim = 3;
  c.num_users = 1;
  c.pool_size = 1;
  const Environment env = GenerateSynthetic(c);
  ASSERT_EQ(env.graph->entries().size(), 1u);
  EXPECT_EQ(env.graph->entries()[0].arm, 0);
  EXPECT_EQ(env.graph->entries()[0].key_term, 0);
  EXPECT_EQ(env.graph->entries()[0].weight, 1.0);
  EXPECT_TRUE(env.key_terms->feature(0).isApprox(env.arms->feature(0), 1e-15));
}

TEST(GenerateSyntheticTest, NormsAndGraphInvariants) {
  const Environment env = GenerateSynthetic(SyntheticConfig{});
  for (int a = 0; a < env.arms->size(); ++a) {
    EXPECT_NEAR(env.arms->feature(a).norm(), 1.0, 1e-9);
  }
  for (const UserProfile& u : env.users) EXPECT_NEAR(u.theta.norm(), 1.0, 1e-9);
  EXPECT_TRUE(ValidateGraph(*env.graph).empty());
  for (int k = 0; k < env.key_terms->size(); ++k) {
    EXPECT_LE(env.key_terms->feature(k).norm(), 1.0 + 1e-9);
  }
  EXPECT_NO_THROW(env.Validate());
}

TEST(GenerateSyntheticTest, KeyTermDegreesWithinRange) {
  SyntheticConfig c = SmallConfig();
  c.nk_low = 2;
  c.nk_high = 4;
  const Environment env = GenerateSynthetic(c);
  std::map<int, std::set<int>> arms_of_key;
  for (const WeightEntry& e : env.graph->entries()) arms_of_key[e.key_term].insert(e.arm);
  for (const auto& [k, arms] : arms_of_key) {
    // Repair may add at most one arm per uncovered arm.
    EXPECT_GE(arms.size(), 2u);
  }
  std::map<int, int> keys_of_arm;
  for (const WeightEntry& e : env.graph->entries()) ++keys_of_arm[e.arm];
  EXPECT_EQ(static_cast<int>(keys_of_arm.size()), c.num_arms);
}

TEST(GenerateSyntheticTest, DeterministicSerialization) {
  const auto a = EnvironmentToJson(GenerateSynthetic(SmallConfig())).dump();
  const auto b = EnvironmentToJson(GenerateSynthetic(SmallConfig())).dump();
  EXPECT_EQ(a, b);
  SyntheticConfig other = SmallConfig();
  other.seed = 43;
  EXPECT_NE(a, EnvironmentToJson(GenerateSynthetic(other)).dump());
}

TEST(GenerateSyntheticTest, RejectsInvalidConfig) {
  SyntheticConfig c = SmallConfig();
  c.nk_high = c.num_arms + 1;
  EXPECT_THROW(GenerateSynthetic(c), std::invalid_argument);
  c = SmallConfig();
  c.num_users = 0;
  EXPECT_THROW(GenerateSynthetic(c), std::invalid_argument);
  c = SmallConfig();
  c.noise_sigma = -0.1;
  EXPECT_THROW(GenerateSynthetic(c), std::invalid_argument);
}

TEST(EnvironmentJsonTest, RoundTrip) {
  const Environment env = GenerateSynthetic(SmallConfig());
  const auto path =
      (std::filesystem::temp_directory_path() / "conbandit_env_test.json").string();
  SaveEnvironment(env, path);
  const Environment back = LoadEnvironment(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.arms->features(), env.arms->features());
  EXPECT_EQ(back.key_terms->features(), env.key_terms->features());
  ASSERT_EQ(back.users.size(), env.users.size());
  EXPECT_EQ(back.users[1].theta, env.users[1].theta);
  ASSERT_NE(back.spanner, nullptr);
  EXPECT_EQ(back.spanner->member_ids, env.spanner->member_ids);
  EXPECT_EQ(EnvironmentToJson(back).dump(), EnvironmentToJson(env).dump());
}

// --- Rewards ------------------------------------------------------------------

TEST(RewardTest, NoiselessAlignmentAndOrthogonality) {
  Environment env = Noiseless(GenerateSynthetic(SmallConfig()));
  Rng rng(1);
  UserProfile aligned{0, env.arms->feature(3)};
  EXPECT_NEAR(Reward(env, aligned, 3, rng), 1.0, 1e-12);
  Eigen::VectorXd x = env.arms->feature(3);
  Eigen::VectorXd orth = Eigen::VectorXd::Unit(x.size(), 0) - x(0) * x;
  orth.normalize();
  UserProfile perpendicular{1, orth};
  EXPECT_NEAR(Reward(env, perpendicular, 3, rng), 0.0, 1e-12);
}

TEST(RewardTest, NoisyMeanConcentrates) {
  Environment env = GenerateSynthetic(SmallConfig());
  env.noise_sigma = 0.1;
  Rng rng(7);
  const UserProfile& user = env.users[0];
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) sum += Reward(env, user, 5, rng);
  EXPECT_NEAR(sum / 10000, env.arms->feature(5).dot(user.theta), 0.004);
}

TEST(KeyTermFeedbackTest, SingleArmKeyTermMatchesReward) {
  SyntheticConfig c;
  c.num_arms = c.num_key_terms = 1;
  c.nk_low = c.nk_high = 1;
  c.num_users = 1;
  c.pool_size = 1;
  c.dim = 5;
  Environment env = Noiseless(GenerateSynthetic(c));
  Rng rng(1);
  EXPECT_DOUBLE_EQ(KeyTermFeedback(env, env.users[0], 0, rng),
                   Reward(env, env.users[0], 0, rng));
}

TEST(KeyTermFeedbackTest, NoiselessIsDotProduct) {
  Environment env = Noiseless(GenerateSynthetic(SmallConfig()));
  Rng rng(1);
  for (int k = 0; k < env.key_terms->size(); ++k) {
    double dot = 0.0;
    for (int i = 0; i < env.dim(); ++i) {
      dot += env.key_terms->feature(k)(i) * env.users[2].theta(i);
    }
    EXPECT_NEAR(KeyTermFeedback(env, env.users[2], k, rng), dot, 1e-14);
    EXPECT_EQ(ExpectedKeyTermFeedback(env, env.users[2], k),
              KeyTermFeedback(env, env.users[2], k, rng));
  }
}

TEST(KeyTermFeedbackTest, ZeroThetaIsPureNoise) {
  Environment env = GenerateSynthetic(SmallConfig());
  UserProfile zero{0, Eigen::VectorXd::Zero(env.dim())};
  Rng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) sum += KeyTermFeedback(env, zero, 2, rng);
  EXPECT_NEAR(sum / 10000, 0.0, 0.004);
}

// --- Sampling -------------------------------------------------------------------

TEST(SamplePoolTest, FullCatalog) {
  SyntheticConfig c = SmallConfig();
  c.pool_size = c.num_arms;
  Environment env = GenerateSynthetic(c);
  Rng rng(2);
  std::vector<ArmId> pool = SamplePool(env, 1, rng);
  std::sort(pool.begin(), pool.end());
  for (int a = 0; a < c.num_arms; ++a) EXPECT_EQ(pool[a], a);
}

TEST(SamplePoolTest, DistinctAndUniform) {
  SyntheticConfig c = SmallConfig();
  c.num_arms = 100;
  c.pool_size = 10;
  Environment env = GenerateSynthetic(c);
  Rng rng(4);
  std::vector<int> counts(100, 0);
  for (int t = 1; t <= 10000; ++t) {
    const auto pool = SamplePool(env, t, rng);
    ASSERT_EQ(pool.size(), 10u);
    EXPECT_EQ(std::set<int>(pool.begin(), pool.end()).size(), 10u);
    for (int a : pool) ++counts[a];
  }
  for (int a = 0; a < 100; ++a) EXPECT_NEAR(counts[a], 1000, 110) << "arm " << a;
}

TEST(SamplePoolTest, RejectsOversizedPool) {
  Environment env = GenerateSynthetic(SmallConfig());
  env.pool_size = env.arms->size() + 1;
  Rng rng(1);
  EXPECT_THROW(SamplePool(env, 1, rng), std::invalid_argument);
  EXPECT_THROW(env.Validate(), std::invalid_argument);
}

TEST(SamplePoolTest, KeyPoolOnlyWhenEnabled) {
  Environment env = GenerateSynthetic(SmallConfig());
  Rng rng(1);
  EXPECT_THROW(SampleKeyPool(env, 1, rng), std::logic_error);
  env.key_pool_size = 6;
  const auto keys = SampleKeyPool(env, 1, rng);
  EXPECT_EQ(std::set<int>(keys.begin(), keys.end()).size(), 6u);
  for (int k : keys) EXPECT_LT(k, env.key_terms->size());
}

TEST(SampleWithoutReplacementTest, BothRegimesAreUniform) {
  Rng rng(5);
  for (int count : {2, 30}) {
    std::vector<int> hits(40, 0);
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) {
      for (int v : SampleWithoutReplacement(40, count, rng)) ++hits[v];
    }
    const double expected = trials * count / 40.0;
    const double sd = std::sqrt(expected * (1.0 - count / 40.0));
    for (int v = 0; v < 40; ++v) EXPECT_NEAR(hits[v], expected, 4.5 * sd);
  }
}

// --- Best arm -------------------------------------------------------------------

TEST(BestArmTest, SingletonAndSelf) {
  Environment env = GenerateSynthetic(SmallConfig());
  const UserProfile& user = env.users[0];
  const std::vector<int> single = {9};
  const BestArmResult r = BestArm(env, user, single);
  EXPECT_EQ(r.arm, 9);
  EXPECT_DOUBLE_EQ(r.value, env.arms->feature(9).dot(user.theta));
  UserProfile self{0, env.arms->feature(4)};
  const std::vector<int> pool = {1, 4, 7, 20};
  EXPECT_EQ(BestArm(env, self, pool).arm, 4);
  EXPECT_NEAR(BestArm(env, self, pool).value, 1.0, 1e-12);
  EXPECT_THROW(BestArm(env, user, std::vector<int>{}), std::invalid_argument);
}

TEST(BestArmTest, MatchesScanOracle) {
  Environment env = GenerateSynthetic(SmallConfig());
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pool = SamplePool(env, trial, rng);
    const UserProfile& user = env.users[trial % env.users.size()];
    int best = -1;
    double value = -1e300;
    for (int a : pool) {
      double v = 0.0;
      for (int i = 0; i < env.dim(); ++i) v += env.arms->features()(i, a) * user.theta(i);
      if (v > value + 1e-12 || (std::abs(v - value) <= 1e-12 && a < best)) {
        best = a;
        value = v;
      }
    }
    const BestArmResult r = BestArm(env, user, pool);
    EXPECT_EQ(r.arm, best);
    EXPECT_NEAR(r.value, value, 1e-12);
  }
}

// --- HetRec parsing -------------------------------------------------------------

TEST(ParseHetRecTest, DeduplicatesTriples) {
  std::istringstream in(
      "userID\tartistID\ttagID\ttimestamp\n"
      "2\t52\t13\t1238536800000\n"
      "2\t52\t13\t1238536800000\n"
      "2\t52\t15\t1238536800000\n");
  const HetRecDataset data = ParseHetRec(in, HetRecSource::kLastFm);
  EXPECT_EQ(data.records.size(), 2u);
  EXPECT_EQ(data.duplicates_removed, 1u);
  EXPECT_EQ(data.lines_read, 3u);
}

TEST(ParseHetRecTest, HeaderOnlyIsEmpty) {
  std::istringstream in("userID\tmovieID\ttagID\ttimestamp\n");
  const HetRecDataset data = ParseHetRec(in, HetRecSource::kMovieLens);
  EXPECT_TRUE(data.records.empty());
}

TEST(ParseHetRecTest, NonNumericNamesLine) {
  std::istringstream in(
      "userID\tartistID\ttagID\n"
      "2\t52\t13\n"
      "2\tabc\t13\n");
  try {
    ParseHetRec(in, HetRecSource::kLastFm);
    FAIL() << "expected HetRecFormatError";
  } catch (const HetRecFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseHetRecTest, MissingColumnRejected) {
  std::istringstream in("userID\ttagID\n1\t2\n");
  EXPECT_THROW(ParseHetRec(in, HetRecSource::kLastFm), HetRecFormatError);
  std::istringstream wrong_source("userID\tartistID\ttagID\n1\t2\t3\n");
  EXPECT_THROW(ParseHetRec(wrong_source, HetRecSource::kMovieLens),
               HetRecFormatError);
}

TEST(ParseHetRecTest, ColumnOrderAndCarriageReturns) {
  std::istringstream in("tagID\tuserID\tmovieID\r\n7\t1\t30\r\n\r\n");
  const HetRecDataset data = ParseHetRec(in, HetRecSource::kMovieLens);
  ASSERT_EQ(data.records.size(), 1u);
  EXPECT_EQ(data.records[0], (TaggingRecord{1, 30, 7}));
}

TEST(ParseHetRecTest, RejectsShortRowAndNegativeId) {
  std::istringstream short_row("userID\tartistID\ttagID\n1\t2\n");
  EXPECT_THROW(ParseHetRec(short_row, HetRecSource::kLastFm), HetRecFormatError);
  std::istringstream negative("userID\tartistID\ttagID\n1\t-2\t3\n");
  EXPECT_THROW(ParseHetRec(negative, HetRecSource::kLastFm), HetRecFormatError);
}

TEST(LoadHetRecTest, FixtureAndMissingFile) {
  const HetRecDataset data = LoadHetRec(kFixture, HetRecSource::kLastFm);
  EXPECT_GT(data.records.size(), 500u);
  EXPECT_EQ(data.duplicates_removed, 5u);
  EXPECT_TRUE(std::is_sorted(data.records.begin(), data.records.end()));
  EXPECT_THROW(LoadHetRec("/nonexistent/file.dat", HetRecSource::kLastFm),
               std::runtime_error);
}

// --- Truncated SVD --------------------------------------------------------------

TEST(TruncatedSvdTest, IdentityIsExact) {
  const TruncatedSvd svd = ComputeTruncatedSvd(Eigen::MatrixXd::Identity(2, 2), 2, 1);
  const Eigen::MatrixXd rebuilt =
      svd.left * svd.singular.asDiagonal() * svd.right.transpose();
  EXPECT_LT((rebuilt - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(TruncatedSvdTest, RejectsRankDeficient) {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 5);
  EXPECT_THROW(ComputeTruncatedSvd(ones, 2, 1), std::invalid_argument);
  EXPECT_THROW(ComputeTruncatedSvd(ones, 6, 1), std::invalid_argument);
}

// Eckart-Young against Eigen's two-sided Jacobi SVD.
TEST(TruncatedSvdTest, EckartYoungOnRandomBinary) {
  std::mt19937_64 rng(50);
  std::bernoulli_distribution coin(0.2);
  Eigen::MatrixXd f(50, 80);
  for (int i = 0; i < f.rows(); ++i) {
    for (int j = 0; j < f.cols(); ++j) f(i, j) = coin(rng) ? 1.0 : 0.0;
  }
  const int d = 10;
  const TruncatedSvd svd = ComputeTruncatedSvd(f, d, 3);
  const Eigen::JacobiSVD<Eigen::MatrixXd> full(f);
  const Eigen::VectorXd s = full.singularValues();
  const double discarded = s.tail(s.size() - d).squaredNorm();
  const Eigen::MatrixXd rebuilt =
      svd.left * svd.singular.asDiagonal() * svd.right.transpose();
  const double error = (f - rebuilt).squaredNorm();
  EXPECT_NEAR(error, discarded, 1e-6 * discarded);
  for (int i = 0; i < d; ++i) EXPECT_NEAR(svd.singular(i), s(i), 1e-8 * s(0));
  EXPECT_LT((svd.left.transpose() * svd.left - Eigen::MatrixXd::Identity(d, d))
                .cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((svd.right.transpose() * svd.right - Eigen::MatrixXd::Identity(d, d))
                .cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_GE(svd.iterations, 20);
}

// --- Real environment -----------------------------------------------------------

TEST(BuildRealEnvTest, RankOneFixture) {
  HetRecDataset data;
  data.records = {{1, 10, 5}, {1, 11, 5}, {2, 10, 6}, {2, 11, 6}};
  RealEnvConfig c;
  c.num_arms = 2;
  c.num_users = 2;
  c.dim = 1;
  c.pool_size = 2;
  const RealEnvBuild build = BuildRealEnv(data, c);
  EXPECT_NEAR(build.env.arms->feature(0)(0), build.env.arms->feature(1)(0), 1e-12);
  const auto& u = build.env.users;
  EXPECT_NEAR(std::abs(u[0].theta.normalized().dot(u[1].theta.normalized())), 1.0,
              1e-12);
}

TEST(BuildRealEnvTest, IdentityFeedbackReconstructs) {
  HetRecDataset data;
  data.records = {{1, 10, 5}, {2, 11, 6}};
  RealEnvConfig c;
  c.num_arms = 2;
  c.num_users = 2;
  c.dim = 2;
  c.pool_size = 2;
  const RealEnvBuild build = BuildRealEnv(data, c);
  const Eigen::MatrixXd rebuilt =
      build.svd.left * build.svd.singular.asDiagonal() * build.svd.right.transpose();
  EXPECT_LT((rebuilt - build.feedback).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(build.feedback, Eigen::MatrixXd::Identity(2, 2));
}

TEST(BuildRealEnvTest, FixtureInvariants) {
  const HetRecDataset data = LoadHetRec(kFixture, HetRecSource::kLastFm);
  RealEnvConfig c;
  c.num_arms = 80;
  c.num_users = 50;
  c.dim = 10;
  c.pool_size = 20;
  c.max_tags_per_arm = 3;
  const RealEnvBuild build = BuildRealEnv(data, c);
  const Environment& env = build.env;
  EXPECT_EQ(env.arms->size(), 80);
  EXPECT_EQ(env.users.size(), 50u);
  for (int a = 0; a < env.arms->size(); ++a) {
    EXPECT_NEAR(env.arms->feature(a).norm(), 1.0, 1e-9);
  }
  for (const UserProfile& u : env.users) EXPECT_LE(u.theta.norm(), 1.0 + 1e-9);
  EXPECT_TRUE(ValidateGraph(*env.graph).empty());
  std::map<int, int> tags_per_arm;
  for (const WeightEntry& e : env.graph->entries()) ++tags_per_arm[e.arm];
  for (const auto& [arm, n] : tags_per_arm) EXPECT_LE(n, 3);
  EXPECT_EQ(build.tag_ids.size(), static_cast<size_t>(env.key_terms->size()));
  EXPECT_TRUE(std::is_sorted(build.tag_ids.begin(), build.tag_ids.end()));

  const RealEnvBuild again = BuildRealEnv(data, c);
  EXPECT_EQ(EnvironmentToJson(again.env).dump(), EnvironmentToJson(env).dump());
  EXPECT_EQ(again.item_ids, build.item_ids);
}

TEST(BuildRealEnvTest, TopSelectionPrefersTaggedItemsThenLowId) {
  HetRecDataset data;
  data.records = {{1, 30, 1}, {1, 30, 2}, {1, 20, 1}, {2, 10, 1}, {2, 20, 3}};
  RealEnvConfig c;
  c.num_arms = 2;
  c.num_users = 2;
  c.dim = 1;
  c.pool_size = 1;
  const RealEnvBuild build = BuildRealEnv(data, c);
  // Item 30 and item 20 carry two distinct tags each; item 10 only one.
  EXPECT_EQ(build.item_ids, (std::vector<std::int64_t>{20, 30}));
}

TEST(BuildRealEnvTest, RejectsOversizedRequests) {
  const HetRecDataset data = LoadHetRec(kFixture, HetRecSource::kLastFm);
  RealEnvConfig c;
  c.num_arms = 81;
  c.num_users = 50;
  EXPECT_THROW(BuildRealEnv(data, c), std::invalid_argument);
  c.num_arms = 80;
  c.dim = 51;
  EXPECT_THROW(BuildRealEnv(data, c), std::invalid_argument);
  EXPECT_THROW(BuildRealEnv(HetRecDataset{}, RealEnvConfig{}), std::invalid_argument);
}

}  // namespace
}  // namespace conbandit
