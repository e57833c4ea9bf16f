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

// Ground-truth environments: synthetic generation, HetRec tag-data
// ingestion, reward/feedback oracles and per-round candidate sampling.

#ifndef CONBANDIT_ENV_H_
#define CONBANDIT_ENV_H_

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "Eigen/Core"
#include "conbandit/model.h"
#include "conbandit/spanner.h"
#include "nlohmann/json.hpp"

namespace conbandit {

using Rng = std::mt19937_64;

struct Environment {
  std::shared_ptr<const ArmCatalog> arms;
  std::shared_ptr<const KeyTermGraph> graph;
  std::shared_ptr<const KeyTermCatalog> key_terms;
  std::vector<UserProfile> users;
  double noise_sigma = 0.1;
  int pool_size = 20;
  // Set for the time-varying key-term mode.
  std::optional<int> key_pool_size;
  std::uint64_t seed = 0;
  // Null when the key-term features do not span R^d.
  std::shared_ptr<const Spanner> spanner;
  nlohmann::json provenance;

  int dim() const { return arms->dim(); }
  // Throws std::invalid_argument when any model invariant fails.
  void Validate() const;
};

struct SyntheticConfig {
  int num_arms = 500;
  int num_key_terms = 100;
  int dim = 10;
  int num_users = 20;
  // Each key-term attaches to n_k ~ U{nk_low..nk_high} arms.
  int nk_low = 1;
  int nk_high = 10;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;
  int pool_size = 20;
  std::optional<int> key_pool_size;
  double spanner_c = kDefaultSpannerFactor;

  void Validate() const;
  nlohmann::json ToJson() const;
  static SyntheticConfig FromJson(const nlohmann::json& j);
};

// Gaussian arm and user vectors normalized to the unit sphere, a random
// bipartite graph with equal per-arm weights, derived key-term features and
// (when they span R^d) a precomputed spanner. Arms left without key-terms
// are attached to one uniformly chosen key-term. Deterministic given seed.
Environment GenerateSynthetic(const SyntheticConfig& config);

double ExpectedReward(const Environment& env, const UserProfile& user,
                      ArmId arm);
double ExpectedKeyTermFeedback(const Environment& env, const UserProfile& user,
                               KeyTermId key);
// Expected value plus N(0, noise_sigma^2) noise.
double Reward(const Environment& env, const UserProfile& user, ArmId arm,
              Rng& rng);
double KeyTermFeedback(const Environment& env, const UserProfile& user,
                       KeyTermId key, Rng& rng);

// pool_size distinct arm ids, uniform without replacement.
std::vector<ArmId> SamplePool(const Environment& env, std::int64_t t,
                              Rng& rng);
// key_pool_size distinct key-term ids; throws if the mode is not enabled.
std::vector<KeyTermId> SampleKeyPool(const Environment& env, std::int64_t t,
                                     Rng& rng);
// `count` distinct values from [0, n).
std::vector<int> SampleWithoutReplacement(int n, int count, Rng& rng);

struct BestArmResult {
  ArmId arm = -1;
  double value = 0.0;
};

// Noiseless argmax over the pool, lowest id on ties.
BestArmResult BestArm(const Environment& env, const UserProfile& user,
                      std::span<const ArmId> pool);

nlohmann::json EnvironmentToJson(const Environment& env);
// Recomputes key-term features and rebuilds the cached spanner.
Environment EnvironmentFromJson(const nlohmann::json& j);
void SaveEnvironment(const Environment& env, const std::string& path);
Environment LoadEnvironment(const std::string& path);

// --- HetRec 2011 tag data -------------------------------------------------

enum class HetRecSource { kLastFm, kMovieLens };

HetRecSource ParseHetRecSource(const std::string& name);

class HetRecFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TaggingRecord {
  std::int64_t user = 0;
  std::int64_t item = 0;
  std::int64_t tag = 0;

  auto operator<=>(const TaggingRecord&) const = default;
};

struct HetRecDataset {
  HetRecSource source = HetRecSource::kLastFm;
  // Sorted by (user, item, tag), no duplicates.
  std::vector<TaggingRecord> records;
  std::size_t lines_read = 0;
  std::size_t duplicates_removed = 0;
};

// Tab-separated with a header naming userID, artistID|movieID and tagID;
// extra columns (timestamps) are ignored. Throws HetRecFormatError naming
// the offending line.
HetRecDataset ParseHetRec(std::istream& in, HetRecSource source);
HetRecDataset LoadHetRec(const std::string& path, HetRecSource source);

struct TruncatedSvd {
  Eigen::MatrixXd left;           // m x d, orthonormal columns
  Eigen::VectorXd singular;       // d, descending
  Eigen::MatrixXd right;          // n x d, orthonormal columns
  int iterations = 0;
};

// Rank-`rank` SVD by block power (subspace) iteration with Rayleigh-Ritz
// extraction. Runs at least `min_iterations` and stops once the leading
// singular values settle. Throws std::invalid_argument if the matrix has
// numerical rank below `rank`.
TruncatedSvd ComputeTruncatedSvd(const Eigen::MatrixXd& matrix, int rank,
                                 std::uint64_t seed, int oversampling = 2,
                                 int min_iterations = 20,
                                 int max_iterations = 2000);

struct RealEnvConfig {
  int num_arms = 2000;
  int num_users = 500;
  int max_tags_per_arm = 20;
  int dim = 50;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;
  int pool_size = 50;
  std::optional<int> key_pool_size;
  double spanner_c = kDefaultSpannerFactor;

  nlohmann::json ToJson() const;
  static RealEnvConfig FromJson(const nlohmann::json& j);
};

struct RealEnvBuild {
  Environment env;
  // Binary user x arm feedback matrix.
  Eigen::MatrixXd feedback;
  TruncatedSvd svd;
  std::vector<std::int64_t> item_ids;  // arm id -> raw item id
  std::vector<std::int64_t> user_ids;  // user index -> raw user id
  std::vector<std::int64_t> tag_ids;   // key-term id -> raw tag id
};

// Selects the most-tagged items and users, keeps the most widely shared
// tags per item as key-terms, factorizes the binary feedback matrix and
// derives unit-norm arm features and norm-clipped user profiles.
RealEnvBuild BuildRealEnv(const HetRecDataset& data,
                          const RealEnvConfig& config);

}  // namespace conbandit

#endif  // CONBANDIT_ENV_H_
