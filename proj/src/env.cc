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
#include <fstream>
#include <numeric>
#include <sstream>

#include "Eigen/QR"

namespace conbandit {
namespace {

Eigen::MatrixXd GaussianUnitColumns(int dim, int count, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(dim, count);
  for (int c = 0; c < count; ++c) {
    for (int r = 0; r < dim; ++r) m(r, c) = normal(rng);
    m.col(c).normalize();
  }
  return m;
}

double Noise(double sigma, Rng& rng) {
  if (sigma == 0.0) return 0.0;
  std::normal_distribution<double> normal(0.0, sigma);
  return normal(rng);
}

std::shared_ptr<const Spanner> MaybeSpanner(const KeyTermCatalog& catalog,
                                            double approx_factor) {
  if (catalog.size() < catalog.dim()) return nullptr;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(catalog.features());
  qr.setThreshold(1e-10);
  if (qr.rank() < catalog.dim()) return nullptr;
  return std::make_shared<const Spanner>(
      ComputeSpanner(catalog, approx_factor));
}

void CheckPositive(int value, const char* what) {
  if (value < 1) {
    throw std::invalid_argument(std::string(what) + " must be >= 1");
  }
}

}  // namespace

void Environment::Validate() const {
  if (arms == nullptr || graph == nullptr || key_terms == nullptr) {
    throw std::invalid_argument("Environment: missing catalogs");
  }
  const auto violations = ValidateGraph(*graph);
  if (!violations.empty()) {
    throw std::invalid_argument("Environment: invalid graph: " +
                                violations.front().Describe());
  }
  if (graph->num_arms() != arms->size() || key_terms->dim() != arms->dim()) {
    throw std::invalid_argument("Environment: catalog shapes disagree");
  }
  for (const UserProfile& user : users) CheckUserProfile(user, dim());
  if (!(noise_sigma >= 0.0)) {
    throw std::invalid_argument("Environment: noise_sigma must be >= 0");
  }
  if (pool_size < 1 || pool_size > arms->size()) {
    throw std::invalid_argument("Environment: pool_size must be in [1, |A|]");
  }
  if (key_pool_size &&
      (*key_pool_size < 1 || *key_pool_size > key_terms->size())) {
    throw std::invalid_argument(
        "Environment: key_pool_size must be in [1, |K|]");
  }
}

void SyntheticConfig::Validate() const {
  CheckPositive(num_arms, "num_arms");
  CheckPositive(num_key_terms, "num_key_terms");
  CheckPositive(dim, "dim");
  CheckPositive(num_users, "num_users");
  if (nk_low < 1 || nk_high < nk_low || nk_high > num_arms) {
    throw std::invalid_argument("nk range must lie within [1, num_arms]");
  }
  if (!(noise_sigma >= 0.0)) {
    throw std::invalid_argument("noise_sigma must be >= 0");
  }
  if (pool_size < 1 || pool_size > num_arms) {
    throw std::invalid_argument("pool_size must be in [1, num_arms]");
  }
  if (key_pool_size && (*key_pool_size < 1 || *key_pool_size > num_key_terms)) {
    throw std::invalid_argument("key_pool_size must be in [1, num_key_terms]");
  }
}

nlohmann::json SyntheticConfig::ToJson() const {
  nlohmann::json j = {{"num_arms", num_arms},
                      {"num_key_terms", num_key_terms},
                      {"dim", dim},
                      {"num_users", num_users},
                      {"nk_range", {nk_low, nk_high}},
                      {"noise_sigma", noise_sigma},
                      {"seed", seed},
                      {"pool_size", pool_size},
                      {"spanner_c", spanner_c}};
  j["key_pool_size"] =
      key_pool_size ? nlohmann::json(*key_pool_size) : nlohmann::json();
  return j;
}

SyntheticConfig SyntheticConfig::FromJson(const nlohmann::json& j) {
  SyntheticConfig c;
  c.num_arms = j.value("num_arms", c.num_arms);
  c.num_key_terms = j.value("num_key_terms", c.num_key_terms);
  c.dim = j.value("dim", c.dim);
  c.num_users = j.value("num_users", c.num_users);
  if (j.contains("nk_range")) {
    c.nk_low = j.at("nk_range").at(0).get<int>();
    c.nk_high = j.at("nk_range").at(1).get<int>();
  }
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.seed = j.value("seed", c.seed);
  c.pool_size = j.value("pool_size", c.pool_size);
  if (j.contains("key_pool_size") && !j.at("key_pool_size").is_null()) {
    c.key_pool_size = j.at("key_pool_size").get<int>();
  }
  c.spanner_c = j.value("spanner_c", c.spanner_c);
  c.Validate();
  return c;
}

Environment GenerateSynthetic(const SyntheticConfig& config) {
  config.Validate();
  Rng rng(config.seed);

  auto arms = std::make_shared<const ArmCatalog>(
      GaussianUnitColumns(config.dim, config.num_arms, rng));
  const Eigen::MatrixXd thetas =
      GaussianUnitColumns(config.dim, config.num_users, rng);

  std::vector<std::vector<KeyTermId>> keys_of_arm(config.num_arms);
  std::uniform_int_distribution<int> nk_dist(config.nk_low, config.nk_high);
  for (KeyTermId k = 0; k < config.num_key_terms; ++k) {
    const int nk = nk_dist(rng);
    for (ArmId a : SampleWithoutReplacement(config.num_arms, nk, rng)) {
      keys_of_arm[a].push_back(k);
    }
  }
  std::uniform_int_distribution<KeyTermId> key_dist(0, config.num_key_terms - 1);
  std::vector<WeightEntry> entries;
  for (ArmId a = 0; a < config.num_arms; ++a) {
    auto& keys = keys_of_arm[a];
    if (keys.empty()) keys.push_back(key_dist(rng));
    std::sort(keys.begin(), keys.end());
    const double w = 1.0 / static_cast<double>(keys.size());
    for (KeyTermId k : keys) entries.push_back({a, k, w});
  }
  auto graph = std::make_shared<const KeyTermGraph>(
      config.num_arms, config.num_key_terms, std::move(entries));

  Environment env;
  env.arms = arms;
  env.graph = graph;
  env.key_terms = std::make_shared<const KeyTermCatalog>(
      ComputeKeyTermFeatures(graph, *arms));
  for (int u = 0; u < config.num_users; ++u) {
    env.users.push_back({u, thetas.col(u)});
  }
  env.noise_sigma = config.noise_sigma;
  env.pool_size = config.pool_size;
  env.key_pool_size = config.key_pool_size;
  env.seed = config.seed;
  env.spanner = MaybeSpanner(*env.key_terms, config.spanner_c);
  env.provenance = {{"generator", "synthetic"}, {"config", config.ToJson()}};
  env.Validate();
  return env;
}

double ExpectedReward(const Environment& env, const UserProfile& user,
                      ArmId arm) {
  return env.arms->feature(arm).dot(user.theta);
}

double ExpectedKeyTermFeedback(const Environment& env, const UserProfile& user,
                               KeyTermId key) {
  return env.key_terms->feature(key).dot(user.theta);
}

double Reward(const Environment& env, const UserProfile& user, ArmId arm,
              Rng& rng) {
  return ExpectedReward(env, user, arm) + Noise(env.noise_sigma, rng);
}

double KeyTermFeedback(const Environment& env, const UserProfile& user,
                       KeyTermId key, Rng& rng) {
  return ExpectedKeyTermFeedback(env, user, key) + Noise(env.noise_sigma, rng);
}

std::vector<int> SampleWithoutReplacement(int n, int count, Rng& rng) {
  if (count < 0 || count > n) {
    throw std::invalid_argument("SampleWithoutReplacement: count " +
                                std::to_string(count) + " exceeds " +
                                std::to_string(n));
  }
  std::vector<int> out;
  out.reserve(count);
  if (static_cast<std::int64_t>(count) * 4 >= n) {
    // Partial Fisher-Yates over the full range.
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = 0; i < count; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(ids[i], ids[pick(rng)]);
    }
    out.assign(ids.begin(), ids.begin() + count);
    return out;
  }
  // Floyd's algorithm; linear membership checks are cheap for small counts.
  for (int j = n - count; j < n; ++j) {
    std::uniform_int_distribution<int> pick(0, j);
    const int candidate = pick(rng);
    if (std::find(out.begin(), out.end(), candidate) == out.end()) {
      out.push_back(candidate);
    } else {
      out.push_back(j);
    }
  }
  return out;
}

std::vector<ArmId> SamplePool(const Environment& env, std::int64_t /*t*/,
                              Rng& rng) {
  if (env.pool_size > env.arms->size()) {
    throw std::invalid_argument("SamplePool: pool size exceeds |A|");
  }
  return SampleWithoutReplacement(env.arms->size(), env.pool_size, rng);
}

std::vector<KeyTermId> SampleKeyPool(const Environment& env,
                                     std::int64_t /*t*/, Rng& rng) {
  if (!env.key_pool_size) {
    throw std::invalid_argument("SampleKeyPool: time-varying mode disabled");
  }
  return SampleWithoutReplacement(env.key_terms->size(), *env.key_pool_size,
                                  rng);
}

BestArmResult BestArm(const Environment& env, const UserProfile& user,
                      std::span<const ArmId> pool) {
  if (pool.empty()) throw std::invalid_argument("BestArm: empty pool");
  BestArmResult best;
  for (ArmId a : pool) {
    const double value = ExpectedReward(env, user, a);
    if (best.arm < 0 || value > best.value ||
        (value == best.value && a < best.arm)) {
      best = {a, value};
    }
  }
  return best;
}

nlohmann::json EnvironmentToJson(const Environment& env) {
  nlohmann::json users = nlohmann::json::array();
  for (const UserProfile& u : env.users) {
    users.push_back({{"id", u.id}, {"theta", VectorToJson(u.theta)}});
  }
  nlohmann::json j = {{"format", "conbandit-environment"},
                      {"version", 1},
                      {"dim", env.dim()},
                      {"arms", MatrixColumnsToJson(env.arms->features())},
                      {"graph", GraphToJson(*env.graph)},
                      {"users", std::move(users)},
                      {"noise_sigma", env.noise_sigma},
                      {"pool_size", env.pool_size},
                      {"seed", env.seed},
                      {"provenance", env.provenance}};
  j["key_pool_size"] =
      env.key_pool_size ? nlohmann::json(*env.key_pool_size) : nlohmann::json();
  j["spanner"] = env.spanner ? SpannerToJson(*env.spanner) : nlohmann::json();
  return j;
}

Environment EnvironmentFromJson(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "conbandit-environment") {
    throw std::invalid_argument("not a conbandit environment artifact");
  }
  const int dim = j.at("dim").get<int>();
  Environment env;
  auto arms = std::make_shared<const ArmCatalog>(
      MatrixColumnsFromJson(j.at("arms"), dim));
  auto graph = std::make_shared<const KeyTermGraph>(GraphFromJson(j.at("graph")));
  env.arms = arms;
  env.graph = graph;
  env.key_terms = std::make_shared<const KeyTermCatalog>(
      ComputeKeyTermFeatures(graph, *arms));
  for (const auto& u : j.at("users")) {
    env.users.push_back({u.at("id").get<int>(), VectorFromJson(u.at("theta"))});
  }
  env.noise_sigma = j.at("noise_sigma").get<double>();
  env.pool_size = j.at("pool_size").get<int>();
  if (j.contains("key_pool_size") && !j.at("key_pool_size").is_null()) {
    env.key_pool_size = j.at("key_pool_size").get<int>();
  }
  env.seed = j.value("seed", std::uint64_t{0});
  env.provenance = j.value("provenance", nlohmann::json::object());
  if (j.contains("spanner") && !j.at("spanner").is_null()) {
    const auto& s = j.at("spanner");
    Spanner spanner = SpannerFromMembers(
        env.key_terms->features(), s.at("member_ids").get<std::vector<int>>(),
        s.at("C").get<double>());
    spanner.swaps = s.value("swaps", 0);
    if (!VerifySpanner(spanner, *env.key_terms, 1e-6).passed) {
      throw std::invalid_argument("artifact spanner fails verification");
    }
    env.spanner = std::make_shared<const Spanner>(std::move(spanner));
  }
  env.Validate();
  return env;
}

void SaveEnvironment(const Environment& env, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << EnvironmentToJson(env).dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

Environment LoadEnvironment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return EnvironmentFromJson(nlohmann::json::parse(in));
}

}  // namespace conbandit
