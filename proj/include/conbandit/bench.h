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

// Experiment orchestration: regret simulation over (algorithm x user x run)
// grids, aggregation, CSV export, regret-bound curves and empirical checks
// of the confidence-width lemmas.

#ifndef CONBANDIT_BENCH_H_
#define CONBANDIT_BENCH_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conbandit/env.h"
#include "conbandit/policies.h"
#include "nlohmann/json.hpp"

namespace conbandit {

inline constexpr const char* kCodeVersion = "0.1.0";

struct ExperimentConfig {
  // Exactly one of `synthetic` / `environment_path` is set.
  std::optional<SyntheticConfig> synthetic;
  std::string environment_path;
  std::vector<PolicyConfig> algorithms;
  std::int64_t horizon = 1000;
  ConversationSchedule schedule;
  // Override the environment's |A_t| / |K_t| when set.
  std::optional<int> pool_size;
  std::optional<int> key_pool_size;
  int num_runs = 10;
  // 0 means every user in the environment.
  int num_users = 0;
  std::uint64_t base_seed = 1;
  std::string output;
  int threads = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  static ExperimentConfig FromJson(const nlohmann::json& j);
};

ExperimentConfig LoadExperimentConfig(const std::string& path);

// Builds or loads the environment named by the config and applies the
// pool-size overrides.
Environment PrepareEnvironment(const ExperimentConfig& config);

struct RegretTrace {
  std::string algorithm;
  int user = 0;
  int run = 0;
  // cumulative[t - 1] = R(t).
  std::vector<double> cumulative;
  double arm_select_seconds = 0.0;
  double key_select_seconds = 0.0;
  std::int64_t conversations = 0;
};

// Deterministic stream seed from a base seed and a list of indices.
std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> parts);

struct SimulationSeeds {
  // Candidate pools (|A_t| and |K_t|).
  std::uint64_t pool = 0;
  // Reward and feedback noise.
  std::uint64_t noise = 0;
};

// Plays `policy` for `horizon` rounds against `user`. Regret is computed
// from noiseless values: best pool arm minus chosen arm.
RegretTrace SimulateUser(const Environment& env, const UserProfile& user,
                         Policy& policy, std::int64_t horizon,
                         const SimulationSeeds& seeds);

// Policy resources for `config`, reusing the environment's cached spanner
// when its approximation factor matches.
PolicyResources ResourcesFor(const Environment& env, const PolicyConfig& config,
                             const ConversationSchedule& schedule);

// Runs every (algorithm, user, run) triple. Pools are shared across
// algorithms for the same (user, run); noise and policy randomness are
// private to each triple. Throws std::invalid_argument for ConLinUCB-BS in
// the time-varying key-term mode.
std::vector<RegretTrace> RunExperiment(const ExperimentConfig& config,
                                       const Environment& env);

struct AggregateCurve {
  std::string algorithm;
  std::vector<double> mean;
  // Population standard deviation across traces.
  std::vector<double> std;
  std::size_t count = 0;
  double mean_arm_select_seconds = 0.0;
  double mean_key_select_seconds = 0.0;
};

// Pointwise mean/std per algorithm, in order of first appearance. Timings
// are summed over users within a run and averaged over runs.
std::vector<AggregateCurve> Aggregate(const std::vector<RegretTrace>& traces);

// Writes regret_curves.csv, summary.csv and manifest.json into `dir`.
void ExportResults(const std::vector<RegretTrace>& traces,
                   const ExperimentConfig& config, const Environment& env,
                   const std::string& dir);
std::string RegretCurvesCsv(const std::vector<RegretTrace>& traces);
std::string SummaryCsv(const std::vector<RegretTrace>& traces);
// Reads regret_curves.csv back (timings are not part of that file).
std::vector<RegretTrace> LoadRegretCurves(const std::string& path);

// --- Regret bounds ----------------------------------------------------------

// ConLinUCB-BS with b(t) = b t; delta in (0, 1/4].
double BoundTheorem1(double horizon, double rate, double lambda_b, double beta,
                     double delta, int dim);
// ConLinUCB-MCR; delta in (0, 1).
double BoundTheorem4(double horizon, double rate, double beta, double delta,
                     int dim);
// ConUCB; delta in (0, 1), lambda in (0, 1).
double BoundConUcb(double horizon, double rate, double lambda, double beta,
                   double delta, int dim);

struct BoundParams {
  double rate = 0.5;
  double lambda_b = 0.1;
  double beta = 1.0;
  double delta = 0.05;
  double lambda = 0.5;
  int dim = 10;
};

// CSV with columns T,theorem1,theorem4,conucb over the given horizons.
std::string BoundCurvesCsv(const std::vector<double>& horizons,
                           const BoundParams& params);

// --- Lemma checks -------------------------------------------------------------

struct Lemma2Config {
  SyntheticConfig env;
  PolicyConfig policy{PolicyKind::kConLinUcbMcr};
  ConversationSchedule schedule;
  std::int64_t horizon = 1000;
  int num_users = 10;
  int num_runs = 1;
  std::uint64_t seed = 1;
  // Multiplies the checked radius only; the policy's trajectory is unchanged.
  double alpha_scale = 1.0;

  nlohmann::json ToJson() const;
  static Lemma2Config FromJson(const nlohmann::json& j);
};

struct Lemma2Result {
  std::int64_t samples = 0;
  std::int64_t violations = 0;
  double rate() const {
    return samples == 0 ? 0.0 : static_cast<double>(violations) / samples;
  }
};

// Fraction of rounds whose played arm has |x^T (theta_t - theta*)| above
// alpha_t ||x||_{M_t^{-1}}, measured before the arm's own update.
Lemma2Result CheckLemma2(const Lemma2Config& config);
Lemma2Result CheckLemma2(const Environment& env, const Lemma2Config& config);

struct Lemma3Config {
  SyntheticConfig env;
  double rate = 0.5;
  // Confidence level for the onset round t0; must be in (0, 1/8].
  double delta = 0.125;
  PolicyConfig policy{PolicyKind::kConLinUcbBs};
  // Rounds simulated beyond ceil(t0).
  std::int64_t extra_rounds = 1000;
  int num_users = 1;
  std::uint64_t seed = 1;

  nlohmann::json ToJson() const;
  static Lemma3Config FromJson(const nlohmann::json& j);
};

struct Lemma3Result {
  double lambda_b = 0.0;
  double onset_round = 0.0;
  std::int64_t horizon = 0;
  std::int64_t samples = 0;
  // max over t >= t0 of ||x_{a_t}||_{M_t^{-1}} * sqrt(lambda_B b t / 2).
  double max_ratio = 0.0;
};

// ConLinUCB-BS with the linear floor-difference schedule on a fixed key-term
// set; the ratio is taken at selection time (after the round's
// conversations, before the arm update).
Lemma3Result CheckLemma3(const Lemma3Config& config);
Lemma3Result CheckLemma3(const Environment& env, const Lemma3Config& config);

}  // namespace conbandit

#endif  // CONBANDIT_BENCH_H_
