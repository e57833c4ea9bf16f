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

// Conversational bandit policies behind a single round-based interface.
//
// Every round a policy may first hold q(t) conversations (key-term queries,
// or extra arm queries for Arm-Con) as allowed by the conversation schedule,
// and then recommends one arm from the round's pool. Rewards and key-term
// feedback come from a FeedbackSource so policies never see ground truth.

#ifndef CONBANDIT_POLICIES_H_
#define CONBANDIT_POLICIES_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "Eigen/Core"
#include "conbandit/estimator.h"
#include "conbandit/model.h"
#include "conbandit/spanner.h"
#include "nlohmann/json.hpp"

namespace conbandit {

enum class PolicyKind {
  kLinUcb,
  kArmCon,
  kConUcb,
  kConLinUcbBs,
  kConLinUcbMcr,
  kConLinUcbUcb,
};

// "LinUCB", "Arm-Con", "ConUCB", "ConLinUCB-BS", "ConLinUCB-MCR",
// "ConLinUCB-UCB".
std::string_view PolicyKindName(PolicyKind kind);
// Throws std::invalid_argument on unknown names.
PolicyKind ParsePolicyKind(std::string_view name);

// Conversation budget b(t).
//   kLogFloor: b(t) = rate * floor(log_base(t + 1))
//   kLinear:   b(t) = rate * t, rate in (0,1)
// q(t) is floor(b(t) - b(t-1)) under kLiteralDifference (allowed iff the
// difference is positive) and floor(b(t)) - floor(b(t-1)) under
// kFloorDifference (allowed iff q > 0).
struct ConversationSchedule {
  enum class Mode { kLogFloor, kLinear };
  enum class QConvention { kLiteralDifference, kFloorDifference };

  Mode mode = Mode::kLogFloor;
  double rate = 5.0;
  // Only used by kLogFloor; natural log by default.
  double log_base = 2.718281828459045;
  QConvention q_convention = QConvention::kLiteralDifference;

  // Throws std::invalid_argument on non-positive rates, a linear rate outside
  // (0,1) or a log base <= 1.
  void Validate() const;
  double Cumulative(std::int64_t t) const;

  nlohmann::json ToJson() const;
  static ConversationSchedule FromJson(const nlohmann::json& j);
};

struct ConversationBudget {
  bool allowed = false;
  int count = 0;
};

ConversationBudget Budget(const ConversationSchedule& schedule,
                          std::int64_t t);

class FeedbackSource {
 public:
  virtual ~FeedbackSource() = default;
  virtual double ArmReward(ArmId arm) = 0;
  virtual double KeyTermFeedback(KeyTermId key) = 0;
};

struct RoundContext {
  std::span<const ArmId> pool;
  // Key-terms available this round; empty means the full catalog.
  std::span<const KeyTermId> key_candidates;
};

struct UpdateRecord {
  FeedbackLevel level = FeedbackLevel::kArm;
  int id = 0;
  double reward = 0.0;
};

struct StepOutcome {
  ArmId arm = -1;
  double reward = 0.0;
  int conversations = 0;
  // Arm-Con only: conversations spent on additional arm queries.
  int extra_arm_queries = 0;
  double arm_select_seconds = 0.0;
  double key_select_seconds = 0.0;
  // Estimator updates in the order they were applied.
  std::vector<UpdateRecord> updates;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  // One round; t starts at 1 and increases by one per call.
  virtual StepOutcome Step(std::int64_t t, const RoundContext& context,
                           FeedbackSource& feedback) = 0;
};

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kConLinUcbMcr;
  double beta = 1.0;
  double delta = 0.05;
  // ConUCB arm/key-term discount.
  double lambda = 0.5;
  // Spanner approximation factor for ConLinUCB-BS.
  double spanner_c = kDefaultSpannerFactor;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
  static PolicyConfig FromJson(const nlohmann::json& j);
};

struct PolicyResources {
  std::shared_ptr<const ArmCatalog> arms;
  std::shared_ptr<const KeyTermCatalog> key_terms;
  // Required for ConLinUCB-BS.
  std::shared_ptr<const Spanner> spanner;
  ConversationSchedule schedule;
};

// Index of the maximal score; scores within 1e-12 (relative) of the maximum
// count as ties and resolve to the lowest id. Throws std::invalid_argument
// on an empty list.
int ArgmaxLowestId(std::span<const int> ids, std::span<const double> scores);

// UCB arm choice x^T theta + alpha ||x||_{M^{-1}} on a single estimator.
ArmId SelectUcbArm(const RidgeEstimator& estimator, const ArmCatalog& arms,
                   std::span<const ArmId> pool, double alpha);

// Arm-level LinUCB; never converses.
class LinUcbPolicy : public Policy {
 public:
  LinUcbPolicy(const PolicyConfig& config, PolicyResources resources);
  std::string name() const override { return "LinUCB"; }
  StepOutcome Step(std::int64_t t, const RoundContext& context,
                   FeedbackSource& feedback) override;
  const RidgeEstimator& estimator() const { return estimator_; }

 private:
  ConfidenceParams params_;
  PolicyResources resources_;
  RidgeEstimator estimator_;
};

// LinUCB that spends each allowed conversation on an extra UCB-selected
// arm query from the current pool. Extra queries feed the estimator but do
// not count toward regret.
class ArmConPolicy : public Policy {
 public:
  ArmConPolicy(const PolicyConfig& config, PolicyResources resources);
  std::string name() const override { return "Arm-Con"; }
  StepOutcome Step(std::int64_t t, const RoundContext& context,
                   FeedbackSource& feedback) override;
  const RidgeEstimator& estimator() const { return estimator_; }

 private:
  ConfidenceParams params_;
  PolicyResources resources_;
  RidgeEstimator estimator_;
};

// The ConLinUCB framework: one estimator shared by arm rewards and key-term
// feedback, with a pluggable key-term strategy.
class ConLinUcbPolicy : public Policy {
 public:
  enum class Strategy { kSpanner, kMaxRadius, kUcb };

  ConLinUcbPolicy(const PolicyConfig& config, PolicyResources resources);

  std::string name() const override;
  StepOutcome Step(std::int64_t t, const RoundContext& context,
                   FeedbackSource& feedback) override;

  // alpha_t with b(t) from the schedule.
  double Alpha(std::int64_t t) const;

  // Uniform draw from the spanner; independent of the estimator state.
  KeyTermId SelectKeyTermSpanner();
  // argmax_k alpha_t ||x~_k||_{M^{-1}}.
  KeyTermId SelectKeyTermMaxRadius(std::span<const KeyTermId> candidates,
                                   std::int64_t t) const;
  // argmax_k x~_k^T theta + alpha_t ||x~_k||_{M^{-1}}.
  KeyTermId SelectKeyTermUcb(std::span<const KeyTermId> candidates,
                             std::int64_t t) const;
  ArmId SelectArm(std::span<const ArmId> pool, std::int64_t t) const;

  // Runs the round's conversations (if the budget allows) and records them
  // in `outcome`.
  void Converse(std::int64_t t, std::span<const KeyTermId> candidates,
                FeedbackSource& feedback, StepOutcome& outcome);
  void ObserveArm(ArmId arm, double reward);

  Strategy strategy() const { return strategy_; }
  const RidgeEstimator& estimator() const { return estimator_; }
  const ConversationSchedule& schedule() const { return resources_.schedule; }
  double alpha_scale() const { return alpha_scale_; }
  void set_alpha_scale(double scale) { alpha_scale_ = scale; }

 private:
  KeyTermId SelectKeyTerm(std::span<const KeyTermId> candidates,
                          std::int64_t t);

  Strategy strategy_;
  ConfidenceParams params_;
  PolicyResources resources_;
  RidgeEstimator estimator_;
  std::vector<KeyTermId> all_key_terms_;
  std::mt19937_64 rng_;
  double alpha_scale_ = 1.0;
};

// Two-stage ConUCB baseline. A key-term-level ridge estimate theta~ acts as
// the prior for the arm-level estimate
//   theta = argmin lambda sum (x^T theta - r)^2 + (1 - lambda) ||theta - theta~||^2,
// arms are scored with a lambda-weighted two-part confidence width, and
// key-terms are chosen to maximally reduce arm-level uncertainty on the
// current pool.
class ConUcbPolicy : public Policy {
 public:
  ConUcbPolicy(const PolicyConfig& config, PolicyResources resources);
  std::string name() const override { return "ConUCB"; }
  StepOutcome Step(std::int64_t t, const RoundContext& context,
                   FeedbackSource& feedback) override;

  Eigen::VectorXd ArmTheta() const;
  KeyTermId SelectKeyTerm(std::span<const ArmId> pool,
                          std::span<const KeyTermId> candidates) const;
  ArmId SelectArm(std::span<const ArmId> pool, std::int64_t t) const;

  // lambda M_arm + (1 - lambda) I lives in arm_estimator(); its updates are
  // scaled by sqrt(lambda).
  const RidgeEstimator& arm_estimator() const { return arm_estimator_; }
  const RidgeEstimator& key_estimator() const { return key_estimator_; }

 private:
  ConfidenceParams params_;
  double lambda_;
  PolicyResources resources_;
  RidgeEstimator arm_estimator_;
  RidgeEstimator key_estimator_;
  std::vector<KeyTermId> all_key_terms_;
};

// Throws std::invalid_argument on missing resources (e.g. no spanner for
// ConLinUCB-BS) or invalid parameters.
std::unique_ptr<Policy> MakePolicy(const PolicyConfig& config,
                                   PolicyResources resources);

}  // namespace conbandit

#endif  // CONBANDIT_POLICIES_H_
