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

#include "conbandit/policies.h"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace conbandit {
namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::array<std::pair<PolicyKind, std::string_view>, 6> kKindNames{{
    {PolicyKind::kLinUcb, "LinUCB"},
    {PolicyKind::kArmCon, "Arm-Con"},
    {PolicyKind::kConUcb, "ConUCB"},
    {PolicyKind::kConLinUcbBs, "ConLinUCB-BS"},
    {PolicyKind::kConLinUcbMcr, "ConLinUCB-MCR"},
    {PolicyKind::kConLinUcbUcb, "ConLinUCB-UCB"},
}};

ConfidenceParams MakeParams(const PolicyConfig& config, int dim) {
  ConfidenceParams params{config.delta, config.beta, dim};
  if (!(params.delta > 0.0 && params.delta < 1.0)) {
    throw std::invalid_argument("policy: delta must be in (0,1)");
  }
  if (!(params.beta > 0.0)) {
    throw std::invalid_argument("policy: beta must be > 0");
  }
  return params;
}

void CheckResources(const PolicyResources& resources, bool need_key_terms) {
  if (resources.arms == nullptr) {
    throw std::invalid_argument("policy: arm catalog is required");
  }
  if (need_key_terms) {
    if (resources.key_terms == nullptr) {
      throw std::invalid_argument("policy: key-term catalog is required");
    }
    if (resources.key_terms->dim() != resources.arms->dim()) {
      throw std::invalid_argument(
          "policy: key-term and arm dimensions differ");
    }
  }
  resources.schedule.Validate();
}

std::vector<KeyTermId> AllIds(int n) {
  std::vector<KeyTermId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

std::span<const KeyTermId> CandidatesOrAll(
    std::span<const KeyTermId> candidates, const std::vector<KeyTermId>& all) {
  return candidates.empty() ? std::span<const KeyTermId>(all) : candidates;
}

void CheckPool(std::span<const ArmId> pool) {
  if (pool.empty()) throw std::invalid_argument("policy: empty arm pool");
}

}  // namespace

std::string_view PolicyKindName(PolicyKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

PolicyKind ParsePolicyKind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown policy kind: " + std::string(name));
}

void ConversationSchedule::Validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("schedule: rate must be > 0");
  }
  if (mode == Mode::kLinear && !(rate < 1.0)) {
    throw std::invalid_argument("schedule: linear rate must be in (0,1)");
  }
  if (mode == Mode::kLogFloor && !(log_base > 1.0)) {
    throw std::invalid_argument("schedule: log base must be > 1");
  }
}

double ConversationSchedule::Cumulative(std::int64_t t) const {
  if (t <= 0) return 0.0;
  const double td = static_cast<double>(t);
  if (mode == Mode::kLinear) return rate * td;
  double k = std::floor(std::log(td + 1.0) / std::log(log_base));
  if (std::pow(log_base, k + 1.0) <= td + 1.0) {
    k += 1.0;
  } else if (k > 0.0 && std::pow(log_base, k) > td + 1.0) {
    k -= 1.0;
  }
  return rate * k;
}

nlohmann::json ConversationSchedule::ToJson() const {
  return {{"mode", mode == Mode::kLinear ? "linear" : "logFloor"},
          {"rate", rate},
          {"log_base", log_base},
          {"q_convention", q_convention == QConvention::kFloorDifference
                               ? "floorDifference"
                               : "literalDifference"}};
}

ConversationSchedule ConversationSchedule::FromJson(const nlohmann::json& j) {
  ConversationSchedule s;
  const std::string mode = j.value("mode", std::string("logFloor"));
  if (mode == "linear") {
    s.mode = Mode::kLinear;
  } else if (mode == "logFloor") {
    s.mode = Mode::kLogFloor;
  } else {
    throw std::invalid_argument("schedule: unknown mode " + mode);
  }
  s.rate = j.value("rate", s.rate);
  if (j.contains("log_base")) {
    const auto& base = j.at("log_base");
    s.log_base = base.is_string() && base.get<std::string>() == "e"
                     ? s.log_base
                     : base.get<double>();
  }
  const std::string q = j.value("q_convention", std::string("literalDifference"));
  if (q == "floorDifference") {
    s.q_convention = QConvention::kFloorDifference;
  } else if (q == "literalDifference") {
    s.q_convention = QConvention::kLiteralDifference;
  } else {
    throw std::invalid_argument("schedule: unknown q_convention " + q);
  }
  s.Validate();
  return s;
}

ConversationBudget Budget(const ConversationSchedule& schedule,
                          std::int64_t t) {
  const double now = schedule.Cumulative(t);
  const double before = schedule.Cumulative(t - 1);
  ConversationBudget budget;
  if (schedule.q_convention ==
      ConversationSchedule::QConvention::kFloorDifference) {
    budget.count =
        static_cast<int>(std::floor(now) - std::floor(before));
    budget.allowed = budget.count > 0;
  } else {
    const double diff = now - before;
    budget.allowed = diff > 0.0;
    budget.count = budget.allowed ? static_cast<int>(std::floor(diff)) : 0;
  }
  return budget;
}

nlohmann::json PolicyConfig::ToJson() const {
  return {{"kind", std::string(PolicyKindName(kind))},
          {"beta", beta},
          {"delta", delta},
          {"lambda", lambda},
          {"spanner_c", spanner_c},
          {"seed", seed}};
}

PolicyConfig PolicyConfig::FromJson(const nlohmann::json& j) {
  PolicyConfig c;
  c.kind = ParsePolicyKind(j.at("kind").get<std::string>());
  c.beta = j.value("beta", c.beta);
  c.delta = j.value("delta", c.delta);
  c.lambda = j.value("lambda", c.lambda);
  c.spanner_c = j.value("spanner_c", c.spanner_c);
  c.seed = j.value("seed", c.seed);
  return c;
}

int ArgmaxLowestId(std::span<const int> ids, std::span<const double> scores) {
  if (ids.empty() || ids.size() != scores.size()) {
    throw std::invalid_argument("ArgmaxLowestId: empty or mismatched input");
  }
  const double best = *std::max_element(scores.begin(), scores.end());
  const double cutoff = best - 1e-12 * std::max(1.0, std::abs(best));
  int chosen = -1;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (scores[i] >= cutoff && (chosen < 0 || ids[i] < chosen)) {
      chosen = ids[i];
    }
  }
  return chosen;
}

ArmId SelectUcbArm(const RidgeEstimator& estimator, const ArmCatalog& arms,
                   std::span<const ArmId> pool, double alpha) {
  CheckPool(pool);
  const Eigen::VectorXd theta = estimator.Theta();
  std::vector<double> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto x = arms.feature(pool[i]);
    scores[i] = x.dot(theta) + estimator.ConfRadius(x, alpha);
  }
  return ArgmaxLowestId(pool, scores);
}

// ---------------------------------------------------------------------------
// LinUCB

LinUcbPolicy::LinUcbPolicy(const PolicyConfig& config,
                           PolicyResources resources)
    : params_(MakeParams(config, resources.arms ? resources.arms->dim() : 1)),
      resources_(std::move(resources)),
      estimator_(params_.dim, params_.beta) {
  CheckResources(resources_, /*need_key_terms=*/false);
}

StepOutcome LinUcbPolicy::Step(std::int64_t t, const RoundContext& context,
                               FeedbackSource& feedback) {
  StepOutcome outcome;
  const auto start = Clock::now();
  const double alpha =
      ExplorationCoefficient(static_cast<double>(t), 0.0, params_);
  outcome.arm = SelectUcbArm(estimator_, *resources_.arms, context.pool, alpha);
  outcome.arm_select_seconds = SecondsSince(start);

  outcome.reward = feedback.ArmReward(outcome.arm);
  estimator_.Update(resources_.arms->feature(outcome.arm), outcome.reward,
                    FeedbackLevel::kArm);
  outcome.updates.push_back({FeedbackLevel::kArm, outcome.arm, outcome.reward});
  return outcome;
}

// ---------------------------------------------------------------------------
// Arm-Con

ArmConPolicy::ArmConPolicy(const PolicyConfig& config,
                           PolicyResources resources)
    : params_(MakeParams(config, resources.arms ? resources.arms->dim() : 1)),
      resources_(std::move(resources)),
      estimator_(params_.dim, params_.beta) {
  CheckResources(resources_, /*need_key_terms=*/false);
}

StepOutcome ArmConPolicy::Step(std::int64_t t, const RoundContext& context,
                               FeedbackSource& feedback) {
  StepOutcome outcome;
  const double alpha = ExplorationCoefficient(
      static_cast<double>(t), resources_.schedule.Cumulative(t), params_);
  const ConversationBudget budget = Budget(resources_.schedule, t);
  for (int i = 0; budget.allowed && i < budget.count; ++i) {
    const auto start = Clock::now();
    const ArmId arm =
        SelectUcbArm(estimator_, *resources_.arms, context.pool, alpha);
    outcome.key_select_seconds += SecondsSince(start);
    const double r = feedback.ArmReward(arm);
    estimator_.Update(resources_.arms->feature(arm), r, FeedbackLevel::kArm);
    outcome.updates.push_back({FeedbackLevel::kArm, arm, r});
    ++outcome.conversations;
    ++outcome.extra_arm_queries;
  }

  const auto start = Clock::now();
  outcome.arm = SelectUcbArm(estimator_, *resources_.arms, context.pool, alpha);
  outcome.arm_select_seconds = SecondsSince(start);
  outcome.reward = feedback.ArmReward(outcome.arm);
  estimator_.Update(resources_.arms->feature(outcome.arm), outcome.reward,
                    FeedbackLevel::kArm);
  outcome.updates.push_back({FeedbackLevel::kArm, outcome.arm, outcome.reward});
  return outcome;
}

// ---------------------------------------------------------------------------
// ConLinUCB

namespace {

ConLinUcbPolicy::Strategy StrategyFor(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kConLinUcbBs:
      return ConLinUcbPolicy::Strategy::kSpanner;
    case PolicyKind::kConLinUcbMcr:
      return ConLinUcbPolicy::Strategy::kMaxRadius;
    case PolicyKind::kConLinUcbUcb:
      return ConLinUcbPolicy::Strategy::kUcb;
    default:
      throw std::invalid_argument("ConLinUcbPolicy: not a ConLinUCB kind");
  }
}

}  // namespace

ConLinUcbPolicy::ConLinUcbPolicy(const PolicyConfig& config,
                                 PolicyResources resources)
    : strategy_(StrategyFor(config.kind)),
      params_(MakeParams(config, resources.arms ? resources.arms->dim() : 1)),
      resources_(std::move(resources)),
      estimator_(params_.dim, params_.beta),
      rng_(config.seed) {
  CheckResources(resources_, /*need_key_terms=*/true);
  all_key_terms_ = AllIds(resources_.key_terms->size());
  if (strategy_ == Strategy::kSpanner) {
    if (resources_.spanner == nullptr ||
        resources_.spanner->member_ids.empty()) {
      throw std::invalid_argument(
          "ConLinUCB-BS requires a precomputed barycentric spanner");
    }
  }
}

std::string ConLinUcbPolicy::name() const {
  switch (strategy_) {
    case Strategy::kSpanner:
      return "ConLinUCB-BS";
    case Strategy::kMaxRadius:
      return "ConLinUCB-MCR";
    case Strategy::kUcb:
      return "ConLinUCB-UCB";
  }
  return "ConLinUCB";
}

double ConLinUcbPolicy::Alpha(std::int64_t t) const {
  return alpha_scale_ *
         ExplorationCoefficient(static_cast<double>(t),
                                resources_.schedule.Cumulative(t), params_);
}

KeyTermId ConLinUcbPolicy::SelectKeyTermSpanner() {
  const auto& members = resources_.spanner->member_ids;
  std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
  return members[pick(rng_)];
}

KeyTermId ConLinUcbPolicy::SelectKeyTermMaxRadius(
    std::span<const KeyTermId> candidates, std::int64_t t) const {
  if (candidates.empty()) {
    throw std::invalid_argument("SelectKeyTermMaxRadius: empty candidate set");
  }
  const double alpha = Alpha(t);
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = estimator_.ConfRadius(
        resources_.key_terms->feature(candidates[i]), alpha);
  }
  return ArgmaxLowestId(candidates, scores);
}

KeyTermId ConLinUcbPolicy::SelectKeyTermUcb(
    std::span<const KeyTermId> candidates, std::int64_t t) const {
  if (candidates.empty()) {
    throw std::invalid_argument("SelectKeyTermUcb: empty candidate set");
  }
  const double alpha = Alpha(t);
  const Eigen::VectorXd theta = estimator_.Theta();
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto x = resources_.key_terms->feature(candidates[i]);
    scores[i] = x.dot(theta) + estimator_.ConfRadius(x, alpha);
  }
  return ArgmaxLowestId(candidates, scores);
}

ArmId ConLinUcbPolicy::SelectArm(std::span<const ArmId> pool,
                                 std::int64_t t) const {
  return SelectUcbArm(estimator_, *resources_.arms, pool, Alpha(t));
}

KeyTermId ConLinUcbPolicy::SelectKeyTerm(std::span<const KeyTermId> candidates,
                                         std::int64_t t) {
  switch (strategy_) {
    case Strategy::kSpanner:
      return SelectKeyTermSpanner();
    case Strategy::kMaxRadius:
      return SelectKeyTermMaxRadius(candidates, t);
    case Strategy::kUcb:
      return SelectKeyTermUcb(candidates, t);
  }
  throw std::logic_error("unreachable");
}

void ConLinUcbPolicy::Converse(std::int64_t t,
                               std::span<const KeyTermId> candidates,
                               FeedbackSource& feedback,
                               StepOutcome& outcome) {
  const ConversationBudget budget = Budget(resources_.schedule, t);
  if (!budget.allowed) return;
  const auto available = CandidatesOrAll(candidates, all_key_terms_);
  for (int i = 0; i < budget.count; ++i) {
    const auto start = Clock::now();
    const KeyTermId key = SelectKeyTerm(available, t);
    outcome.key_select_seconds += SecondsSince(start);
    const double r = feedback.KeyTermFeedback(key);
    estimator_.Update(resources_.key_terms->feature(key), r,
                      FeedbackLevel::kKeyTerm);
    outcome.updates.push_back({FeedbackLevel::kKeyTerm, key, r});
    ++outcome.conversations;
  }
}

void ConLinUcbPolicy::ObserveArm(ArmId arm, double reward) {
  estimator_.Update(resources_.arms->feature(arm), reward, FeedbackLevel::kArm);
}

StepOutcome ConLinUcbPolicy::Step(std::int64_t t, const RoundContext& context,
                                  FeedbackSource& feedback) {
  StepOutcome outcome;
  Converse(t, context.key_candidates, feedback, outcome);

  const auto start = Clock::now();
  outcome.arm = SelectArm(context.pool, t);
  outcome.arm_select_seconds = SecondsSince(start);
  outcome.reward = feedback.ArmReward(outcome.arm);
  ObserveArm(outcome.arm, outcome.reward);
  outcome.updates.push_back({FeedbackLevel::kArm, outcome.arm, outcome.reward});
  return outcome;
}

// ---------------------------------------------------------------------------
// ConUCB

ConUcbPolicy::ConUcbPolicy(const PolicyConfig& config,
                           PolicyResources resources)
    : params_(MakeParams(config, resources.arms ? resources.arms->dim() : 1)),
      lambda_(config.lambda),
      resources_(std::move(resources)),
      arm_estimator_(params_.dim, 1.0 - config.lambda),
      key_estimator_(params_.dim, params_.beta) {
  if (!(lambda_ > 0.0 && lambda_ < 1.0)) {
    throw std::invalid_argument("ConUCB: lambda must be in (0,1)");
  }
  CheckResources(resources_, /*need_key_terms=*/true);
  all_key_terms_ = AllIds(resources_.key_terms->size());
}

Eigen::VectorXd ConUcbPolicy::ArmTheta() const {
  return arm_estimator_.m_inv() *
         (arm_estimator_.b() + (1.0 - lambda_) * key_estimator_.Theta());
}

KeyTermId ConUcbPolicy::SelectKeyTerm(
    std::span<const ArmId> pool, std::span<const KeyTermId> candidates) const {
  CheckPool(pool);
  if (candidates.empty()) {
    throw std::invalid_argument("ConUCB: empty key-term candidate set");
  }
  // Pool uncertainty after a key-term query is driven by
  // ||X M^{-1} M~^{-1} x~||^2 / (1 + ||x~||^2_{M~^{-1}}).
  Eigen::MatrixXd pool_features(params_.dim, pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool_features.col(static_cast<Eigen::Index>(i)) =
        resources_.arms->feature(pool[i]);
  }
  const Eigen::MatrixXd projected =
      pool_features.transpose() * arm_estimator_.m_inv();
  const Eigen::MatrixXd gram = projected.transpose() * projected;
  const Eigen::MatrixXd& key_inv = key_estimator_.m_inv();
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto x = resources_.key_terms->feature(candidates[i]);
    const Eigen::VectorXd v = key_inv * x;
    scores[i] = v.dot(gram * v) / (1.0 + x.dot(v));
  }
  return ArgmaxLowestId(candidates, scores);
}

ArmId ConUcbPolicy::SelectArm(std::span<const ArmId> pool,
                              std::int64_t t) const {
  CheckPool(pool);
  const double d = params_.dim;
  const double log_term = 2.0 * std::log(2.0 / params_.delta);
  const double td = static_cast<double>(t);
  const double arm_alpha = std::sqrt(
      log_term + d * std::log1p(lambda_ * td / ((1.0 - lambda_) * d)));
  const double key_alpha =
      std::sqrt(log_term +
                d * std::log1p(resources_.schedule.Cumulative(t) /
                               (params_.beta * d))) +
      std::sqrt(params_.beta);
  const Eigen::VectorXd theta = ArmTheta();
  const Eigen::MatrixXd& arm_inv = arm_estimator_.m_inv();
  std::vector<double> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto x = resources_.arms->feature(pool[i]);
    const Eigen::VectorXd projected = arm_inv * x;
    scores[i] = x.dot(theta) +
                lambda_ * arm_alpha * std::sqrt(std::max(0.0, x.dot(projected))) +
                (1.0 - lambda_) * key_alpha * key_estimator_.Width(projected);
  }
  return ArgmaxLowestId(pool, scores);
}

StepOutcome ConUcbPolicy::Step(std::int64_t t, const RoundContext& context,
                               FeedbackSource& feedback) {
  StepOutcome outcome;
  const ConversationBudget budget = Budget(resources_.schedule, t);
  if (budget.allowed) {
    const auto available =
        CandidatesOrAll(context.key_candidates, all_key_terms_);
    for (int i = 0; i < budget.count; ++i) {
      const auto start = Clock::now();
      const KeyTermId key = SelectKeyTerm(context.pool, available);
      outcome.key_select_seconds += SecondsSince(start);
      const double r = feedback.KeyTermFeedback(key);
      key_estimator_.Update(resources_.key_terms->feature(key), r,
                            FeedbackLevel::kKeyTerm);
      outcome.updates.push_back({FeedbackLevel::kKeyTerm, key, r});
      ++outcome.conversations;
    }
  }

  const auto start = Clock::now();
  outcome.arm = SelectArm(context.pool, t);
  outcome.arm_select_seconds = SecondsSince(start);
  outcome.reward = feedback.ArmReward(outcome.arm);
  const double scale = std::sqrt(lambda_);
  arm_estimator_.Update(scale * resources_.arms->feature(outcome.arm),
                        scale * outcome.reward, FeedbackLevel::kArm);
  outcome.updates.push_back({FeedbackLevel::kArm, outcome.arm, outcome.reward});
  return outcome;
}

std::unique_ptr<Policy> MakePolicy(const PolicyConfig& config,
                                   PolicyResources resources) {
  switch (config.kind) {
    case PolicyKind::kLinUcb:
      return std::make_unique<LinUcbPolicy>(config, std::move(resources));
    case PolicyKind::kArmCon:
      return std::make_unique<ArmConPolicy>(config, std::move(resources));
    case PolicyKind::kConUcb:
      return std::make_unique<ConUcbPolicy>(config, std::move(resources));
    case PolicyKind::kConLinUcbBs:
    case PolicyKind::kConLinUcbMcr:
    case PolicyKind::kConLinUcbUcb:
      return std::make_unique<ConLinUcbPolicy>(config, std::move(resources));
  }
  throw std::invalid_argument("MakePolicy: unknown kind");
}

}  // namespace conbandit
