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

#include "conbandit/model.h"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace conbandit {

void CheckFeatureVector(const Eigen::VectorXd& x, int dim,
                        const std::string& what) {
  if (x.size() != dim) {
    std::ostringstream msg;
    msg << what << ": dimension " << x.size() << " != " << dim;
    throw std::invalid_argument(msg.str());
  }
  if (!x.allFinite()) {
    throw std::invalid_argument(what + ": non-finite entry");
  }
}

ArmCatalog::ArmCatalog(Eigen::MatrixXd features)
    : features_(std::move(features)) {
  if (features_.rows() < 1) {
    throw std::invalid_argument("ArmCatalog: dimension must be >= 1");
  }
  for (Eigen::Index a = 0; a < features_.cols(); ++a) {
    if (!features_.col(a).allFinite()) {
      throw std::invalid_argument("ArmCatalog: arm " + std::to_string(a) +
                                  " has a non-finite entry");
    }
    const double norm = features_.col(a).norm();
    if (std::abs(norm - 1.0) > kNormTolerance) {
      std::ostringstream msg;
      msg << "ArmCatalog: arm " << a << " has norm " << norm
          << ", expected 1";
      throw std::invalid_argument(msg.str());
    }
  }
}

KeyTermGraph::KeyTermGraph(int num_arms, int num_key_terms,
                           std::vector<WeightEntry> entries)
    : num_arms_(num_arms),
      num_key_terms_(num_key_terms),
      entries_(std::move(entries)) {
  if (num_arms_ < 0 || num_key_terms_ < 0) {
    throw std::invalid_argument("KeyTermGraph: negative counts");
  }
  for (const WeightEntry& e : entries_) {
    if (e.arm < 0 || e.arm >= num_arms_ || e.key_term < 0 ||
        e.key_term >= num_key_terms_) {
      std::ostringstream msg;
      msg << "KeyTermGraph: entry (" << e.arm << ", " << e.key_term
          << ") out of range";
      throw std::invalid_argument(msg.str());
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      std::ostringstream msg;
      msg << "KeyTermGraph: entry (" << e.arm << ", " << e.key_term
          << ") has invalid weight " << e.weight;
      throw std::invalid_argument(msg.str());
    }
  }
}

std::vector<double> KeyTermGraph::ArmWeightSums() const {
  std::vector<double> sums(num_arms_, 0.0);
  for (const WeightEntry& e : entries_) sums[e.arm] += e.weight;
  return sums;
}

std::vector<double> KeyTermGraph::KeyTermWeightSums() const {
  std::vector<double> sums(num_key_terms_, 0.0);
  for (const WeightEntry& e : entries_) sums[e.key_term] += e.weight;
  return sums;
}

std::string GraphViolation::Describe() const {
  std::ostringstream msg;
  if (kind == Kind::kArmWeightSum) {
    msg << "arm " << id << ": weights sum to " << sum << " (expected 1)";
  } else {
    msg << "key-term " << id << ": total weight " << sum
        << " (expected > 0)";
  }
  return msg.str();
}

std::vector<GraphViolation> ValidateGraph(const KeyTermGraph& graph) {
  std::vector<GraphViolation> violations;
  const std::vector<double> arm_sums = graph.ArmWeightSums();
  for (int a = 0; a < graph.num_arms(); ++a) {
    if (std::abs(arm_sums[a] - 1.0) > kNormTolerance) {
      violations.push_back({GraphViolation::Kind::kArmWeightSum, a,
                            arm_sums[a]});
    }
  }
  const std::vector<double> key_sums = graph.KeyTermWeightSums();
  for (int k = 0; k < graph.num_key_terms(); ++k) {
    if (!(key_sums[k] > 0.0)) {
      violations.push_back({GraphViolation::Kind::kKeyTermWeightSum, k,
                            key_sums[k]});
    }
  }
  return violations;
}

KeyTermCatalog::KeyTermCatalog(
    Eigen::MatrixXd features, std::shared_ptr<const KeyTermGraph> source_graph)
    : features_(std::move(features)), source_graph_(std::move(source_graph)) {
  if (source_graph_ != nullptr &&
      source_graph_->num_key_terms() != features_.cols()) {
    throw std::invalid_argument(
        "KeyTermCatalog: feature count does not match graph");
  }
}

KeyTermCatalog ComputeKeyTermFeatures(
    std::shared_ptr<const KeyTermGraph> graph, const ArmCatalog& arms) {
  if (graph == nullptr) {
    throw std::invalid_argument("ComputeKeyTermFeatures: null graph");
  }
  if (graph->num_arms() != arms.size()) {
    throw std::invalid_argument(
        "ComputeKeyTermFeatures: graph has " +
        std::to_string(graph->num_arms()) + " arms, catalog has " +
        std::to_string(arms.size()));
  }
  const std::vector<double> totals = graph->KeyTermWeightSums();
  for (int k = 0; k < graph->num_key_terms(); ++k) {
    if (!(totals[k] > 0.0)) {
      throw std::invalid_argument("ComputeKeyTermFeatures: key-term " +
                                  std::to_string(k) + " has zero weight");
    }
  }
  Eigen::MatrixXd features =
      Eigen::MatrixXd::Zero(arms.dim(), graph->num_key_terms());
  for (const WeightEntry& e : graph->entries()) {
    features.col(e.key_term) += (e.weight / totals[e.key_term]) *
                                arms.feature(e.arm);
  }
  return KeyTermCatalog(std::move(features), std::move(graph));
}

void CheckUserProfile(const UserProfile& user, int dim) {
  CheckFeatureVector(user.theta, dim, "user " + std::to_string(user.id));
  if (user.theta.norm() > 1.0 + kNormTolerance) {
    throw std::invalid_argument("user " + std::to_string(user.id) +
                                ": preference norm exceeds 1");
  }
}

nlohmann::json VectorToJson(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd VectorFromJson(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(
                                               values.size()));
}

nlohmann::json MatrixColumnsToJson(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    out.push_back(VectorToJson(m.col(c)));
  }
  return out;
}

Eigen::MatrixXd MatrixColumnsFromJson(const nlohmann::json& j, int dim) {
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    Eigen::VectorXd col = VectorFromJson(j[c]);
    CheckFeatureVector(col, dim, "vector " + std::to_string(c));
    m.col(static_cast<Eigen::Index>(c)) = col;
  }
  return m;
}

nlohmann::json GraphToJson(const KeyTermGraph& graph) {
  nlohmann::json weights = nlohmann::json::array();
  for (const WeightEntry& e : graph.entries()) {
    weights.push_back(nlohmann::json::array({e.arm, e.key_term, e.weight}));
  }
  return {{"num_arms", graph.num_arms()},
          {"num_key_terms", graph.num_key_terms()},
          {"weights", std::move(weights)}};
}

KeyTermGraph GraphFromJson(const nlohmann::json& j) {
  std::vector<WeightEntry> entries;
  for (const auto& triplet : j.at("weights")) {
    entries.push_back({triplet.at(0).get<int>(), triplet.at(1).get<int>(),
                       triplet.at(2).get<double>()});
  }
  return KeyTermGraph(j.at("num_arms").get<int>(),
                      j.at("num_key_terms").get<int>(), std::move(entries));
}

}  // namespace conbandit
