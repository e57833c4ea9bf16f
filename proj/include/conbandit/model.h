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

// Core domain types: arms, key-terms, the weighted arm/key-term bipartite
// graph and the key-term features derived from it.

#ifndef CONBANDIT_MODEL_H_
#define CONBANDIT_MODEL_H_

#include <memory>
#include <string>
#include <vector>

#include "Eigen/Core"
#include "nlohmann/json.hpp"

namespace conbandit {

using ArmId = int;
using KeyTermId = int;

// Absolute tolerance used for all norm and weight-sum invariants.
inline constexpr double kNormTolerance = 1e-9;

// Throws std::invalid_argument unless `x` has dimension `dim` and all
// entries are finite.
void CheckFeatureVector(const Eigen::VectorXd& x, int dim,
                        const std::string& what);

// Arm feature vectors stored column-wise (d x |A|). Every column has unit
// L2 norm; ids are the column indices.
class ArmCatalog {
 public:
  explicit ArmCatalog(Eigen::MatrixXd features);

  int dim() const { return static_cast<int>(features_.rows()); }
  int size() const { return static_cast<int>(features_.cols()); }
  Eigen::MatrixXd::ConstColXpr feature(ArmId id) const {
    return features_.col(id);
  }
  const Eigen::MatrixXd& features() const { return features_; }

 private:
  Eigen::MatrixXd features_;
};

struct WeightEntry {
  ArmId arm = 0;
  KeyTermId key_term = 0;
  double weight = 0.0;
};

// Sparse weighted bipartite relation between arms and key-terms. The
// constructor only checks index ranges and non-negativity; the
// normalization invariants are reported by ValidateGraph.
class KeyTermGraph {
 public:
  KeyTermGraph(int num_arms, int num_key_terms,
               std::vector<WeightEntry> entries);

  int num_arms() const { return num_arms_; }
  int num_key_terms() const { return num_key_terms_; }
  const std::vector<WeightEntry>& entries() const { return entries_; }

  std::vector<double> ArmWeightSums() const;
  std::vector<double> KeyTermWeightSums() const;

 private:
  int num_arms_;
  int num_key_terms_;
  std::vector<WeightEntry> entries_;
};

struct GraphViolation {
  enum class Kind { kArmWeightSum, kKeyTermWeightSum };
  Kind kind;
  int id;
  double sum;

  std::string Describe() const;
};

// Empty iff every arm's weights sum to one and every key-term has positive
// total weight.
std::vector<GraphViolation> ValidateGraph(const KeyTermGraph& graph);

// Key-term features (d x |K|, column-wise), together with the graph they
// were derived from.
class KeyTermCatalog {
 public:
  KeyTermCatalog(Eigen::MatrixXd features,
                 std::shared_ptr<const KeyTermGraph> source_graph);

  int dim() const { return static_cast<int>(features_.rows()); }
  int size() const { return static_cast<int>(features_.cols()); }
  Eigen::MatrixXd::ConstColXpr feature(KeyTermId id) const {
    return features_.col(id);
  }
  const Eigen::MatrixXd& features() const { return features_; }
  const std::shared_ptr<const KeyTermGraph>& source_graph() const {
    return source_graph_;
  }

 private:
  Eigen::MatrixXd features_;
  std::shared_ptr<const KeyTermGraph> source_graph_;
};

// x~_k = sum_a (w_{a,k} / sum_a' w_{a',k}) x_a for every key-term k.
// Throws std::invalid_argument if a key-term has zero total weight or the
// graph's arm count differs from the catalog.
KeyTermCatalog ComputeKeyTermFeatures(
    std::shared_ptr<const KeyTermGraph> graph, const ArmCatalog& arms);

struct UserProfile {
  int id = 0;
  Eigen::VectorXd theta;
};

// Throws std::invalid_argument if ||theta|| > 1 or entries are non-finite.
void CheckUserProfile(const UserProfile& user, int dim);

// JSON forms: matrices as arrays of column vectors, graphs as
// [arm, key_term, weight] triplets.
nlohmann::json MatrixColumnsToJson(const Eigen::MatrixXd& m);
Eigen::MatrixXd MatrixColumnsFromJson(const nlohmann::json& j, int dim);
nlohmann::json VectorToJson(const Eigen::VectorXd& v);
Eigen::VectorXd VectorFromJson(const nlohmann::json& j);

nlohmann::json GraphToJson(const KeyTermGraph& graph);
KeyTermGraph GraphFromJson(const nlohmann::json& j);

}  // namespace conbandit

#endif  // CONBANDIT_MODEL_H_
