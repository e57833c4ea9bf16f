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

// Joint ridge estimator over arm-level rewards and key-term-level feedback.
//
// Both feedback levels enter one regularized least-squares problem:
//
//   M = beta * I + sum_arm x x^T + sum_key x~ x~^T
//   b = sum_arm x r + sum_key x~ r~
//   theta = M^{-1} b
//
// M^{-1} is maintained with Sherman-Morrison rank-one updates and refreshed
// from a Cholesky factorization every kRefreshInterval updates.

#ifndef CONBANDIT_ESTIMATOR_H_
#define CONBANDIT_ESTIMATOR_H_

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "Eigen/Core"
#include "nlohmann/json.hpp"

namespace conbandit {

enum class FeedbackLevel { kArm, kKeyTerm };

struct ConfidenceParams {
  double delta = 0.05;
  double beta = 1.0;
  int dim = 1;
};

class RidgeEstimator {
 public:
  static constexpr std::int64_t kRefreshInterval = 1000;
  static constexpr double kMaxInverseDrift = 1e-6;

  // Throws std::invalid_argument for dim < 1 or beta <= 0.
  RidgeEstimator(int dim, double beta);

  // M += x x^T, b += r x. Throws std::invalid_argument on non-finite input
  // or dimension mismatch, std::logic_error if the periodic refresh finds the
  // incremental inverse drifted beyond kMaxInverseDrift.
  void Update(const Eigen::Ref<const Eigen::VectorXd>& x, double reward,
              FeedbackLevel level);

  Eigen::VectorXd Theta() const { return m_inv_ * b_; }

  // ||x||_{M^{-1}}.
  double Width(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return std::sqrt(std::max(0.0, x.dot(m_inv_ * x)));
  }

  // alpha * ||x||_{M^{-1}}.
  double ConfRadius(const Eigen::Ref<const Eigen::VectorXd>& x,
                    double alpha) const {
    return alpha * Width(x);
  }

  int dim() const { return static_cast<int>(b_.size()); }
  double beta() const { return beta_; }
  const Eigen::MatrixXd& m() const { return m_; }
  const Eigen::MatrixXd& m_inv() const { return m_inv_; }
  const Eigen::VectorXd& b() const { return b_; }
  std::int64_t num_arm_obs() const { return num_arm_obs_; }
  std::int64_t num_key_obs() const { return num_key_obs_; }

  // Recomputes M^{-1} by factorization and returns the max-abs entry
  // difference from the incrementally maintained inverse.
  double RefreshInverse();

  nlohmann::json ToJson() const;
  // Rebuilds the inverse from the stored M.
  static RidgeEstimator FromJson(const nlohmann::json& j);

 private:
  double beta_;
  Eigen::MatrixXd m_;
  Eigen::MatrixXd m_inv_;
  Eigen::VectorXd b_;
  std::int64_t num_arm_obs_ = 0;
  std::int64_t num_key_obs_ = 0;
  std::int64_t updates_since_refresh_ = 0;
  // Scratch buffer for M^{-1} x.
  Eigen::VectorXd scratch_;
};

// alpha_t = sqrt(2 log(1/delta) + d log(1 + (t + b(t)) / (beta d))) + sqrt(beta)
// Throws std::invalid_argument unless delta in (0,1), beta > 0, dim >= 1,
// t >= 0 and budget >= 0.
double ExplorationCoefficient(double t, double budget,
                              const ConfidenceParams& params);

}  // namespace conbandit

#endif  // CONBANDIT_ESTIMATOR_H_
