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

#include "conbandit/estimator.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "Eigen/Cholesky"
#include "conbandit/model.h"

namespace conbandit {

RidgeEstimator::RidgeEstimator(int dim, double beta) : beta_(beta) {
  if (dim < 1) throw std::invalid_argument("RidgeEstimator: dim must be >= 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("RidgeEstimator: beta must be > 0");
  }
  m_ = beta * Eigen::MatrixXd::Identity(dim, dim);
  m_inv_ = (1.0 / beta) * Eigen::MatrixXd::Identity(dim, dim);
  b_ = Eigen::VectorXd::Zero(dim);
  scratch_.resize(dim);
}

void RidgeEstimator::Update(const Eigen::Ref<const Eigen::VectorXd>& x,
                            double reward, FeedbackLevel level) {
  CheckFeatureVector(x, dim(), "RidgeEstimator::Update");
  if (!std::isfinite(reward)) {
    throw std::invalid_argument("RidgeEstimator::Update: non-finite reward");
  }
  m_.noalias() += x * x.transpose();
  b_.noalias() += reward * x;

  // Sherman-Morrison: (M + x x^T)^{-1} = M^{-1} - (M^{-1}x)(M^{-1}x)^T / (1 + x^T M^{-1} x).
  scratch_.noalias() = m_inv_ * x;
  const double denom = 1.0 + x.dot(scratch_);
  m_inv_.noalias() -= (scratch_ / denom) * scratch_.transpose();

  if (level == FeedbackLevel::kArm) {
    ++num_arm_obs_;
  } else {
    ++num_key_obs_;
  }
  if (++updates_since_refresh_ >= kRefreshInterval) {
    const double drift = RefreshInverse();
    if (drift > kMaxInverseDrift) {
      std::ostringstream msg;
      msg << "RidgeEstimator: incremental inverse drifted by " << drift;
      throw std::logic_error(msg.str());
    }
  }
}

double RidgeEstimator::RefreshInverse() {
  Eigen::LLT<Eigen::MatrixXd> llt(m_);
  Eigen::MatrixXd fresh =
      llt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
  fresh = 0.5 * (fresh + fresh.transpose()).eval();
  const double drift = (fresh - m_inv_).cwiseAbs().maxCoeff();
  m_inv_ = std::move(fresh);
  updates_since_refresh_ = 0;
  return drift;
}

nlohmann::json RidgeEstimator::ToJson() const {
  return {{"dim", dim()},
          {"beta", beta_},
          {"M", MatrixColumnsToJson(m_)},
          {"b", VectorToJson(b_)},
          {"num_arm_obs", num_arm_obs_},
          {"num_key_obs", num_key_obs_}};
}

RidgeEstimator RidgeEstimator::FromJson(const nlohmann::json& j) {
  const int dim = j.at("dim").get<int>();
  RidgeEstimator est(dim, j.at("beta").get<double>());
  est.m_ = MatrixColumnsFromJson(j.at("M"), dim);
  if (est.m_.cols() != dim) {
    throw std::invalid_argument("RidgeEstimator::FromJson: M is not square");
  }
  est.b_ = VectorFromJson(j.at("b"));
  CheckFeatureVector(est.b_, dim, "RidgeEstimator::FromJson b");
  est.num_arm_obs_ = j.at("num_arm_obs").get<std::int64_t>();
  est.num_key_obs_ = j.at("num_key_obs").get<std::int64_t>();
  Eigen::LLT<Eigen::MatrixXd> llt(est.m_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(
        "RidgeEstimator::FromJson: M is not positive definite");
  }
  est.RefreshInverse();
  return est;
}

double ExplorationCoefficient(double t, double budget,
                              const ConfidenceParams& params) {
  if (!(params.delta > 0.0 && params.delta < 1.0)) {
    throw std::invalid_argument("ExplorationCoefficient: delta must be in (0,1)");
  }
  if (!(params.beta > 0.0)) {
    throw std::invalid_argument("ExplorationCoefficient: beta must be > 0");
  }
  if (params.dim < 1) {
    throw std::invalid_argument("ExplorationCoefficient: dim must be >= 1");
  }
  if (!(t >= 0.0) || !(budget >= 0.0)) {
    throw std::invalid_argument(
        "ExplorationCoefficient: t and budget must be >= 0");
  }
  const double d = params.dim;
  return std::sqrt(2.0 * std::log(1.0 / params.delta) +
                   d * std::log1p((t + budget) / (params.beta * d))) +
         std::sqrt(params.beta);
}

}  // namespace conbandit
