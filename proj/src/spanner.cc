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

#include "conbandit/spanner.h"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "Eigen/Eigenvalues"
#include "Eigen/LU"
#include "Eigen/QR"

namespace conbandit {
namespace {

// Slot replacement candidate: putting features.col(key) into slot `slot`
// multiplies |det| by exp(log_ratio).
struct Replacement {
  int slot = -1;
  KeyTermId key = -1;
  double log_ratio = -std::numeric_limits<double>::infinity();
};

// Coefficients of every feature in the current basis: column k of the
// result is B^{-1} x_k. For a single-slot swap, det(B') / det(B) equals the
// slot's coefficient (Cramer's rule).
Eigen::MatrixXd BasisCoefficients(const Eigen::MatrixXd& basis,
                                  const Eigen::MatrixXd& features) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
  return lu.solve(features);
}

Replacement BestReplacementInSlot(const Eigen::MatrixXd& coeffs, int slot) {
  Replacement best;
  best.slot = slot;
  for (Eigen::Index k = 0; k < coeffs.cols(); ++k) {
    const double log_ratio = std::log(std::abs(coeffs(slot, k)));
    if (log_ratio > best.log_ratio) {
      best.log_ratio = log_ratio;
      best.key = static_cast<KeyTermId>(k);
    }
  }
  return best;
}

}  // namespace

int SpannerSwapBudget(int dim, double approx_factor) {
  return static_cast<int>(std::ceil(dim * std::log(static_cast<double>(dim)) /
                                    std::log(approx_factor))) +
         dim;
}

Spanner ComputeSpanner(const Eigen::MatrixXd& features, double approx_factor) {
  if (!(approx_factor > 1.0)) {
    throw std::invalid_argument("ComputeSpanner: approximation factor must be > 1");
  }
  const int dim = static_cast<int>(features.rows());
  if (dim < 1 || features.cols() < dim) {
    throw std::invalid_argument(
        "ComputeSpanner: need at least d key-terms to span R^d");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(features);
  qr.setThreshold(1e-10);
  if (qr.rank() < dim) {
    std::ostringstream msg;
    msg << "ComputeSpanner: key-term features have rank " << qr.rank()
        << " < d = " << dim;
    throw std::invalid_argument(msg.str());
  }

  Spanner spanner;
  spanner.approx_factor = approx_factor;
  spanner.basis = Eigen::MatrixXd::Identity(dim, dim);
  spanner.member_ids.assign(dim, -1);

  for (int slot = 0; slot < dim; ++slot) {
    const Replacement best = BestReplacementInSlot(
        BasisCoefficients(spanner.basis, features), slot);
    if (!(best.log_ratio > std::log(1e-12))) {
      throw std::invalid_argument(
          "ComputeSpanner: could not extend basis; features are degenerate");
    }
    spanner.basis.col(slot) = features.col(best.key);
    spanner.member_ids[slot] = best.key;
  }

  const double log_factor = std::log(approx_factor);
  const int budget = SpannerSwapBudget(dim, approx_factor);
  while (true) {
    const Eigen::MatrixXd coeffs = BasisCoefficients(spanner.basis, features);
    Replacement best;
    for (int slot = 0; slot < dim; ++slot) {
      const Replacement candidate = BestReplacementInSlot(coeffs, slot);
      if (candidate.log_ratio > best.log_ratio) best = candidate;
    }
    if (!(best.log_ratio > log_factor)) break;
    if (spanner.swaps >= budget) {
      throw std::runtime_error("ComputeSpanner: swap budget of " +
                               std::to_string(budget) + " exhausted");
    }
    spanner.basis.col(best.slot) = features.col(best.key);
    spanner.member_ids[best.slot] = best.key;
    ++spanner.swaps;
  }
  return spanner;
}

Spanner ComputeSpanner(const KeyTermCatalog& catalog, double approx_factor) {
  return ComputeSpanner(catalog.features(), approx_factor);
}

Spanner SpannerFromMembers(const Eigen::MatrixXd& features,
                           std::vector<KeyTermId> member_ids,
                           double approx_factor) {
  const auto dim = features.rows();
  if (static_cast<Eigen::Index>(member_ids.size()) != dim) {
    throw std::invalid_argument("SpannerFromMembers: need exactly d members");
  }
  Spanner spanner;
  spanner.approx_factor = approx_factor;
  spanner.basis.resize(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const KeyTermId id = member_ids[i];
    if (id < 0 || id >= features.cols()) {
      throw std::invalid_argument("SpannerFromMembers: member id " +
                                  std::to_string(id) + " out of range");
    }
    spanner.basis.col(i) = features.col(id);
  }
  spanner.member_ids = std::move(member_ids);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(spanner.basis);
  if (!(std::abs(lu.determinant()) > 1e-12)) {
    throw std::invalid_argument("SpannerFromMembers: basis is singular");
  }
  return spanner;
}

SpannerCheck VerifySpanner(const Spanner& spanner,
                           const Eigen::MatrixXd& features, double tol) {
  SpannerCheck check;
  if (features.cols() > 0) {
    check.max_coefficient =
        BasisCoefficients(spanner.basis, features).cwiseAbs().maxCoeff();
  }
  check.passed = check.max_coefficient <= spanner.approx_factor + tol;
  return check;
}

SpannerCheck VerifySpanner(const Spanner& spanner,
                           const KeyTermCatalog& catalog, double tol) {
  return VerifySpanner(spanner, catalog.features(), tol);
}

double SpannerMinEigenvalue(const Spanner& spanner) {
  const double dim = static_cast<double>(spanner.basis.cols());
  const Eigen::MatrixXd second_moment =
      spanner.basis * spanner.basis.transpose() / dim;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second_moment,
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

double NormCeilingOnsetRound(double rate, double lambda_b, double delta,
                             int dim) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw std::invalid_argument("NormCeilingOnsetRound: rate must be in (0,1]");
  }
  if (!(lambda_b > 0.0)) {
    throw std::invalid_argument("NormCeilingOnsetRound: lambda_B must be > 0");
  }
  if (!(delta > 0.0 && delta <= 0.125)) {
    throw std::invalid_argument(
        "NormCeilingOnsetRound: delta must be in (0, 1/8]");
  }
  if (dim < 1) throw std::invalid_argument("NormCeilingOnsetRound: dim < 1");
  const double lambda_sq = lambda_b * lambda_b;
  return 256.0 / (rate * lambda_sq) *
         std::log(128.0 * dim / (lambda_sq * delta));
}

nlohmann::json SpannerToJson(const Spanner& spanner) {
  return {{"member_ids", spanner.member_ids},
          {"C", spanner.approx_factor},
          {"swaps", spanner.swaps}};
}

}  // namespace conbandit
