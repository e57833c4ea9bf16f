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

// C-approximate barycentric spanners of a key-term feature set, and the
// spectral quantities that govern how fast uniform sampling from a spanner
// shrinks the estimator's confidence ellipsoid.

#ifndef CONBANDIT_SPANNER_H_
#define CONBANDIT_SPANNER_H_

#include <vector>

#include "Eigen/Core"
#include "conbandit/model.h"
#include "nlohmann/json.hpp"

namespace conbandit {

inline constexpr double kDefaultSpannerFactor = 1.05;

// d key-terms such that every key-term feature is a combination of the
// members with coefficients in [-C, C].
struct Spanner {
  std::vector<KeyTermId> member_ids;
  // d x d, column i is the feature of member_ids[i].
  Eigen::MatrixXd basis;
  double approx_factor = kDefaultSpannerFactor;
  // Number of improvement swaps performed after the initial basis.
  int swaps = 0;
};

// Upper bound on improvement swaps: ceil(d log d / log C) + d.
int SpannerSwapBudget(int dim, double approx_factor);

// Builds a C-approximate spanner of the columns of `features` (d x K).
//
// Phase 1 fills slot i with the vector maximizing |det| while later slots
// still hold standard basis vectors. Phase 2 repeatedly swaps in any vector
// that multiplies |det| by more than C. Determinant ratios for single-slot
// replacements are read off B^{-1} x from a partial-pivot LU factorization
// and compared in log space.
//
// Throws std::invalid_argument if C <= 1 or the features do not span R^d,
// std::runtime_error if the swap budget is exhausted.
Spanner ComputeSpanner(const Eigen::MatrixXd& features,
                       double approx_factor = kDefaultSpannerFactor);
Spanner ComputeSpanner(const KeyTermCatalog& catalog,
                       double approx_factor = kDefaultSpannerFactor);

// Rebuilds a spanner from member ids (e.g. after loading an artifact).
Spanner SpannerFromMembers(const Eigen::MatrixXd& features,
                           std::vector<KeyTermId> member_ids,
                           double approx_factor);

struct SpannerCheck {
  bool passed = false;
  double max_coefficient = 0.0;
};

// Solves basis * c = x for every column x of `features`; passes when
// max |c_i| <= C + tol.
SpannerCheck VerifySpanner(const Spanner& spanner,
                           const Eigen::MatrixXd& features, double tol);
SpannerCheck VerifySpanner(const Spanner& spanner,
                           const KeyTermCatalog& catalog, double tol);

// lambda_min((1/d) sum_{k in B} x~_k x~_k^T).
double SpannerMinEigenvalue(const Spanner& spanner);

// Round after which uniform spanner sampling at linear conversation rate b
// guarantees ||x||_{M_t^{-1}} <= sqrt(2 / (lambda_B b t)):
//   t0 = 256 / (b lambda_B^2) * log(128 d / (lambda_B^2 delta)).
// Throws std::invalid_argument unless b in (0,1], lambda_B > 0,
// delta in (0, 1/8] and dim >= 1.
double NormCeilingOnsetRound(double rate, double lambda_b, double delta,
                             int dim);

nlohmann::json SpannerToJson(const Spanner& spanner);

}  // namespace conbandit

#endif  // CONBANDIT_SPANNER_H_
