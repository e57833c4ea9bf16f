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

// HetRec ingestion and the feedback-matrix factorization that turns tag
// assignments into arm features and user preference vectors.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "Eigen/Eigenvalues"
#include "Eigen/QR"
#include "conbandit/env.h"

namespace conbandit {
namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string Trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

std::int64_t ParseId(const std::string& raw, const std::string& column,
                     std::size_t line_number) {
  const std::string field = Trim(raw);
  std::int64_t value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw HetRecFormatError("line " + std::to_string(line_number) +
                            ": non-numeric " + column + " '" + field + "'");
  }
  if (value < 0) {
    throw HetRecFormatError("line " + std::to_string(line_number) +
                            ": negative " + column);
  }
  return value;
}

Eigen::MatrixXd OrthonormalBasis(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

// Ids ranked by descending count, ascending id on ties.
std::vector<std::int64_t> TopByCount(
    const std::map<std::int64_t, std::set<std::int64_t>>& groups, int count) {
  std::vector<std::pair<std::int64_t, std::size_t>> ranked;
  ranked.reserve(groups.size());
  for (const auto& [id, members] : groups) ranked.emplace_back(id, members.size());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::int64_t> top;
  for (int i = 0; i < count; ++i) top.push_back(ranked[i].first);
  return top;
}

}  // namespace

HetRecSource ParseHetRecSource(const std::string& name) {
  if (name == "lastfm") return HetRecSource::kLastFm;
  if (name == "movielens") return HetRecSource::kMovieLens;
  throw std::invalid_argument("unknown HetRec source '" + name +
                              "' (expected lastfm or movielens)");
}

HetRecDataset ParseHetRec(std::istream& in, HetRecSource source) {
  const std::string item_column =
      source == HetRecSource::kLastFm ? "artistID" : "movieID";
  std::string line;
  if (!std::getline(in, line)) {
    throw HetRecFormatError("line 1: missing header row");
  }
  const std::vector<std::string> header = SplitTabs(Trim(line));
  auto column_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (Trim(header[i]) == name) return i;
    }
    throw HetRecFormatError("header is missing required column " + name);
  };
  const std::size_t user_col = column_index("userID");
  const std::size_t item_col = column_index(item_column);
  const std::size_t tag_col = column_index("tagID");
  const std::size_t needed = std::max({user_col, item_col, tag_col}) + 1;

  HetRecDataset data;
  data.source = source;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    line = Trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() < needed) {
      throw HetRecFormatError("line " + std::to_string(line_number) +
                              ": expected at least " + std::to_string(needed) +
                              " tab-separated fields");
    }
    data.records.push_back({ParseId(fields[user_col], "userID", line_number),
                            ParseId(fields[item_col], item_column, line_number),
                            ParseId(fields[tag_col], "tagID", line_number)});
    ++data.lines_read;
  }
  std::sort(data.records.begin(), data.records.end());
  const auto last = std::unique(data.records.begin(), data.records.end());
  data.duplicates_removed =
      static_cast<std::size_t>(std::distance(last, data.records.end()));
  data.records.erase(last, data.records.end());
  return data;
}

HetRecDataset LoadHetRec(const std::string& path, HetRecSource source) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return ParseHetRec(in, source);
  } catch (const HetRecFormatError& e) {
    throw HetRecFormatError(path + ": " + e.what());
  }
}

TruncatedSvd ComputeTruncatedSvd(const Eigen::MatrixXd& matrix, int rank,
                                 std::uint64_t seed, int oversampling,
                                 int min_iterations, int max_iterations) {
  const auto rows = matrix.rows();
  const auto cols = matrix.cols();
  if (rank < 1 || rank > std::min(rows, cols)) {
    throw std::invalid_argument("ComputeTruncatedSvd: rank " +
                                std::to_string(rank) + " exceeds matrix shape");
  }
  const Eigen::Index block =
      std::min<Eigen::Index>(rank + std::max(0, oversampling),
                             std::min(rows, cols));
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd start(cols, block);
  for (Eigen::Index j = 0; j < block; ++j) {
    for (Eigen::Index i = 0; i < cols; ++i) start(i, j) = normal(rng);
  }
  Eigen::MatrixXd right = OrthonormalBasis(start);

  // Rayleigh-Ritz on span(right): eigenpairs of (A Q)^T (A Q).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz;
  Eigen::VectorXd previous = Eigen::VectorXd::Constant(rank, -1.0);
  int iterations = 0;
  for (; iterations < max_iterations;) {
    const Eigen::MatrixXd left = OrthonormalBasis(matrix * right);
    right = OrthonormalBasis(matrix.transpose() * left);
    ++iterations;
    const Eigen::MatrixXd projected = matrix * right;
    ritz.compute(projected.transpose() * projected);
    // Eigenvalues ascend; the leading `rank` are at the tail.
    const Eigen::VectorXd leading =
        ritz.eigenvalues().tail(rank).reverse().cwiseMax(0.0).cwiseSqrt();
    const double change = (leading - previous).cwiseAbs().maxCoeff();
    previous = leading;
    if (iterations >= min_iterations &&
        change <= 1e-13 * std::max(1.0, leading(0))) {
      break;
    }
  }

  TruncatedSvd svd;
  svd.iterations = iterations;
  svd.singular = previous;
  if (!(svd.singular(rank - 1) > 1e-10 * std::max(1.0, svd.singular(0)))) {
    throw std::invalid_argument(
        "ComputeTruncatedSvd: matrix rank is below " + std::to_string(rank));
  }
  const Eigen::MatrixXd vectors =
      ritz.eigenvectors().rightCols(rank).rowwise().reverse();
  svd.right = right * vectors;
  svd.left = matrix * svd.right;
  for (int i = 0; i < rank; ++i) svd.left.col(i) /= svd.singular(i);
  return svd;
}

nlohmann::json RealEnvConfig::ToJson() const {
  nlohmann::json j = {{"num_arms", num_arms},
                      {"num_users", num_users},
                      {"max_tags_per_arm", max_tags_per_arm},
                      {"dim", dim},
                      {"noise_sigma", noise_sigma},
                      {"seed", seed},
                      {"pool_size", pool_size},
                      {"spanner_c", spanner_c}};
  j["key_pool_size"] =
      key_pool_size ? nlohmann::json(*key_pool_size) : nlohmann::json();
  return j;
}

RealEnvConfig RealEnvConfig::FromJson(const nlohmann::json& j) {
  RealEnvConfig c;
  c.num_arms = j.value("num_arms", c.num_arms);
  c.num_users = j.value("num_users", c.num_users);
  c.max_tags_per_arm = j.value("max_tags_per_arm", c.max_tags_per_arm);
  c.dim = j.value("dim", c.dim);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.seed = j.value("seed", c.seed);
  c.pool_size = j.value("pool_size", c.pool_size);
  if (j.contains("key_pool_size") && !j.at("key_pool_size").is_null()) {
    c.key_pool_size = j.at("key_pool_size").get<int>();
  }
  c.spanner_c = j.value("spanner_c", c.spanner_c);
  return c;
}

RealEnvBuild BuildRealEnv(const HetRecDataset& data,
                          const RealEnvConfig& config) {
  if (data.records.empty()) {
    throw std::invalid_argument("BuildRealEnv: dataset is empty");
  }
  if (config.num_arms < 1 || config.num_users < 1 || config.dim < 1 ||
      config.max_tags_per_arm < 1) {
    throw std::invalid_argument("BuildRealEnv: counts must be >= 1");
  }

  std::map<std::int64_t, std::set<std::int64_t>> tags_of_item;
  std::map<std::int64_t, std::set<std::int64_t>> tags_of_user;
  for (const TaggingRecord& r : data.records) {
    tags_of_item[r.item].insert(r.tag);
    tags_of_user[r.user].insert(r.tag);
  }
  if (static_cast<int>(tags_of_item.size()) < config.num_arms) {
    throw std::invalid_argument("BuildRealEnv: only " +
                                std::to_string(tags_of_item.size()) +
                                " items available");
  }
  if (static_cast<int>(tags_of_user.size()) < config.num_users) {
    throw std::invalid_argument("BuildRealEnv: only " +
                                std::to_string(tags_of_user.size()) +
                                " users available");
  }

  RealEnvBuild build;
  build.item_ids = TopByCount(tags_of_item, config.num_arms);
  build.user_ids = TopByCount(tags_of_user, config.num_users);
  std::unordered_map<std::int64_t, int> arm_of_item;
  for (int a = 0; a < config.num_arms; ++a) arm_of_item[build.item_ids[a]] = a;
  std::unordered_map<std::int64_t, int> index_of_user;
  for (int u = 0; u < config.num_users; ++u) index_of_user[build.user_ids[u]] = u;

  // Key-terms: per arm, the tags shared by the most selected arms.
  std::map<std::int64_t, int> arms_per_tag;
  for (std::int64_t item : build.item_ids) {
    for (std::int64_t tag : tags_of_item[item]) ++arms_per_tag[tag];
  }
  std::vector<std::vector<std::int64_t>> kept(config.num_arms);
  std::set<std::int64_t> kept_tags;
  for (int a = 0; a < config.num_arms; ++a) {
    const auto& tags = tags_of_item[build.item_ids[a]];
    std::vector<std::int64_t> ranked(tags.begin(), tags.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::int64_t x, std::int64_t y) {
                       return arms_per_tag[x] > arms_per_tag[y];
                     });
    if (static_cast<int>(ranked.size()) > config.max_tags_per_arm) {
      ranked.resize(config.max_tags_per_arm);
    }
    if (ranked.empty()) {
      throw std::invalid_argument("BuildRealEnv: item " +
                                  std::to_string(build.item_ids[a]) +
                                  " has no tags");
    }
    kept_tags.insert(ranked.begin(), ranked.end());
    kept[a] = std::move(ranked);
  }
  build.tag_ids.assign(kept_tags.begin(), kept_tags.end());
  std::unordered_map<std::int64_t, KeyTermId> key_of_tag;
  for (std::size_t k = 0; k < build.tag_ids.size(); ++k) {
    key_of_tag[build.tag_ids[k]] = static_cast<KeyTermId>(k);
  }
  std::vector<WeightEntry> entries;
  for (int a = 0; a < config.num_arms; ++a) {
    std::vector<KeyTermId> keys;
    for (std::int64_t tag : kept[a]) keys.push_back(key_of_tag[tag]);
    std::sort(keys.begin(), keys.end());
    const double w = 1.0 / static_cast<double>(keys.size());
    for (KeyTermId k : keys) entries.push_back({a, k, w});
  }

  build.feedback = Eigen::MatrixXd::Zero(config.num_users, config.num_arms);
  for (const TaggingRecord& r : data.records) {
    const auto u = index_of_user.find(r.user);
    const auto a = arm_of_item.find(r.item);
    if (u != index_of_user.end() && a != arm_of_item.end()) {
      build.feedback(u->second, a->second) = 1.0;
    }
  }
  if (config.dim > std::min(config.num_users, config.num_arms)) {
    throw std::invalid_argument(
        "BuildRealEnv: feedback matrix rank is below d; reduce d");
  }
  build.svd = ComputeTruncatedSvd(build.feedback, config.dim, config.seed);

  Eigen::MatrixXd arm_features = build.svd.right.transpose();
  for (int a = 0; a < config.num_arms; ++a) {
    const double norm = arm_features.col(a).norm();
    if (!(norm > 1e-12)) {
      throw std::invalid_argument("BuildRealEnv: arm for item " +
                                  std::to_string(build.item_ids[a]) +
                                  " has no feedback from selected users");
    }
    arm_features.col(a) /= norm;
  }
  auto arms = std::make_shared<const ArmCatalog>(std::move(arm_features));
  auto graph = std::make_shared<const KeyTermGraph>(
      config.num_arms, static_cast<int>(build.tag_ids.size()),
      std::move(entries));

  Environment& env = build.env;
  env.arms = arms;
  env.graph = graph;
  env.key_terms = std::make_shared<const KeyTermCatalog>(
      ComputeKeyTermFeatures(graph, *arms));
  const Eigen::MatrixXd user_factors =
      build.svd.left * build.svd.singular.asDiagonal();
  for (int u = 0; u < config.num_users; ++u) {
    Eigen::VectorXd theta = user_factors.row(u).transpose();
    const double norm = theta.norm();
    if (norm > 1.0) theta /= norm;
    env.users.push_back({u, std::move(theta)});
  }
  env.noise_sigma = config.noise_sigma;
  env.pool_size = std::min(config.pool_size, config.num_arms);
  env.key_pool_size = config.key_pool_size;
  env.seed = config.seed;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(env.key_terms->features());
  qr.setThreshold(1e-10);
  if (env.key_terms->size() >= env.dim() && qr.rank() == env.dim()) {
    env.spanner = std::make_shared<const Spanner>(
        ComputeSpanner(*env.key_terms, config.spanner_c));
  }
  env.provenance = {
      {"generator", "hetrec"},
      {"source", data.source == HetRecSource::kLastFm ? "lastfm" : "movielens"},
      {"records", data.records.size()},
      {"config", config.ToJson()}};
  env.Validate();
  return build;
}

}  // namespace conbandit
