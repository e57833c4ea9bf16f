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

#include "conbandit/bench.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace conbandit {
namespace {

enum Stream : std::uint64_t { kPoolStream = 1, kNoiseStream = 2, kPolicyStream = 3 };

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class SimulatedUser : public FeedbackSource {
 public:
  SimulatedUser(const Environment& env, const UserProfile& user,
                std::uint64_t seed)
      : env_(env), user_(user), rng_(seed) {}

  double ArmReward(ArmId arm) override { return Reward(env_, user_, arm, rng_); }
  double KeyTermFeedback(KeyTermId key) override {
    return conbandit::KeyTermFeedback(env_, user_, key, rng_);
  }

 private:
  const Environment& env_;
  const UserProfile& user_;
  Rng rng_;
};

std::string FormatDouble(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void CheckDelta(double delta, double upper, bool inclusive, const char* what) {
  const bool ok = delta > 0.0 && (inclusive ? delta <= upper : delta < upper);
  if (!ok) {
    throw std::invalid_argument(std::string(what) + ": delta out of range");
  }
}

void CheckBoundArgs(double horizon, double rate, double beta, int dim,
                    const char* what) {
  if (!(horizon >= 1.0) || !(rate > 0.0) || !(beta > 0.0) || dim < 1) {
    throw std::invalid_argument(std::string(what) +
                                ": need T >= 1, b > 0, beta > 0, d >= 1");
  }
}

const std::vector<int>& UserIndices(const Environment& env, int limit,
                                    std::vector<int>& storage) {
  const int n = limit > 0 ? std::min<int>(limit, env.users.size())
                          : static_cast<int>(env.users.size());
  storage.resize(n);
  for (int i = 0; i < n; ++i) storage[i] = i;
  return storage;
}

Environment WithKeyPool(Environment env, std::optional<int> key_pool_size) {
  env.key_pool_size = key_pool_size;
  return env;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::Validate() const {
  if (synthetic.has_value() == !environment_path.empty()) {
    throw std::invalid_argument(
        "config: specify exactly one of environment.synthetic / "
        "environment.artifact");
  }
  if (algorithms.empty()) {
    throw std::invalid_argument("config: at least one algorithm is required");
  }
  if (horizon < 1) throw std::invalid_argument("config: T must be >= 1");
  if (num_runs < 1) throw std::invalid_argument("config: num_runs must be >= 1");
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  schedule.Validate();
  if (key_pool_size) {
    for (const PolicyConfig& p : algorithms) {
      if (p.kind == PolicyKind::kConLinUcbBs) {
        throw std::invalid_argument(
            "config: ConLinUCB-BS needs a fixed key-term set and cannot run "
            "with a time-varying key_pool_size");
      }
    }
  }
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json algs = nlohmann::json::array();
  for (const PolicyConfig& p : algorithms) algs.push_back(p.ToJson());
  nlohmann::json environment;
  if (synthetic) {
    environment["synthetic"] = synthetic->ToJson();
  } else {
    environment["artifact"] = environment_path;
  }
  nlohmann::json j = {{"environment", environment},
                      {"algorithms", algs},
                      {"T", horizon},
                      {"schedule", schedule.ToJson()},
                      {"num_runs", num_runs},
                      {"num_users", num_users},
                      {"base_seed", base_seed},
                      {"output", output},
                      {"threads", threads}};
  j["pool_size"] = pool_size ? nlohmann::json(*pool_size) : nlohmann::json();
  j["key_pool_size"] =
      key_pool_size ? nlohmann::json(*key_pool_size) : nlohmann::json();
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  ExperimentConfig c;
  const auto& environment = j.at("environment");
  if (environment.contains("synthetic")) {
    c.synthetic = SyntheticConfig::FromJson(environment.at("synthetic"));
  }
  if (environment.contains("artifact")) {
    c.environment_path = environment.at("artifact").get<std::string>();
  }
  for (const auto& p : j.at("algorithms")) {
    c.algorithms.push_back(PolicyConfig::FromJson(p));
  }
  c.horizon = j.value("T", c.horizon);
  if (j.contains("schedule")) {
    c.schedule = ConversationSchedule::FromJson(j.at("schedule"));
  }
  if (j.contains("pool_size") && !j.at("pool_size").is_null()) {
    c.pool_size = j.at("pool_size").get<int>();
  }
  if (j.contains("key_pool_size") && !j.at("key_pool_size").is_null()) {
    c.key_pool_size = j.at("key_pool_size").get<int>();
  }
  c.num_runs = j.value("num_runs", c.num_runs);
  c.num_users = j.value("num_users", c.num_users);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.output = j.value("output", c.output);
  c.threads = j.value("threads", c.threads);
  c.Validate();
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return ExperimentConfig::FromJson(nlohmann::json::parse(in));
}

Environment PrepareEnvironment(const ExperimentConfig& config) {
  Environment env = config.synthetic ? GenerateSynthetic(*config.synthetic)
                                     : LoadEnvironment(config.environment_path);
  if (config.pool_size) env.pool_size = *config.pool_size;
  if (config.key_pool_size) env.key_pool_size = *config.key_pool_size;
  env.Validate();
  return env;
}

// ---------------------------------------------------------------------------
// Simulation

std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = SplitMix64(base);
  for (std::uint64_t p : parts) h = SplitMix64(h ^ SplitMix64(p));
  return h;
}

RegretTrace SimulateUser(const Environment& env, const UserProfile& user,
                         Policy& policy, std::int64_t horizon,
                         const SimulationSeeds& seeds) {
  RegretTrace trace;
  trace.algorithm = policy.name();
  trace.user = user.id;
  trace.cumulative.reserve(horizon);
  Rng pool_rng(seeds.pool);
  SimulatedUser feedback(env, user, seeds.noise);
  double regret = 0.0;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const std::vector<ArmId> pool = SamplePool(env, t, pool_rng);
    std::vector<KeyTermId> keys;
    if (env.key_pool_size) keys = SampleKeyPool(env, t, pool_rng);
    const StepOutcome outcome = policy.Step(t, {pool, keys}, feedback);
    const BestArmResult best = BestArm(env, user, pool);
    regret += std::max(0.0, best.value - ExpectedReward(env, user, outcome.arm));
    trace.cumulative.push_back(regret);
    trace.arm_select_seconds += outcome.arm_select_seconds;
    trace.key_select_seconds += outcome.key_select_seconds;
    trace.conversations += outcome.conversations;
  }
  return trace;
}

PolicyResources ResourcesFor(const Environment& env, const PolicyConfig& config,
                             const ConversationSchedule& schedule) {
  PolicyResources resources;
  resources.arms = env.arms;
  resources.key_terms = env.key_terms;
  resources.schedule = schedule;
  if (config.kind == PolicyKind::kConLinUcbBs) {
    if (env.spanner && env.spanner->approx_factor == config.spanner_c) {
      resources.spanner = env.spanner;
    } else {
      resources.spanner = std::make_shared<const Spanner>(
          ComputeSpanner(*env.key_terms, config.spanner_c));
    }
  }
  return resources;
}

std::vector<RegretTrace> RunExperiment(const ExperimentConfig& config,
                                       const Environment& env) {
  config.Validate();
  if (env.key_pool_size) {
    for (const PolicyConfig& p : config.algorithms) {
      if (p.kind == PolicyKind::kConLinUcbBs) {
        throw std::invalid_argument(
            "ConLinUCB-BS does not apply to time-varying key-term sets");
      }
    }
  }
  std::vector<int> user_storage;
  const std::vector<int>& users = UserIndices(env, config.num_users, user_storage);

  std::vector<PolicyResources> resources;
  for (const PolicyConfig& p : config.algorithms) {
    resources.push_back(ResourcesFor(env, p, config.schedule));
  }

  struct Task {
    int algorithm;
    int user;
    int run;
  };
  std::vector<Task> tasks;
  for (int a = 0; a < static_cast<int>(config.algorithms.size()); ++a) {
    for (int run = 0; run < config.num_runs; ++run) {
      for (int u : users) tasks.push_back({a, u, run});
    }
  }
  std::vector<RegretTrace> traces(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      try {
        const auto u = static_cast<std::uint64_t>(task.user);
        const auto run = static_cast<std::uint64_t>(task.run);
        const auto a = static_cast<std::uint64_t>(task.algorithm);
        PolicyConfig policy_config = config.algorithms[task.algorithm];
        policy_config.seed = DeriveSeed(config.base_seed,
                                        {kPolicyStream, u, run, a,
                                         policy_config.seed});
        auto policy = MakePolicy(policy_config, resources[task.algorithm]);
        SimulationSeeds seeds;
        seeds.pool = DeriveSeed(config.base_seed, {kPoolStream, u, run});
        seeds.noise = DeriveSeed(config.base_seed, {kNoiseStream, u, run, a});
        traces[i] = SimulateUser(env, env.users[task.user], *policy,
                                 config.horizon, seeds);
        traces[i].run = task.run;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks.size());
        return;
      }
    }
  };
  const int num_threads =
      std::max(1, std::min<int>(config.threads, static_cast<int>(tasks.size())));
  if (num_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < num_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return traces;
}

// ---------------------------------------------------------------------------
// Aggregation and export

std::vector<AggregateCurve> Aggregate(const std::vector<RegretTrace>& traces) {
  std::vector<AggregateCurve> curves;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const RegretTrace*>> groups;
  for (const RegretTrace& trace : traces) {
    auto [it, inserted] = index.emplace(trace.algorithm, curves.size());
    if (inserted) {
      curves.push_back({trace.algorithm, {}, {}, 0, 0.0, 0.0});
      groups.emplace_back();
    }
    groups[it->second].push_back(&trace);
  }
  for (std::size_t g = 0; g < curves.size(); ++g) {
    const auto& members = groups[g];
    const std::size_t length = members.front()->cumulative.size();
    for (const RegretTrace* m : members) {
      if (m->cumulative.size() != length) {
        throw std::invalid_argument("Aggregate: traces of " +
                                    curves[g].algorithm +
                                    " have different lengths");
      }
    }
    AggregateCurve& curve = curves[g];
    curve.count = members.size();
    curve.mean.assign(length, 0.0);
    curve.std.assign(length, 0.0);
    const double n = static_cast<double>(members.size());
    for (std::size_t t = 0; t < length; ++t) {
      double sum = 0.0;
      for (const RegretTrace* m : members) sum += m->cumulative[t];
      const double mean = sum / n;
      double sq = 0.0;
      for (const RegretTrace* m : members) {
        const double diff = m->cumulative[t] - mean;
        sq += diff * diff;
      }
      curve.mean[t] = mean;
      curve.std[t] = std::sqrt(sq / n);
    }
    std::map<int, std::pair<double, double>> per_run;
    for (const RegretTrace* m : members) {
      per_run[m->run].first += m->arm_select_seconds;
      per_run[m->run].second += m->key_select_seconds;
    }
    for (const auto& [run, totals] : per_run) {
      curve.mean_arm_select_seconds += totals.first / per_run.size();
      curve.mean_key_select_seconds += totals.second / per_run.size();
    }
  }
  return curves;
}

std::string RegretCurvesCsv(const std::vector<RegretTrace>& traces) {
  std::string out = "run,user,algorithm,t,cum_regret\n";
  for (const RegretTrace& trace : traces) {
    const std::string prefix = std::to_string(trace.run) + "," +
                               std::to_string(trace.user) + "," +
                               trace.algorithm + ",";
    for (std::size_t t = 0; t < trace.cumulative.size(); ++t) {
      out += prefix;
      out += std::to_string(t + 1);
      out += ',';
      out += FormatDouble(trace.cumulative[t]);
      out += '\n';
    }
  }
  return out;
}

std::string SummaryCsv(const std::vector<RegretTrace>& traces) {
  std::string out =
      "algorithm,T,mean_regret,std,arm_select_seconds,key_select_seconds\n";
  for (const AggregateCurve& curve : Aggregate(traces)) {
    if (curve.mean.empty()) continue;
    out += curve.algorithm + "," + std::to_string(curve.mean.size()) + "," +
           FormatDouble(curve.mean.back()) + "," +
           FormatDouble(curve.std.back()) + "," +
           FormatDouble(curve.mean_arm_select_seconds) + "," +
           FormatDouble(curve.mean_key_select_seconds) + "\n";
  }
  return out;
}

void ExportResults(const std::vector<RegretTrace>& traces,
                   const ExperimentConfig& config, const Environment& env,
                   const std::string& dir) {
  if (traces.empty()) throw std::invalid_argument("ExportResults: no traces");
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  WriteFile(root / "regret_curves.csv", RegretCurvesCsv(traces));
  WriteFile(root / "summary.csv", SummaryCsv(traces));
  nlohmann::json manifest = {{"code_version", kCodeVersion},
                             {"config", config.ToJson()},
                             {"base_seed", config.base_seed},
                             {"environment_seed", env.seed},
                             {"environment", env.provenance},
                             {"num_traces", traces.size()}};
  WriteFile(root / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<RegretTrace> LoadRegretCurves(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "run,user,algorithm,t,cum_regret") {
    throw std::runtime_error(path + ": unexpected header");
  }
  std::vector<RegretTrace> traces;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::string run, user, algorithm, t, value;
    if (!std::getline(fields, run, ',') || !std::getline(fields, user, ',') ||
        !std::getline(fields, algorithm, ',') || !std::getline(fields, t, ',') ||
        !std::getline(fields, value)) {
      throw std::runtime_error(path + ": malformed line " +
                               std::to_string(line_number));
    }
    const int run_id = std::stoi(run);
    const int user_id = std::stoi(user);
    if (traces.empty() || traces.back().run != run_id ||
        traces.back().user != user_id || traces.back().algorithm != algorithm ||
        std::stoll(t) == 1) {
      traces.push_back({algorithm, user_id, run_id, {}, 0.0, 0.0, 0});
    }
    double parsed = 0.0;
    const auto result =
        std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (result.ec != std::errc()) {
      throw std::runtime_error(path + ": bad value on line " +
                               std::to_string(line_number));
    }
    traces.back().cumulative.push_back(parsed);
  }
  return traces;
}

// ---------------------------------------------------------------------------
// Bounds

double BoundTheorem1(double horizon, double rate, double lambda_b, double beta,
                     double delta, int dim) {
  CheckBoundArgs(horizon, rate, beta, dim, "BoundTheorem1");
  CheckDelta(delta, 0.25, /*inclusive=*/true, "BoundTheorem1");
  if (!(lambda_b > 0.0)) {
    throw std::invalid_argument("BoundTheorem1: lambda_B must be > 0");
  }
  const double d = dim;
  const double width =
      std::sqrt(2.0 * std::log(2.0 / delta) +
                d * std::log1p((1.0 + rate) * horizon / (beta * d))) +
      std::sqrt(beta);
  const double lambda_sq = lambda_b * lambda_b;
  return 4.0 * std::sqrt(2.0 / (rate * lambda_b)) * std::sqrt(horizon) * width +
         256.0 / (rate * lambda_sq) *
             std::log(256.0 * d / (lambda_sq * delta)) +
         1.0;
}

double BoundTheorem4(double horizon, double rate, double beta, double delta,
                     int dim) {
  CheckBoundArgs(horizon, rate, beta, dim, "BoundTheorem4");
  CheckDelta(delta, 1.0, /*inclusive=*/false, "BoundTheorem4");
  const double d = dim;
  return 2.0 *
         std::sqrt(2.0 * horizon * d *
                   std::log1p((horizon + 1.0) / (beta * d))) *
         (std::sqrt(beta) +
          std::sqrt(2.0 * std::log(1.0 / delta) +
                    d * std::log1p((rate + 1.0) * horizon / (beta * d))));
}

double BoundConUcb(double horizon, double rate, double lambda, double beta,
                   double delta, int dim) {
  CheckBoundArgs(horizon, rate, beta, dim, "BoundConUcb");
  CheckDelta(delta, 1.0, /*inclusive=*/false, "BoundConUcb");
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("BoundConUcb: lambda must be in (0,1)");
  }
  const double d = dim;
  const double ratio = lambda / (1.0 - lambda);
  const double log_term = 2.0 * std::log(2.0 / delta);
  return 2.0 *
         std::sqrt(2.0 * horizon * d * std::log1p(ratio * (horizon + 1.0) / d)) *
         (std::sqrt(1.0 / ratio) +
          std::sqrt(1.0 / (ratio * beta)) *
              std::sqrt(log_term + d * std::log1p(rate * horizon / (beta * d))) +
          std::sqrt(log_term + d * std::log1p(ratio * horizon / d)));
}

std::string BoundCurvesCsv(const std::vector<double>& horizons,
                           const BoundParams& params) {
  std::string out = "T,theorem1,theorem4,conucb\n";
  for (double horizon : horizons) {
    const bool integral = horizon == std::floor(horizon) && horizon < 9e15;
    out += (integral ? std::to_string(static_cast<std::int64_t>(horizon))
                     : FormatDouble(horizon)) +
           "," +
           FormatDouble(BoundTheorem1(horizon, params.rate, params.lambda_b,
                                      params.beta, params.delta, params.dim)) +
           "," +
           FormatDouble(BoundTheorem4(horizon, params.rate, params.beta,
                                      params.delta, params.dim)) +
           "," +
           FormatDouble(BoundConUcb(horizon, params.rate, params.lambda,
                                    params.beta, params.delta, params.dim)) +
           "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lemma checks

nlohmann::json Lemma2Config::ToJson() const {
  return {{"environment", env.ToJson()}, {"policy", policy.ToJson()},
          {"schedule", schedule.ToJson()}, {"T", horizon},
          {"num_users", num_users},        {"num_runs", num_runs},
          {"seed", seed},                  {"alpha_scale", alpha_scale}};
}

Lemma2Config Lemma2Config::FromJson(const nlohmann::json& j) {
  Lemma2Config c;
  if (j.contains("environment")) c.env = SyntheticConfig::FromJson(j.at("environment"));
  if (j.contains("policy")) c.policy = PolicyConfig::FromJson(j.at("policy"));
  if (j.contains("schedule")) {
    c.schedule = ConversationSchedule::FromJson(j.at("schedule"));
  }
  c.horizon = j.value("T", c.horizon);
  c.num_users = j.value("num_users", c.num_users);
  c.num_runs = j.value("num_runs", c.num_runs);
  c.seed = j.value("seed", c.seed);
  c.alpha_scale = j.value("alpha_scale", c.alpha_scale);
  return c;
}

Lemma2Result CheckLemma2(const Lemma2Config& config) {
  return CheckLemma2(GenerateSynthetic(config.env), config);
}

Lemma2Result CheckLemma2(const Environment& env, const Lemma2Config& config) {
  if (config.policy.kind != PolicyKind::kConLinUcbBs &&
      config.policy.kind != PolicyKind::kConLinUcbMcr &&
      config.policy.kind != PolicyKind::kConLinUcbUcb) {
    throw std::invalid_argument("CheckLemma2: needs a ConLinUCB policy");
  }
  if (!(config.alpha_scale > 0.0)) {
    throw std::invalid_argument("CheckLemma2: alpha_scale must be > 0");
  }
  const PolicyResources resources =
      ResourcesFor(env, config.policy, config.schedule);
  std::vector<int> user_storage;
  Lemma2Result result;
  for (int u : UserIndices(env, config.num_users, user_storage)) {
    for (int run = 0; run < config.num_runs; ++run) {
      const auto uu = static_cast<std::uint64_t>(u);
      const auto rr = static_cast<std::uint64_t>(run);
      PolicyConfig policy_config = config.policy;
      policy_config.seed = DeriveSeed(config.seed, {kPolicyStream, uu, rr});
      ConLinUcbPolicy policy(policy_config, resources);
      const UserProfile& user = env.users[u];
      Rng pool_rng(DeriveSeed(config.seed, {kPoolStream, uu, rr}));
      SimulatedUser feedback(env, user,
                             DeriveSeed(config.seed, {kNoiseStream, uu, rr}));
      for (std::int64_t t = 1; t <= config.horizon; ++t) {
        const std::vector<ArmId> pool = SamplePool(env, t, pool_rng);
        std::vector<KeyTermId> keys;
        if (env.key_pool_size) keys = SampleKeyPool(env, t, pool_rng);
        StepOutcome outcome;
        policy.Converse(t, keys, feedback, outcome);
        const ArmId arm = policy.SelectArm(pool, t);
        const auto x = env.arms->feature(arm);
        const double error =
            std::abs(x.dot(policy.estimator().Theta() - user.theta));
        const double radius = policy.estimator().ConfRadius(
            x, config.alpha_scale * policy.Alpha(t));
        ++result.samples;
        if (error > radius) ++result.violations;
        policy.ObserveArm(arm, feedback.ArmReward(arm));
      }
    }
  }
  return result;
}

nlohmann::json Lemma3Config::ToJson() const {
  return {{"environment", env.ToJson()}, {"rate", rate},
          {"delta", delta},              {"policy", policy.ToJson()},
          {"extra_rounds", extra_rounds}, {"num_users", num_users},
          {"seed", seed}};
}

Lemma3Config Lemma3Config::FromJson(const nlohmann::json& j) {
  Lemma3Config c;
  if (j.contains("environment")) c.env = SyntheticConfig::FromJson(j.at("environment"));
  c.rate = j.value("rate", c.rate);
  c.delta = j.value("delta", c.delta);
  if (j.contains("policy")) c.policy = PolicyConfig::FromJson(j.at("policy"));
  c.extra_rounds = j.value("extra_rounds", c.extra_rounds);
  c.num_users = j.value("num_users", c.num_users);
  c.seed = j.value("seed", c.seed);
  return c;
}

Lemma3Result CheckLemma3(const Lemma3Config& config) {
  return CheckLemma3(WithKeyPool(GenerateSynthetic(config.env), std::nullopt),
                     config);
}

Lemma3Result CheckLemma3(const Environment& env, const Lemma3Config& config) {
  if (config.policy.kind != PolicyKind::kConLinUcbBs) {
    throw std::invalid_argument("CheckLemma3: needs ConLinUCB-BS");
  }
  if (env.key_pool_size) {
    throw std::invalid_argument(
        "CheckLemma3: needs a fixed key-term set (no key_pool_size)");
  }
  ConversationSchedule schedule;
  schedule.mode = ConversationSchedule::Mode::kLinear;
  schedule.rate = config.rate;
  schedule.q_convention = ConversationSchedule::QConvention::kFloorDifference;
  schedule.Validate();
  const PolicyResources resources = ResourcesFor(env, config.policy, schedule);

  Lemma3Result result;
  result.lambda_b = SpannerMinEigenvalue(*resources.spanner);
  result.onset_round = NormCeilingOnsetRound(config.rate, result.lambda_b,
                                             config.delta, env.dim());
  const auto first = static_cast<std::int64_t>(std::ceil(result.onset_round));
  result.horizon = first + std::max<std::int64_t>(0, config.extra_rounds);

  std::vector<int> user_storage;
  for (int u : UserIndices(env, config.num_users, user_storage)) {
    const auto uu = static_cast<std::uint64_t>(u);
    PolicyConfig policy_config = config.policy;
    policy_config.seed = DeriveSeed(config.seed, {kPolicyStream, uu});
    ConLinUcbPolicy policy(policy_config, resources);
    const UserProfile& user = env.users[u];
    Rng pool_rng(DeriveSeed(config.seed, {kPoolStream, uu}));
    SimulatedUser feedback(env, user, DeriveSeed(config.seed, {kNoiseStream, uu}));
    const double scale = result.lambda_b * config.rate / 2.0;
    for (std::int64_t t = 1; t <= result.horizon; ++t) {
      const std::vector<ArmId> pool = SamplePool(env, t, pool_rng);
      StepOutcome outcome;
      policy.Converse(t, {}, feedback, outcome);
      const ArmId arm = policy.SelectArm(pool, t);
      if (t >= first) {
        const double ratio = policy.estimator().Width(env.arms->feature(arm)) *
                             std::sqrt(scale * static_cast<double>(t));
        result.max_ratio = std::max(result.max_ratio, ratio);
        ++result.samples;
      }
      policy.ObserveArm(arm, feedback.ArmReward(arm));
    }
  }
  return result;
}

}  // namespace conbandit
