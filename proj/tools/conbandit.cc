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

// Command-line front end: environment generation and preparation, spanner
// inspection, experiment runs, bound curves and lemma checks.

#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "conbandit/bench.h"
#include "conbandit/env.h"
#include "conbandit/spanner.h"
#include "nlohmann/json.hpp"

namespace {

using conbandit::Environment;
using nlohmann::json;

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

void Emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + out);
  file << text;
  if (!file) throw std::runtime_error("failed writing " + out);
}

void RequireOut(const std::string& out, const char* command) {
  if (out.empty()) {
    throw std::invalid_argument(std::string(command) + ": --out is required");
  }
}

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void AddCommon(CLI::App* app, CommonFlags& flags, bool with_threads) {
  app->add_option("--config", flags.config, "JSON configuration file");
  app->add_option("--out", flags.out, "Output path");
  app->add_option("--seed", flags.seed, "Override the configured seed");
  if (with_threads) {
    app->add_option("--threads", flags.threads, "Worker threads")
        ->check(CLI::PositiveNumber);
  }
}

int Gen(const CommonFlags& flags) {
  RequireOut(flags.out, "gen");
  json j = flags.config.empty() ? json::object() : ReadJson(flags.config);
  if (flags.seed) j["seed"] = *flags.seed;
  const conbandit::SyntheticConfig config =
      conbandit::SyntheticConfig::FromJson(j);
  const Environment env = conbandit::GenerateSynthetic(config);
  conbandit::SaveEnvironment(env, flags.out);
  std::cerr << "wrote " << flags.out << ": " << env.arms->size() << " arms, "
            << env.key_terms->size() << " key-terms, " << env.users.size()
            << " users, d=" << env.dim() << "\n";
  return 0;
}

int Prep(const CommonFlags& flags, const std::string& input,
         const std::string& source) {
  RequireOut(flags.out, "prep");
  json j = flags.config.empty() ? json::object() : ReadJson(flags.config);
  if (flags.seed) j["seed"] = *flags.seed;
  const conbandit::RealEnvConfig config = conbandit::RealEnvConfig::FromJson(j);
  const conbandit::HetRecDataset data =
      conbandit::LoadHetRec(input, conbandit::ParseHetRecSource(source));
  std::cerr << input << ": " << data.lines_read << " lines, "
            << data.records.size() << " records, " << data.duplicates_removed
            << " duplicates removed\n";
  const conbandit::RealEnvBuild build = conbandit::BuildRealEnv(data, config);
  conbandit::SaveEnvironment(build.env, flags.out);
  std::cerr << "wrote " << flags.out << ": " << build.env.arms->size()
            << " arms, " << build.env.key_terms->size() << " key-terms, "
            << build.env.users.size() << " users, svd iterations "
            << build.svd.iterations << "\n";
  return 0;
}

int SpannerCommand(const CommonFlags& flags, const std::string& env_path,
                   double approx_factor, double tol) {
  const Environment env = conbandit::LoadEnvironment(env_path);
  const conbandit::Spanner spanner =
      conbandit::ComputeSpanner(*env.key_terms, approx_factor);
  const conbandit::SpannerCheck check =
      conbandit::VerifySpanner(spanner, *env.key_terms, tol);
  json report = conbandit::SpannerToJson(spanner);
  report["lambda_b"] = conbandit::SpannerMinEigenvalue(spanner);
  report["swap_budget"] = conbandit::SpannerSwapBudget(env.dim(), approx_factor);
  report["verified"] = check.passed;
  report["max_coefficient"] = check.max_coefficient;
  Emit(report.dump(2) + "\n", flags.out);
  if (!check.passed) {
    std::cerr << "spanner verification failed: max coefficient "
              << check.max_coefficient << " > " << approx_factor << "\n";
    return 1;
  }
  return 0;
}

int Run(const CommonFlags& flags) {
  if (flags.config.empty()) {
    throw std::invalid_argument("run: --config is required");
  }
  json j = ReadJson(flags.config);
  if (flags.seed) j["base_seed"] = *flags.seed;
  if (!flags.out.empty()) j["output"] = flags.out;
  j["threads"] = flags.threads;
  const conbandit::ExperimentConfig config =
      conbandit::ExperimentConfig::FromJson(j);
  if (config.output.empty()) {
    throw std::invalid_argument("run: no output directory (--out)");
  }
  const Environment env = conbandit::PrepareEnvironment(config);
  const auto traces = conbandit::RunExperiment(config, env);
  conbandit::ExportResults(traces, config, env, config.output);
  for (const auto& curve : conbandit::Aggregate(traces)) {
    std::cerr << curve.algorithm << ": R(T)=" << curve.mean.back() << " +- "
              << curve.std.back() << "\n";
  }
  return 0;
}

int Bounds(const CommonFlags& flags, double t_min, double t_max, int points) {
  if (!(t_min >= 1.0) || !(t_max >= t_min) || points < 1) {
    throw std::invalid_argument("bounds: need 1 <= --t-min <= --t-max, --points >= 1");
  }
  conbandit::BoundParams params;
  if (!flags.config.empty()) {
    const json j = ReadJson(flags.config);
    params.rate = j.value("rate", params.rate);
    params.lambda_b = j.value("lambda_b", params.lambda_b);
    params.beta = j.value("beta", params.beta);
    params.delta = j.value("delta", params.delta);
    params.lambda = j.value("lambda", params.lambda);
    params.dim = j.value("dim", params.dim);
  }
  std::vector<double> horizons;
  for (int i = 0; i < points; ++i) {
    const double frac = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    horizons.push_back(
        std::round(std::exp(std::log(t_min) + frac * std::log(t_max / t_min))));
  }
  Emit(conbandit::BoundCurvesCsv(horizons, params), flags.out);
  return 0;
}

int Check(const CommonFlags& flags, const std::string& lemma) {
  json j = flags.config.empty() ? json::object() : ReadJson(flags.config);
  if (flags.seed) j["seed"] = *flags.seed;
  json report;
  if (lemma == "lemma2") {
    const auto result =
        conbandit::CheckLemma2(conbandit::Lemma2Config::FromJson(j));
    report = {{"lemma", lemma},
              {"samples", result.samples},
              {"violations", result.violations},
              {"violation_rate", result.rate()}};
  } else if (lemma == "lemma3") {
    const auto result =
        conbandit::CheckLemma3(conbandit::Lemma3Config::FromJson(j));
    report = {{"lemma", lemma},
              {"lambda_b", result.lambda_b},
              {"onset_round", result.onset_round},
              {"T", result.horizon},
              {"samples", result.samples},
              {"max_ratio", result.max_ratio}};
  } else {
    throw std::invalid_argument("check: unknown suite '" + lemma + "'");
  }
  Emit(report.dump(2) + "\n", flags.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversational contextual bandit simulator"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic environment");
  AddCommon(gen, gen_flags, false);

  CommonFlags prep_flags;
  std::string prep_input, prep_source = "lastfm";
  CLI::App* prep = app.add_subcommand("prep", "Build an environment from HetRec tags");
  AddCommon(prep, prep_flags, false);
  prep->add_option("--input", prep_input, "HetRec tagging file")->required();
  prep->add_option("--source", prep_source, "lastfm or movielens");

  CommonFlags spanner_flags;
  std::string spanner_env;
  double spanner_c = conbandit::kDefaultSpannerFactor;
  double spanner_tol = 1e-6;
  CLI::App* spanner = app.add_subcommand("spanner", "Compute and verify a spanner");
  AddCommon(spanner, spanner_flags, false);
  spanner->add_option("--env", spanner_env, "Environment artifact")->required();
  spanner->add_option("--c", spanner_c, "Approximation factor C > 1");
  spanner->add_option("--tol", spanner_tol, "Verification tolerance");

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "Run an experiment");
  AddCommon(run, run_flags, true);

  CommonFlags bounds_flags;
  double t_min = 1e3, t_max = 1e7;
  int points = 21;
  CLI::App* bounds = app.add_subcommand("bounds", "Emit regret-bound curves");
  AddCommon(bounds, bounds_flags, false);
  bounds->add_option("--t-min", t_min, "Smallest horizon");
  bounds->add_option("--t-max", t_max, "Largest horizon");
  bounds->add_option("--points", points, "Log-spaced horizons");

  CommonFlags check_flags;
  std::string lemma;
  CLI::App* check = app.add_subcommand("check", "Confidence-width checks");
  AddCommon(check, check_flags, false);
  check->add_option("suite", lemma, "lemma2 or lemma3")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return Gen(gen_flags);
    if (*prep) return Prep(prep_flags, prep_input, prep_source);
    if (*spanner) {
      return SpannerCommand(spanner_flags, spanner_env, spanner_c, spanner_tol);
    }
    if (*run) return Run(run_flags);
    if (*bounds) return Bounds(bounds_flags, t_min, t_max, points);
    if (*check) return Check(check_flags, lemma);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
