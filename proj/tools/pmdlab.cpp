// Copyright 2026 The pmdlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// pmdlab command line: train, sweep, report, eval.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>

#include "pmdlab/agent.hpp"
#include "pmdlab/errors.hpp"
#include "pmdlab/metrics.hpp"
#include "pmdlab/report.hpp"
#include "pmdlab/result_store.hpp"
#include "pmdlab/sweep.hpp"
#include "pmdlab/sweep_spec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pmdlab;

namespace {

constexpr int kUsageExit = 2;

fs::path default_out() {
  const char* env = std::getenv("PMDLAB_OUT");
  return env && *env ? fs::path(env) : fs::path("pmdlab_out");
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw StorageError("cannot write " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

struct TrainArgs {
  std::string env = "cartpole";
  std::string h = "neg_shannon";
  std::string drift = "rkl";
  double alpha = 0.01;
  double lambda = 0.1;
  std::string alpha_schedule = "constant";
  std::string lambda_schedule = "constant";
  bool apmd = false;
  std::uint64_t seed = 0;
  long steps = 0;
  int evals = harness::kDeskEvals;
  std::string preset;
  std::string out;
};

int run_train(const TrainArgs& a) {
  harness::SweepSpec spec;
  spec.sweep_id = "train";
  spec.h = reg::RegularizerSpec::parse(a.h);
  spec.drift = reg::DriftSpec::parse(a.drift);
  spec.alpha_schedule = a.alpha_schedule;
  spec.lambda_schedule = a.lambda_schedule;
  spec.apmd = a.apmd;
  spec.envs = {env::parse_env_id(a.env)};
  spec.alpha_grid = {a.alpha};
  spec.lambda_grid = {a.lambda};
  if (!a.preset.empty()) harness::apply_preset(spec, a.preset, false);
  spec.seeds = 1;
  spec.evals = a.evals;
  if (a.steps > 0) spec.agent.total_env_steps = a.steps;
  spec.validate();

  harness::RunKey key{harness::config_id(a.alpha, a.lambda), a.alpha, a.lambda, spec.envs[0], 0, a.seed};
  const harness::RunOutcome outcome = harness::execute_run(spec, key);

  const fs::path out = a.out.empty() ? default_out() / ("train_" + key.env.id() + "_s" + std::to_string(a.seed))
                                     : fs::path(a.out);
  json record = outcome.run.to_json();
  record["spec"] = spec.to_json();
  write_file(out / "record.json", record.dump(1) + "\n");
  std::string log;
  for (const auto& l : outcome.logs) {
    log += json{{"iteration", l.iteration}, {"env_steps", l.env_steps},
                {"mean_return", std::isfinite(l.mean_return) ? json(l.mean_return) : json(nullptr)},
                {"alpha", l.alpha}, {"lambda", l.lambda}, {"actor_loss", l.actor_loss},
                {"critic_loss", l.critic_loss}}
               .dump() +
           "\n";
  }
  write_file(out / "log.jsonl", log);
  const json checkpoint = {{"format", "pmdlab.checkpoint"},
                           {"version", 1},
                           {"env", harness::env_to_json(key.env)},
                           {"policy", nn::to_json(outcome.policy.params())}};
  write_file(out / "checkpoint.json", checkpoint.dump() + "\n");

  const auto b = env::bounds(key.env);
  double norm = 0.0;
  for (double r : outcome.run.record.eval_returns) norm += metrics::normalize_return(r, b);
  norm /= static_cast<double>(outcome.run.record.eval_returns.size());
  std::printf("%s seed %llu: mean normalized return %.4f over %d evals -> %s\n", key.env.id().c_str(),
              static_cast<unsigned long long>(a.seed), norm, a.evals, out.string().c_str());
  return 0;
}

struct SweepArgs {
  std::string spec;
  std::string store;
  std::string preset;
  int parallelism = 1;
  bool resume = false;
};

int run_sweep_cmd(const SweepArgs& a) {
  json j = read_json(a.spec);
  if (!a.preset.empty()) {
    if (!j.is_object()) throw ConfigError("a sweep spec must be a JSON object");
    j["preset"] = a.preset;
  }
  const harness::SweepSpec spec = harness::SweepSpec::from_json(j);
  const fs::path dir = a.store.empty() ? default_out() / spec.sweep_id : fs::path(a.store);
  harness::ResultStore store(dir);
  harness::SweepOptions opts;
  opts.parallelism = a.parallelism;
  opts.resume = a.resume;
  const std::size_t total = spec.runs().size();
  std::size_t settled = total - [&] {
    std::size_t pending = 0;
    for (const auto& k : spec.runs()) pending += store.status(k.str()) == harness::RunStatus::Pending;
    return pending;
  }();
  opts.on_run = [&](const harness::RunKey& k, harness::RunStatus s, double seconds) {
    ++settled;
    std::fprintf(stderr, "[%zu/%zu] %s %s (%.1fs)\n", settled, total, k.str().c_str(),
                 harness::status_name(s).c_str(), seconds);
  };
  const auto summary = harness::run_sweep(spec, store, opts);
  std::printf("sweep %s: %zu scheduled, %zu executed, %zu skipped, %zu failed -> %s\n", spec.sweep_id.c_str(),
              summary.scheduled, summary.executed, summary.skipped, summary.failed, dir.string().c_str());
  return 0;
}

struct ReportArgs {
  std::vector<std::string> stores;
  std::string kind = "heatmap";
  std::string out;
  double threshold = metrics::kDefaultSuccessThreshold;
};

int run_report(const ReportArgs& a) {
  std::vector<std::unique_ptr<harness::ResultStore>> stores;
  std::vector<harness::SweepInput> inputs;
  for (const auto& path : a.stores) {
    if (!fs::is_directory(path)) throw StorageError("no store at " + path);
    stores.push_back(std::make_unique<harness::ResultStore>(path));
    inputs.push_back({stores.back()->spec(), stores.back().get()});
  }
  if (a.kind == "all") {
    const fs::path dir = a.out.empty() ? default_out() / "report" : fs::path(a.out);
    const auto r = harness::emit_report(inputs, a.threshold);
    write_file(dir / "robustness.csv", r.robustness);
    write_file(dir / "frequency.csv", r.frequency);
    write_file(dir / "quantiles.csv", r.quantiles);
    write_file(dir / "min_temp.csv", r.min_temp);
    for (const auto& in : inputs) write_file(dir / ("heatmap_" + in.spec.sweep_id + ".csv"), harness::emit_heatmap(*in.store, in.spec));
    std::printf("report written to %s\n", dir.string().c_str());
    return 0;
  }
  std::string csv;
  if (a.kind == "heatmap") {
    for (const auto& in : inputs) csv += harness::emit_heatmap(*in.store, in.spec);
  } else if (a.kind == "robustness") {
    csv = harness::emit_robustness(inputs);
  } else if (a.kind == "frequency") {
    csv = harness::emit_frequency(inputs);
  } else if (a.kind == "quantiles") {
    csv = harness::emit_quantiles(inputs);
  } else {
    csv = harness::emit_min_temp(inputs, a.threshold);
  }
  if (a.out.empty()) {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
  } else {
    write_file(a.out, csv);
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string env;
  int episodes = 10;
  std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a) {
  const json j = read_json(a.checkpoint);
  if (!j.is_object() || j.value("format", "") != "pmdlab.checkpoint") throw ConfigError("not a pmdlab checkpoint");
  const env::EnvConfig cfg = a.env.empty() ? harness::env_from_json(j.at("env")) : env::parse_env_id(a.env);
  const nn::PolicyHead policy(nn::mlp_from_json(j.at("policy")));
  if (policy.params().input_size() != env::observation_size(cfg) ||
      policy.action_count() != env::action_count(cfg)) {
    throw ConfigError("checkpoint does not match environment " + cfg.id());
  }
  const auto returns = agent::evaluate(policy, cfg, a.episodes, a.seed);
  double raw = 0.0, norm = 0.0;
  for (double r : returns) {
    raw += r;
    norm += metrics::normalize_return(r, env::bounds(cfg));
  }
  const double n = static_cast<double>(returns.size());
  std::printf("env %s episodes %d mean_return %.6g mean_norm_return %.6f\n", cfg.id().c_str(), a.episodes, raw / n,
              norm / n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pmdlab: policy mirror descent regularization lab"};
  app.set_version_flag("--version", std::string("pmdlab ") + PMDLAB_VERSION);
  app.require_subcommand(1);
  // --h names the regularizer, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train one configuration and write a run record and checkpoint");
  t->add_option("--env", train.env, "Environment id (cartpole, acrobot, catch, deepsea, catch_20x10, cartpole@0.4)");
  t->add_option("--h", train.h, "MDP regularizer: neg_shannon, neg_tsallis:<m>, sq_l2, lp:<p>, max");
  t->add_option("--drift", train.drift, "Drift: rkl, fkl, bregman:<regularizer>");
  t->add_option("--alpha", train.alpha, "MDP regularizer temperature (target weight when learned)");
  t->add_option("--lambda", train.lambda, "Drift temperature");
  t->add_option("--alpha-schedule", train.alpha_schedule)
      ->check(CLI::IsMember({"constant", "linear", "learned_constant", "learned_linear"}));
  t->add_option("--lambda-schedule", train.lambda_schedule)->check(CLI::IsMember({"constant", "linear"}));
  t->add_flag("--apmd", train.apmd, "Drop the regularizer from the critic target");
  t->add_option("--seed", train.seed);
  t->add_option("--steps", train.steps, "Total environment steps (default 1e6, 2e5 with --preset desk)")
      ->check(CLI::PositiveNumber);
  t->add_option("--evals", train.evals, "Evaluation episodes")->check(CLI::PositiveNumber);
  t->add_option("--preset", train.preset)->check(CLI::IsMember({"desk"}));
  t->add_option("--out", train.out, "Output directory (default $PMDLAB_OUT/train_<env>_s<seed>)");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Run a temperature sweep into a store");
  s->add_option("--spec", sweep.spec, "Sweep spec JSON file")->required();
  s->add_option("--store", sweep.store, "Store directory (default $PMDLAB_OUT/<sweep_id>)");
  s->add_option("--preset", sweep.preset)->check(CLI::IsMember({"desk"}));
  s->add_option("--parallelism", sweep.parallelism)->check(CLI::PositiveNumber);
  s->add_flag("--resume", sweep.resume, "Continue a store that already holds runs");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Emit CSV reports from finished stores");
  r->add_option("--store", report.stores, "Store directory (repeatable)")->required();
  r->add_option("--kind", report.kind)
      ->check(CLI::IsMember({"heatmap", "robustness", "frequency", "quantiles", "min_temp", "all"}));
  r->add_option("--threshold", report.threshold, "Success threshold for min_temp (0.85; 0.75 also used)")
      ->check(CLI::Range(0.0, 1.0));
  r->add_option("--out", report.out, "Output file (directory for --kind all); stdout by default");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--checkpoint", eval.checkpoint)->required();
  e->add_option("--env", eval.env, "Environment id (default: the checkpoint's)");
  e->add_option("--episodes", eval.episodes)->check(CLI::PositiveNumber);
  e->add_option("--seed", eval.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& ok) {
    return app.exit(ok);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsageExit;
  }

  try {
    if (*t) return run_train(train);
    if (*s) return run_sweep_cmd(sweep);
    if (*r) return run_report(report);
    if (*e) return run_eval(eval);
  } catch (const ConfigError& err) {
    std::cerr << "pmdlab: " << err.what() << "\n";
    return kUsageExit;
  } catch (const std::exception& err) {
    std::cerr << "pmdlab: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
