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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "pmdlab/errors.hpp"
#include "pmdlab/report.hpp"
#include "pmdlab/sweep.hpp"

using namespace pmdlab;
using namespace pmdlab::harness;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Fresh directory under the test working directory.
fs::path scratch(const std::string& name) {
  const fs::path p = fs::current_path() / "harness_scratch" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

/// A sweep small enough to train in well under a second per run.
SweepSpec tiny_spec(const std::string& id = "tiny") {
  SweepSpec s;
  s.sweep_id = id;
  s.alpha_grid = {0.0, 0.01};
  s.lambda_grid = {0.0, 0.1};
  env::EnvConfig catch_env;
  catch_env.kind = env::EnvKind::Catch;
  s.envs = {env::EnvConfig{}, catch_env};
  s.seeds = 1;
  s.evals = 3;
  s.agent.env_count = 4;
  s.agent.steps_per_update = 16;
  s.agent.batch_size = 32;
  s.agent.hidden = {8};
  s.agent.total_env_steps = 64;
  return s;
}

StoredRun synthetic(const SweepSpec& spec, double alpha, double lambda, const env::EnvConfig& e, int seed_index,
                    std::vector<double> returns) {
  StoredRun r;
  r.alpha = alpha;
  r.lambda = lambda;
  r.seed_index = seed_index;
  r.record.config_id = config_id(alpha, lambda);
  r.record.env = e.id();
  r.record.seed = run_seed(spec.sweep_id, r.record.config_id, e.id(), seed_index);
  r.record.eval_returns = std::move(returns);
  return r;
}

/// Fills a store with one row per run of `spec`, all returning `raw`.
void fill(ResultStore& store, const SweepSpec& spec, double raw) {
  for (const auto& k : spec.runs()) {
    store.append(synthetic(spec, k.alpha, k.lambda, k.env, k.seed_index, std::vector<double>(spec.evals, raw)));
  }
}

std::map<std::string, std::string> store_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "timing.jsonl") {
      out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("temperature grids") {
  const auto [a, l] = default_grids();
  CHECK(a.size() == 29);
  CHECK(l.size() == 29);
  CHECK(a.size() * l.size() == 841);
  CHECK(a.front() == 0.0);
  CHECK(a.back() == 1.0);
  CHECK(l.back() == 5e4);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::is_sorted(l.begin(), l.end()));
  const auto [da, dl] = desk_grids();
  CHECK(da.size() == 9);
  CHECK(dl.size() == 9);
  for (double x : da) CHECK(std::count(a.begin(), a.end(), x) == 1);
  for (double x : dl) CHECK(std::count(l.begin(), l.end(), x) == 1);
}

TEST_CASE("run enumeration and seeds") {
  SweepSpec s;
  s.sweep_id = "baseline";
  std::tie(s.alpha_grid, s.lambda_grid) = default_grids();
  s.envs = env::standard_suite();
  CHECK(s.runs().size() == 16'820);

  const auto t = tiny_spec();
  const auto runs = t.runs();
  REQUIRE(runs.size() == 8);
  CHECK(runs[0].str() == "alpha=0,lambda=0|cartpole|0");
  CHECK(runs[1].str() == "alpha=0,lambda=0|catch|0");
  CHECK(runs[2].config_id == "alpha=0,lambda=0.1");
  std::set<std::uint64_t> seeds;
  for (const auto& r : runs) seeds.insert(r.seed);
  CHECK(seeds.size() == runs.size());
  CHECK(config_id(0.001, 1e4) == "alpha=0.001,lambda=10000");

  // Changing one grid value changes only that value's run seeds.
  auto moved = t;
  moved.lambda_grid = {0.0, 0.2};
  const auto moved_runs = moved.runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].lambda == 0.0) {
      CHECK(moved_runs[i].seed == runs[i].seed);
    } else {
      CHECK(moved_runs[i].seed != runs[i].seed);
    }
  }
}

TEST_CASE("spec JSON") {
  const auto t = tiny_spec();
  const auto back = SweepSpec::from_json(t.to_json());
  CHECK(back.to_json() == t.to_json());
  CHECK(back.content_hash() == t.content_hash());
  CHECK(back.agent.hidden == std::vector<int>{8});

  const json minimal = {{"sweep_id", "m"}, {"envs", {"cartpole", {{"kind", "catch"}, {"catch_rows", 20}}}}};
  const auto m = SweepSpec::from_json(minimal);
  CHECK(m.alpha_grid.size() == 29);
  CHECK(m.seeds == 5);
  CHECK(m.envs[1].catch_rows == 20);

  json desk = minimal;
  desk["preset"] = "desk";
  desk["seeds"] = 4;
  const auto d = SweepSpec::from_json(desk);
  CHECK(d.alpha_grid.size() == 9);
  CHECK(d.agent.total_env_steps == 200'000);
  CHECK(d.seeds == 4);
  CHECK(d.evals == 10);

  for (const char* key : {"sweep_idd", "colour"}) {
    json bad = minimal;
    bad[key] = 1;
    CHECK_THROWS_AS(SweepSpec::from_json(bad), ConfigError);
  }
  json bad = minimal;
  bad["alpha_grid"] = {0.1, 0.1};
  CHECK_THROWS_AS(SweepSpec::from_json(bad), ConfigError);
  bad = minimal;
  bad["lambda_schedule"] = "learned_constant";
  CHECK_THROWS_AS(SweepSpec::from_json(bad), ConfigError);
  bad = minimal;
  bad["overrides"] = {{"warmup", 10}};
  CHECK_THROWS_AS(SweepSpec::from_json(bad), ConfigError);
  bad = minimal;
  bad["preset"] = "laptop";
  CHECK_THROWS_AS(SweepSpec::from_json(bad), ConfigError);
}

TEST_CASE("agent configuration of a cell") {
  auto t = tiny_spec();
  t.alpha_schedule = "learned_linear";
  t.lambda_schedule = "linear";
  t.apmd = true;
  const auto c = t.agent_config(0.3, 2.0);
  CHECK(c.alpha_schedule.learned());
  CHECK(c.alpha_schedule.target_annealed);
  CHECK(c.alpha_schedule.value == 0.3);
  CHECK(c.lambda_schedule.mode == agent::TemperatureSchedule::Mode::LinearAnneal);
  CHECK(c.lambda_schedule.value == 2.0);
  CHECK_FALSE(c.use_regularized_q);
  CHECK(c.batch_size == 32);
}

TEST_CASE("result store") {
  const auto dir = scratch("store");
  const auto spec = tiny_spec();
  const auto runs = spec.runs();
  {
    ResultStore store(dir);
    CHECK(store.runs().empty());
    store.append(synthetic(spec, 0.0, 0.0, runs[0].env, 0, {1.0, 2.0}));
    CHECK(store.status(runs[0].str()) == RunStatus::Done);
    CHECK(store.status(runs[1].str()) == RunStatus::Pending);
    CHECK_THROWS_AS(store.append(synthetic(spec, 0.0, 0.0, runs[0].env, 0, {3.0})), DuplicateRecordError);
    store.record_failure({runs[1].str(), "diverged"});
    CHECK(store.status(runs[1].str()) == RunStatus::Failed);
  }
  {
    ResultStore reopened(dir);
    REQUIRE(reopened.runs().size() == 1);
    CHECK(reopened.runs()[0].record.eval_returns == std::vector<double>{1.0, 2.0});
    CHECK(reopened.failures().size() == 1);
  }
  SUBCASE("a truncated final line is ignored") {
    std::ofstream(dir / "runs.jsonl", std::ios::app) << "{\"config_id\": \"alp";
    ResultStore reopened(dir);
    CHECK(reopened.runs().size() == 1);
  }
  SUBCASE("a malformed line elsewhere is an error") {
    const std::string body = slurp(dir / "runs.jsonl");
    spit(dir / "runs.jsonl", "not json\n" + body);
    CHECK_THROWS_AS(ResultStore{dir}, StorageError);
  }
  SUBCASE("stored runs round-trip") {
    const auto r = synthetic(spec, 0.01, 0.1, runs[3].env, 0, {0.5});
    const auto back = StoredRun::from_json(r.to_json());
    CHECK(back.key() == r.key());
    CHECK(back.key() == runs[7].str());
    CHECK(back.record.seed == r.record.seed);
  }
}

TEST_CASE("sweeps are reproducible and resumable") {
  const auto spec = tiny_spec();
  const auto serial_dir = scratch("serial");
  const auto parallel_dir = scratch("parallel");
  {
    ResultStore serial(serial_dir);
    const auto summary = run_sweep(spec, serial, {});
    CHECK(summary.scheduled == 8);
    CHECK(summary.executed == 8);
    CHECK(summary.failed == 0);
    CHECK(serial.runs().size() == 8);
  }
  {
    ResultStore parallel(parallel_dir);
    SweepOptions opt;
    opt.parallelism = 4;
    run_sweep(spec, parallel, opt);
  }
  CHECK(store_files(serial_dir) == store_files(parallel_dir));
  CHECK(fs::exists(serial_dir / "manifest.json"));
  CHECK(fs::exists(serial_dir / "timing.jsonl"));
  CHECK(fs::exists(serial_dir / ResultStore::log_path(spec.runs()[0].str())));

  SUBCASE("re-invocation after completion runs nothing") {
    ResultStore again(serial_dir);
    const auto summary = run_sweep(spec, again, {});
    CHECK(summary.executed == 0);
    CHECK(summary.skipped == 8);
  }
  SUBCASE("refusing to resume a non-empty store") {
    ResultStore again(serial_dir);
    SweepOptions opt;
    opt.resume = false;
    CHECK_THROWS_AS(run_sweep(spec, again, opt), StorageError);
  }
  SUBCASE("a different spec cannot reuse the store") {
    ResultStore again(serial_dir);
    auto other = spec;
    other.evals = 4;
    CHECK_THROWS_AS(run_sweep(other, again, {}), ConfigError);
  }
  SUBCASE("an interrupted sweep resumes to the same store") {
    const auto partial_dir = scratch("partial");
    fs::copy(serial_dir, partial_dir, fs::copy_options::recursive);
    // Keep the first three rows and cut the fourth mid-line.
    const auto rows = lines_of(slurp(partial_dir / "runs.jsonl"));
    spit(partial_dir / "runs.jsonl", rows[0] + "\n" + rows[1] + "\n" + rows[2] + "\n" + rows[3].substr(0, 20));
    ResultStore partial(partial_dir);
    CHECK(partial.runs().size() == 3);
    const auto summary = run_sweep(spec, partial, {});
    CHECK(summary.executed == 5);
    CHECK(store_files(partial_dir) == store_files(serial_dir));
  }
}

TEST_CASE("heatmap") {
  SUBCASE("all-perfect store") {
    const auto dir = scratch("heat_perfect");
    auto spec = tiny_spec();
    spec.envs = {env::EnvConfig{}};
    spec.seeds = 2;
    ResultStore store(dir);
    fill(store, spec, 500.0);
    const auto rows = lines_of(emit_heatmap(store, spec));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "alpha,lambda,mean_norm_return,std_norm_return,n_runs");
    CHECK(rows[1] == "0,0,1.000000,0.000000,2");
    CHECK(rows[2] == "0,0.1,1.000000,0.000000,2");
    CHECK(rows[4] == "0.01,0.1,1.000000,0.000000,2");
  }
  SUBCASE("a missing seed is counted and flagged") {
    const auto dir = scratch("heat_missing");
    auto spec = tiny_spec();
    spec.envs = {env::EnvConfig{}};
    spec.seeds = 2;
    ResultStore store(dir);
    for (const auto& k : spec.runs()) {
      if (k.alpha == 0.01 && k.lambda == 0.1 && k.seed_index == 1) continue;
      store.append(synthetic(spec, k.alpha, k.lambda, k.env, k.seed_index, {250.0, 500.0}));
    }
    const auto rows = lines_of(emit_heatmap(store, spec));
    CHECK(rows[0] == "alpha,lambda,mean_norm_return,std_norm_return,n_runs,incomplete");
    CHECK(rows[1] == "0,0,0.750000,0.250000,2,0");
    CHECK(rows[4] == "0.01,0.1,0.750000,0.250000,1,1");
    CHECK_THROWS_WITH_AS(performance_table(store, spec), doctest::Contains("alpha=0.01,lambda=0.1"),
                         IncompleteDataError);
  }
  SUBCASE("the full grid has 841 rows") {
    const auto dir = scratch("heat_full");
    SweepSpec spec;
    spec.sweep_id = "full";
    std::tie(spec.alpha_grid, spec.lambda_grid) = default_grids();
    spec.envs = {env::EnvConfig{}};
    spec.seeds = 1;
    spec.evals = 1;
    ResultStore store(dir);
    fill(store, spec, 100.0);
    CHECK(lines_of(emit_heatmap(store, spec)).size() == 842);
  }
}

TEST_CASE("report tables") {
  // Two sweeps with Rbst_0.9 of 0.07 and 0.14, given weaker first.
  const auto make = [](const std::string& id) {
    auto s = tiny_spec(id);
    s.alpha_grid = {0.01};
    s.lambda_grid = {0.1};
    s.envs = {env::EnvConfig{}};
    return s;
  };
  const auto weak_spec = make("weak");
  const auto strong_spec = make("strong");
  ResultStore weak(scratch("weak")), strong(scratch("strong"));
  fill(weak, weak_spec, 453.5);
  fill(strong, strong_spec, 457.0);
  const std::vector<SweepInput> inputs = {{weak_spec, &weak}, {strong_spec, &strong}};

  const auto robustness = lines_of(emit_robustness(inputs));
  REQUIRE(robustness.size() == 3);
  CHECK(robustness[0] == "label,h,D,rbst_090,rbst_095");
  CHECK(robustness[1] == "strong,neg_shannon,rkl,0.140000,0.000000");
  CHECK(robustness[2] == "weak,neg_shannon,rkl,0.070000,0.000000");

  const auto quantiles = lines_of(emit_quantiles(inputs));
  CHECK(quantiles[0] == "label,h,D,quantile,mean,std,count");
  CHECK(quantiles[1] == "weak,neg_shannon,rkl,0.01,0.907000,0.000000,1");
  CHECK(quantiles.size() == 5);

  // A constant-1 table has frequency 1 everywhere on [0, 1].
  ResultStore perfect(scratch("perfect"));
  const auto perfect_spec = make("perfect");
  fill(perfect, perfect_spec, 500.0);
  const std::vector<SweepInput> one = {{perfect_spec, &perfect}};
  const auto freq = lines_of(emit_frequency(one));
  REQUIRE(freq.size() == 102);
  CHECK(freq[0] == "label,tau,frequency");
  CHECK(freq[1] == "perfect,0.00,1.000000");
  CHECK(freq[101] == "perfect,1.00,1.000000");
  for (std::size_t i = 1; i < freq.size(); ++i) CHECK(freq[i].ends_with(",1.000000"));

  const std::vector<SweepInput> none;
  CHECK_THROWS_AS(emit_report(none), PreconditionError);
}

TEST_CASE("min-temperature rows over the rescaled CartPole suite") {
  SweepSpec spec;
  spec.sweep_id = "rescaled";
  spec.alpha_grid = {0.0, 0.01, 0.1};
  spec.lambda_grid = {0.0, 1e-4, 1.0};
  spec.envs = env::rescaled_cartpole_suite();
  spec.seeds = 1;
  spec.evals = 1;
  ResultStore store(scratch("rescaled"));
  // Cells reach the threshold from alpha = 0.01 or from lambda = 1.
  for (const auto& k : spec.runs()) {
    const double max_return = env::bounds(k.env).r_max;
    const bool good = k.alpha >= 0.01 || k.lambda >= 1.0;
    store.append(synthetic(spec, k.alpha, k.lambda, k.env, 0, {good ? max_return : 0.0}));
  }
  const std::vector<SweepInput> in = {{spec, &store}};
  const auto points = min_temperature_points(in, 0.85);
  REQUIRE(points.size() == 11);
  for (const auto& p : points) {
    CHECK(p.min_alpha == 0.01);
    CHECK(p.min_lambda == 1.0);
  }
  const auto fit = min_temperature_fit(points, metrics::Axis::Alpha);
  REQUIRE(fit.has_value());
  CHECK(std::abs(fit->slope) < 1e-12);
  CHECK(fit->intercept == doctest::Approx(0.01));
  const auto rows = lines_of(emit_min_temp(in));
  REQUIRE(rows.size() == 23);
  CHECK(rows[0] == "max_return,min_alpha,min_lambda,slope,intercept,ci_low,ci_high");
  CHECK(rows[1].starts_with("1000,0.01,,"));
  CHECK(rows[12].starts_with("1000,,1,"));
  CHECK(rows[22].starts_with("5,,1,"));
}

#ifdef PMDLAB_CLI
namespace {

int run_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(PMDLAB_CLI) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  const auto log = dir / "out.txt";

  CHECK(run_cli("--version", log) == 0);
  CHECK(slurp(log) == "pmdlab 0.3.0\n");
  CHECK(run_cli("train --bogus", log) == 2);
  CHECK(run_cli("", log) != 0);

  spit(dir / "broken.json", "{ \"sweep_id\": ");
  CHECK(run_cli("sweep --spec " + (dir / "broken.json").string(), log) == 2);
  spit(dir / "unknown.json", R"({"sweep_id": "x", "envs": ["cartpole"], "colour": 1})");
  CHECK(run_cli("sweep --spec " + (dir / "unknown.json").string(), log) == 2);

  const auto train_dir = dir / "train";
  REQUIRE(run_cli("train --env cartpole --h neg_shannon --drift rkl --alpha 0.01 --lambda 0.1 --seed 0 --steps 512 "
                  "--evals 2 --out " + train_dir.string(), log) == 0);
  CHECK(fs::exists(train_dir / "record.json"));
  CHECK(fs::exists(train_dir / "checkpoint.json"));
  CHECK(fs::exists(train_dir / "log.jsonl"));
  const auto record = json::parse(slurp(train_dir / "record.json"));
  CHECK(record.at("eval_returns").size() == 2);
  CHECK(run_cli("eval --checkpoint " + (train_dir / "checkpoint.json").string() + " --episodes 2", log) == 0);
  CHECK(slurp(log).starts_with("env cartpole episodes 2 "));

  json spec = tiny_spec("cli_sweep").to_json();
  spit(dir / "spec.json", spec.dump());
  const auto store = dir / "store";
  REQUIRE(run_cli("sweep --spec " + (dir / "spec.json").string() + " --store " + store.string(), log) == 0);
  CHECK(run_cli("sweep --spec " + (dir / "spec.json").string() + " --store " + store.string(), log) == 1);
  CHECK(run_cli("sweep --spec " + (dir / "spec.json").string() + " --store " + store.string() + " --resume", log) ==
        0);
  CHECK(slurp(log).find("8 scheduled, 0 executed") != std::string::npos);

  json second = tiny_spec("cli_sweep_b").to_json();
  spit(dir / "spec_b.json", second.dump());
  const auto store_b = dir / "store_b";
  REQUIRE(run_cli("sweep --spec " + (dir / "spec_b.json").string() + " --store " + store_b.string(), log) == 0);
  REQUIRE(run_cli("report --kind robustness --store " + store.string() + " --store " + store_b.string(), log) == 0);
  const auto rows = lines_of(slurp(log));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "label,h,D,rbst_090,rbst_095");
  CHECK(run_cli("report --kind heatmap --store " + store.string(), log) == 0);
  CHECK(lines_of(slurp(log)).size() == 5);
  CHECK(run_cli("report --kind nonsense --store " + store.string(), log) == 2);
}
#endif
