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

#include "pmdlab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "pmdlab/errors.hpp"
#include "pmdlab/random.hpp"

namespace pmdlab::harness {

std::uint64_t eval_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 0xe7a1); }

RunOutcome execute_run(const SweepSpec& spec, const RunKey& key) {
  agent::MdpoAgent agent(spec.agent_config(key.alpha, key.lambda), key.env, key.seed);
  RunOutcome out;
  out.logs = agent.train();
  out.policy = agent.policy();
  out.run.alpha = key.alpha;
  out.run.lambda = key.lambda;
  out.run.seed_index = key.seed_index;
  out.run.record.config_id = key.config_id;
  out.run.record.env = key.env.id();
  out.run.record.seed = key.seed;
  out.run.record.eval_returns = agent::evaluate(out.policy, key.env, spec.evals, eval_seed(key.seed));
  return out;
}

SweepSummary run_sweep(const SweepSpec& spec, ResultStore& store, const SweepOptions& options) {
  spec.validate();
  if (options.parallelism <= 0) throw ConfigError("parallelism must be positive");
  if (const auto manifest = store.read_manifest()) {
    if (manifest->value("spec_hash", "") != spec.content_hash()) {
      throw ConfigError("store " + store.dir().string() + " was written for a different sweep spec");
    }
  }
  if (!options.resume && (!store.runs().empty() || !store.failures().empty())) {
    throw StorageError("store " + store.dir().string() + " already holds runs; resume to continue it");
  }

  const std::vector<RunKey> all = spec.runs();
  std::vector<RunKey> todo;
  for (const RunKey& k : all) {
    if (store.status(k.str()) == RunStatus::Pending) todo.push_back(k);
  }
  SweepSummary summary;
  summary.scheduled = all.size();
  summary.skipped = all.size() - todo.size();
  store.write_manifest(spec);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex writer;
  std::exception_ptr fatal;

  const auto settle = [&](const RunKey& key, const RunOutcome* outcome, const std::string& error, double seconds) {
    std::lock_guard lock(writer);
    if (abort) return;
    try {
      if (outcome) {
        store.append(outcome->run);
        store.write_log(key.str(), outcome->logs);
      } else {
        store.record_failure({key.str(), error});
        ++summary.failed;
      }
      store.append_timing(key.str(), seconds);
      ++summary.executed;
      if (options.on_run) options.on_run(key, outcome ? RunStatus::Done : RunStatus::Failed, seconds);
    } catch (...) {
      fatal = std::current_exception();
      abort = true;
    }
  };

  const auto worker = [&]() {
    while (!abort) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const RunKey& key = todo[i];
      const auto start = std::chrono::steady_clock::now();
      std::optional<RunOutcome> outcome;
      std::string error;
      try {
        outcome = execute_run(spec, key);
      } catch (const Error& e) {
        error = e.what();
      } catch (...) {
        std::lock_guard lock(writer);
        if (!fatal) fatal = std::current_exception();
        abort = true;
        return;
      }
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      settle(key, outcome ? &*outcome : nullptr, error, seconds);
    }
  };

  const int n_workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(options.parallelism),
                                                               std::max<std::size_t>(todo.size(), 1)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  store.canonicalize();
  store.write_manifest(spec);
  return summary;
}

}  // namespace pmdlab::harness
