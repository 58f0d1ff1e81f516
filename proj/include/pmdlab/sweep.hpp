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

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "pmdlab/agent.hpp"
#include "pmdlab/result_store.hpp"
#include "pmdlab/sweep_spec.hpp"

namespace pmdlab::harness {

struct RunOutcome {
  StoredRun run;
  std::vector<agent::IterationLog> logs;
  nn::PolicyHead policy;
};

/// Seed stream used for evaluation episodes, derived from the run seed.
std::uint64_t eval_seed(std::uint64_t run_seed);

/// Trains one grid cell on one environment and evaluates it `evals` times.
RunOutcome execute_run(const SweepSpec& spec, const RunKey& key);

struct SweepOptions {
  int parallelism = 1;
  /// false refuses a store that already holds runs.
  bool resume = true;
  /// Called by the writer after each run settles (serialized).
  std::function<void(const RunKey&, RunStatus, double seconds)> on_run;
};

struct SweepSummary {
  std::size_t scheduled = 0;  // runs in the spec
  std::size_t executed = 0;   // trained in this call
  std::size_t skipped = 0;    // already settled in the store
  std::size_t failed = 0;     // failed in this call
};

/// Runs every (config, env, seed) of `spec` that the store has not settled.
/// Runs that raise a library error are recorded as failed and the sweep
/// continues; StorageError aborts. ConfigError when the store belongs to a
/// different spec.
SweepSummary run_sweep(const SweepSpec& spec, ResultStore& store, const SweepOptions& options = {});

}  // namespace pmdlab::harness
