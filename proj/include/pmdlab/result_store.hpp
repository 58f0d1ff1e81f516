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

// On-disk sweep store. A store is a directory:
//
//   manifest.json   spec, spec hash, code version, per-run status
//   runs.jsonl      one finished run per line
//   failures.jsonl  runs that raised, with the error message
//   timing.jsonl    wall-clock seconds per run (never compared)
//   logs/           per-iteration training logs, one file per run
//
// Everything except timing.jsonl is a pure function of the spec and the
// code version once the sweep has finished.

#pragma once

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pmdlab/agent.hpp"
#include "pmdlab/metrics.hpp"
#include "pmdlab/sweep_spec.hpp"

namespace pmdlab::harness {

struct StoredRun {
  metrics::RunRecord record;
  double alpha = 0.0;
  double lambda = 0.0;
  int seed_index = 0;

  /// config_id|env|seed_index, same as RunKey::str().
  std::string key() const;

  nlohmann::json to_json() const;
  static StoredRun from_json(const nlohmann::json& j);
};

struct FailedRun {
  std::string key;
  std::string message;
};

enum class RunStatus { Pending, Done, Failed };
std::string status_name(RunStatus s);

class ResultStore {
 public:
  /// Opens `dir`, creating it when missing, and loads existing rows. A
  /// truncated final line (an interrupted append) is ignored; any other
  /// malformed line raises StorageError.
  explicit ResultStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<StoredRun>& runs() const { return runs_; }
  const std::vector<FailedRun>& failures() const { return failures_; }

  RunStatus status(const std::string& key) const;

  /// Appends one row. DuplicateRecordError when (config_id, env, seed) is
  /// already present.
  void append(const StoredRun& run);
  void record_failure(const FailedRun& failure);
  void write_log(const std::string& key, const std::vector<agent::IterationLog>& logs) const;
  void append_timing(const std::string& key, double seconds) const;

  /// logs/<hash>.jsonl, relative to dir().
  static std::string log_path(const std::string& key);

  /// Writes manifest.json with every run of `spec` and its status.
  void write_manifest(const SweepSpec& spec) const;
  std::optional<nlohmann::json> read_manifest() const;
  /// The spec recorded in the manifest (StorageError when absent).
  SweepSpec spec() const;

  /// Rewrites runs.jsonl and failures.jsonl sorted by key, so finished
  /// stores compare byte for byte.
  void canonicalize();

 private:
  std::filesystem::path dir_;
  std::vector<StoredRun> runs_;
  std::vector<FailedRun> failures_;
  std::set<std::string> done_keys_;
  std::set<std::string> failed_keys_;
  std::set<std::string> identities_;  // config_id|env|seed
};

}  // namespace pmdlab::harness
