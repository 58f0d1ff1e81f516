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

#include "pmdlab/result_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pmdlab/errors.hpp"
#include "pmdlab/random.hpp"

namespace pmdlab::harness {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRunsFile = "runs.jsonl";
constexpr const char* kFailuresFile = "failures.jsonl";
constexpr const char* kTimingFile = "timing.jsonl";
constexpr const char* kManifestFile = "manifest.json";

std::string identity(const metrics::RunRecord& r) {
  return r.config_id + "|" + r.env + "|" + std::to_string(r.seed);
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << line << '\n';
  out.flush();
  if (!out) throw StorageError("cannot append to " + path.string());
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    out << content;
    out.flush();
    if (!out) throw StorageError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot replace " + path.string() + ": " + ec.message());
}

/// Parsed lines of a JSONL file; a malformed last line is dropped.
std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(json::parse(lines[i]));
    } catch (const json::parse_error&) {
      if (i + 1 == lines.size()) break;
      throw StorageError("corrupt line " + std::to_string(i + 1) + " in " + path.string());
    }
  }
  return out;
}

}  // namespace

std::string StoredRun::key() const {
  return record.config_id + "|" + record.env + "|" + std::to_string(seed_index);
}

json StoredRun::to_json() const {
  return {{"config_id", record.config_id},
          {"alpha", alpha},
          {"lambda", lambda},
          {"env", record.env},
          {"seed_index", seed_index},
          {"seed", record.seed},
          {"eval_returns", record.eval_returns}};
}

StoredRun StoredRun::from_json(const json& j) {
  try {
    StoredRun r;
    r.record.config_id = j.at("config_id").get<std::string>();
    r.alpha = j.at("alpha").get<double>();
    r.lambda = j.at("lambda").get<double>();
    r.record.env = j.at("env").get<std::string>();
    r.seed_index = j.at("seed_index").get<int>();
    r.record.seed = j.at("seed").get<std::uint64_t>();
    r.record.eval_returns = j.at("eval_returns").get<std::vector<double>>();
    return r;
  } catch (const json::exception& e) {
    throw StorageError(std::string("malformed run record: ") + e.what());
  }
}

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Pending:
      return "pending";
    case RunStatus::Done:
      return "done";
    case RunStatus::Failed:
      return "failed";
  }
  return "?";
}

ResultStore::ResultStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "logs", ec);
  if (ec) throw StorageError("cannot create store " + dir_.string() + ": " + ec.message());
  for (const json& j : read_jsonl(dir_ / kRunsFile)) {
    StoredRun r = StoredRun::from_json(j);
    if (!identities_.insert(identity(r.record)).second) {
      throw DuplicateRecordError("duplicate run " + r.key() + " in " + dir_.string());
    }
    done_keys_.insert(r.key());
    runs_.push_back(std::move(r));
  }
  for (const json& j : read_jsonl(dir_ / kFailuresFile)) {
    try {
      FailedRun f{j.at("key").get<std::string>(), j.at("message").get<std::string>()};
      if (done_keys_.contains(f.key) || !failed_keys_.insert(f.key).second) continue;
      failures_.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw StorageError(std::string("malformed failure record: ") + e.what());
    }
  }
}

RunStatus ResultStore::status(const std::string& key) const {
  if (done_keys_.contains(key)) return RunStatus::Done;
  if (failed_keys_.contains(key)) return RunStatus::Failed;
  return RunStatus::Pending;
}

void ResultStore::append(const StoredRun& run) {
  const std::string id = identity(run.record);
  if (identities_.contains(id) || done_keys_.contains(run.key())) {
    throw DuplicateRecordError("run " + run.key() + " is already stored");
  }
  append_line(dir_ / kRunsFile, run.to_json().dump());
  identities_.insert(id);
  done_keys_.insert(run.key());
  runs_.push_back(run);
}

void ResultStore::record_failure(const FailedRun& failure) {
  if (done_keys_.contains(failure.key) || failed_keys_.contains(failure.key)) {
    throw DuplicateRecordError("run " + failure.key + " already has an outcome");
  }
  append_line(dir_ / kFailuresFile, json{{"key", failure.key}, {"message", failure.message}}.dump());
  failed_keys_.insert(failure.key);
  failures_.push_back(failure);
}

std::string ResultStore::log_path(const std::string& key) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "logs/%016llx.jsonl", static_cast<unsigned long long>(fnv1a(key)));
  return buf;
}

void ResultStore::write_log(const std::string& key, const std::vector<agent::IterationLog>& logs) const {
  const auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  std::ostringstream out;
  out << json{{"key", key}}.dump() << '\n';
  for (const auto& l : logs) {
    out << json{{"iteration", l.iteration},
                {"env_steps", l.env_steps},
                {"mean_return", num(l.mean_return)},
                {"episodes", l.episodes},
                {"alpha", num(l.alpha)},
                {"lambda", num(l.lambda)},
                {"h_bar", num(l.h_bar)},
                {"actor_loss", num(l.actor_loss)},
                {"critic_loss", num(l.critic_loss)},
                {"alpha_loss", num(l.alpha_loss)}}
               .dump()
        << '\n';
  }
  write_atomically(dir_ / log_path(key), out.str());
}

void ResultStore::append_timing(const std::string& key, double seconds) const {
  append_line(dir_ / kTimingFile, json{{"key", key}, {"wall_seconds", seconds}}.dump());
}

void ResultStore::write_manifest(const SweepSpec& spec) const {
  json runs = json::object();
  for (const RunKey& k : spec.runs()) {
    const std::string key = k.str();
    runs[key] = {{"status", status_name(status(key))}, {"log", log_path(key)}};
  }
  const json m = {{"format", "pmdlab.manifest"},
                  {"version", 1},
                  {"sweep_id", spec.sweep_id},
                  {"spec_hash", spec.content_hash()},
                  {"code_version", PMDLAB_VERSION},
                  {"spec", spec.to_json()},
                  {"runs", runs}};
  write_atomically(dir_ / kManifestFile, m.dump(1) + "\n");
}

std::optional<json> ResultStore::read_manifest() const {
  std::ifstream in(dir_ / kManifestFile);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw StorageError("corrupt manifest in " + dir_.string() + ": " + e.what());
  }
}

SweepSpec ResultStore::spec() const {
  const auto m = read_manifest();
  if (!m || !m->contains("spec")) throw StorageError("store " + dir_.string() + " has no manifest");
  return SweepSpec::from_json(m->at("spec"));
}

void ResultStore::canonicalize() {
  std::sort(runs_.begin(), runs_.end(), [](const StoredRun& a, const StoredRun& b) { return a.key() < b.key(); });
  std::sort(failures_.begin(), failures_.end(), [](const FailedRun& a, const FailedRun& b) { return a.key < b.key; });
  std::string runs, failures;
  for (const auto& r : runs_) runs += r.to_json().dump() + "\n";
  for (const auto& f : failures_) failures += json{{"key", f.key}, {"message", f.message}}.dump() + "\n";
  write_atomically(dir_ / kRunsFile, runs);
  if (!failures_.empty() || fs::exists(dir_ / kFailuresFile)) write_atomically(dir_ / kFailuresFile, failures);
}

}  // namespace pmdlab::harness
