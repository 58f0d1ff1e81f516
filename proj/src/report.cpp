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

#include "pmdlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "pmdlab/errors.hpp"

namespace pmdlab::harness {
namespace {

std::string num(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string g6(double v) { return num("%.6g", v); }
std::string f6(double v) { return num("%.6f", v); }

std::map<std::string, env::ReturnBounds> suite_bounds(const SweepSpec& spec) {
  std::map<std::string, env::ReturnBounds> out;
  for (const auto& e : spec.envs) out[e.id()] = env::bounds(e);
  return out;
}

/// Stored runs grouped by config id.
std::map<std::string, std::vector<const StoredRun*>> by_config(const ResultStore& store) {
  std::map<std::string, std::vector<const StoredRun*>> out;
  for (const StoredRun& r : store.runs()) out[r.record.config_id].push_back(&r);
  return out;
}

const ResultStore& store_of(const SweepInput& s) {
  if (!s.store) throw PreconditionError("report input without a store");
  return *s.store;
}

}  // namespace

std::vector<HeatmapCell> heatmap_cells(const ResultStore& store, const SweepSpec& spec) {
  const auto bounds = suite_bounds(spec);
  const auto groups = by_config(store);
  std::vector<HeatmapCell> cells;
  std::vector<double> alphas = spec.alpha_grid, lambdas = spec.lambda_grid;
  std::sort(alphas.begin(), alphas.end());
  std::sort(lambdas.begin(), lambdas.end());
  for (double a : alphas) {
    for (double l : lambdas) {
      HeatmapCell cell;
      cell.alpha = a;
      cell.lambda = l;
      cell.expected_runs = spec.envs.size() * static_cast<std::size_t>(spec.seeds);
      std::vector<double> values;
      if (const auto it = groups.find(config_id(a, l)); it != groups.end()) {
        for (const StoredRun* r : it->second) {
          const auto b = bounds.find(r->record.env);
          if (b == bounds.end()) continue;
          ++cell.n_runs;
          for (double raw : r->record.eval_returns) values.push_back(metrics::normalize_return(raw, b->second));
        }
      }
      if (!values.empty()) {
        double s = 0.0;
        for (double v : values) s += v;
        cell.mean = s / static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
        cell.stddev = std::sqrt(ss / static_cast<double>(values.size()));
      } else {
        cell.mean = cell.stddev = std::nan("");
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string emit_heatmap(const ResultStore& store, const SweepSpec& spec) {
  const auto cells = heatmap_cells(store, spec);
  const bool flag = std::any_of(cells.begin(), cells.end(), [](const HeatmapCell& c) { return !c.complete(); });
  std::string out = "alpha,lambda,mean_norm_return,std_norm_return,n_runs";
  out += flag ? ",incomplete\n" : "\n";
  for (const auto& c : cells) {
    out += g6(c.alpha) + "," + g6(c.lambda) + ",";
    out += (c.n_runs ? f6(c.mean) + "," + f6(c.stddev) : std::string(",")) + ",";
    out += std::to_string(c.n_runs);
    if (flag) out += c.complete() ? ",0" : ",1";
    out += "\n";
  }
  return out;
}

metrics::PerformanceTable performance_table(const ResultStore& store, const SweepSpec& spec,
                                            const std::string& env_id) {
  auto bounds = suite_bounds(spec);
  if (!env_id.empty()) {
    const auto it = bounds.find(env_id);
    if (it == bounds.end()) throw PreconditionError("environment " + env_id + " is not in sweep " + spec.sweep_id);
    bounds = {*it};
  }
  const auto groups = by_config(store);
  const std::size_t expected = bounds.size() * static_cast<std::size_t>(spec.seeds);
  metrics::PerformanceTable table;
  std::vector<std::string> missing;
  for (double a : spec.alpha_grid) {
    for (double l : spec.lambda_grid) {
      const std::string cid = config_id(a, l);
      std::vector<metrics::RunRecord> records;
      if (const auto it = groups.find(cid); it != groups.end()) {
        for (const StoredRun* r : it->second) {
          if (bounds.contains(r->record.env)) records.push_back(r->record);
        }
      }
      if (records.size() != expected) {
        missing.push_back(cid + " (" + std::to_string(records.size()) + "/" + std::to_string(expected) + " runs)");
        continue;
      }
      std::map<std::string, double> per_env;
      for (const auto& [id, b] : bounds) {
        std::vector<metrics::RunRecord> only;
        for (const auto& r : records) {
          if (r.env == id) only.push_back(r);
        }
        per_env[id] = metrics::aggregate(only, {{id, b}});
      }
      table.set(a, l, metrics::aggregate(records, bounds), std::move(per_env));
    }
  }
  if (!missing.empty()) {
    std::string msg = "sweep " + spec.sweep_id + " has " + std::to_string(missing.size()) + " incomplete cells:";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i] + ";";
    if (missing.size() > 10) msg += " ...";
    throw IncompleteDataError(msg);
  }
  return table;
}

std::string emit_robustness(std::span<const SweepInput> sweeps) {
  struct Row {
    std::string label, h, d;
    double r90, r95;
  };
  std::vector<Row> rows;
  for (const auto& s : sweeps) {
    const auto table = performance_table(store_of(s), s.spec).positive_only();
    rows.push_back({s.spec.sweep_id, s.spec.h.name(), s.spec.drift.name(), metrics::robustness(0.9, table),
                    metrics::robustness(0.95, table)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.r90 != b.r90 ? a.r90 > b.r90 : a.label < b.label;
  });
  std::string out = "label,h,D,rbst_090,rbst_095\n";
  for (const auto& r : rows) out += r.label + "," + r.h + "," + r.d + "," + f6(r.r90) + "," + f6(r.r95) + "\n";
  return out;
}

std::string emit_frequency(std::span<const SweepInput> sweeps) {
  std::string out = "label,tau,frequency\n";
  for (const auto& s : sweeps) {
    const auto table = performance_table(store_of(s), s.spec).positive_only();
    for (int i = 0; i <= 100; ++i) {
      const double tau = i / 100.0;
      out += s.spec.sweep_id + "," + num("%.2f", tau) + "," + f6(metrics::perf_frequency(tau, table)) + "\n";
    }
  }
  return out;
}

std::string emit_quantiles(std::span<const SweepInput> sweeps) {
  std::string out = "label,h,D,quantile,mean,std,count\n";
  for (const auto& s : sweeps) {
    const auto table = performance_table(store_of(s), s.spec);
    for (double q : {0.01, 0.1}) {
      const auto st = metrics::top_quantile_stats(q, table, true);
      out += s.spec.sweep_id + "," + s.spec.h.name() + "," + s.spec.drift.name() + "," + num("%.2f", q) + "," +
             f6(st.mean) + "," + f6(st.stddev) + "," + std::to_string(st.count) + "\n";
    }
  }
  return out;
}

std::vector<MinTempPoint> min_temperature_points(std::span<const SweepInput> sweeps, double threshold) {
  std::vector<MinTempPoint> points;
  for (const auto& s : sweeps) {
    for (const auto& e : s.spec.envs) {
      const auto table = performance_table(store_of(s), s.spec, e.id());
      MinTempPoint p;
      p.env = e.id();
      p.max_return = env::bounds(e).r_max;
      p.min_alpha = metrics::min_required_temperature(metrics::Axis::Alpha, threshold, table,
                                                      metrics::default_other_axis_cap(metrics::Axis::Alpha));
      p.min_lambda = metrics::min_required_temperature(metrics::Axis::Lambda, threshold, table,
                                                       metrics::default_other_axis_cap(metrics::Axis::Lambda));
      points.push_back(p);
    }
  }
  return points;
}

std::optional<metrics::LinearFit> min_temperature_fit(std::span<const MinTempPoint> points, metrics::Axis axis) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : points) {
    const auto& v = axis == metrics::Axis::Alpha ? p.min_alpha : p.min_lambda;
    if (v) xy.emplace_back(p.max_return, *v);
  }
  if (xy.size() < 3) return std::nullopt;
  try {
    return metrics::linear_fit(xy);
  } catch (const RankError&) {
    return std::nullopt;
  }
}

std::string emit_min_temp(std::span<const SweepInput> sweeps, double threshold) {
  const auto points = min_temperature_points(sweeps, threshold);
  std::string out = "max_return,min_alpha,min_lambda,slope,intercept,ci_low,ci_high\n";
  for (metrics::Axis axis : {metrics::Axis::Alpha, metrics::Axis::Lambda}) {
    const auto fit = min_temperature_fit(points, axis);
    for (const auto& p : points) {
      const auto& v = axis == metrics::Axis::Alpha ? p.min_alpha : p.min_lambda;
      const std::string value = v ? g6(*v) : "";
      out += g6(p.max_return) + ",";
      out += axis == metrics::Axis::Alpha ? value + "," : "," + value;
      if (fit) {
        const auto [lo, hi] = fit->band(p.max_return);
        out += "," + g6(fit->slope) + "," + g6(fit->intercept) + "," + g6(lo) + "," + g6(hi) + "\n";
      } else {
        out += ",,,,\n";
      }
    }
  }
  return out;
}

Report emit_report(std::span<const SweepInput> sweeps, double threshold) {
  if (sweeps.empty()) throw PreconditionError("a report needs at least one sweep");
  return {emit_robustness(sweeps), emit_frequency(sweeps), emit_quantiles(sweeps), emit_min_temp(sweeps, threshold)};
}

}  // namespace pmdlab::harness
