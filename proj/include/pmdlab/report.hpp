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

// CSV reports over finished sweep stores.
//
//   heatmap     alpha,lambda,mean_norm_return,std_norm_return,n_runs[,incomplete]
//   robustness  label,h,D,rbst_090,rbst_095           (rbst_090 descending)
//   frequency   label,tau,frequency                    (tau = 0.00, 0.01, ..., 1.00)
//   quantiles   label,h,D,quantile,mean,std,count      (top 1% and top 10%)
//   min_temp    max_return,min_alpha,min_lambda,slope,intercept,ci_low,ci_high
//
// Robustness, frequency and quantiles use the cells where both temperatures
// are positive. min_temp has one row per environment and axis: alpha rows
// leave min_lambda empty and carry the alpha fit, lambda rows the reverse.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmdlab/metrics.hpp"
#include "pmdlab/result_store.hpp"
#include "pmdlab/sweep_spec.hpp"

namespace pmdlab::harness {

struct HeatmapCell {
  double alpha = 0.0;
  double lambda = 0.0;
  double mean = 0.0;    // over every normalized evaluation in the cell
  double stddev = 0.0;  // population, same sample
  std::size_t n_runs = 0;
  std::size_t expected_runs = 0;

  bool complete() const { return n_runs == expected_runs; }
};

/// One cell per grid point in (alpha, lambda) order.
std::vector<HeatmapCell> heatmap_cells(const ResultStore& store, const SweepSpec& spec);

std::string emit_heatmap(const ResultStore& store, const SweepSpec& spec);

/// Aggregated normalized return per cell over the spec's environments, or
/// over `env_id` alone when given. IncompleteDataError naming the cells with
/// missing runs.
metrics::PerformanceTable performance_table(const ResultStore& store, const SweepSpec& spec,
                                            const std::string& env_id = "");

struct SweepInput {
  SweepSpec spec;
  const ResultStore* store = nullptr;
};

std::string emit_robustness(std::span<const SweepInput> sweeps);
std::string emit_frequency(std::span<const SweepInput> sweeps);
std::string emit_quantiles(std::span<const SweepInput> sweeps);

struct MinTempPoint {
  std::string env;
  double max_return = 0.0;
  std::optional<double> min_alpha;
  std::optional<double> min_lambda;
};

/// Per-environment minimal temperatures reaching `threshold`, in the order
/// the environments appear across `sweeps`.
std::vector<MinTempPoint> min_temperature_points(std::span<const SweepInput> sweeps, double threshold);

/// Fit of min temperature on max return over the points where the axis
/// has a value; nullopt below three such points or when the returns coincide.
std::optional<metrics::LinearFit> min_temperature_fit(std::span<const MinTempPoint> points, metrics::Axis axis);

std::string emit_min_temp(std::span<const SweepInput> sweeps,
                          double threshold = metrics::kDefaultSuccessThreshold);

struct Report {
  std::string robustness;
  std::string frequency;
  std::string quantiles;
  std::string min_temp;
};

Report emit_report(std::span<const SweepInput> sweeps, double threshold = metrics::kDefaultSuccessThreshold);

}  // namespace pmdlab::harness
