// Copyright 2026 The hetcap Authors
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
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hetcap/contlp.hpp"
#include "hetcap/disclp.hpp"
#include "hetcap/scenario.hpp"

namespace hetcap {

/// ProcessorSharing: each BS splits its time share equally over its files.
/// SlottedFCFS: arrivals within a slot are merged per queue into one job.
/// RoundRobin: the whole resource is split equally over the non-empty
/// queues, one BS at a time, FCFS inside a queue.
enum class Discipline { ProcessorSharing, SlottedFCFS, RoundRobin };

struct SimConfig {
  Discipline discipline = Discipline::ProcessorSharing;
  std::vector<double> thresholds;  // pico l serves ratios strictly above thresholds[l-1]
  double pico_share = 0.5;         // f / tau, picos transmit together
  double slot_length = 1e-3;       // seconds, SlottedFCFS only
  double horizon = 1e4;            // seconds
  double warmup = -1.0;            // negative: 20% of the horizon
  std::uint64_t seed = 1;
  int replications = 1;
  /// Positive: stop arrivals after this many, run until the system is
  /// empty and keep the arrivals. The horizon is then ignored.
  std::size_t max_arrivals = 0;
  std::size_t trajectory_points = 2000;
  unsigned threads = 0;            // 0: one per hardware thread

  static SimConfig from_policy(const ThresholdPolicy& policy);

  double macro_share() const { return 1.0 - pico_share; }
  double warmup_time() const { return warmup < 0.0 ? 0.2 * horizon : warmup; }

  /// Throws ConfigError.
  void validate(int num_picos) const;
};

/// Statistics of one queue over the measurement window. Queue 0 is the
/// macro BS, queue l is pico l.
struct QueueStats {
  std::size_t arrivals = 0;
  std::size_t departures = 0;
  double mean_occupancy = 0.0;     // time average of N
  double occupancy_variance = 0.0;
  double mean_sojourn = 0.0;       // departures in the window, 0 if none
  double utilization = 0.0;        // fraction of the window with N > 0
  double busy_time = 0.0;
  double served_bits = 0.0;        // files completed in the window
  double served_work = 0.0;        // server-seconds of those files
  double slope = 0.0;              // least squares of N over the window, files/s
};

/// Samples on an even grid over [0, horizon]; rows are sample times,
/// columns queues. Residual work is in server-seconds. Empty for runs
/// limited by max_arrivals.
struct Trajectory {
  std::vector<double> time;
  Eigen::MatrixXd occupancy;
  Eigen::MatrixXd residual_work;
};

struct ReplicationResult {
  std::vector<QueueStats> queues;
  Trajectory trajectory;
  double window_start = 0.0;
  double window_end = 0.0;
  double slope = 0.0;              // least squares of total N over the window, files/s
  double slope_se = 0.0;           // ordinary regression error, ignores correlation
  double max_total_occupancy = 0.0;
  double resource_time = 0.0;      // pico-mode plus macro-mode time spent serving
  std::vector<DiscreteUser> arrivals;  // only with max_arrivals > 0
  std::uint64_t events = 0;
};

/// Mean over replications with a 95% Student-t half width (0 for one run).
struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;

  bool contains(double x) const { return x >= mean - half_width && x <= mean + half_width; }
};

Estimate estimate(const std::vector<double>& values);

struct QueueSummary {
  Estimate occupancy;
  Estimate sojourn;
  Estimate utilization;
  double arrival_rate = 0.0;       // pooled over replications
  double little_residual = 0.0;    // |N - lambda T| / N, pooled
};

struct SimReport {
  std::vector<ReplicationResult> replications;
  std::vector<QueueSummary> queues;
  Estimate total_occupancy;
  Estimate mean_sojourn;           // all files
  /// Across replications; with one replication the regression error.
  Estimate slope;
  double max_total_occupancy = 0.0;
  /// Slope interval contains 0 and max N stays below 50 times its mean.
  bool stable = false;
};

/// Deterministic in (scenario, config, index).
ReplicationResult run_replication(const Scenario& scenario, const SimConfig& config,
                                  int index);

/// Replications run on worker threads and are merged in index order.
SimReport run(const Scenario& scenario, const SimConfig& config);

enum class DelayVariant { RegionRate, AssignedRate };

/// Mean sojourn of queue `queue` (0 macro) under processor sharing at the
/// scenario's arrival rate. RegionRate: 1 / (lambda eta (1 - tau)).
/// AssignedRate: N / (lambda nu) with N = tau / (1 - tau). Infinite when
/// tau >= 1.
double theoretical_ps_delay(const ThresholdPolicy& policy, const Scenario& scenario, int queue,
                            DelayVariant variant);

/// Occupancy of one queue sampled every `spacing` seconds inside each
/// replication's window, pooled.
std::vector<int> thinned_occupancy(const SimReport& report, int queue, double spacing);

/// Time for an M/G/1-PS queue at load rho to forget its state, used as the
/// sampling spacing for goodness of fit.
double relaxation_time(double rho, double mean_service);

struct GofResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 0.0;
  std::size_t samples = 0;
};

/// Chi-square test of samples against P(N = n) = (1 - rho) rho^n. Bins are
/// merged from the tail until each expects at least 5.
GofResult geometric_gof(const std::vector<int>& samples, double rho);

struct SweepRow {
  double lambda = 0.0;
  double f = 0.0;
  std::string queue;               // macro, pico1.., total
  double utilization = 0.0;
  double mean_occupancy = 0.0;
  double mean_sojourn = 0.0;
  double slope = 0.0;
};

/// For each f (per unit arrival rate; empty means f* only) and each lambda,
/// simulate the threshold policy at that f. One row per queue plus a total.
std::vector<SweepRow> stability_sweep(const Scenario& scenario, const SampleCloud& cloud,
                                      const std::vector<double>& lambdas,
                                      const std::vector<double>& f_values,
                                      const SimConfig& base);

/// Columns time,queue,N,residual_work.
void write_trajectory_csv(const ReplicationResult& result, std::ostream& os);

/// Columns lambda,f,queue,util,meanN,meanT,slope.
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os);

/// Columns queue,arrival_rate,meanN,meanN_hw,meanT,meanT_hw,util,util_hw,little_residual.
void write_report_csv(const SimReport& report, std::ostream& os);

}  // namespace hetcap
