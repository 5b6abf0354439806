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
#include <optional>
#include <vector>

#include "hetcap/detail/knapsack.hpp"
#include "hetcap/quadrature.hpp"

namespace hetcap {

struct TauEvaluation {
  double f = 0.0;
  double tau = 0.0;
  std::vector<double> rho;        // rho_of_f, clamped to the lowest ratio past fbar
  std::vector<double> edge_rho;   // marginal ratio, 0 once the pico takes everything
  double sum_rho = 0.0;           // sum of edge_rho
  std::vector<std::size_t> prefix;
};

struct ThresholdPolicy {
  double f_star = 0.0;
  double tau_star = 0.0;
  std::vector<double> rho_star;
  std::vector<double> pico_load;      // pico time actually used, <= f_star
  std::vector<bool> full_offload;     // f_star >= fbar: every atom goes to the pico
  std::vector<bool> saturated;        // pico constraint tight
  std::vector<std::size_t> fractional_atom;   // index in the sorted region
  std::vector<double> fractional_share;       // share of that atom on the pico
  double macro_load = 0.0;            // tau_star - f_star
  std::vector<double> assigned_prob;  // nu_l, index 0 unused
  double macro_prob = 0.0;
  double arrival_rate = 0.0;
  double tau_star_se = 0.0;

  int num_picos() const { return static_cast<int>(rho_star.size()); }

  /// Threshold used by schedulers: an arrival goes to pico l iff its
  /// ratio is strictly above this value.
  double effective_threshold(int pico) const {
    return full_offload[pico - 1] ? 0.0 : rho_star[pico - 1];
  }

  double pico_share() const { return tau_star > 0.0 ? f_star / tau_star : 0.0; }
  double macro_share() const { return tau_star > 0.0 ? 1.0 - pico_share() : 1.0; }
};

struct FInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct WorkloadReport {
  std::vector<double> assigned_prob;   // nu_l, index 0 is macro-only region
  std::vector<double> macro_prob;      // macro-served share per region
  std::vector<double> pico_workload;   // lambda F^P_l, index 0 unused
  double macro_workload = 0.0;         // lambda F^M
  std::vector<double> pico_utilization;
  double macro_utilization = 0.0;
};

class ContinuousLp {
 public:
  explicit ContinuousLp(const SampleCloud& cloud);

  int num_picos() const { return static_cast<int>(chains_.size()); }
  double arrival_rate() const { return arrival_rate_; }
  double mean_file_size() const { return mean_file_size_; }
  double fbar(int pico) const { return chains_[pico - 1].total_pico_time(); }
  double fbar_max() const;
  double region0_load() const { return region0_load_; }
  double rho_max(int pico) const { return chains_[pico - 1].ratio.front(); }
  double rho_min(int pico) const { return chains_[pico - 1].ratio.back(); }
  const detail::KnapsackChain& chain(int pico) const { return chains_[pico - 1]; }

  /// Ratio of the marginal atom at budget f. Throws DomainError outside
  /// [0, fbar(pico)].
  double rho_of_f(int pico, double f) const;

  /// Exact subproblem value with the marginal atom split fractionally.
  double tau_of_pico(int pico, double f) const;

  /// Throws DomainError for f < 0. Past fbar every pico is clamped.
  TauEvaluation tau_of_f(double f) const;

  ThresholdPolicy solve() const;

  /// Policy obtained by fixing the pico time at f instead of optimizing.
  ThresholdPolicy policy_at(double f) const;

  /// {f in [0, fbar] : tau(f) <= 1} at the given arrival rate, exploiting
  /// tau_c(f) = c tau_1(f / c).
  std::optional<FInterval> feasible_f_range(double arrival_rate) const;

  /// Sorted union of all prefix boundaries in [0, fbar_max].
  std::vector<double> breakpoints() const;

  /// Convex dual g(rho) = rho f + sum_{ratio > rho} w D (1/S - rho/R).
  double dual_value(int pico, double rho, double f) const;
  double dual_derivative(int pico, double rho, double f) const;

 private:
  std::vector<detail::KnapsackChain> chains_;
  std::vector<std::vector<double>> weights_;
  Eigen::ArrayXd region0_cost_;   // w D / S per region-0 atom
  double region0_load_ = 0.0;
  double arrival_rate_ = 0.0;
  double mean_file_size_ = 0.0;
};

double capacity(const ContinuousLp& lp);

WorkloadReport policy_workloads(const SampleCloud& cloud, const ThresholdPolicy& policy);

/// Strict thresholds: pico l serves ratios above thresholds[l-1]. Values
/// outside the cloud's ratio range are clamped.
WorkloadReport threshold_workloads(const SampleCloud& cloud,
                                   const std::vector<double>& thresholds,
                                   double pico_share, double macro_share);

/// At most max_rows rows from the breakpoint table, always including f*.
std::vector<TauEvaluation> tau_curve(const ContinuousLp& lp, std::size_t max_rows = 500);

}  // namespace hetcap
