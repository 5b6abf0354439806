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

#include "hetcap/contlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hetcap/error.hpp"

namespace hetcap {
namespace {

double sample_variance_sum(const Eigen::ArrayXd& c) {
  const Eigen::Index m = c.size();
  if (m < 2) return 0.0;
  const double var = (c - c.mean()).square().sum() / static_cast<double>(m - 1);
  return static_cast<double>(m) * var;
}

}  // namespace

ContinuousLp::ContinuousLp(const SampleCloud& cloud)
    : arrival_rate_(cloud.arrival_rate()), mean_file_size_(cloud.mean_file_size()) {
  const CloudRegion& r0 = cloud.region(0);
  region0_cost_ = r0.weight * mean_file_size_ / r0.macro_rate;
  region0_load_ = region0_cost_.sum();
  for (int l = 1; l <= cloud.num_picos(); ++l) {
    const CloudRegion& reg = cloud.region(l);
    if (reg.size() == 0) throw DomainError("every pico region needs at least one atom");
    const ThresholdTable t = threshold_integrals(cloud, l);
    detail::KnapsackChain c;
    c.pico_time = t.pico_time;
    c.macro_time = t.macro_time;
    c.ratio = t.ratio;
    chains_.push_back(std::move(c));
    weights_.emplace_back(reg.weight.data(), reg.weight.data() + reg.size());
  }
}

double ContinuousLp::fbar_max() const {
  double best = 0.0;
  for (const auto& c : chains_) best = std::max(best, c.total_pico_time());
  return best;
}

double ContinuousLp::rho_of_f(int pico, double f) const {
  if (pico < 1 || pico > num_picos()) throw DomainError("pico index out of range");
  const detail::KnapsackChain& c = chain(pico);
  if (!(f >= 0.0) || f > c.total_pico_time())
    throw DomainError("f outside [0, fbar] for this pico");
  const std::size_t k = c.prefix_at(f);
  return c.ratio[std::min(k, c.size() - 1)];
}

double ContinuousLp::tau_of_pico(int pico, double f) const {
  return chain(pico).macro_time_at(f);
}

TauEvaluation ContinuousLp::tau_of_f(double f) const {
  if (!(f >= 0.0)) throw DomainError("f must be non-negative");
  TauEvaluation e;
  e.f = f;
  e.tau = f + region0_load_;
  for (const auto& c : chains_) {
    const std::size_t k = c.prefix_at(f);
    e.prefix.push_back(k);
    e.rho.push_back(c.ratio[std::min(k, c.size() - 1)]);
    const double edge = k < c.size() ? c.ratio[k] : 0.0;
    e.edge_rho.push_back(edge);
    e.sum_rho += edge;
    e.tau += c.macro_time_at(f);
  }
  return e;
}

ThresholdPolicy ContinuousLp::policy_at(double f) const {
  const TauEvaluation e = tau_of_f(f);
  const int L = num_picos();
  ThresholdPolicy p;
  p.f_star = f;
  p.tau_star = e.tau;
  p.rho_star = e.rho;
  p.arrival_rate = arrival_rate_;
  p.macro_load = e.tau - f;
  p.assigned_prob.assign(L + 1, 0.0);

  double se2 = sample_variance_sum(region0_cost_);
  double assigned_total = 0.0;
  for (int l = 1; l <= L; ++l) {
    const detail::KnapsackChain& c = chain(l);
    const std::vector<double>& w = weights_[l - 1];
    const std::size_t k = e.prefix[l - 1];
    const bool full = k >= c.size();
    p.full_offload.push_back(full);
    p.saturated.push_back(!full);
    double share = 0.0;
    if (!full) {
      const double atom = c.pico_time[k + 1] - c.pico_time[k];
      share = atom > 0.0 ? (f - c.pico_time[k]) / atom : 0.0;
    }
    p.fractional_atom.push_back(full ? c.size() : k);
    p.fractional_share.push_back(share);
    p.pico_load.push_back(std::min(f, c.total_pico_time()));

    double nu = 0.0;
    for (std::size_t i = 0; i < std::min(k, c.size()); ++i) nu += w[i];
    if (!full) nu += share * w[k];
    p.assigned_prob[l] = arrival_rate_ > 0.0 ? nu / arrival_rate_ : 0.0;
    assigned_total += p.assigned_prob[l];

    const double edge = e.edge_rho[l - 1];
    Eigen::ArrayXd contrib(static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double macro = c.macro_time[i] - c.macro_time[i + 1];
      const double pico = c.pico_time[i + 1] - c.pico_time[i];
      contrib(static_cast<Eigen::Index>(i)) = std::min(macro, edge * pico);
    }
    se2 += sample_variance_sum(contrib);
  }
  p.assigned_prob[0] = 0.0;
  p.macro_prob = 1.0 - assigned_total;
  p.tau_star_se = std::sqrt(se2);
  return p;
}

ThresholdPolicy ContinuousLp::solve() const {
  if (!(arrival_rate_ > 0.0)) throw DomainError("cloud carries no traffic");
  return policy_at(detail::minimize_total_time(chains_));
}

std::vector<double> ContinuousLp::breakpoints() const {
  std::vector<double> out{0.0};
  for (const auto& c : chains_) out.insert(out.end(), c.pico_time.begin(), c.pico_time.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<FInterval> ContinuousLp::feasible_f_range(double arrival_rate) const {
  if (!(arrival_rate > 0.0)) throw DomainError("arrival rate must be positive");
  const double c = arrival_rate / arrival_rate_;
  const double target = 1.0 / c;
  const double fstar = detail::minimize_total_time(chains_);
  const auto tau = [&](double g) { return tau_of_f(g).tau; };
  if (tau(fstar) > target) return std::nullopt;

  const std::vector<double> bp = breakpoints();
  const double top = bp.back();
  // Both sides of f* are monotone and linear between breakpoints.
  const auto crossing = [&](double a, double b) {
    // tau(a) > target >= tau(b) or the reverse; linear on [a, b].
    const double ta = tau(a), tb = tau(b);
    if (ta == tb) return a;
    return a + (target - ta) * (b - a) / (tb - ta);
  };
  double lo = 0.0;
  if (tau(0.0) > target) {
    // Last breakpoint below f* with tau above target.
    auto first = bp.begin();
    auto last = std::upper_bound(bp.begin(), bp.end(), fstar);
    auto it = std::partition_point(first, last, [&](double g) { return tau(g) > target; });
    lo = crossing(*(it - 1), *it);
  }
  double hi = top;
  if (tau(top) > target) {
    auto first = std::lower_bound(bp.begin(), bp.end(), fstar);
    auto it = std::partition_point(first, bp.end(), [&](double g) { return tau(g) <= target; });
    hi = crossing(*(it - 1), *it);
  }
  return FInterval{lo * c, hi * c};
}

double ContinuousLp::dual_value(int pico, double rho, double f) const {
  const detail::KnapsackChain& c = chain(pico);
  const auto above = static_cast<std::size_t>(
      std::partition_point(c.ratio.begin(), c.ratio.end(),
                           [&](double r) { return r > rho; }) -
      c.ratio.begin());
  double g = rho * f;
  for (std::size_t i = 0; i < above; ++i)
    g += (c.macro_time[i] - c.macro_time[i + 1]) - rho * (c.pico_time[i + 1] - c.pico_time[i]);
  return g;
}

double ContinuousLp::dual_derivative(int pico, double rho, double f) const {
  const detail::KnapsackChain& c = chain(pico);
  const auto above = static_cast<std::size_t>(
      std::partition_point(c.ratio.begin(), c.ratio.end(),
                           [&](double r) { return r > rho; }) -
      c.ratio.begin());
  return f - c.pico_time[above];
}

double capacity(const ContinuousLp& lp) {
  const ThresholdPolicy p = lp.solve();
  return lp.arrival_rate() / p.tau_star;
}

namespace {

WorkloadReport finish(WorkloadReport r, double lambda, double pico_share,
                      double macro_share) {
  const std::size_t L = r.pico_workload.size() - 1;
  r.pico_utilization.assign(L + 1, 0.0);
  for (std::size_t l = 1; l <= L; ++l)
    r.pico_utilization[l] = pico_share > 0.0 ? r.pico_workload[l] / pico_share
                            : r.pico_workload[l] > 0.0
                                ? std::numeric_limits<double>::infinity()
                                : 0.0;
  r.macro_utilization = macro_share > 0.0 ? r.macro_workload / macro_share
                        : r.macro_workload > 0.0
                            ? std::numeric_limits<double>::infinity()
                            : 0.0;
  if (lambda > 0.0) {
    for (double& v : r.assigned_prob) v /= lambda;
    for (double& v : r.macro_prob) v /= lambda;
  }
  return r;
}

}  // namespace

WorkloadReport policy_workloads(const SampleCloud& cloud, const ThresholdPolicy& p) {
  const int L = cloud.num_picos();
  if (p.num_picos() != L) throw DomainError("policy and cloud disagree on pico count");
  const double d = cloud.mean_file_size();
  WorkloadReport r;
  r.assigned_prob.assign(L + 1, 0.0);
  r.macro_prob.assign(L + 1, 0.0);
  r.pico_workload.assign(L + 1, 0.0);
  const CloudRegion& r0 = cloud.region(0);
  r.macro_prob[0] = r0.weight.sum();
  r.macro_workload = (r0.weight * d / r0.macro_rate).sum();
  for (int l = 1; l <= L; ++l) {
    const CloudRegion& reg = cloud.region(l);
    const auto k = static_cast<Eigen::Index>(p.fractional_atom[l - 1]);
    for (Eigen::Index i = 0; i < reg.size(); ++i) {
      const double s = i < k ? 1.0 : i == k ? p.fractional_share[l - 1] : 0.0;
      const double w = reg.weight(i);
      r.assigned_prob[l] += s * w;
      r.macro_prob[l] += (1.0 - s) * w;
      r.pico_workload[l] += s * w * d / reg.pico_rate(i);
      r.macro_workload += (1.0 - s) * w * d / reg.macro_rate(i);
    }
  }
  return finish(std::move(r), cloud.arrival_rate(), p.pico_share(), p.macro_share());
}

WorkloadReport threshold_workloads(const SampleCloud& cloud,
                                   const std::vector<double>& thresholds,
                                   double pico_share, double macro_share) {
  const int L = cloud.num_picos();
  if (static_cast<int>(thresholds.size()) != L)
    throw DomainError("one threshold per pico expected");
  const double d = cloud.mean_file_size();
  WorkloadReport r;
  r.assigned_prob.assign(L + 1, 0.0);
  r.macro_prob.assign(L + 1, 0.0);
  r.pico_workload.assign(L + 1, 0.0);
  const CloudRegion& r0 = cloud.region(0);
  r.macro_prob[0] = r0.weight.sum();
  r.macro_workload = (r0.weight * d / r0.macro_rate).sum();
  for (int l = 1; l <= L; ++l) {
    const CloudRegion& reg = cloud.region(l);
    const double hi = reg.rate_ratio.maxCoeff();
    const double a = std::isfinite(thresholds[l - 1])
                         ? std::clamp(thresholds[l - 1], 0.0, hi)
                         : (thresholds[l - 1] > 0 ? hi : 0.0);
    for (Eigen::Index i = 0; i < reg.size(); ++i) {
      const double w = reg.weight(i);
      if (reg.rate_ratio(i) > a) {
        r.assigned_prob[l] += w;
        r.pico_workload[l] += w * d / reg.pico_rate(i);
      } else {
        r.macro_prob[l] += w;
        r.macro_workload += w * d / reg.macro_rate(i);
      }
    }
  }
  return finish(std::move(r), cloud.arrival_rate(), pico_share, macro_share);
}

std::vector<TauEvaluation> tau_curve(const ContinuousLp& lp, std::size_t max_rows) {
  std::vector<double> bp = lp.breakpoints();
  const double fstar = lp.solve().f_star;
  std::vector<double> grid;
  if (max_rows < 2 || bp.size() <= max_rows - 1) {
    grid = bp;
  } else {
    const std::size_t n = max_rows - 1;
    for (std::size_t j = 0; j < n; ++j)
      grid.push_back(bp[j * (bp.size() - 1) / (n - 1)]);
  }
  if (!std::binary_search(grid.begin(), grid.end(), fstar)) {
    grid.insert(std::upper_bound(grid.begin(), grid.end(), fstar), fstar);
  }
  std::vector<TauEvaluation> rows;
  rows.reserve(grid.size());
  for (double f : grid) rows.push_back(lp.tau_of_f(f));
  return rows;
}

}  // namespace hetcap
