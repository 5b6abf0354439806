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

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace hetcap::detail {

/// One pico's atoms in descending rate-ratio order, as prefix tables.
///
/// Serving the first k atoms on the pico costs pico_time[k] seconds and
/// leaves macro_time[k] seconds for the macro. For a pico budget f the
/// optimal split fills the prefix greedily and serves one marginal atom
/// fractionally, so the macro time is convex piecewise linear in f.
struct KnapsackChain {
  std::vector<double> pico_time;   // size n + 1, pico_time[0] == 0
  std::vector<double> macro_time;  // size n + 1, macro_time[n] == 0
  std::vector<double> ratio;       // size n, non-increasing

  std::size_t size() const { return ratio.size(); }
  double total_pico_time() const { return pico_time.back(); }
  double total_macro_time() const { return macro_time.front(); }

  /// Largest k with pico_time[k] <= f.
  std::size_t prefix_at(double f) const {
    auto it = std::upper_bound(pico_time.begin(), pico_time.end(), f);
    return static_cast<std::size_t>(it - pico_time.begin()) - 1;
  }

  /// Rate ratio of the marginal atom at budget f, or 0 once every atom is
  /// on the pico. This is minus the right derivative of macro_time_at.
  double marginal_ratio(double f) const {
    const std::size_t k = prefix_at(f);
    return k < size() ? ratio[k] : 0.0;
  }

  /// Minimum macro time with pico budget f (fractional marginal atom).
  double macro_time_at(double f) const {
    const std::size_t k = prefix_at(f);
    if (k >= size()) return 0.0;
    return macro_time[k] - (f - pico_time[k]) * ratio[k];
  }
};

/// Builds the tables from per-atom pico and macro times already sorted by
/// descending ratio.
inline KnapsackChain make_chain(std::span<const double> ratio,
                                std::span<const double> pico_time,
                                std::span<const double> macro_time) {
  KnapsackChain c;
  const std::size_t n = ratio.size();
  c.ratio.assign(ratio.begin(), ratio.end());
  c.pico_time.resize(n + 1);
  c.macro_time.resize(n + 1);
  c.pico_time[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    c.pico_time[i + 1] = c.pico_time[i] + pico_time[i];
  c.macro_time[n] = 0.0;
  for (std::size_t i = n; i-- > 0;)
    c.macro_time[i] = c.macro_time[i + 1] + macro_time[i];
  return c;
}

/// Minimizes f + sum of chain macro times over f >= 0 by walking the merged
/// breakpoints until the right slope 1 - sum of marginal ratios turns
/// non-negative. Exact for the piecewise-linear objective.
inline double minimize_total_time(std::span<const KnapsackChain> chains,
                                  double slope_slack = 1e-12) {
  std::vector<std::size_t> k(chains.size());
  double f = 0.0;
  for (std::size_t l = 0; l < chains.size(); ++l) k[l] = chains[l].prefix_at(f);
  for (;;) {
    double slope = 1.0;
    double next = 0.0;
    bool has_next = false;
    for (std::size_t l = 0; l < chains.size(); ++l) {
      const KnapsackChain& c = chains[l];
      if (k[l] >= c.size()) continue;
      slope -= c.ratio[k[l]];
      const double g = c.pico_time[k[l] + 1];
      if (!has_next || g < next) next = g;
      has_next = true;
    }
    if (slope >= -slope_slack || !has_next) return f;
    f = next;
    for (std::size_t l = 0; l < chains.size(); ++l) {
      const KnapsackChain& c = chains[l];
      while (k[l] < c.size() && c.pico_time[k[l] + 1] <= f) ++k[l];
    }
  }
}

}  // namespace hetcap::detail
