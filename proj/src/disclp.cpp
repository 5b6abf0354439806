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

#include "hetcap/disclp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "hetcap/csv.hpp"
#include "hetcap/detail/knapsack.hpp"
#include "hetcap/error.hpp"

namespace hetcap {

void DiscreteInstance::validate() const {
  if (num_picos < 0) throw DomainError("negative pico count");
  for (const DiscreteUser& u : users) {
    if (u.pico < 0 || u.pico > num_picos) throw DomainError("user pico index out of range");
    if (!(u.macro_rate > 0.0) || !std::isfinite(u.macro_rate))
      throw DomainError("macro rate must be positive");
    if (u.pico > 0 && (!(u.pico_rate > 0.0) || !std::isfinite(u.pico_rate)))
      throw DomainError("pico rate must be positive");
    if (!(u.demand > 0.0) || !std::isfinite(u.demand))
      throw DomainError("demand must be positive");
  }
}

DiscreteSolution clear_time(const DiscreteInstance& instance) {
  instance.validate();
  const int L = instance.num_picos;
  const auto& users = instance.users;
  DiscreteSolution sol;
  sol.pico_bits.assign(users.size(), 0.0);
  sol.macro_bits.assign(users.size(), 0.0);
  sol.thresholds.assign(L, 0.0);
  sol.fractional_user.assign(L, -1);

  std::vector<std::vector<std::size_t>> members(L + 1);
  for (std::size_t n = 0; n < users.size(); ++n) members[users[n].pico].push_back(n);

  std::vector<detail::KnapsackChain> chains;
  for (int l = 1; l <= L; ++l) {
    auto& m = members[l];
    std::stable_sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
      return users[a].pico_rate / users[a].macro_rate >
             users[b].pico_rate / users[b].macro_rate;
    });
    std::vector<double> ratio, pt, mt;
    for (std::size_t n : m) {
      ratio.push_back(users[n].pico_rate / users[n].macro_rate);
      pt.push_back(users[n].demand / users[n].pico_rate);
      mt.push_back(users[n].demand / users[n].macro_rate);
    }
    chains.push_back(detail::make_chain(ratio, pt, mt));
  }
  const double f = detail::minimize_total_time(chains);
  sol.f = f;

  double macro_time = 0.0;
  for (std::size_t n : members[0]) {
    sol.macro_bits[n] = users[n].demand;
    macro_time += users[n].demand / users[n].macro_rate;
  }
  for (int l = 1; l <= L; ++l) {
    const detail::KnapsackChain& c = chains[l - 1];
    const auto& m = members[l];
    const std::size_t k = c.prefix_at(f);
    for (std::size_t j = 0; j < m.size(); ++j) {
      const DiscreteUser& u = users[m[j]];
      if (j < k) {
        sol.pico_bits[m[j]] = u.demand;
      } else if (j == k) {
        const double x = std::min(u.demand, (f - c.pico_time[k]) * u.pico_rate);
        sol.pico_bits[m[j]] = x;
        sol.macro_bits[m[j]] = u.demand - x;
        if (x > 0.0) sol.fractional_user[l - 1] = static_cast<int>(m[j]);
      } else {
        sol.macro_bits[m[j]] = u.demand;
      }
    }
    sol.thresholds[l - 1] = c.marginal_ratio(f);
    macro_time += c.macro_time_at(f);
  }
  sol.objective = f + macro_time;
  return sol;
}

double oracle_clear_time(const DiscreteInstance& instance) {
  instance.validate();
  if (instance.users.size() > 12 || instance.num_picos > 3)
    throw DomainError("oracle handles at most 12 users and 3 picos");
  const int L = instance.num_picos;
  std::vector<std::vector<DiscreteUser>> by_pico(L + 1);
  for (const DiscreteUser& u : instance.users) by_pico[u.pico].push_back(u);

  double base = 0.0;
  for (const DiscreteUser& u : by_pico[0]) base += u.demand / u.macro_rate;

  std::vector<double> candidates{0.0};
  for (int l = 1; l <= L; ++l) {
    const auto& us = by_pico[l];
    const std::size_t n = us.size();
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
      double t = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1U) t += us[i].demand / us[i].pico_rate;
      candidates.push_back(t);
    }
  }

  // Macro time of pico l at budget f is the LP dual maximum over the
  // price rho of sum min(D/S, rho D/R) - rho f, attained at a kink.
  const auto pico_macro_time = [&](int l, double f) {
    const auto& us = by_pico[l];
    double best = 0.0;
    for (std::size_t j = 0; j <= us.size(); ++j) {
      const double rho = j < us.size() ? us[j].pico_rate / us[j].macro_rate : 0.0;
      double v = -rho * f;
      for (const DiscreteUser& u : us)
        v += std::min(u.demand / u.macro_rate, rho * u.demand / u.pico_rate);
      best = std::max(best, v);
    }
    return best;
  };

  double best = std::numeric_limits<double>::infinity();
  for (double f : candidates) {
    double total = f + base;
    for (int l = 1; l <= L; ++l) total += pico_macro_time(l, f);
    best = std::min(best, total);
  }
  return best;
}

void write_instance_csv(const DiscreteInstance& instance, std::ostream& os) {
  os << "pico_index,R,S,D\n";
  for (const DiscreteUser& u : instance.users)
    os << u.pico << ',' << format_double(u.pico_rate) << ','
       << format_double(u.macro_rate) << ',' << format_double(u.demand) << '\n';
}

DiscreteInstance read_instance_csv(std::istream& is) {
  DiscreteInstance inst;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv_line(line);
    if (!header) {
      if (f.size() != 4 || f[0] != "pico_index" || f[1] != "R" || f[2] != "S" || f[3] != "D")
        throw ConfigError("instance csv: expected header pico_index,R,S,D", lineno, 1);
      header = true;
      continue;
    }
    if (f.size() != 4) throw ConfigError("instance csv: expected 4 fields", lineno, 1);
    DiscreteUser u;
    try {
      std::size_t used = 0;
      u.pico = std::stoi(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument(f[0]);
      u.pico_rate = parse_double(f[1]);
      u.macro_rate = parse_double(f[2]);
      u.demand = parse_double(f[3]);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("instance csv: ") + e.what(), lineno, 1);
    }
    if (u.pico < 0) throw ConfigError("instance csv: negative pico index", lineno, 1);
    inst.num_picos = std::max(inst.num_picos, u.pico);
    inst.users.push_back(u);
  }
  if (!header) throw ConfigError("instance csv: empty file", lineno, 1);
  try {
    inst.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("instance csv: ") + e.what(), lineno, 1);
  }
  return inst;
}

}  // namespace hetcap
