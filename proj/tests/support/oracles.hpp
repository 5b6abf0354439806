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


// Brute-force reference computations used only by the tests. None of them
// share code with the solvers they check.

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hetcap/contlp.hpp"
#include "hetcap/disclp.hpp"
#include "hetcap/onoff.hpp"
#include "hetcap/quadrature.hpp"
#include "hetcap/rng.hpp"

namespace hetcap::oracle {

/// One user or atom seen from its pico: b is its macro time, g its pico time.
struct Atom {
  double b = 0.0;
  double g = 0.0;
};

/// max base + sum_l sum_i min(b_i, mu_l g_i) over mu >= 0, sum mu <= 1, by
/// visiting every vertex of the arrangement of kinks and simplex faces.
double simplex_dual_max(double base, const std::vector<std::vector<Atom>>& picos);

/// Clearing time through the dual above.
double dual_clear_time(const DiscreteInstance& instance);

/// tau* of an atomized cloud through the dual above.
double dual_tau_star(const SampleCloud& cloud);

/// Macro time left in one pico region at pico budget f: every subset on the
/// pico plus at most one split atom. Exponential in the atom count.
double subset_macro_time(const std::vector<Atom>& atoms, double f);

/// tau(f) = f + region-0 load + sum of subset_macro_time.
double subset_tau_of_f(const SampleCloud& cloud, double f);

std::vector<Atom> cloud_atoms(const SampleCloud& cloud, int region);

/// Pico share of every atom under a threshold policy, index [l - 1][i] in
/// the cloud's sorted order.
std::vector<std::vector<double>> policy_shares(const SampleCloud& cloud, const ThresholdPolicy& policy);

/// Total time of an explicit allocation: the smallest feasible f plus all
/// macro time.
double allocation_tau(const SampleCloud& cloud, const std::vector<std::vector<double>>& shares);

/// Smallest total time reachable by moving one atom fully to the other
/// side of its threshold.
double best_single_swap(const SampleCloud& cloud, const std::vector<std::vector<double>>& shares);

/// Macro time left in one on-off region with local mode budgets f, from
/// every basis of the LP max sum_i b_i sum_k p_ik, sum_i g_ik p_ik <= f_k,
/// sum_k p_ik <= 1, p >= 0.
double vertex_onoff_macro_time(const OnOffRegion& region, const Eigen::VectorXd& f_local);

/// Primal value of mode times f_sigma: sum f + region-0 load + region macro times.
double onoff_primal(const OnOffCloud& cloud, const Eigen::VectorXd& f_sigma);

/// Lower bound on the on-off optimum from multipliers laid out as in
/// ModePolicy::mu. NaN if mu violates mu >= 0 or sum_{l in sigma} mu <= 1.
double onoff_dual(const OnOffCloud& cloud, const Eigen::MatrixXd& mu, double slack = 1e-12);

/// Link budget by hand: Shannon rate for one transmitter at distance d.
double desk_rate(double tx_dbm, double gain_dbi, double intercept_db, double slope_db,
                 double noise_dbm, double bandwidth_hz, double d);

/// Mean of an exponential law with the given rate truncated to [0, max].
double truncated_exponential_mean(double rate, double max);

// Random instances.
DiscreteInstance random_instance(RandomStream& rng, int max_users, int max_picos);
SampleCloud random_cloud(RandomStream& rng, int num_picos, int atoms_per_region);
/// Per-mode pico times grow with the number of active picos in the mode.
OnOffCloud random_onoff_cloud(RandomStream& rng, int num_picos, int atoms_per_pico,
                              const ModeSet& modes);

}  // namespace hetcap::oracle
