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

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "hetcap/quadrature.hpp"
#include "hetcap/scenario.hpp"

namespace hetcap {

struct ModeSet {
  std::vector<PicoMask> modes;

  /// Every subset of {1..L} with at least two members, by increasing mask.
  static ModeSet all_multi(int num_picos);

  std::size_t size() const { return modes.size(); }
  bool contains(std::size_t mode, int pico) const { return (modes[mode] & pico_bit(pico)) != 0; }

  /// Throws ConfigError on duplicates, singletons or unknown picos.
  void validate(int num_picos) const;
};

/// Atoms of one pico region with per-mode pico times.
struct OnOffRegion {
  std::vector<std::size_t> modes;   // indices into ModeSet containing this pico
  Eigen::VectorXd weight;
  Eigen::VectorXd macro_time;       // b_i = w D / S_eff
  Eigen::MatrixXd pico_time;        // g_ik = w D / R^sigma_k, atoms x local modes
};

struct OnOffCloud {
  ModeSet modes;
  double region0_load = 0.0;
  double arrival_rate = 0.0;
  std::vector<OnOffRegion> picos;   // index l - 1

  int num_picos() const { return static_cast<int>(picos.size()); }
};

/// Rates under each mode come from the SINR with the other members of the
/// mode as interferers. With absorb_singletons the macro rate becomes
/// max(S, solo pico rate).
OnOffCloud build_onoff_cloud(const Scenario& scenario, const SampleCloud& cloud,
                             const ModeSet& modes, bool absorb_singletons = true);

struct PicoDual {
  Eigen::VectorXd mu;            // per local mode
  Eigen::VectorXd pico_used;     // pico time per local mode in the primal
  double macro_time = 0.0;       // primal U_l
  double dual_macro_time = 0.0;  // region macro load minus min of the dual
  double smoothed_macro_time = 0.0;
  Eigen::MatrixXd curvature;     // -d mu / d f on local modes, zero if exact
  bool exact = false;            // solved by the dense simplex
  bool zero_multipliers = false;
};

struct DualOptions {
  std::size_t dense_limit = 64;   // solve exactly with the simplex up to this size
  int coordinate_passes = 3;      // exact per-mode sweeps after smoothing
  double smoothing_start = 1e-2;  // relative width of the smoothed max
  double smoothing_final = 0.0;   // 0: 0.2 / atoms, clamped to [1e-7, 1e-4]
  int newton_iterations = 60;
};

/// f_sigma is indexed by the region's local modes. warm_mu may be empty.
/// Up to dense_limit atoms the LP is solved exactly; above, the max in the
/// dual is smoothed and the multipliers come from damped Newton steps.
PicoDual solve_pico_dual(const OnOffRegion& region, const Eigen::VectorXd& f_sigma,
                         const Eigen::VectorXd& warm_mu = {}, const DualOptions& opts = {});

/// Value of the dual objective mu.f + sum_i max(0, max_k b_i - mu_k g_ik).
double pico_dual_objective(const OnOffRegion& region, const Eigen::VectorXd& f_sigma,
                           const Eigen::VectorXd& mu);

struct OnOffOptions {
  int max_iterations = 500;       // Newton steps on the joint dual
  double certificate_tolerance = 1e-3;
  std::size_t dense_limit = 1500;  // joint LP by simplex up to this many variables
  DualOptions dual;
};

struct ModePolicy {
  Eigen::VectorXd f_sigma;
  double tau_bar = 0.0;
  double dual_tau_bar = 0.0;
  Eigen::MatrixXd mu;            // modes x picos, NaN where the pico is not in the mode
  Eigen::MatrixXd pico_used;     // same layout
  double max_sum_residual = 0.0;      // active modes, |sum mu - 1|
  double max_inactive_excess = 0.0;   // inactive modes, max(0, sum mu - 1)
  double max_tightness_atoms = 0.0;   // slack of active constraints in atoms
  bool converged = false;
  bool exact = false;
  bool zero_multipliers = false;
  int iterations = 0;

  double f_total() const { return f_sigma.sum(); }
  bool active(std::size_t mode) const { return f_sigma(static_cast<Eigen::Index>(mode)) > 0.0; }
  bool certified(double tolerance) const {
    return max_sum_residual <= tolerance && max_inactive_excess <= tolerance &&
           max_tightness_atoms <= 1.0;
  }
};

/// Small instances are solved as one LP. Larger ones through the joint dual
/// over the multipliers, with the maxima smoothed and a log barrier on
/// sum_{l in sigma} mu <= 1; the mode times are recovered from the shares.
ModePolicy solve_onoff(const OnOffCloud& cloud, const OnOffOptions& opts = {});

/// Columns mode,f_sigma,pico,mu.
void write_mode_policy_csv(const OnOffCloud& cloud, const ModePolicy& policy, std::ostream& os);

}  // namespace hetcap
