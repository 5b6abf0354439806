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

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hetcap/rng.hpp"

namespace hetcap {

using Point = Eigen::Vector2d;

/// Bit mask over pico indices: bit (l - 1) set means pico l is in the set.
using PicoMask = std::uint32_t;

constexpr PicoMask pico_bit(int pico) { return PicoMask{1} << (pico - 1); }

struct PicoCell {
  Point center = Point::Zero();
  double radius = 150.0;            // metres
  double exclusion_radius = 10.0;   // no arrivals closer than this
};

enum class InterferenceMode { NoInterference, AllPicosOn };

/// Link budget. Path loss is intercept + slope * log10(d), d in metres.
struct RadioParams {
  double macro_tx_power_dbm = 46.0;
  double macro_antenna_gain_dbi = 14.0;
  double macro_pl_intercept_db = 15.3;
  double macro_pl_slope_db = 37.6;
  double pico_tx_power_dbm = 30.0;
  double pico_antenna_gain_dbi = 5.0;
  double pico_pl_intercept_db = 30.6;
  double pico_pl_slope_db = 36.7;
  double noise_power_dbm = -104.0;
  double bandwidth_hz = 1.0e6;
  InterferenceMode interference = InterferenceMode::NoInterference;
};

enum class FileSizeLaw { Deterministic, TruncatedExponential, Uniform };

struct TrafficModel {
  double arrival_rate = 1.0;  // files per second
  /// Region probabilities, index 0 is the macro-only region.
  std::vector<double> region_probs;
  double mean_file_size = 4.0e6;   // bits
  double max_file_size = 16.0e6;   // bits, hard upper bound on any file
  FileSizeLaw file_size_law = FileSizeLaw::Deterministic;
};

struct Scenario {
  double macro_radius = 1000.0;
  double macro_exclusion_radius = 10.0;
  std::vector<PicoCell> picos;
  RadioParams radio;
  TrafficModel traffic;

  int num_picos() const { return static_cast<int>(picos.size()); }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

/// Macro cell of radius 1 km with three 150 m hotspots, traffic split
/// (0.2, 0.4, 0.25, 0.15), 4 Mbit files, 1 MHz bandwidth.
Scenario reference_scenario();

/// Rates seen by an arrival at a fixed location.
struct LocatedRates {
  Point position = Point::Zero();
  int region = 0;            // 0 = macro only, 1..L = pico region
  double macro_rate = 0.0;   // bits/s
  double pico_rate = 0.0;    // bits/s, 0 in region 0
  double rate_ratio = 0.0;   // pico_rate / macro_rate, 0 in region 0
};

double shannon_rate(double bandwidth_hz, double snr_linear);

double macro_path_loss_db(const RadioParams& radio, double distance);
double pico_path_loss_db(const RadioParams& radio, double distance);

/// Shannon rate from the macro BS at the origin.
/// Throws DomainError outside the macro disc or at the BS itself.
double link_rate_macro(const Scenario& scenario, const Point& position);

/// Shannon rate from pico `pico` (1-based) with the scenario's interference
/// mode. Throws DomainError outside that pico's disc.
double link_rate_pico(const Scenario& scenario, int pico, const Point& position);

/// Shannon rate from pico `pico` when exactly the picos in `interferers` are
/// also transmitting. The serving pico's own bit is ignored.
double link_rate_pico(const Scenario& scenario, int pico, const Point& position,
                      PicoMask interferers);

/// Mask of every pico except `pico`.
PicoMask all_other_picos(const Scenario& scenario, int pico);

LocatedRates locate(const Scenario& scenario, const Point& position, int region);

int sample_region(const Scenario& scenario, RandomStream& rng);

/// Uniform position in the annulus of a pico region, or uniform over the
/// macro disc minus the pico discs and the macro exclusion disc for region 0.
/// Throws ConfigError if rejection sampling needs more than 1e6 draws.
Point sample_position(const Scenario& scenario, int region, RandomStream& rng);

LocatedRates sample_arrival(const Scenario& scenario, RandomStream& rng);

/// File-size law with mean `mean_file_size` and support in (0, max_file_size].
class FileSizeSampler {
 public:
  explicit FileSizeSampler(const TrafficModel& traffic);

  double operator()(RandomStream& rng) const;

  double mean() const { return mean_; }
  double max() const { return max_; }

 private:
  FileSizeLaw law_;
  double mean_;
  double max_;
  double exp_rate_ = 0.0;      // truncated exponential
  double exp_mass_ = 0.0;      // 1 - exp(-rate * max)
  double uniform_lo_ = 0.0;
  double uniform_hi_ = 0.0;
};

double sample_file_size(const Scenario& scenario, RandomStream& rng);

/// Rate of the exponential law on (0, max] whose truncated mean is `mean`.
/// Requires 0 < mean < max / 2.
double truncated_exponential_rate(double mean, double max);

}  // namespace hetcap
