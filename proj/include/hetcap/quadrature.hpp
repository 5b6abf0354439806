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
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "hetcap/scenario.hpp"

namespace hetcap {

/// Columns of one region's weighted sample points.
struct CloudRegion {
  Eigen::ArrayXd x;
  Eigen::ArrayXd y;
  Eigen::ArrayXd macro_rate;
  Eigen::ArrayXd pico_rate;
  Eigen::ArrayXd rate_ratio;
  Eigen::ArrayXd weight;  // arrivals per second carried by the point

  Eigen::Index size() const { return weight.size(); }
  Point position(Eigen::Index i) const { return Point(x(i), y(i)); }
};

/// Hand-built atom, mainly for small test clouds.
struct CloudAtom {
  double macro_rate = 0.0;
  double pico_rate = 0.0;
  double weight = 0.0;
  Point position = Point::Zero();
};

/// Weighted Monte-Carlo discretization of the arrival measure. Points in
/// each pico region are sorted by descending rate ratio (ties by sample
/// index). Immutable after construction.
class SampleCloud {
 public:
  SampleCloud() = default;

  /// Draws `samples_per_region` points per region from fixed-size shards,
  /// each with its own derived stream, so the cloud depends only on the seed.
  static SampleCloud build(const Scenario& scenario,
                           std::size_t samples_per_region, std::uint64_t seed);

  /// Region 0 first, then picos 1..L. Pico atoms need positive rates.
  static SampleCloud from_atoms(double mean_file_size, double arrival_rate,
                                std::vector<std::vector<CloudAtom>> regions);

  int num_picos() const { return static_cast<int>(regions_.size()) - 1; }
  const CloudRegion& region(int r) const { return regions_[r]; }
  double mean_file_size() const { return mean_file_size_; }
  double arrival_rate() const { return arrival_rate_; }
  std::uint64_t seed() const { return seed_; }

  /// Same points with every weight multiplied by c (arrival rate c times).
  SampleCloud scaled(double c) const;

  /// Smallest and largest rate of any point in the cloud (both BS types).
  double min_rate() const;
  double max_rate() const;

 private:
  friend SampleCloud read_cloud_csv(std::istream& is);

  void sort_pico_regions();

  std::vector<CloudRegion> regions_;
  double mean_file_size_ = 0.0;
  double arrival_rate_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Pico time needed to serve all of pico region l: sum of w D / R.
double fbar(const SampleCloud& cloud, int pico);

/// Largest fbar over the picos (0 when there are none).
double fbar_max(const SampleCloud& cloud);

/// Monte-Carlo standard error of fbar(cloud, pico).
double fbar_standard_error(const SampleCloud& cloud, int pico);

/// Macro time needed for the macro-only region: sum of w D / S.
double macro_only_load(const SampleCloud& cloud);

/// Prefix tables over pico region l in descending-ratio order.
struct ThresholdTable {
  std::vector<double> pico_time;   // G(k) = sum_{i<k} w D / R, size M + 1
  std::vector<double> macro_time;  // B(k) = sum_{i>=k} w D / S, size M + 1
  std::vector<double> ratio;       // rate ratio of atom k, size M
};

ThresholdTable threshold_integrals(const SampleCloud& cloud, int pico);

/// Debug dump: a "# D=..,lambda=..,seed=.." line, then header
/// region,x,y,S,R,rho,weight.
void write_cloud_csv(const SampleCloud& cloud, std::ostream& os);
SampleCloud read_cloud_csv(std::istream& is);

}  // namespace hetcap
