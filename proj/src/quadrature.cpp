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

#include "hetcap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "hetcap/csv.hpp"
#include "hetcap/error.hpp"

namespace hetcap {
namespace {

constexpr std::size_t kShardSize = 8192;

CloudRegion allocate(Eigen::Index n) {
  CloudRegion r;
  r.x.resize(n);
  r.y.resize(n);
  r.macro_rate.resize(n);
  r.pico_rate.resize(n);
  r.rate_ratio.resize(n);
  r.weight.resize(n);
  return r;
}

CloudRegion permuted(const CloudRegion& in, const std::vector<Eigen::Index>& order) {
  CloudRegion out = allocate(in.size());
  for (Eigen::Index j = 0; j < in.size(); ++j) {
    const Eigen::Index i = order[j];
    out.x(j) = in.x(i);
    out.y(j) = in.y(i);
    out.macro_rate(j) = in.macro_rate(i);
    out.pico_rate(j) = in.pico_rate(i);
    out.rate_ratio(j) = in.rate_ratio(i);
    out.weight(j) = in.weight(i);
  }
  return out;
}

}  // namespace

SampleCloud SampleCloud::build(const Scenario& scenario,
                               std::size_t samples_per_region,
                               std::uint64_t seed) {
  if (samples_per_region < 1)
    throw DomainError("samples_per_region must be at least 1");
  scenario.validate();
  SampleCloud cloud;
  cloud.mean_file_size_ = scenario.traffic.mean_file_size;
  cloud.arrival_rate_ = scenario.traffic.arrival_rate;
  cloud.seed_ = seed;
  const auto m = static_cast<Eigen::Index>(samples_per_region);
  for (int r = 0; r <= scenario.num_picos(); ++r) {
    CloudRegion reg = allocate(m);
    const double w = scenario.traffic.arrival_rate *
                     scenario.traffic.region_probs[r] /
                     static_cast<double>(samples_per_region);
    reg.weight.setConstant(w);
    for (std::size_t shard = 0; shard * kShardSize < samples_per_region; ++shard) {
      RandomStream rng(derive_seed(
          seed, "cloud", (static_cast<std::uint64_t>(r) << 32) | shard));
      const std::size_t end =
          std::min(samples_per_region, (shard + 1) * kShardSize);
      for (std::size_t i = shard * kShardSize; i < end; ++i) {
        const auto lr =
            locate(scenario, sample_position(scenario, r, rng), r);
        const auto j = static_cast<Eigen::Index>(i);
        reg.x(j) = lr.position.x();
        reg.y(j) = lr.position.y();
        reg.macro_rate(j) = lr.macro_rate;
        reg.pico_rate(j) = lr.pico_rate;
        reg.rate_ratio(j) = lr.rate_ratio;
      }
    }
    cloud.regions_.push_back(std::move(reg));
  }
  cloud.sort_pico_regions();
  return cloud;
}

SampleCloud SampleCloud::from_atoms(double mean_file_size, double arrival_rate,
                                    std::vector<std::vector<CloudAtom>> regions) {
  if (regions.empty()) throw DomainError("cloud needs the macro-only region");
  SampleCloud cloud;
  cloud.mean_file_size_ = mean_file_size;
  cloud.arrival_rate_ = arrival_rate;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto& atoms = regions[r];
    CloudRegion reg = allocate(static_cast<Eigen::Index>(atoms.size()));
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const CloudAtom& a = atoms[i];
      if (!(a.macro_rate > 0.0) || (r > 0 && !(a.pico_rate > 0.0)) ||
          !(a.weight >= 0.0))
        throw DomainError("atom rates must be positive and weights non-negative");
      const auto j = static_cast<Eigen::Index>(i);
      reg.x(j) = a.position.x();
      reg.y(j) = a.position.y();
      reg.macro_rate(j) = a.macro_rate;
      reg.pico_rate(j) = r > 0 ? a.pico_rate : 0.0;
      reg.rate_ratio(j) = r > 0 ? a.pico_rate / a.macro_rate : 0.0;
      reg.weight(j) = a.weight;
    }
    cloud.regions_.push_back(std::move(reg));
  }
  cloud.sort_pico_regions();
  return cloud;
}

void SampleCloud::sort_pico_regions() {
  for (std::size_t r = 1; r < regions_.size(); ++r) {
    CloudRegion& reg = regions_[r];
    std::vector<Eigen::Index> order(static_cast<std::size_t>(reg.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return reg.rate_ratio(a) > reg.rate_ratio(b);
    });
    reg = permuted(reg, order);
  }
}

SampleCloud SampleCloud::scaled(double c) const {
  SampleCloud out = *this;
  out.arrival_rate_ *= c;
  for (CloudRegion& reg : out.regions_) reg.weight *= c;
  return out;
}

double SampleCloud::min_rate() const {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    if (regions_[r].size() == 0) continue;
    lo = std::min(lo, regions_[r].macro_rate.minCoeff());
    if (r > 0) lo = std::min(lo, regions_[r].pico_rate.minCoeff());
  }
  return lo;
}

double SampleCloud::max_rate() const {
  double hi = 0.0;
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    if (regions_[r].size() == 0) continue;
    hi = std::max(hi, regions_[r].macro_rate.maxCoeff());
    if (r > 0) hi = std::max(hi, regions_[r].pico_rate.maxCoeff());
  }
  return hi;
}

double fbar(const SampleCloud& cloud, int pico) {
  if (pico < 1 || pico > cloud.num_picos())
    throw DomainError("pico index out of range");
  const CloudRegion& reg = cloud.region(pico);
  return cloud.mean_file_size() * (reg.weight / reg.pico_rate).sum();
}

double fbar_max(const SampleCloud& cloud) {
  double best = 0.0;
  for (int l = 1; l <= cloud.num_picos(); ++l) best = std::max(best, fbar(cloud, l));
  return best;
}

double fbar_standard_error(const SampleCloud& cloud, int pico) {
  const CloudRegion& reg = cloud.region(pico);
  const Eigen::Index m = reg.size();
  if (m < 2) return 0.0;
  const Eigen::ArrayXd c = cloud.mean_file_size() * reg.weight / reg.pico_rate;
  const double mean = c.mean();
  const double var = (c - mean).square().sum() / static_cast<double>(m - 1);
  return std::sqrt(static_cast<double>(m) * var);
}

double macro_only_load(const SampleCloud& cloud) {
  const CloudRegion& reg = cloud.region(0);
  return cloud.mean_file_size() * (reg.weight / reg.macro_rate).sum();
}

ThresholdTable threshold_integrals(const SampleCloud& cloud, int pico) {
  if (pico < 1 || pico > cloud.num_picos())
    throw DomainError("pico index out of range");
  const CloudRegion& reg = cloud.region(pico);
  const double d = cloud.mean_file_size();
  const auto m = static_cast<std::size_t>(reg.size());
  ThresholdTable t;
  t.ratio.assign(reg.rate_ratio.data(), reg.rate_ratio.data() + m);
  t.pico_time.resize(m + 1);
  t.macro_time.resize(m + 1);
  t.pico_time[0] = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    t.pico_time[i + 1] =
        t.pico_time[i] + reg.weight(Eigen::Index(i)) * d / reg.pico_rate(Eigen::Index(i));
  t.macro_time[m] = 0.0;
  for (std::size_t i = m; i-- > 0;)
    t.macro_time[i] =
        t.macro_time[i + 1] + reg.weight(Eigen::Index(i)) * d / reg.macro_rate(Eigen::Index(i));
  return t;
}

void write_cloud_csv(const SampleCloud& cloud, std::ostream& os) {
  os << "# D=" << format_double(cloud.mean_file_size())
     << ",lambda=" << format_double(cloud.arrival_rate())
     << ",seed=" << cloud.seed() << "\n";
  os << "region,x,y,S,R,rho,weight\n";
  for (int r = 0; r <= cloud.num_picos(); ++r) {
    const CloudRegion& reg = cloud.region(r);
    for (Eigen::Index i = 0; i < reg.size(); ++i) {
      os << r << ',' << format_double(reg.x(i)) << ','
         << format_double(reg.y(i)) << ',' << format_double(reg.macro_rate(i))
         << ',' << format_double(reg.pico_rate(i)) << ','
         << format_double(reg.rate_ratio(i)) << ','
         << format_double(reg.weight(i)) << '\n';
    }
  }
}

SampleCloud read_cloud_csv(std::istream& is) {
  std::string line;
  double d = 0.0, lambda = 0.0;
  std::uint64_t seed = 0;
  if (!std::getline(is, line) || line.rfind("# D=", 0) != 0)
    throw ConfigError("cloud csv: missing '# D=' line", 1, 1);
  for (const std::string& field : split_csv_line(line.substr(2))) {
    const auto eq = field.find('=');
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "D") d = parse_double(val);
    else if (key == "lambda") lambda = parse_double(val);
    else if (key == "seed") seed = std::stoull(val);
  }
  if (!std::getline(is, line) || line.rfind("region,x,y,S,R,rho,weight", 0) != 0)
    throw ConfigError("cloud csv: bad header", 2, 1);
  std::vector<std::vector<CloudAtom>> regions;
  int lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw ConfigError("cloud csv: expected 7 fields", lineno, 1);
    const int r = std::stoi(f[0]);
    if (r < 0) throw ConfigError("cloud csv: negative region", lineno, 1);
    if (static_cast<std::size_t>(r) >= regions.size()) regions.resize(r + 1);
    CloudAtom a;
    a.position = Point(parse_double(f[1]), parse_double(f[2]));
    a.macro_rate = parse_double(f[3]);
    a.pico_rate = parse_double(f[4]);
    a.weight = parse_double(f[6]);
    regions[r].push_back(a);
  }
  SampleCloud cloud = SampleCloud::from_atoms(d, lambda, std::move(regions));
  cloud.seed_ = seed;
  return cloud;
}

}  // namespace hetcap
