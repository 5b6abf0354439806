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

#include "hetcap/scenario.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "hetcap/error.hpp"

namespace hetcap {
namespace {

constexpr int kMaxRejections = 1'000'000;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Received power in mW from a pico at `distance`.
double pico_received_mw(const RadioParams& radio, double distance) {
  return db_to_linear(radio.pico_tx_power_dbm + radio.pico_antenna_gain_dbi -
                      pico_path_loss_db(radio, distance));
}

std::string describe_pico(int pico) { return "pico " + std::to_string(pico); }

}  // namespace

void Scenario::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(macro_radius > 0.0)) fail("macro_radius must be positive");
  if (!(macro_exclusion_radius >= 0.0 && macro_exclusion_radius < macro_radius))
    fail("macro_exclusion_radius must be in [0, macro_radius)");
  for (int l = 1; l <= num_picos(); ++l) {
    const PicoCell& c = picos[l - 1];
    if (!(c.radius > c.exclusion_radius && c.exclusion_radius >= 0.0))
      fail(describe_pico(l) + ": need radius > exclusion_radius >= 0");
    if (c.center.norm() + c.radius > macro_radius)
      fail(describe_pico(l) + ": disc not contained in the macro disc");
    if (c.center.norm() <= c.radius)
      fail(describe_pico(l) + ": disc covers the macro BS");
    for (int j = 1; j < l; ++j) {
      const PicoCell& o = picos[j - 1];
      if ((c.center - o.center).norm() < c.radius + o.radius)
        fail(describe_pico(j) + " and " + describe_pico(l) + " overlap");
    }
  }
  const RadioParams& r = radio;
  for (double v : {r.macro_tx_power_dbm, r.macro_antenna_gain_dbi,
                   r.macro_pl_intercept_db, r.pico_tx_power_dbm,
                   r.pico_antenna_gain_dbi, r.pico_pl_intercept_db,
                   r.noise_power_dbm}) {
    if (!std::isfinite(v)) fail("radio parameters must be finite");
  }
  if (!(r.bandwidth_hz > 0.0)) fail("bandwidth must be positive");
  if (!(r.macro_pl_slope_db > 0.0 && r.pico_pl_slope_db > 0.0))
    fail("path-loss slopes must be positive");

  const TrafficModel& t = traffic;
  if (!(t.arrival_rate >= 0.0 && std::isfinite(t.arrival_rate)))
    fail("arrival_rate must be finite and non-negative");
  if (t.region_probs.size() != picos.size() + 1) {
    std::ostringstream os;
    os << "region_probs has " << t.region_probs.size()
       << " entries, expected " << picos.size() + 1;
    fail(os.str());
  }
  for (double p : t.region_probs)
    if (!(p >= 0.0)) fail("region_probs must be non-negative");
  const double total =
      std::accumulate(t.region_probs.begin(), t.region_probs.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) fail("region_probs must sum to 1");
  if (!(t.mean_file_size > 0.0 && t.mean_file_size <= t.max_file_size &&
        std::isfinite(t.max_file_size)))
    fail("need 0 < mean_file_size <= max_file_size < inf");
  if (t.file_size_law == FileSizeLaw::TruncatedExponential &&
      !(t.mean_file_size < 0.5 * t.max_file_size))
    fail("truncated exponential law needs mean_file_size < max_file_size / 2");
}

Scenario reference_scenario() {
  Scenario s;
  s.picos = {
      PicoCell{Point(-339.0, 741.0), 150.0, 10.0},
      PicoCell{Point(218.0, -230.0), 150.0, 10.0},
      PicoCell{Point(561.0, -457.0), 150.0, 10.0},
  };
  s.traffic.region_probs = {0.2, 0.4, 0.25, 0.15};
  return s;
}

double shannon_rate(double bandwidth_hz, double snr_linear) {
  return bandwidth_hz * std::log2(1.0 + snr_linear);
}

double macro_path_loss_db(const RadioParams& radio, double distance) {
  return radio.macro_pl_intercept_db +
         radio.macro_pl_slope_db * std::log10(distance);
}

double pico_path_loss_db(const RadioParams& radio, double distance) {
  return radio.pico_pl_intercept_db +
         radio.pico_pl_slope_db * std::log10(distance);
}

double link_rate_macro(const Scenario& scenario, const Point& position) {
  const double d = position.norm();
  if (d > scenario.macro_radius || !(d > 0.0))
    throw DomainError("position outside the macro disc");
  const RadioParams& r = scenario.radio;
  const double snr_db = r.macro_tx_power_dbm + r.macro_antenna_gain_dbi -
                        macro_path_loss_db(r, d) - r.noise_power_dbm;
  return shannon_rate(r.bandwidth_hz, db_to_linear(snr_db));
}

PicoMask all_other_picos(const Scenario& scenario, int pico) {
  const PicoMask all = (PicoMask{1} << scenario.num_picos()) - 1;
  return all & ~pico_bit(pico);
}

double link_rate_pico(const Scenario& scenario, int pico, const Point& position,
                      PicoMask interferers) {
  if (pico < 1 || pico > scenario.num_picos())
    throw DomainError("pico index out of range");
  const PicoCell& cell = scenario.picos[pico - 1];
  const double d = (position - cell.center).norm();
  if (d > cell.radius || !(d > 0.0))
    throw DomainError("position outside the disc of " + describe_pico(pico));
  const RadioParams& r = scenario.radio;
  double denom_mw = db_to_linear(r.noise_power_dbm);
  for (int j = 1; j <= scenario.num_picos(); ++j) {
    if (j == pico || !(interferers & pico_bit(j))) continue;
    denom_mw += pico_received_mw(
        r, (position - scenario.picos[j - 1].center).norm());
  }
  return shannon_rate(r.bandwidth_hz, pico_received_mw(r, d) / denom_mw);
}

double link_rate_pico(const Scenario& scenario, int pico,
                      const Point& position) {
  const PicoMask interferers =
      scenario.radio.interference == InterferenceMode::AllPicosOn
          ? all_other_picos(scenario, pico)
          : PicoMask{0};
  return link_rate_pico(scenario, pico, position, interferers);
}

LocatedRates locate(const Scenario& scenario, const Point& position,
                    int region) {
  LocatedRates out;
  out.position = position;
  out.region = region;
  out.macro_rate = link_rate_macro(scenario, position);
  if (region > 0) {
    out.pico_rate = link_rate_pico(scenario, region, position);
    out.rate_ratio = out.pico_rate / out.macro_rate;
  }
  return out;
}

int sample_region(const Scenario& scenario, RandomStream& rng) {
  const auto& probs = scenario.traffic.region_probs;
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t r = 0; r + 1 < probs.size(); ++r) {
    acc += probs[r];
    if (u < acc) return static_cast<int>(r);
  }
  // Skip trailing zero-probability regions.
  for (std::size_t r = probs.size(); r-- > 0;)
    if (probs[r] > 0.0) return static_cast<int>(r);
  return 0;
}

Point sample_position(const Scenario& scenario, int region, RandomStream& rng) {
  if (region > 0) {
    const PicoCell& c = scenario.picos[region - 1];
    const double r2 = rng.uniform(c.exclusion_radius * c.exclusion_radius,
                                  c.radius * c.radius);
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    const double r = std::sqrt(r2);
    return c.center + Point(r * std::cos(theta), r * std::sin(theta));
  }
  const double big = scenario.macro_radius;
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const Point p(rng.uniform(-big, big), rng.uniform(-big, big));
    const double d = p.norm();
    if (d > big || d < scenario.macro_exclusion_radius || !(d > 0.0)) continue;
    bool inside_pico = false;
    for (const PicoCell& c : scenario.picos) {
      if ((p - c.center).norm() <= c.radius) {
        inside_pico = true;
        break;
      }
    }
    if (!inside_pico) return p;
  }
  throw ConfigError(
      "macro-only region is empty or negligible: rejection sampling exceeded "
      "1e6 draws");
}

LocatedRates sample_arrival(const Scenario& scenario, RandomStream& rng) {
  const int region = sample_region(scenario, rng);
  return locate(scenario, sample_position(scenario, region, rng), region);
}

double truncated_exponential_rate(double mean, double max) {
  if (!(mean > 0.0 && mean < 0.5 * max))
    throw DomainError("truncated exponential needs 0 < mean < max / 2");
  // Scaled mean 1/x - 1/(e^x - 1) decreases from 1/2 to 0 in x = rate * max.
  const double target = mean / max;
  auto scaled_mean = [](double x) { return 1.0 / x - 1.0 / std::expm1(x); };
  double lo = 1e-12, hi = 1.0;
  while (scaled_mean(hi) > target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (scaled_mean(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / max;
}

FileSizeSampler::FileSizeSampler(const TrafficModel& traffic)
    : law_(traffic.file_size_law),
      mean_(traffic.mean_file_size),
      max_(traffic.max_file_size) {
  switch (law_) {
    case FileSizeLaw::Deterministic:
      break;
    case FileSizeLaw::TruncatedExponential:
      exp_rate_ = truncated_exponential_rate(mean_, max_);
      exp_mass_ = -std::expm1(-exp_rate_ * max_);
      break;
    case FileSizeLaw::Uniform: {
      const double half = std::min(mean_, max_ - mean_);
      uniform_lo_ = mean_ - half;
      uniform_hi_ = mean_ + half;
      break;
    }
  }
}

double FileSizeSampler::operator()(RandomStream& rng) const {
  switch (law_) {
    case FileSizeLaw::Deterministic:
      return mean_;
    case FileSizeLaw::TruncatedExponential: {
      const double x =
          -std::log1p(-rng.uniform_open_left() * exp_mass_) / exp_rate_;
      return std::min(x, max_);
    }
    case FileSizeLaw::Uniform:
      // (lo, hi]: the left endpoint may be 0.
      return uniform_hi_ - (uniform_hi_ - uniform_lo_) * rng.uniform();
  }
  return mean_;
}

double sample_file_size(const Scenario& scenario, RandomStream& rng) {
  return FileSizeSampler(scenario.traffic)(rng);
}

}  // namespace hetcap
