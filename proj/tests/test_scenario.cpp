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


#include <doctest.h>

#include <cmath>
#include <vector>

#include "hetcap/error.hpp"
#include "hetcap/quadrature.hpp"
#include "hetcap/scenario.hpp"
#include "support/oracles.hpp"

using namespace hetcap;

namespace {

Point at(const Point& origin, double d) { return origin + Point(d * 0.6, d * 0.8); }

}  // namespace

TEST_CASE("macro link budget at 100 m") {
  const Scenario s = reference_scenario();
  CHECK(macro_path_loss_db(s.radio, 100.0) == doctest::Approx(90.5).epsilon(1e-12));
  const double desk = oracle::desk_rate(46, 14, 15.3, 37.6, -104, 1e6, 100.0);
  CHECK(desk == doctest::Approx(24.42e6).epsilon(1e-3));
  CHECK(link_rate_macro(s, at(Point::Zero(), 100.0)) == doctest::Approx(desk).epsilon(1e-12));
}

TEST_CASE("Shannon rate at 0 dB equals the bandwidth") {
  CHECK(shannon_rate(1e6, 1.0) == 1e6);
  Scenario s = reference_scenario();
  s.macro_radius = 1e5;
  const RadioParams& r = s.radio;
  const double snr0 = r.macro_tx_power_dbm + r.macro_antenna_gain_dbi - r.noise_power_dbm;
  const double d = std::pow(10.0, (snr0 - r.macro_pl_intercept_db) / r.macro_pl_slope_db);
  CHECK(link_rate_macro(s, Point(d, 0.0)) == doctest::Approx(r.bandwidth_hz).epsilon(1e-12));
}

TEST_CASE("path loss at 1 m is the intercept") {
  const RadioParams r;
  CHECK(macro_path_loss_db(r, 1.0) == r.macro_pl_intercept_db);
  CHECK(pico_path_loss_db(r, 1.0) == r.pico_pl_intercept_db);
}

TEST_CASE("pico link budget at 50 m") {
  const Scenario s = reference_scenario();
  CHECK(pico_path_loss_db(s.radio, 50.0) == doctest::Approx(92.95).epsilon(1e-4));
  const double desk = oracle::desk_rate(30, 5, 30.6, 36.7, -104, 1e6, 50.0);
  CHECK(desk == doctest::Approx(15.30e6).epsilon(1e-3));
  CHECK(link_rate_pico(s, 2, at(s.picos[1].center, 50.0)) == doctest::Approx(desk).epsilon(1e-12));
}

TEST_CASE("all-on interference with one pico changes nothing") {
  Scenario s = reference_scenario();
  s.picos.resize(1);
  s.traffic.region_probs = {0.5, 0.5};
  Scenario on = s;
  on.radio.interference = InterferenceMode::AllPicosOn;
  RandomStream rng(3);
  for (int i = 0; i < 200; ++i) {
    const Point p = sample_position(s, 1, rng);
    CHECK(link_rate_pico(s, 1, p) == link_rate_pico(on, 1, p));
  }
}

TEST_CASE("interference never raises a pico rate") {
  const Scenario s = reference_scenario();
  Scenario on = s;
  on.radio.interference = InterferenceMode::AllPicosOn;
  RandomStream rng(4);
  for (int l = 1; l <= 3; ++l) {
    for (int i = 0; i < 500; ++i) {
      const Point p = sample_position(s, l, rng);
      CHECK(link_rate_pico(on, l, p) <= link_rate_pico(s, l, p));
      CHECK(link_rate_pico(s, l, p, all_other_picos(s, l)) == link_rate_pico(on, l, p));
    }
  }
}

TEST_CASE("degenerate region mixture") {
  Scenario s = reference_scenario();
  s.traffic.region_probs = {1.0, 0.0, 0.0, 0.0};
  RandomStream rng(5);
  for (int i = 0; i < 10000; ++i) REQUIRE(sample_region(s, rng) == 0);
}

TEST_CASE("region frequencies within three binomial sigmas") {
  const Scenario s = reference_scenario();
  RandomStream rng(6);
  const int n = 1000000;
  std::vector<int> count(4, 0);
  for (int i = 0; i < n; ++i) ++count[static_cast<std::size_t>(sample_region(s, rng))];
  for (std::size_t r = 0; r < 4; ++r) {
    const double p = s.traffic.region_probs[r];
    const double sigma = std::sqrt(n * p * (1.0 - p));
    CHECK(std::abs(count[r] - n * p) <= 3.0 * sigma);
  }
}

TEST_CASE("sampled positions respect region support") {
  const Scenario s = reference_scenario();
  RandomStream rng(7);
  for (int r = 0; r <= 3; ++r) {
    for (int i = 0; i < 5000; ++i) {
      const Point p = sample_position(s, r, rng);
      REQUIRE(p.norm() <= s.macro_radius);
      if (r == 0) {
        REQUIRE(p.norm() >= s.macro_exclusion_radius);
        for (const PicoCell& c : s.picos) REQUIRE((p - c.center).norm() > c.radius);
      } else {
        const PicoCell& c = s.picos[static_cast<std::size_t>(r - 1)];
        const double d = (p - c.center).norm();
        REQUIRE(d >= c.exclusion_radius);
        REQUIRE(d <= c.radius);
      }
    }
  }
}

TEST_CASE("file size laws") {
  Scenario s = reference_scenario();
  CHECK(s.traffic.mean_file_size == 4e6);
  RandomStream rng(8);
  for (int i = 0; i < 1000; ++i) REQUIRE(sample_file_size(s, rng) == 4e6);

  s.traffic.file_size_law = FileSizeLaw::TruncatedExponential;
  const double a = truncated_exponential_rate(s.traffic.mean_file_size, s.traffic.max_file_size);
  CHECK(oracle::truncated_exponential_mean(a, s.traffic.max_file_size) ==
        doctest::Approx(s.traffic.mean_file_size).epsilon(1e-9));
  const FileSizeSampler law(s.traffic);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = law(rng);
    REQUIRE(x > 0.0);
    REQUIRE(x <= s.traffic.max_file_size);
    sum += x;
  }
  CHECK(std::abs(sum / n - 4e6) <= 0.01 * 4e6);

  s.traffic.file_size_law = FileSizeLaw::Uniform;
  const FileSizeSampler uni(s.traffic);
  sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = uni(rng);
    REQUIRE(x > 0.0);
    REQUIRE(x <= 8e6);
    sum += x;
  }
  CHECK(std::abs(sum / 100000 - 4e6) <= 0.01 * 4e6);
}

TEST_CASE("rate ratio is exactly the quotient of the rates") {
  const Scenario s = reference_scenario();
  RandomStream rng(9);
  for (int i = 0; i < 2000; ++i) {
    const LocatedRates a = sample_arrival(s, rng);
    if (a.region == 0) {
      CHECK(a.rate_ratio == 0.0);
      continue;
    }
    REQUIRE(a.rate_ratio == a.pico_rate / a.macro_rate);
  }
}

TEST_CASE("rates are continuous and fall with distance") {
  const Scenario s = reference_scenario();
  RandomStream rng(10);
  for (int l = 1; l <= 3; ++l) {
    for (int i = 0; i < 200; ++i) {
      const Point p = sample_position(s, l, rng);
      const Point q = p + Point(1e-3, 0.0);
      if ((q - s.picos[static_cast<std::size_t>(l - 1)].center).norm() > s.picos[static_cast<std::size_t>(l - 1)].radius)
        continue;
      CHECK(std::abs(link_rate_pico(s, l, q) / link_rate_pico(s, l, p) - 1.0) < 1e-3);
      CHECK(std::abs(link_rate_macro(s, q) / link_rate_macro(s, p) - 1.0) < 1e-3);
    }
  }
  double last = link_rate_macro(s, Point(10.0, 0.0));
  for (double d = 20.0; d <= 1000.0; d += 10.0) {
    const double r = link_rate_macro(s, Point(0.0, -d));
    CHECK(r < last);
    last = r;
  }
  const Point c = s.picos[0].center;
  last = link_rate_pico(s, 1, c + Point(10.0, 0.0));
  for (double d = 15.0; d <= 150.0; d += 5.0) {
    const double r = link_rate_pico(s, 1, c + Point(d, 0.0));
    CHECK(r < last);
    last = r;
  }
}

TEST_CASE("cloud rates are positive and bounded") {
  const SampleCloud cloud = SampleCloud::build(reference_scenario(), 5000, 11);
  CHECK(cloud.min_rate() > 0.0);
  CHECK(cloud.max_rate() >= cloud.min_rate());
  CHECK(std::isfinite(cloud.max_rate()));
}

TEST_CASE("invalid scenarios are rejected") {
  Scenario s = reference_scenario();
  s.picos[1].center = s.picos[0].center + Point(100.0, 0.0);
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = reference_scenario();
  s.traffic.region_probs = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = reference_scenario();
  s.traffic.region_probs.pop_back();
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = reference_scenario();
  s.picos[2].center = Point(0.0, 100.0);
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_NOTHROW(reference_scenario().validate());
  CHECK_THROWS_AS(link_rate_macro(reference_scenario(), Point(2000.0, 0.0)), DomainError);
}
