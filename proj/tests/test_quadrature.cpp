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
#include <sstream>

#include "hetcap/quadrature.hpp"
#include "hetcap/scenario.hpp"
#include "support/oracles.hpp"

using namespace hetcap;

TEST_CASE("same seed gives the same cloud") {
  const Scenario s = reference_scenario();
  const SampleCloud a = SampleCloud::build(s, 3000, 42);
  const SampleCloud b = SampleCloud::build(s, 3000, 42);
  const SampleCloud c = SampleCloud::build(s, 3000, 43);
  for (int r = 0; r <= 3; ++r) {
    CHECK((a.region(r).x == b.region(r).x).all());
    CHECK((a.region(r).y == b.region(r).y).all());
    CHECK((a.region(r).weight == b.region(r).weight).all());
    CHECK((a.region(r).pico_rate == b.region(r).pico_rate).all());
    CHECK_FALSE((a.region(r).x == c.region(r).x).all());
  }
}

TEST_CASE("scaling the arrival rate scales every weight") {
  const SampleCloud a = SampleCloud::build(reference_scenario(), 2000, 1);
  for (double c : {0.5, 3.0, 1e-9}) {
    const SampleCloud b = a.scaled(c);
    CHECK(b.arrival_rate() == a.arrival_rate() * c);
    for (int r = 0; r <= 3; ++r) CHECK((b.region(r).weight == a.region(r).weight * c).all());
  }
  CHECK(fbar(a.scaled(1e-12), 1) == doctest::Approx(1e-12 * fbar(a, 1)).epsilon(1e-12));
}

TEST_CASE("constant pico rate gives the closed form") {
  const double lambda = 2.0, eta = 0.25, d = 4e6, rate = 8e6;
  const int m = 1024;
  std::vector<std::vector<CloudAtom>> regions(2);
  regions[0].push_back({5e6, 0.0, lambda * (1.0 - eta), Point::Zero()});
  for (int i = 0; i < m; ++i) regions[1].push_back({3e6 + i, rate, lambda * eta / m, Point::Zero()});
  const SampleCloud cloud = SampleCloud::from_atoms(d, lambda, regions);
  CHECK(fbar(cloud, 1) == doctest::Approx(lambda * eta * d / rate).epsilon(1e-15));
  CHECK(fbar_standard_error(cloud, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("Monte Carlo error shrinks with the sample count") {
  const Scenario s = reference_scenario();
  const SampleCloud small = SampleCloud::build(s, 25000, 5);
  const SampleCloud large = SampleCloud::build(s, 100000, 6);
  const SampleCloud twice = SampleCloud::build(s, 50000, 5);
  for (int l = 1; l <= 3; ++l) {
    const double se_small = fbar_standard_error(small, l);
    const double se_twice = fbar_standard_error(twice, l);
    const double se_large = fbar_standard_error(large, l);
    CHECK(se_small / se_twice == doctest::Approx(std::sqrt(2.0)).epsilon(0.1));
    CHECK(std::abs(fbar(small, l) - fbar(large, l)) <= 3.0 * std::hypot(se_small, se_large));
  }
}

TEST_CASE("fbar reproducible to three figures across seeds") {
  const Scenario s = reference_scenario();
  const SampleCloud a = SampleCloud::build(s, 100000, 101);
  const SampleCloud b = SampleCloud::build(s, 100000, 202);
  for (int l = 1; l <= 3; ++l) {
    CHECK(std::isfinite(fbar(a, l)));
    CHECK(std::abs(fbar(a, l) / fbar(b, l) - 1.0) < 5e-3);
    CHECK(std::abs(fbar(a, l) - fbar(b, l)) <=
          3.0 * std::hypot(fbar_standard_error(a, l), fbar_standard_error(b, l)));
  }
}

TEST_CASE("threshold integrals") {
  const SampleCloud cloud = SampleCloud::build(reference_scenario(), 4000, 7);
  for (int l = 1; l <= 3; ++l) {
    const ThresholdTable t = threshold_integrals(cloud, l);
    const std::size_t m = t.ratio.size();
    REQUIRE(m == static_cast<std::size_t>(cloud.region(l).size()));
    const CloudRegion& reg = cloud.region(l);
    const double macro = cloud.mean_file_size() * (reg.weight / reg.macro_rate).sum();
    CHECK(t.pico_time[0] == 0.0);
    CHECK(t.macro_time[0] == doctest::Approx(macro).epsilon(1e-12));
    CHECK(t.pico_time[m] == doctest::Approx(fbar(cloud, l)).epsilon(1e-12));
    CHECK(t.macro_time[m] == 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      REQUIRE(t.pico_time[k + 1] > t.pico_time[k]);
      REQUIRE(t.macro_time[k + 1] < t.macro_time[k]);
      if (k > 0) REQUIRE(t.ratio[k] <= t.ratio[k - 1]);
    }
  }
}

TEST_CASE("ties in the rate ratio keep sample order") {
  std::vector<std::vector<CloudAtom>> regions(2);
  regions[0].push_back({5e6, 0.0, 0.1, Point::Zero()});
  for (int i = 0; i < 6; ++i)
    regions[1].push_back({4e6, i % 2 ? 8e6 : 4e6, 0.1, Point(static_cast<double>(i), 0.0)});
  const SampleCloud cloud = SampleCloud::from_atoms(4e6, 1.0, regions);
  const CloudRegion& r = cloud.region(1);
  const double expected[] = {1, 3, 5, 0, 2, 4};
  for (int i = 0; i < 6; ++i) CHECK(r.x(i) == expected[i]);
}

TEST_CASE("cloud csv round trip") {
  const SampleCloud a = SampleCloud::build(reference_scenario(), 500, 9);
  std::stringstream ss;
  write_cloud_csv(a, ss);
  const SampleCloud b = read_cloud_csv(ss);
  REQUIRE(b.num_picos() == a.num_picos());
  CHECK(b.mean_file_size() == a.mean_file_size());
  CHECK(b.arrival_rate() == a.arrival_rate());
  for (int r = 0; r <= a.num_picos(); ++r) {
    CHECK((a.region(r).weight == b.region(r).weight).all());
    CHECK((a.region(r).macro_rate == b.region(r).macro_rate).all());
    CHECK((a.region(r).pico_rate == b.region(r).pico_rate).all());
  }
}
