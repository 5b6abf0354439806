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

#include <sstream>

#include "hetcap/disclp.hpp"
#include "hetcap/error.hpp"
#include "support/oracles.hpp"

using namespace hetcap;

namespace {

DiscreteUser user(int pico, double r_mbps, double s_mbps, double d_mbit) {
  return {pico, r_mbps * 1e6, s_mbps * 1e6, d_mbit * 1e6};
}

}  // namespace

TEST_CASE("single macro user") {
  const DiscreteSolution s = clear_time({0, {user(0, 0, 2, 4)}});
  CHECK(s.objective == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.f == 0.0);
}

TEST_CASE("single pico user with a good ratio") {
  const DiscreteSolution s = clear_time({1, {user(1, 10, 2, 4)}});
  CHECK(s.f == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(s.objective == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(s.pico_bits[0] == doctest::Approx(4e6).epsilon(1e-12));
  CHECK(s.macro_bits[0] == doctest::Approx(0.0));
}

TEST_CASE("two picos with one user each") {
  const DiscreteInstance inst{2, {user(1, 4, 2, 4), user(2, 8, 2, 4)}};
  CHECK(oracle::dual_clear_time(inst) == doctest::Approx(1.0).epsilon(1e-12));
  const DiscreteSolution s = clear_time(inst);
  CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.f == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.pico_bits[0] == doctest::Approx(4e6));
  CHECK(s.pico_bits[1] == doctest::Approx(4e6));
}

TEST_CASE("solver, library oracle and dual enumeration agree") {
  RandomStream rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const DiscreteInstance inst = oracle::random_instance(rng, 12, 3);
    const double h = clear_time(inst).objective;
    CHECK(h == doctest::Approx(oracle_clear_time(inst)).epsilon(1e-9));
    CHECK(h == doctest::Approx(oracle::dual_clear_time(inst)).epsilon(1e-9));
  }
}

TEST_CASE("threshold structure of the solution") {
  RandomStream rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const DiscreteInstance inst = oracle::random_instance(rng, 12, 2);
    const DiscreteSolution s = clear_time(inst);
    std::vector<int> split(static_cast<std::size_t>(inst.num_picos + 1), 0);
    double check = s.f;
    for (std::size_t n = 0; n < inst.users.size(); ++n) {
      const DiscreteUser& u = inst.users[n];
      CHECK(s.pico_bits[n] + s.macro_bits[n] == doctest::Approx(u.demand).epsilon(1e-12));
      CHECK(s.pico_bits[n] >= 0.0);
      CHECK(s.macro_bits[n] >= 0.0);
      check += s.macro_bits[n] / u.macro_rate;
      if (u.pico == 0) {
        CHECK(s.pico_bits[n] == 0.0);
        continue;
      }
      const double a = s.thresholds[static_cast<std::size_t>(u.pico - 1)];
      const double rho = u.pico_rate / u.macro_rate;
      if (rho > a && s.macro_bits[n] > 1e-9 * u.demand) ++split[static_cast<std::size_t>(u.pico)];
      if (rho < a) CHECK(s.pico_bits[n] == 0.0);
    }
    for (int l = 1; l <= inst.num_picos; ++l) CHECK(split[static_cast<std::size_t>(l)] <= 1);
    CHECK(check == doctest::Approx(s.objective).epsilon(1e-12));
  }
}

TEST_CASE("homogeneity, monotonicity and subadditivity") {
  RandomStream rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    DiscreteInstance a = oracle::random_instance(rng, 6, 2);
    DiscreteInstance b = oracle::random_instance(rng, 6, 2);
    a.num_picos = b.num_picos = 2;
    const double ha = clear_time(a).objective;
    const double hb = clear_time(b).objective;

    DiscreteInstance scaled = a;
    for (DiscreteUser& u : scaled.users) u.demand *= 3.0;
    CHECK(clear_time(scaled).objective == doctest::Approx(3.0 * ha).epsilon(1e-12));

    DiscreteInstance both = a;
    both.users.insert(both.users.end(), b.users.begin(), b.users.end());
    const double hab = clear_time(both).objective;
    CHECK(hab >= ha * (1.0 - 1e-12));
    CHECK(hab >= hb * (1.0 - 1e-12));
    CHECK(hab <= (ha + hb) * (1.0 + 1e-12));
  }
}

TEST_CASE("instance csv round trip and validation") {
  RandomStream rng(14);
  const DiscreteInstance inst = oracle::random_instance(rng, 12, 3);
  std::stringstream ss;
  write_instance_csv(inst, ss);
  const DiscreteInstance back = read_instance_csv(ss);
  REQUIRE(back.users.size() == inst.users.size());
  for (std::size_t n = 0; n < inst.users.size(); ++n) {
    CHECK(back.users[n].pico == inst.users[n].pico);
    CHECK(back.users[n].demand == inst.users[n].demand);
    CHECK(back.users[n].macro_rate == inst.users[n].macro_rate);
  }
  CHECK(clear_time(back).objective == clear_time(inst).objective);

  CHECK_THROWS_AS(clear_time({1, {user(1, 0, 2, 4)}}), DomainError);
  CHECK_THROWS_AS(clear_time({1, {user(1, 3, 2, -1)}}), DomainError);
  std::stringstream bad("pico_index,R,S,D\n1,2,x,3\n");
  CHECK_THROWS_AS(read_instance_csv(bad), ConfigError);
}
