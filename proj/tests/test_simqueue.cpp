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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "hetcap/contlp.hpp"
#include "hetcap/disclp.hpp"
#include "hetcap/error.hpp"
#include "hetcap/simqueue.hpp"

using namespace hetcap;

namespace {

struct Setup {
  Scenario scenario = reference_scenario();
  ThresholdPolicy policy;
  double capacity = 0.0;
};

const Setup& setup() {
  static const Setup s = [] {
    Setup out;
    out.policy = ContinuousLp(SampleCloud::build(out.scenario, 20000, 5)).solve();
    out.capacity = out.scenario.traffic.arrival_rate / out.policy.tau_star;
    return out;
  }();
  return s;
}

Scenario at_load(double load) {
  Scenario s = setup().scenario;
  s.traffic.arrival_rate = load * setup().capacity;
  return s;
}

SimConfig base_config() {
  SimConfig c = SimConfig::from_policy(setup().policy);
  c.threads = 1;
  return c;
}

double transmission_time(const DiscreteUser& u, const SimConfig& c) {
  const bool pico = u.pico > 0 && u.pico_rate / u.macro_rate > c.thresholds[u.pico - 1];
  return pico ? u.demand / (u.pico_rate * c.pico_share) : u.demand / (u.macro_rate * c.macro_share());
}

DiscreteInstance as_instance(const ReplicationResult& r, int num_picos) {
  DiscreteInstance inst;
  inst.num_picos = num_picos;
  inst.users = r.arrivals;
  return inst;
}

}  // namespace

TEST_CASE("config validation") {
  SimConfig c = base_config();
  CHECK_NOTHROW(c.validate(3));
  CHECK_THROWS_AS(c.validate(2), ConfigError);
  SimConfig bad = c;
  bad.pico_share = 1.5;
  CHECK_THROWS_AS(bad.validate(3), ConfigError);
  bad = c;
  bad.warmup = bad.horizon;
  CHECK_THROWS_AS(bad.validate(3), ConfigError);
  bad = c;
  bad.discipline = Discipline::SlottedFCFS;
  bad.slot_length = 0.0;
  CHECK_THROWS_AS(bad.validate(3), ConfigError);
  bad = c;
  bad.replications = 0;
  CHECK_THROWS_AS(bad.validate(3), ConfigError);
  CHECK(c.warmup_time() == doctest::Approx(0.2 * c.horizon));
  CHECK(c.pico_share == doctest::Approx(setup().policy.f_star / setup().policy.tau_star));
}

TEST_CASE("no arrivals, nothing happens") {
  Scenario s = setup().scenario;
  s.traffic.arrival_rate = 0.0;
  SimConfig c = base_config();
  c.horizon = 100.0;
  c.replications = 2;
  const SimReport r = run(s, c);
  for (const QueueSummary& q : r.queues) {
    CHECK(q.occupancy.mean == 0.0);
    CHECK(q.sojourn.mean == 0.0);
    CHECK(q.utilization.mean == 0.0);
    CHECK(q.arrival_rate == 0.0);
  }
  CHECK(r.total_occupancy.mean == 0.0);
  CHECK(r.max_total_occupancy == 0.0);
  CHECK(r.replications[0].resource_time == 0.0);
}

TEST_CASE("work and bits are conserved") {
  for (Discipline d : {Discipline::ProcessorSharing, Discipline::SlottedFCFS, Discipline::RoundRobin}) {
    SimConfig c = base_config();
    c.discipline = d;
    c.max_arrivals = 3000;
    const ReplicationResult r = run_replication(at_load(0.8), c, 0);
    REQUIRE(r.arrivals.size() == 3000);
    std::vector<double> bits(4, 0.0);
    for (const DiscreteUser& u : r.arrivals) {
      const bool pico = u.pico > 0 && u.pico_rate / u.macro_rate > c.thresholds[u.pico - 1];
      bits[pico ? u.pico : 0] += u.demand;
    }
    std::size_t departures = 0;
    for (int q = 0; q < 4; ++q) {
      const QueueStats& s = r.queues[q];
      departures += s.departures;
      CHECK(s.arrivals == s.departures);
      CHECK(s.served_bits == doctest::Approx(bits[q]).epsilon(1e-12));
      if (d != Discipline::SlottedFCFS)
        CHECK(s.busy_time == doctest::Approx(s.served_work).epsilon(1e-9));
      else
        CHECK(s.busy_time >= s.served_work * (1.0 - 1e-9));   // slots end on the grid
    }
    CHECK(departures == 3000);
  }
}

TEST_CASE("little's law and the delay formula") {
  SimConfig c = base_config();
  c.horizon = 4e4;
  c.replications = 4;
  const Scenario s = at_load(0.6);
  const SimReport r = run(s, c);
  for (std::size_t q = 0; q < r.queues.size(); ++q) {
    const QueueSummary& m = r.queues[q];
    const double lhs = m.occupancy.mean;
    const double rhs = m.arrival_rate * m.sojourn.mean;
    CHECK(std::abs(lhs - rhs) <= m.occupancy.half_width + m.arrival_rate * m.sojourn.half_width);
    CHECK(m.utilization.mean >= 0.0);
    CHECK(m.utilization.mean <= 1.0);
  }
  // Bottleneck queues against M/G/1-PS with the assigned arrival rate.
  const ThresholdPolicy& p = setup().policy;
  for (int q = 0; q <= 3; ++q) {
    const bool bottleneck = q == 0 || p.pico_load[q - 1] >= p.f_star * (1.0 - 1e-12);
    if (!bottleneck) continue;
    const double want = theoretical_ps_delay(p, s, q, DelayVariant::AssignedRate);
    CHECK(r.queues[q].sojourn.mean == doctest::Approx(want).epsilon(0.1));
  }
}

TEST_CASE("disciplines share the workload") {
  const Scenario s = at_load(0.7);
  SimConfig ps = base_config();
  ps.horizon = 3e4;
  ps.replications = 4;
  SimConfig fcfs = ps;
  fcfs.discipline = Discipline::SlottedFCFS;
  const SimReport a = run(s, ps);
  const SimReport b = run(s, fcfs);
  for (std::size_t q = 0; q < a.queues.size(); ++q) {
    const Estimate& x = a.queues[q].utilization;
    const Estimate& y = b.queues[q].utilization;
    // Slot rounding adds at most one slot per batch of busy time.
    const double slack = b.queues[q].arrival_rate * fcfs.slot_length;
    CHECK(std::abs(x.mean - y.mean) <= x.half_width + y.half_width + slack);
  }
}

TEST_CASE("processor sharing is insensitive to the file size law") {
  Scenario det = at_load(0.7);
  det.traffic.file_size_law = FileSizeLaw::Deterministic;
  Scenario exp = det;
  exp.traffic.file_size_law = FileSizeLaw::TruncatedExponential;
  SimConfig c = base_config();
  c.horizon = 4e4;
  c.replications = 6;
  const SimReport a = run(det, c);
  const SimReport b = run(exp, c);
  for (std::size_t q = 0; q < a.queues.size(); ++q) {
    const Estimate& x = a.queues[q].occupancy;
    const Estimate& y = b.queues[q].occupancy;
    CHECK(std::abs(x.mean - y.mean) <= x.half_width + y.half_width);
  }
}

TEST_CASE("closed form delay") {
  ThresholdPolicy p;
  p.tau_star = 0.5;
  p.rho_star = {1.0};
  p.assigned_prob = {0.0, 0.5};
  p.macro_prob = 0.5;
  p.arrival_rate = 4.0;
  Scenario s = reference_scenario();
  s.picos.resize(1);
  s.traffic.region_probs = {0.75, 0.25};
  s.traffic.arrival_rate = 4.0;
  CHECK(theoretical_ps_delay(p, s, 1, DelayVariant::RegionRate) == doctest::Approx(2.0));
  CHECK(theoretical_ps_delay(p, s, 1, DelayVariant::AssignedRate) == doctest::Approx(0.5));
  double last = 0.0;
  for (double tau : {0.9, 0.99, 0.999, 0.9999}) {
    p.tau_star = tau;
    const double d = theoretical_ps_delay(p, s, 1, DelayVariant::RegionRate);
    CHECK(d > last);
    last = d;
  }
  CHECK(last > 1e3);
  p.tau_star = 1.0;
  CHECK(std::isinf(theoretical_ps_delay(p, s, 1, DelayVariant::RegionRate)));
  CHECK(std::isinf(theoretical_ps_delay(p, s, 0, DelayVariant::AssignedRate)));
  CHECK_THROWS_AS(theoretical_ps_delay(p, s, 2, DelayVariant::RegionRate), DomainError);
}

TEST_CASE("an empty system only pays the transmission time") {
  Scenario s = setup().scenario;
  s.traffic.arrival_rate = 1e-6;
  SimConfig c = base_config();
  c.max_arrivals = 300;
  const ReplicationResult r = run_replication(s, c, 0);
  double want = 0.0;
  for (const DiscreteUser& u : r.arrivals) want += transmission_time(u, c);
  want /= static_cast<double>(r.arrivals.size());
  double got = 0.0;
  std::size_t n = 0;
  for (const QueueStats& q : r.queues) {
    got += q.mean_sojourn * static_cast<double>(q.departures);
    n += q.departures;
  }
  REQUIRE(n == 300);
  CHECK(got / static_cast<double>(n) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("replications are deterministic") {
  SimConfig c = base_config();
  c.horizon = 5e3;
  c.replications = 3;
  const Scenario s = at_load(0.9);
  const SimReport a = run(s, c);
  c.threads = 3;
  const SimReport b = run(s, c);
  REQUIRE(a.replications.size() == b.replications.size());
  for (std::size_t i = 0; i < a.replications.size(); ++i) {
    CHECK(a.replications[i].events == b.replications[i].events);
    CHECK(a.replications[i].trajectory.occupancy == b.replications[i].trajectory.occupancy);
    CHECK(a.replications[i].slope == b.replications[i].slope);
  }
  std::ostringstream x, y;
  write_report_csv(a, x);
  write_report_csv(b, y);
  CHECK(x.str() == y.str());
  CHECK(a.replications[0].events != a.replications[1].events);
  c.seed = 2;
  CHECK(run(s, c).replications[0].events != a.replications[0].events);
}

TEST_CASE("busy time never beats the clearing time") {
  for (Discipline d : {Discipline::ProcessorSharing, Discipline::SlottedFCFS, Discipline::RoundRobin}) {
    SimConfig c = base_config();
    c.discipline = d;
    for (int k = 0; k < 8; ++k) {
      c.max_arrivals = static_cast<std::size_t>(5 + 40 * k);
      const ReplicationResult r = run_replication(at_load(0.5 + 0.1 * k), c, k);
      const DiscreteSolution opt = clear_time(as_instance(r, 3));
      CHECK(r.resource_time >= opt.objective);
    }
  }
}

TEST_CASE("overload grows the backlog") {
  for (Discipline d : {Discipline::ProcessorSharing, Discipline::SlottedFCFS, Discipline::RoundRobin}) {
    SimConfig c = base_config();
    c.discipline = d;
    c.horizon = 2e4;
    const ReplicationResult r = run_replication(at_load(1.2), c, 0);
    CHECK(r.slope > 3.0 * r.slope_se);
  }
  SimConfig c = base_config();
  c.horizon = 2e4;
  c.replications = 4;
  CHECK(run(at_load(0.5), c).stable);
  CHECK_FALSE(run(at_load(1.2), c).stable);
}

TEST_CASE("geometric goodness of fit") {
  std::mt19937_64 gen(7);
  std::geometric_distribution<int> law(0.4);   // P(N = n) = 0.4 * 0.6^n
  std::vector<int> samples(5000);
  for (int& x : samples) x = law(gen);
  const GofResult good = geometric_gof(samples, 0.6);
  CHECK(good.samples == 5000);
  CHECK(good.p_value > 0.01);
  CHECK(good.degrees_of_freedom > 3);
  CHECK(geometric_gof(samples, 0.45).p_value < 1e-6);
  CHECK(relaxation_time(0.25, 2.0) == doctest::Approx(8.0));
}

TEST_CASE("estimates") {
  const Estimate one = estimate({3.0});
  CHECK(one.mean == 3.0);
  CHECK(one.half_width == 0.0);
  const Estimate two = estimate({1.0, 3.0});
  CHECK(two.mean == 2.0);
  CHECK(two.half_width == doctest::Approx(12.7062047361747));
  CHECK(two.contains(14.0));
  CHECK_FALSE(two.contains(15.0));
}

TEST_CASE("sweep and csv shapes") {
  const Scenario s = setup().scenario;
  const SampleCloud cloud = SampleCloud::build(s, 2000, 5);
  SimConfig c = base_config();
  c.horizon = 500.0;
  const std::vector<SweepRow> rows = stability_sweep(s, cloud, {1.0, 2.0}, {0.05}, c);
  CHECK(rows.size() == 2 * 5);
  CHECK(rows.front().queue == "macro");
  CHECK(rows[4].queue == "total");
  std::ostringstream os;
  write_sweep_csv(rows, os);
  CHECK(os.str().rfind("lambda,f,queue,util,meanN,meanT,slope\n", 0) == 0);
  std::ostringstream tr;
  write_trajectory_csv(run_replication(at_load(0.5), c, 0), tr);
  const std::string t = tr.str();
  CHECK(t.rfind("time,queue,N,residual_work\n", 0) == 0);
  CHECK(std::count(t.begin(), t.end(), '\n') == 1 + 4 * 2001);
}
