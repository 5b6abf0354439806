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

#include "hetcap/simqueue.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <ostream>
#include <queue>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "hetcap/csv.hpp"
#include "hetcap/error.hpp"
#include "hetcap/rng.hpp"

namespace hetcap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string queue_name(int q) { return q == 0 ? "macro" : "pico" + std::to_string(q); }

struct Completion {
  int queue = 0;
  std::size_t files = 0;
  double sojourn_sum = 0.0;
  double bits = 0.0;
  double work = 0.0;
};

// All queues of one discipline. Times are absolute; advance() is only
// called over intervals without internal events.
class Server {
 public:
  virtual ~Server() = default;
  virtual void arrive(int q, double t, double work, double bits) = 0;
  virtual double next_event() const = 0;
  virtual void advance(double t0, double t1) = 0;
  virtual void fire(double t, std::vector<Completion>& out) = 0;
  virtual std::size_t occupancy(int q) const = 0;
  virtual double residual(int q) const = 0;
  virtual double drain_rate(int q) const = 0;
  /// Pico-mode plus macro-mode time consumed per second right now.
  virtual double resource_rate() const = 0;
};

bool close_enough(double a, double b) {
  return a - b <= 1e-12 * std::max(1.0, std::abs(b));
}

class PsServer final : public Server {
 public:
  PsServer(int queues, double pico_share) : q_(queues), pico_share_(pico_share) {}

  void arrive(int q, double t, double work, double bits) override {
    Queue& s = q_[q];
    s.jobs.push({s.virtual_time + work, t, bits, work});
    s.sum_finish += s.virtual_time + work;
  }

  double next_event() const override {
    double best = kInf;
    for (const Queue& s : q_)
      if (!s.jobs.empty())
        best = std::min(best, now_ + (s.jobs.top().finish - s.virtual_time) *
                                         static_cast<double>(s.jobs.size()));
    return best;
  }

  void advance(double t0, double t1) override {
    for (Queue& s : q_)
      if (!s.jobs.empty()) s.virtual_time += (t1 - t0) / static_cast<double>(s.jobs.size());
    now_ = t1;
  }

  void fire(double t, std::vector<Completion>& out) override {
    // The queue that triggered the event pops even if rounding left it short.
    int trigger = -1;
    double best = kInf;
    for (std::size_t q = 0; q < q_.size(); ++q) {
      const Queue& s = q_[q];
      if (s.jobs.empty()) continue;
      const double gap = s.jobs.top().finish - s.virtual_time;
      if (gap < best) {
        best = gap;
        trigger = static_cast<int>(q);
      }
    }
    for (std::size_t q = 0; q < q_.size(); ++q) {
      Queue& s = q_[q];
      bool force = static_cast<int>(q) == trigger;
      while (!s.jobs.empty() && (force || close_enough(s.jobs.top().finish, s.virtual_time))) {
        const Job j = s.jobs.top();
        s.jobs.pop();
        s.sum_finish -= j.finish;
        out.push_back({static_cast<int>(q), 1, t - j.arrival, j.bits, j.work});
        force = false;
      }
      if (s.jobs.empty()) s.sum_finish = 0.0;
    }
  }

  std::size_t occupancy(int q) const override { return q_[q].jobs.size(); }

  double residual(int q) const override {
    const Queue& s = q_[q];
    return std::max(0.0, s.sum_finish - static_cast<double>(s.jobs.size()) * s.virtual_time);
  }

  double drain_rate(int q) const override { return q_[q].jobs.empty() ? 0.0 : 1.0; }

  double resource_rate() const override {
    bool pico = false;
    for (std::size_t q = 1; q < q_.size(); ++q) pico = pico || !q_[q].jobs.empty();
    return (pico ? pico_share_ : 0.0) + (q_[0].jobs.empty() ? 0.0 : 1.0 - pico_share_);
  }

 private:
  struct Job {
    double finish;   // virtual time at which the job completes
    double arrival;
    double bits;
    double work;
    bool operator>(const Job& o) const { return finish > o.finish; }
  };
  struct Queue {
    double virtual_time = 0.0;  // attained service of a job present throughout
    double sum_finish = 0.0;
    std::priority_queue<Job, std::vector<Job>, std::greater<>> jobs;
  };
  std::vector<Queue> q_;
  double pico_share_;
  double now_ = 0.0;
};

class FcfsServer final : public Server {
 public:
  FcfsServer(int queues, double pico_share, double slot)
      : q_(queues), pico_share_(pico_share), slot_(slot) {}

  void arrive(int q, double t, double work, double bits) override {
    Queue& s = q_[q];
    const auto slot = static_cast<std::int64_t>(std::floor(t / slot_));
    if (s.open.files > 0 && s.open.slot != slot) release(s);
    if (s.open.files == 0) s.open.slot = slot;
    s.open.files += 1;
    s.open.arrival_sum += t;
    s.open.bits += bits;
    s.open.work += work;
    s.files += 1;
  }

  double next_event() const override {
    double best = kInf;
    for (const Queue& s : q_) {
      if (s.open.files > 0) best = std::min(best, close_time(s.open));
      if (!s.released.empty()) best = std::min(best, s.released.front().completion);
    }
    return best;
  }

  void advance(double, double t1) override { now_ = t1; }

  void fire(double t, std::vector<Completion>& out) override {
    for (std::size_t q = 0; q < q_.size(); ++q) {
      Queue& s = q_[q];
      if (s.open.files > 0 && close_enough(close_time(s.open), t)) release(s);
      while (!s.released.empty() && close_enough(s.released.front().completion, t)) {
        const Batch& b = s.released.front();
        out.push_back({static_cast<int>(q), b.files,
                       static_cast<double>(b.files) * t - b.arrival_sum, b.bits, b.work});
        s.files -= b.files;
        s.released.pop_front();
      }
    }
  }

  std::size_t occupancy(int q) const override { return q_[q].files; }

  double residual(int q) const override {
    const Queue& s = q_[q];
    return std::max(0.0, s.last_completion - now_) + s.open.work;
  }

  double drain_rate(int q) const override { return q_[q].last_completion > now_ ? 1.0 : 0.0; }

  double resource_rate() const override {
    bool pico = false;
    for (std::size_t q = 1; q < q_.size(); ++q) pico = pico || drain_rate(static_cast<int>(q)) > 0;
    return (pico ? pico_share_ : 0.0) + (drain_rate(0) > 0.0 ? 1.0 - pico_share_ : 0.0);
  }

 private:
  struct Batch {
    std::int64_t slot = 0;
    std::size_t files = 0;
    double arrival_sum = 0.0;
    double bits = 0.0;
    double work = 0.0;
    double completion = 0.0;
  };
  struct Queue {
    Batch open;
    std::deque<Batch> released;
    double last_completion = 0.0;
    std::size_t files = 0;
  };

  double close_time(const Batch& b) const { return static_cast<double>(b.slot + 1) * slot_; }

  void release(Queue& s) {
    Batch b = s.open;
    const double start = std::max(close_time(b), s.last_completion);
    b.completion = start + b.work;
    s.last_completion = b.completion;
    s.released.push_back(b);
    s.open = Batch{};
  }

  std::vector<Queue> q_;
  double pico_share_;
  double slot_;
  double now_ = 0.0;
};

class RoundRobinServer final : public Server {
 public:
  explicit RoundRobinServer(int queues) : q_(queues) {}

  void arrive(int q, double t, double work, double bits) override {
    if (q_[q].files.empty()) ++busy_;
    q_[q].files.push_back({t, bits, work, work});
    q_[q].residual += work;
  }

  double next_event() const override {
    double best = kInf;
    for (const Queue& s : q_)
      if (!s.files.empty())
        best = std::min(best, now_ + s.files.front().left * static_cast<double>(busy_));
    return best;
  }

  void advance(double t0, double t1) override {
    if (busy_ > 0) {
      const double d = (t1 - t0) / static_cast<double>(busy_);
      for (Queue& s : q_)
        if (!s.files.empty()) {
          s.files.front().left -= d;
          s.residual -= d;
        }
    }
    now_ = t1;
  }

  void fire(double t, std::vector<Completion>& out) override {
    int trigger = -1;
    double best = kInf;
    for (std::size_t q = 0; q < q_.size(); ++q)
      if (!q_[q].files.empty() && q_[q].files.front().left < best) {
        best = q_[q].files.front().left;
        trigger = static_cast<int>(q);
      }
    for (std::size_t q = 0; q < q_.size(); ++q) {
      Queue& s = q_[q];
      const double tol = 1e-12 * std::max(1.0, t);
      if (s.files.empty()) continue;
      if (static_cast<int>(q) != trigger && s.files.front().left > tol) continue;
      const File f = s.files.front();
      s.files.pop_front();
      s.residual = s.files.empty() ? 0.0 : s.residual - std::max(f.left, 0.0);
      out.push_back({static_cast<int>(q), 1, t - f.arrival, f.bits, f.work});
      if (s.files.empty()) --busy_;
    }
  }

  std::size_t occupancy(int q) const override { return q_[q].files.size(); }
  double residual(int q) const override { return std::max(0.0, q_[q].residual); }

  double drain_rate(int q) const override {
    return q_[q].files.empty() ? 0.0 : 1.0 / static_cast<double>(busy_);
  }

  double resource_rate() const override { return busy_ > 0 ? 1.0 : 0.0; }

 private:
  struct File {
    double arrival;
    double bits;
    double work;
    double left;
  };
  struct Queue {
    std::deque<File> files;
    double residual = 0.0;
  };
  std::vector<Queue> q_;
  int busy_ = 0;
  double now_ = 0.0;
};

struct Accumulator {
  double area = 0.0;
  double area2 = 0.0;
  double busy = 0.0;
  double sojourn = 0.0;
  QueueStats stats;
};

// Least-squares slope of y on t and its ordinary standard error.
std::pair<double, double> fit_slope(const std::vector<double>& t, const std::vector<double>& y) {
  const auto n = static_cast<double>(t.size());
  if (t.size() < 3) return {0.0, 0.0};
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  if (!(stt > 0.0)) return {0.0, 0.0};
  const double slope = sty / stt;
  double sse = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - my - slope * (t[i] - mt);
    sse += r * r;
  }
  return {slope, std::sqrt(sse / (n - 2.0) / stt)};
}

}  // namespace

SimConfig SimConfig::from_policy(const ThresholdPolicy& policy) {
  SimConfig c;
  c.thresholds.resize(policy.rho_star.size());
  for (int l = 1; l <= policy.num_picos(); ++l) c.thresholds[l - 1] = policy.effective_threshold(l);
  c.pico_share = policy.pico_share();
  return c;
}

void SimConfig::validate(int num_picos) const {
  if (static_cast<int>(thresholds.size()) != num_picos)
    throw ConfigError("one threshold per pico expected");
  if (!(pico_share >= 0.0 && pico_share <= 1.0)) throw ConfigError("pico share must be in [0, 1]");
  if (discipline == Discipline::SlottedFCFS && !(slot_length > 0.0))
    throw ConfigError("slot length must be positive");
  if (max_arrivals == 0) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
    if (!(warmup_time() >= 0.0 && warmup_time() < horizon))
      throw ConfigError("warmup must be in [0, horizon)");
  }
  if (replications < 1) throw ConfigError("at least one replication");
}

ReplicationResult run_replication(const Scenario& scenario, const SimConfig& config, int index) {
  const int L = scenario.num_picos();
  config.validate(L);
  const int Q = L + 1;
  const bool prefix = config.max_arrivals > 0;
  const double lambda = scenario.traffic.arrival_rate;
  const double horizon = prefix ? kInf : config.horizon;

  std::unique_ptr<Server> server;
  switch (config.discipline) {
    case Discipline::ProcessorSharing:
      server = std::make_unique<PsServer>(Q, config.pico_share);
      break;
    case Discipline::SlottedFCFS:
      server = std::make_unique<FcfsServer>(Q, config.pico_share, config.slot_length);
      break;
    case Discipline::RoundRobin:
      server = std::make_unique<RoundRobinServer>(Q);
      break;
  }
  const auto share = [&](int q) {
    if (config.discipline == Discipline::RoundRobin) return 1.0;
    return q == 0 ? config.macro_share() : config.pico_share;
  };

  RandomStream rng(derive_seed(config.seed, "sim", static_cast<std::uint64_t>(index)));
  const FileSizeSampler sizes(scenario.traffic);

  ReplicationResult out;
  out.window_start = prefix ? 0.0 : config.warmup_time();
  std::vector<Accumulator> acc(Q);

  const std::size_t points = prefix ? 0 : config.trajectory_points;
  const double grid = points > 0 ? horizon / static_cast<double>(points) : kInf;
  if (points > 0) {
    out.trajectory.occupancy.resize(static_cast<Eigen::Index>(points) + 1, Q);
    out.trajectory.residual_work.resize(static_cast<Eigen::Index>(points) + 1, Q);
  }
  std::size_t next_point = 0;

  double t = 0.0;
  double next_arrival = lambda > 0.0 ? rng.exponential(lambda) : kInf;
  std::size_t arrived = 0;
  std::size_t total = 0;
  std::vector<Completion> done;
  for (;;) {
    const double te = server->next_event();
    const double ta = prefix && arrived >= config.max_arrivals ? kInf : next_arrival;
    double tn = std::min(te, ta);
    bool stop = false;
    if (tn >= horizon) {
      tn = horizon;
      stop = true;
    }
    if (tn == kInf) {
      tn = t;
      stop = true;
    }
    if (tn < t) throw SolverError("simulation clock moved backwards");

    while (next_point <= points && points > 0 &&
           static_cast<double>(next_point) * grid <= tn) {
      const double g = static_cast<double>(next_point) * grid;
      const auto row = static_cast<Eigen::Index>(next_point);
      out.trajectory.time.push_back(g);
      for (int q = 0; q < Q; ++q) {
        out.trajectory.occupancy(row, q) = static_cast<double>(server->occupancy(q));
        out.trajectory.residual_work(row, q) =
            std::max(0.0, server->residual(q) - server->drain_rate(q) * (g - t));
      }
      ++next_point;
    }

    const double lo = std::max(t, out.window_start);
    const double hi = std::min(tn, horizon);
    if (hi > lo) {
      for (int q = 0; q < Q; ++q) {
        const auto n = static_cast<double>(server->occupancy(q));
        acc[q].area += n * (hi - lo);
        acc[q].area2 += n * n * (hi - lo);
        acc[q].busy += server->drain_rate(q) * (hi - lo);
      }
    }
    out.resource_time += server->resource_rate() * (tn - t);
    server->advance(t, tn);
    t = tn;
    if (stop) break;

    ++out.events;
    if (te <= ta) {
      done.clear();
      server->fire(t, done);
      for (const Completion& c : done) {
        total -= c.files;
        if (t < out.window_start) continue;
        QueueStats& s = acc[c.queue].stats;
        s.departures += c.files;
        acc[c.queue].sojourn += c.sojourn_sum;
        s.served_bits += c.bits;
        s.served_work += c.work;
      }
    } else {
      const LocatedRates a = sample_arrival(scenario, rng);
      const double bits = sizes(rng);
      const bool pico = a.region > 0 && a.rate_ratio > config.thresholds[a.region - 1];
      const int q = pico ? a.region : 0;
      const double rate = pico ? a.pico_rate : a.macro_rate;
      const double s = share(q);
      server->arrive(q, t, s > 0.0 ? bits / (s * rate) : kInf, bits);
      ++total;
      ++arrived;
      if (t >= out.window_start) acc[q].stats.arrivals += 1;
      if (prefix) out.arrivals.push_back({a.region, a.pico_rate, a.macro_rate, bits});
      next_arrival = t + rng.exponential(lambda);
    }
    if (t >= out.window_start)
      out.max_total_occupancy = std::max(out.max_total_occupancy, static_cast<double>(total));
  }

  out.window_end = prefix ? t : horizon;
  const double width = out.window_end - out.window_start;
  out.queues.resize(Q);
  for (int q = 0; q < Q; ++q) {
    QueueStats s = acc[q].stats;
    if (width > 0.0) {
      s.mean_occupancy = acc[q].area / width;
      s.occupancy_variance = std::max(0.0, acc[q].area2 / width - s.mean_occupancy * s.mean_occupancy);
      s.utilization = std::clamp(acc[q].busy / width, 0.0, 1.0);
    }
    s.busy_time = acc[q].busy;
    s.mean_sojourn = s.departures > 0 ? acc[q].sojourn / static_cast<double>(s.departures) : 0.0;
    out.queues[q] = s;
  }

  if (points > 0) {
    std::vector<double> tw, total_n;
    std::vector<std::vector<double>> per(Q);
    for (std::size_t i = 0; i < out.trajectory.time.size(); ++i) {
      if (out.trajectory.time[i] < out.window_start) continue;
      tw.push_back(out.trajectory.time[i]);
      const auto row = out.trajectory.occupancy.row(static_cast<Eigen::Index>(i));
      total_n.push_back(row.sum());
      for (int q = 0; q < Q; ++q) per[q].push_back(row(q));
    }
    std::tie(out.slope, out.slope_se) = fit_slope(tw, total_n);
    for (int q = 0; q < Q; ++q) out.queues[q].slope = fit_slope(tw, per[q]).first;
  }
  return out;
}

Estimate estimate(const std::vector<double>& values) {
  Estimate e;
  if (values.empty()) return e;
  const auto n = static_cast<double>(values.size());
  for (double v : values) e.mean += v;
  e.mean /= n;
  if (values.size() < 2) return e;
  double ss = 0.0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  const boost::math::students_t dist(n - 1.0);
  e.half_width = boost::math::quantile(dist, 0.975) * std::sqrt(ss / (n - 1.0) / n);
  return e;
}

SimReport run(const Scenario& scenario, const SimConfig& config) {
  config.validate(scenario.num_picos());
  const auto R = static_cast<std::size_t>(config.replications);
  SimReport report;
  report.replications.resize(R);

  unsigned workers = config.threads > 0 ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(R));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(R);
  const auto work = [&] {
    for (std::size_t i = next++; i < R; i = next++) {
      try {
        report.replications[i] = run_replication(scenario, config, static_cast<int>(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  const int Q = scenario.num_picos() + 1;
  report.queues.resize(Q);
  std::vector<double> totals, slopes, sojourns;
  for (const ReplicationResult& r : report.replications) {
    double n = 0.0, soj = 0.0;
    std::size_t deps = 0;
    for (const QueueStats& s : r.queues) {
      n += s.mean_occupancy;
      soj += s.mean_sojourn * static_cast<double>(s.departures);
      deps += s.departures;
    }
    totals.push_back(n);
    slopes.push_back(r.slope);
    sojourns.push_back(deps > 0 ? soj / static_cast<double>(deps) : 0.0);
    report.max_total_occupancy = std::max(report.max_total_occupancy, r.max_total_occupancy);
  }
  for (int q = 0; q < Q; ++q) {
    std::vector<double> occ, soj, util;
    double arrivals = 0.0, width = 0.0, soj_sum = 0.0, deps = 0.0;
    for (const ReplicationResult& r : report.replications) {
      const QueueStats& s = r.queues[q];
      occ.push_back(s.mean_occupancy);
      soj.push_back(s.mean_sojourn);
      util.push_back(s.utilization);
      arrivals += static_cast<double>(s.arrivals);
      width += r.window_end - r.window_start;
      soj_sum += s.mean_sojourn * static_cast<double>(s.departures);
      deps += static_cast<double>(s.departures);
    }
    QueueSummary& qs = report.queues[q];
    qs.occupancy = estimate(occ);
    qs.sojourn = estimate(soj);
    qs.utilization = estimate(util);
    qs.arrival_rate = width > 0.0 ? arrivals / width : 0.0;
    const double t_bar = deps > 0.0 ? soj_sum / deps : 0.0;
    qs.little_residual = qs.occupancy.mean > 0.0
                             ? std::abs(qs.occupancy.mean - qs.arrival_rate * t_bar) /
                                   qs.occupancy.mean
                             : 0.0;
  }
  report.total_occupancy = estimate(totals);
  report.mean_sojourn = estimate(sojourns);
  if (R == 1) {
    report.slope = {report.replications[0].slope, 1.96 * report.replications[0].slope_se};
  } else {
    report.slope = estimate(slopes);
  }
  report.stable = report.slope.contains(0.0) &&
                  report.max_total_occupancy < 50.0 * std::max(report.total_occupancy.mean, 1.0);
  return report;
}

double theoretical_ps_delay(const ThresholdPolicy& policy, const Scenario& scenario, int queue,
                            DelayVariant variant) {
  const double lambda = scenario.traffic.arrival_rate;
  if (queue < 0 || queue > policy.num_picos()) throw DomainError("queue index out of range");
  if (!(policy.arrival_rate > 0.0)) throw DomainError("policy without arrival rate");
  const double tau = policy.tau_star * lambda / policy.arrival_rate;
  if (tau >= 1.0) return kInf;
  if (variant == DelayVariant::RegionRate) {
    const double eta = scenario.traffic.region_probs.at(static_cast<std::size_t>(queue));
    return 1.0 / (lambda * eta * (1.0 - tau));
  }
  const double nu = queue == 0 ? policy.macro_prob : policy.assigned_prob[queue];
  return tau / (1.0 - tau) / (lambda * nu);
}

double relaxation_time(double rho, double mean_service) {
  const double gap = 1.0 - std::sqrt(rho);
  return mean_service / (gap * gap);
}

std::vector<int> thinned_occupancy(const SimReport& report, int queue, double spacing) {
  std::vector<int> out;
  for (const ReplicationResult& r : report.replications) {
    const std::vector<double>& time = r.trajectory.time;
    if (time.size() < 2) continue;
    const double grid = time[1] - time[0];
    const auto step = static_cast<std::size_t>(std::max(1.0, std::ceil(spacing / grid)));
    std::size_t i = 0;
    while (i < time.size() && time[i] < r.window_start) ++i;
    for (; i < time.size(); i += step)
      out.push_back(static_cast<int>(r.trajectory.occupancy(static_cast<Eigen::Index>(i), queue)));
  }
  return out;
}

GofResult geometric_gof(const std::vector<int>& samples, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("geometric parameter must be in (0, 1)");
  GofResult g;
  g.samples = samples.size();
  const auto n = static_cast<double>(samples.size());
  // Bins 0..K-1 and a tail bin >= K, all expecting at least 5.
  int K = 0;
  while (n * (1.0 - rho) * std::pow(rho, K) >= 5.0 && n * std::pow(rho, K + 1) >= 5.0) ++K;
  if (K < 1) throw DomainError("too few samples for a goodness-of-fit test");
  std::vector<double> observed(static_cast<std::size_t>(K) + 1, 0.0);
  for (int s : samples) observed[static_cast<std::size_t>(std::min(std::max(s, 0), K))] += 1.0;
  for (int k = 0; k <= K; ++k) {
    const double expected = k < K ? n * (1.0 - rho) * std::pow(rho, k) : n * std::pow(rho, K);
    const double d = observed[static_cast<std::size_t>(k)] - expected;
    g.statistic += d * d / expected;
  }
  g.degrees_of_freedom = K;
  const boost::math::chi_squared dist(K);
  g.p_value = boost::math::cdf(boost::math::complement(dist, g.statistic));
  return g;
}

std::vector<SweepRow> stability_sweep(const Scenario& scenario, const SampleCloud& cloud,
                                      const std::vector<double>& lambdas,
                                      const std::vector<double>& f_values,
                                      const SimConfig& base) {
  const ContinuousLp lp(cloud.scaled(1.0 / cloud.arrival_rate()));
  std::vector<ThresholdPolicy> policies;
  if (f_values.empty()) {
    policies.push_back(lp.solve());
  } else {
    for (double f : f_values) policies.push_back(lp.policy_at(std::min(f, lp.fbar_max())));
  }
  std::vector<SweepRow> rows;
  for (const ThresholdPolicy& policy : policies) {
    SimConfig config = base;
    const SimConfig shares = SimConfig::from_policy(policy);
    config.thresholds = shares.thresholds;
    config.pico_share = shares.pico_share;
    for (double lambda : lambdas) {
      Scenario s = scenario;
      s.traffic.arrival_rate = lambda;
      const SimReport report = run(s, config);
      double util = 0.0;
      for (int q = 0; q <= scenario.num_picos(); ++q) {
        std::vector<double> slopes;
        for (const ReplicationResult& r : report.replications) slopes.push_back(r.queues[q].slope);
        const QueueSummary& qs = report.queues[q];
        rows.push_back({lambda, policy.f_star, queue_name(q), qs.utilization.mean,
                        qs.occupancy.mean, qs.sojourn.mean, estimate(slopes).mean});
        util = std::max(util, qs.utilization.mean);
      }
      rows.push_back({lambda, policy.f_star, "total", util, report.total_occupancy.mean,
                      report.mean_sojourn.mean, report.slope.mean});
    }
  }
  return rows;
}

void write_trajectory_csv(const ReplicationResult& result, std::ostream& os) {
  os << "time,queue,N,residual_work\n";
  const Trajectory& tr = result.trajectory;
  for (std::size_t i = 0; i < tr.time.size(); ++i)
    for (Eigen::Index q = 0; q < tr.occupancy.cols(); ++q)
      os << format_double(tr.time[i]) << ',' << queue_name(static_cast<int>(q)) << ','
         << format_double(tr.occupancy(static_cast<Eigen::Index>(i), q)) << ','
         << format_double(tr.residual_work(static_cast<Eigen::Index>(i), q)) << '\n';
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "lambda,f,queue,util,meanN,meanT,slope\n";
  for (const SweepRow& r : rows)
    os << format_double(r.lambda) << ',' << format_double(r.f) << ',' << r.queue << ','
       << format_double(r.utilization) << ',' << format_double(r.mean_occupancy) << ','
       << format_double(r.mean_sojourn) << ',' << format_double(r.slope) << '\n';
}

void write_report_csv(const SimReport& report, std::ostream& os) {
  os << "queue,arrival_rate,meanN,meanN_hw,meanT,meanT_hw,util,util_hw,little_residual\n";
  for (std::size_t q = 0; q < report.queues.size(); ++q) {
    const QueueSummary& s = report.queues[q];
    os << queue_name(static_cast<int>(q)) << ',' << format_double(s.arrival_rate) << ','
       << format_double(s.occupancy.mean) << ',' << format_double(s.occupancy.half_width) << ','
       << format_double(s.sojourn.mean) << ',' << format_double(s.sojourn.half_width) << ','
       << format_double(s.utilization.mean) << ',' << format_double(s.utilization.half_width)
       << ',' << format_double(s.little_residual) << '\n';
  }
}

}  // namespace hetcap
