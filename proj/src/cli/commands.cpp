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


#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetcap/cli.hpp"
#include "hetcap/contlp.hpp"
#include "hetcap/csv.hpp"
#include "hetcap/disclp.hpp"
#include "hetcap/error.hpp"
#include "hetcap/onoff.hpp"
#include "hetcap/quadrature.hpp"
#include "hetcap/rng.hpp"
#include "hetcap/simqueue.hpp"

namespace hetcap {

std::uint64_t RunManifest::hash() const {
  std::string key = "hetcap " + version + '\n' + subcommand + '\n' + extra + '\n' + resolved_config;
  return fnv1a64(key);
}

std::string RunManifest::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

std::string RunManifest::header_line() const {
  return "# hetcap " + version + " " + subcommand + " manifest=" + hash_hex() + '\n';
}

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<double> lambda;
  std::string interference;
  std::string out_dir;
  std::string instance_path;
};

class Output {
 public:
  Output(const Options& opts, const RunManifest& manifest, std::ostream& out)
      : manifest_(manifest), out_(out) {
    if (!opts.out_dir.empty()) dir_ = std::filesystem::path(opts.out_dir);
  }

  bool to_files() const { return dir_.has_value(); }

  void prepare() {
    if (!dir_) return;
    std::error_code ec;
    std::filesystem::create_directories(*dir_, ec);
    if (ec || !std::filesystem::is_directory(*dir_))
      throw IoError("cannot create output directory '" + dir_->string() + "'");
    write_file("manifest.ini", manifest_.header_line() + manifest_.resolved_config);
  }

  /// Without an output directory only the primary table goes to stdout.
  void csv(const std::string& name, bool primary, const std::function<void(std::ostream&)>& body) {
    if (!dir_ && !primary) return;
    std::ostringstream os;
    os << manifest_.header_line();
    body(os);
    if (dir_) {
      write_file(name, os.str());
    } else {
      out_ << os.str();
    }
  }

 private:
  void write_file(const std::string& name, const std::string& content) {
    const std::filesystem::path path = *dir_ / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << content;
    f.close();
    if (!f) throw IoError("write to '" + path.string() + "' failed");
  }

  const RunManifest& manifest_;
  std::ostream& out_;
  std::optional<std::filesystem::path> dir_;
};

struct Context {
  RunConfig config;
  Options opts;
  Output& output;
  std::ostream& info;   // summaries: stdout with --out, stderr otherwise
};

std::string d(double v) { return format_double(v); }

SampleCloud make_cloud(const RunConfig& c) {
  return SampleCloud::build(c.scenario, c.solver.samples, c.solver.seed);
}

std::string joined(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + d(v[i]);
  return s;
}

int cmd_capacity(Context& ctx, std::ostream& out) {
  const SampleCloud cloud = make_cloud(ctx.config);
  const ContinuousLp lp(cloud);
  const ThresholdPolicy p = lp.solve();
  const double cap = lp.arrival_rate() / p.tau_star;
  const double cap_se = cap * p.tau_star_se / p.tau_star;
  const int L = lp.num_picos();

  std::vector<double> fbars, fbar_se, saturated;
  for (int l = 1; l <= L; ++l) {
    fbars.push_back(lp.fbar(l));
    fbar_se.push_back(fbar_standard_error(cloud, l));
    saturated.push_back(p.saturated[static_cast<std::size_t>(l - 1)] ? 1.0 : 0.0);
  }
  out << "lambda_cap " << d(cap) << " (se " << d(cap_se) << ")\n"
      << "f_star " << d(p.f_star) << " at lambda_s " << d(lp.arrival_rate()) << '\n'
      << "tau_star " << d(p.tau_star) << " (se " << d(p.tau_star_se) << ")\n";
  for (int l = 1; l <= L; ++l) {
    const std::size_t i = static_cast<std::size_t>(l - 1);
    out << "pico " << l << " rho_star " << d(p.rho_star[i]) << " saturated "
        << (p.saturated[i] ? "yes" : "no") << " full_offload " << (p.full_offload[i] ? "yes" : "no")
        << " fbar " << d(fbars[i]) << " (se " << d(fbar_se[i]) << ")\n";
  }
  out << "capacity lambda_cap=" << d(cap) << " lambda_cap_se=" << d(cap_se) << " f_star=" << d(p.f_star)
      << " tau_star=" << d(p.tau_star) << " tau_star_se=" << d(p.tau_star_se)
      << " rho_star=" << joined(p.rho_star) << " saturated=";
  for (int l = 1; l <= L; ++l) out << (l > 1 ? ";" : "") << (p.saturated[static_cast<std::size_t>(l - 1)] ? 1 : 0);
  out << '\n';

  ctx.output.csv("capacity.csv", false, [&](std::ostream& os) {
    os << "lambda_s,lambda_cap,lambda_cap_se,f_star,tau_star,tau_star_se,macro_load,region0_load\n"
       << d(lp.arrival_rate()) << ',' << d(cap) << ',' << d(cap_se) << ',' << d(p.f_star) << ','
       << d(p.tau_star) << ',' << d(p.tau_star_se) << ',' << d(p.macro_load) << ',' << d(lp.region0_load())
       << '\n';
  });
  ctx.output.csv("capacity_picos.csv", false, [&](std::ostream& os) {
    os << "pico,rho_star,saturated,full_offload,pico_load,fbar,fbar_se,assigned_prob\n";
    for (int l = 1; l <= L; ++l) {
      const std::size_t i = static_cast<std::size_t>(l - 1);
      os << l << ',' << d(p.rho_star[i]) << ',' << (p.saturated[i] ? 1 : 0) << ','
         << (p.full_offload[i] ? 1 : 0) << ',' << d(p.pico_load[i]) << ',' << d(fbars[i]) << ','
         << d(fbar_se[i]) << ',' << d(p.assigned_prob[static_cast<std::size_t>(l)]) << '\n';
    }
  });
  return kExitOk;
}

int cmd_tau_sweep(Context& ctx) {
  const ContinuousLp lp(make_cloud(ctx.config));
  const std::vector<TauEvaluation> rows = tau_curve(lp, ctx.config.solver.sweep_rows);
  const int L = lp.num_picos();
  ctx.output.csv("tau_sweep.csv", true, [&](std::ostream& os) {
    os << 'f';
    for (int l = 1; l <= L; ++l) os << ",rho" << l;
    os << ",tau,sum_rho\n";
    for (const TauEvaluation& r : rows) {
      os << d(r.f);
      for (double rho : r.edge_rho) os << ',' << d(rho);
      os << ',' << d(r.tau) << ',' << d(r.sum_rho) << '\n';
    }
  });
  const ThresholdPolicy p = lp.solve();
  ctx.info << "tau-sweep rows=" << rows.size() << " f_star=" << d(p.f_star) << " tau_star=" << d(p.tau_star)
           << '\n';
  return kExitOk;
}

int cmd_feasible_f(Context& ctx) {
  const ContinuousLp lp(make_cloud(ctx.config));
  const ThresholdPolicy p = lp.solve();
  const double cap = lp.arrival_rate() / p.tau_star;
  const SolverSettings& s = ctx.config.solver;
  std::vector<double> grid;
  if (ctx.opts.lambda) {
    grid = {*ctx.opts.lambda};
  } else if (!s.lambdas.empty()) {
    grid = s.lambdas;
  } else {
    for (std::size_t k = 1; k <= s.lambda_points; ++k)
      grid.push_back(s.lambda_span * cap * static_cast<double>(k) / static_cast<double>(s.lambda_points));
    grid.insert(std::upper_bound(grid.begin(), grid.end(), cap), cap);
  }
  std::size_t feasible = 0;
  ctx.output.csv("feasible_f.csv", true, [&](std::ostream& os) {
    os << "lambda,feasible,f_lo,f_hi,f_star\n";
    for (double lambda : grid) {
      // Pico time per unit arrival rate, the unit of f_star at lambda_s = 1.
      const std::optional<FInterval> iv = lp.feasible_f_range(lambda);
      const double f_star = p.f_star / lp.arrival_rate();
      if (iv) {
        ++feasible;
        os << d(lambda) << ",1," << d(iv->lo / lambda) << ',' << d(iv->hi / lambda) << ',' << d(f_star) << '\n';
      } else {
        os << d(lambda) << ",0,nan,nan," << d(f_star) << '\n';
      }
    }
  });
  ctx.info << "feasible-f rows=" << grid.size() << " feasible=" << feasible << " lambda_cap=" << d(cap) << '\n';
  return kExitOk;
}

SimConfig base_sim(const RunConfig& c) {
  SimConfig s;
  s.discipline = c.sim.discipline;
  s.slot_length = c.sim.slot_length;
  s.horizon = c.sim.horizon;
  s.warmup = c.sim.warmup;
  s.seed = c.solver.seed;
  s.replications = c.sim.replications;
  s.trajectory_points = c.sim.trajectory_points;
  s.threads = c.sim.threads;
  return s;
}

int cmd_simulate(Context& ctx) {
  const RunConfig& c = ctx.config;
  const SampleCloud cloud = make_cloud(c);
  const ContinuousLp lp(cloud);
  const ThresholdPolicy p = lp.solve();
  const double cap = lp.arrival_rate() / p.tau_star;
  const double f_unit = p.f_star / lp.arrival_rate();

  std::vector<double> lambdas;
  if (ctx.opts.lambda) {
    lambdas = {*ctx.opts.lambda};
  } else {
    for (double load : c.sim.loads) lambdas.push_back(load * cap);
  }
  std::vector<double> fs;
  for (double f : c.sim.f_values) fs.push_back(std::isnan(f) ? f_unit : f);

  const SimConfig base = base_sim(c);
  const std::vector<SweepRow> rows = stability_sweep(c.scenario, cloud, lambdas, fs, base);
  ctx.output.csv("delay.csv", true, [&](std::ostream& os) { write_sweep_csv(rows, os); });

  // Detailed run of the optimal policy.
  const double lambda = ctx.opts.lambda ? *ctx.opts.lambda : c.sim.load * cap;
  Scenario scenario = c.scenario;
  scenario.traffic.arrival_rate = lambda;
  SimConfig config = base;
  const SimConfig shares = SimConfig::from_policy(p);
  config.thresholds = shares.thresholds;
  config.pico_share = shares.pico_share;
  const SimReport report = run(scenario, config);
  ctx.output.csv("sim_report.csv", false, [&](std::ostream& os) { write_report_csv(report, os); });
  ctx.output.csv("trajectory.csv", false,
                 [&](std::ostream& os) { write_trajectory_csv(report.replications.front(), os); });

  const double rho = p.tau_star * lambda / lp.arrival_rate();
  ctx.output.csv("sim_model.csv", false, [&](std::ostream& os) {
    os << "queue,bottleneck,rho,delay_region,delay_assigned,meanT,gof_p,gof_samples\n";
    for (int q = 0; q <= lp.num_picos(); ++q) {
      // Tight time constraint: utilization tau, as for the macro.
      const bool bottleneck = q == 0 || p.pico_load[static_cast<std::size_t>(q - 1)] >= p.f_star * (1.0 - 1e-12);
      double work = 0.0, done = 0.0;
      for (const ReplicationResult& r : report.replications) {
        work += r.queues[static_cast<std::size_t>(q)].served_work;
        done += static_cast<double>(r.queues[static_cast<std::size_t>(q)].departures);
      }
      GofResult gof;
      gof.p_value = std::nan("");
      if (bottleneck && rho < 1.0 && done > 0.0) {
        const double spacing = relaxation_time(rho, work / done);
        const std::vector<int> samples = thinned_occupancy(report, q, spacing);
        try {
          gof = geometric_gof(samples, rho);
        } catch (const DomainError&) {
          gof.samples = samples.size();   // run too short for the test
        }
      }
      os << (q == 0 ? std::string("macro") : "pico" + std::to_string(q)) << ',' << (bottleneck ? 1 : 0) << ','
         << d(bottleneck ? rho : std::nan("")) << ','
         << d(theoretical_ps_delay(p, scenario, q, DelayVariant::RegionRate)) << ','
         << d(theoretical_ps_delay(p, scenario, q, DelayVariant::AssignedRate)) << ','
         << d(report.queues[static_cast<std::size_t>(q)].sojourn.mean) << ',' << d(gof.p_value) << ','
         << gof.samples << '\n';
    }
  });
  ctx.info << "simulate lambda=" << d(lambda) << " load=" << d(lambda / cap) << " slope=" << d(report.slope.mean)
           << " slope_hw=" << d(report.slope.half_width) << " meanN=" << d(report.total_occupancy.mean)
           << " meanT=" << d(report.mean_sojourn.mean) << " stable=" << (report.stable ? 1 : 0)
           << " sweep_rows=" << rows.size() << '\n';
  return kExitOk;
}

int cmd_onoff(Context& ctx) {
  const RunConfig& c = ctx.config;
  const int L = c.scenario.num_picos();
  const ModeSet modes = c.solver.modes.empty() ? ModeSet::all_multi(L) : ModeSet{c.solver.modes};
  modes.validate(L);
  const SampleCloud cloud = make_cloud(c);
  const OnOffCloud oc = build_onoff_cloud(c.scenario, cloud, modes, c.solver.absorb_singletons);
  OnOffOptions opts;
  opts.certificate_tolerance = c.solver.certificate_tolerance;
  const ModePolicy policy = solve_onoff(oc, opts);

  Scenario all_on = c.scenario;
  all_on.radio.interference = InterferenceMode::AllPicosOn;
  const ThresholdPolicy ref = ContinuousLp(SampleCloud::build(all_on, c.solver.samples, c.solver.seed)).solve();
  const double bound = ref.tau_star + 3.0 * ref.tau_star_se;
  const double gap = (policy.tau_bar - policy.dual_tau_bar) / std::max(policy.tau_bar, 1e-300);
  const bool certified = policy.converged && policy.certified(c.solver.certificate_tolerance);

  ctx.output.csv("onoff.csv", true, [&](std::ostream& os) { write_mode_policy_csv(oc, policy, os); });
  ctx.output.csv("onoff_certificates.csv", false, [&](std::ostream& os) {
    os << "quantity,value\n"
       << "tau_bar," << d(policy.tau_bar) << '\n'
       << "dual_tau_bar," << d(policy.dual_tau_bar) << '\n'
       << "relative_gap," << d(gap) << '\n'
       << "f_total," << d(policy.f_total()) << '\n'
       << "max_sum_residual," << d(policy.max_sum_residual) << '\n'
       << "max_inactive_excess," << d(policy.max_inactive_excess) << '\n'
       << "max_tightness_atoms," << d(policy.max_tightness_atoms) << '\n'
       << "tau_star_all_on," << d(ref.tau_star) << '\n'
       << "tau_star_all_on_se," << d(ref.tau_star_se) << '\n'
       << "exact," << (policy.exact ? 1 : 0) << '\n'
       << "zero_multipliers," << (policy.zero_multipliers ? 1 : 0) << '\n'
       << "converged," << (policy.converged ? 1 : 0) << '\n'
       << "certified," << (certified ? 1 : 0) << '\n';
  });
  ctx.info << "onoff modes=" << modes.size() << " tau_bar=" << d(policy.tau_bar)
           << " dual_tau_bar=" << d(policy.dual_tau_bar) << " gap=" << d(gap)
           << " sum_residual=" << d(policy.max_sum_residual) << " inactive_excess=" << d(policy.max_inactive_excess)
           << " tightness_atoms=" << d(policy.max_tightness_atoms) << " tau_star_all_on=" << d(ref.tau_star)
           << " within_bound=" << (policy.tau_bar <= bound ? 1 : 0) << " certified=" << (certified ? 1 : 0) << '\n';
  if (policy.zero_multipliers) ctx.info << "note: a mode has all multipliers zero\n";
  return certified ? kExitOk : kExitCertificate;
}

DiscreteInstance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file '" + path + "'");
  try {
    DiscreteInstance inst = read_instance_csv(in);
    inst.validate();
    return inst;
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what(), e.line(), e.column());
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

int cmd_disclp(Context& ctx, const DiscreteInstance& inst) {
  const DiscreteSolution sol = clear_time(inst);
  ctx.output.csv("disclp.csv", true, [&](std::ostream& os) {
    os << "user,pico_index,pico_bits,macro_bits\n";
    for (std::size_t n = 0; n < inst.users.size(); ++n)
      os << n << ',' << inst.users[n].pico << ',' << d(sol.pico_bits[n]) << ',' << d(sol.macro_bits[n]) << '\n';
  });
  ctx.info << "disclp users=" << inst.users.size() << " clear_time=" << d(sol.objective) << " f=" << d(sol.f)
           << " thresholds=" << joined(sol.thresholds) << '\n';
  return kExitOk;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  Options opts;
  CLI::App app{"Capacity, time-sharing and simulation tools for macro/pico networks", "hetcap"};
  app.set_version_flag("--version", std::string(HETCAP_VERSION));
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--config", opts.config_path, "Scenario configuration file");
  app.add_option("--seed", opts.seed, "Master seed, overrides solver.seed");
  app.add_option("--samples", opts.samples, "Samples per region, overrides solver.samples")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
  app.add_option("--out", opts.out_dir, "Write all outputs into this directory");
  app.add_option("--lambda", opts.lambda, "Arrival rate in files per second")
      ->check(CLI::PositiveNumber);
  app.add_option("--interference", opts.interference, "Pico interference model")
      ->check(CLI::IsMember({"none", "all-on"}));

  CLI::App* capacity = app.add_subcommand("capacity", "Capacity, optimal pico time and thresholds");
  CLI::App* tau_sweep = app.add_subcommand("tau-sweep", "Total time and edge condition against pico time");
  CLI::App* feasible = app.add_subcommand("feasible-f", "Stable pico-time interval against arrival rate");
  CLI::App* simulate = app.add_subcommand("simulate", "Queue simulation and delay curves");
  CLI::App* onoff = app.add_subcommand("onoff", "Pico on-off modes with multiplier certificates");
  CLI::App* disclp = app.add_subcommand("disclp", "Clearing time of a finite set of files");
  disclp->add_option("instance", opts.instance_path, "CSV with columns pico_index,R,S,D")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  RunManifest manifest;
  manifest.config_path = opts.config_path;
  manifest.output_dir = opts.out_dir;
  CLI::App* sub = app.get_subcommands().front();
  manifest.subcommand = sub->get_name();

  try {
    RunConfig config;
    if (!opts.config_path.empty()) config = load_config(opts.config_path);
    if (opts.seed) config.solver.seed = *opts.seed;
    if (opts.samples) config.solver.samples = *opts.samples;
    if (opts.interference == "none") config.scenario.radio.interference = InterferenceMode::NoInterference;
    if (opts.interference == "all-on") config.scenario.radio.interference = InterferenceMode::AllPicosOn;
    const bool lambda_sets_rate = sub == capacity || sub == tau_sweep || sub == onoff;
    if (opts.lambda && lambda_sets_rate) config.scenario.traffic.arrival_rate = *opts.lambda;
    config.validate();

    DiscreteInstance instance;
    if (sub == disclp) {
      instance = read_instance(opts.instance_path);
      manifest.extra = "instance=" + std::to_string(fnv1a64(read_all(opts.instance_path)));
    } else if (opts.lambda && !lambda_sets_rate) {
      manifest.extra = "lambda=" + format_double(*opts.lambda);
    }
    manifest.resolved_config = dump_config(config);

    Output output(opts, manifest, out);
    output.prepare();
    Context ctx{config, opts, output, output.to_files() ? out : err};
    int code = kExitOk;
    if (sub == capacity) code = cmd_capacity(ctx, out);
    else if (sub == tau_sweep) code = cmd_tau_sweep(ctx);
    else if (sub == feasible) code = cmd_feasible_f(ctx);
    else if (sub == simulate) code = cmd_simulate(ctx);
    else if (sub == onoff) code = cmd_onoff(ctx);
    else code = cmd_disclp(ctx, instance);

    manifest.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char clock[32];
    std::snprintf(clock, sizeof clock, "%.3f", manifest.wall_clock);
    err << "manifest=" << manifest.hash_hex() << " subcommand=" << manifest.subcommand
        << " config=" << (manifest.config_path.empty() ? "(built-in)" : manifest.config_path)
        << " out=" << (manifest.output_dir.empty() ? "(stdout)" : manifest.output_dir)
        << " version=" << manifest.version << " wall_clock=" << clock << "s\n";
    return code;
  } catch (const ConfigError& e) {
    err << "config error";
    if (e.line() > 0) err << " at line " << e.line() << ", column " << e.column();
    err << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitCertificate;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace hetcap
