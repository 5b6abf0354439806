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


#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "hetcap/cli.hpp"
#include "hetcap/csv.hpp"
#include "hetcap/error.hpp"

namespace hetcap {
namespace {

struct Entry {
  std::string value;
  int line = 0;
  int key_column = 0;
  int value_column = 0;
};

[[noreturn]] void fail_at(const Entry& e, const std::string& msg) {
  throw ConfigError(msg, e.line, e.value_column);
}

double to_double(const Entry& e, std::string_view text) {
  try {
    const double v = parse_double(text);
    if (!std::isfinite(v)) fail_at(e, "value must be finite");
    return v;
  } catch (const std::invalid_argument&) {
    fail_at(e, "expected a number, got '" + std::string(text) + "'");
  }
}

double number(const Entry& e) { return to_double(e, e.value); }

double positive(const Entry& e) {
  const double v = number(e);
  if (!(v > 0.0)) fail_at(e, "value must be positive");
  return v;
}

double non_negative(const Entry& e) {
  const double v = number(e);
  if (!(v >= 0.0)) fail_at(e, "value must be non-negative");
  return v;
}

std::uint64_t integer(const Entry& e) {
  const std::string& s = e.value;
  if (s.empty() || s.size() > 19) fail_at(e, "expected a non-negative integer");
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) fail_at(e, "expected a non-negative integer");
  return std::stoull(s);
}

std::uint64_t positive_integer(const Entry& e, std::uint64_t max = 1000000000ULL) {
  const std::uint64_t v = integer(e);
  if (v == 0 || v > max) fail_at(e, "integer out of range [1, " + std::to_string(max) + "]");
  return v;
}

bool boolean(const Entry& e) {
  if (e.value == "true" || e.value == "yes" || e.value == "on" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "off" || e.value == "0") return false;
  fail_at(e, "expected true or false");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> items(const Entry& e) {
  std::vector<std::string> out;
  if (trim(e.value).empty()) return out;
  for (const std::string& item : split_csv_line(e.value)) {
    const std::string_view t = trim(item);
    if (t.empty()) fail_at(e, "empty list item");
    out.emplace_back(t);
  }
  return out;
}

std::vector<double> number_list(const Entry& e) {
  std::vector<double> out;
  for (const std::string& item : items(e)) out.push_back(to_double(e, item));
  return out;
}

InterferenceMode interference_mode(const Entry& e) {
  if (e.value == "none") return InterferenceMode::NoInterference;
  if (e.value == "all-on") return InterferenceMode::AllPicosOn;
  fail_at(e, "expected none or all-on");
}

FileSizeLaw file_size_law(const Entry& e) {
  if (e.value == "deterministic") return FileSizeLaw::Deterministic;
  if (e.value == "truncated-exponential") return FileSizeLaw::TruncatedExponential;
  if (e.value == "uniform") return FileSizeLaw::Uniform;
  fail_at(e, "expected deterministic, truncated-exponential or uniform");
}

Discipline discipline(const Entry& e) {
  if (e.value == "ps") return Discipline::ProcessorSharing;
  if (e.value == "fcfs") return Discipline::SlottedFCFS;
  if (e.value == "round-robin") return Discipline::RoundRobin;
  fail_at(e, "expected ps, fcfs or round-robin");
}

// "1+2, 1+2+3" or "all".
std::vector<PicoMask> mode_list(const Entry& e) {
  if (e.value == "all") return {};
  std::vector<PicoMask> out;
  for (const std::string& item : items(e)) {
    PicoMask mask = 0;
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, '+')) {
      const std::string_view t = trim(part);
      int pico = 0;
      for (char c : t) {
        if (!std::isdigit(static_cast<unsigned char>(c)) || pico > 31)
          fail_at(e, "bad mode '" + item + "', expected picos joined by +");
        pico = pico * 10 + (c - '0');
      }
      if (t.empty() || pico < 1 || pico > 31) fail_at(e, "bad mode '" + item + "'");
      if (mask & pico_bit(pico)) fail_at(e, "pico repeated in mode '" + item + "'");
      mask |= pico_bit(pico);
    }
    out.push_back(mask);
  }
  if (out.empty()) fail_at(e, "mode list is empty");
  return out;
}

std::vector<double> f_list(const Entry& e) {
  std::vector<double> out;
  for (const std::string& item : items(e)) {
    if (item == "optimal") {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      const double v = to_double(e, item);
      if (!(v >= 0.0)) fail_at(e, "f values must be non-negative");
      out.push_back(v);
    }
  }
  if (out.empty()) fail_at(e, "f_values needs at least one entry");
  return out;
}

using Setter = std::function<void(RunConfig&, const Entry&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scenario.macro_radius", [](RunConfig& c, const Entry& e) { c.scenario.macro_radius = positive(e); }},
      {"scenario.macro_exclusion_radius",
       [](RunConfig& c, const Entry& e) { c.scenario.macro_exclusion_radius = non_negative(e); }},

      {"radio.macro_tx_power_dbm", [](RunConfig& c, const Entry& e) { c.scenario.radio.macro_tx_power_dbm = number(e); }},
      {"radio.macro_antenna_gain_dbi",
       [](RunConfig& c, const Entry& e) { c.scenario.radio.macro_antenna_gain_dbi = number(e); }},
      {"radio.macro_pl_intercept_db",
       [](RunConfig& c, const Entry& e) { c.scenario.radio.macro_pl_intercept_db = number(e); }},
      {"radio.macro_pl_slope_db", [](RunConfig& c, const Entry& e) { c.scenario.radio.macro_pl_slope_db = positive(e); }},
      {"radio.pico_tx_power_dbm", [](RunConfig& c, const Entry& e) { c.scenario.radio.pico_tx_power_dbm = number(e); }},
      {"radio.pico_antenna_gain_dbi",
       [](RunConfig& c, const Entry& e) { c.scenario.radio.pico_antenna_gain_dbi = number(e); }},
      {"radio.pico_pl_intercept_db",
       [](RunConfig& c, const Entry& e) { c.scenario.radio.pico_pl_intercept_db = number(e); }},
      {"radio.pico_pl_slope_db", [](RunConfig& c, const Entry& e) { c.scenario.radio.pico_pl_slope_db = positive(e); }},
      {"radio.noise_power_dbm", [](RunConfig& c, const Entry& e) { c.scenario.radio.noise_power_dbm = number(e); }},
      {"radio.bandwidth_hz", [](RunConfig& c, const Entry& e) { c.scenario.radio.bandwidth_hz = positive(e); }},
      {"radio.interference",
       [](RunConfig& c, const Entry& e) { c.scenario.radio.interference = interference_mode(e); }},

      {"traffic.arrival_rate", [](RunConfig& c, const Entry& e) { c.scenario.traffic.arrival_rate = positive(e); }},
      {"traffic.region_probs",
       [](RunConfig& c, const Entry& e) {
         c.scenario.traffic.region_probs = number_list(e);
         for (double p : c.scenario.traffic.region_probs)
           if (!(p >= 0.0)) fail_at(e, "region probabilities must be non-negative");
       }},
      {"traffic.mean_file_size", [](RunConfig& c, const Entry& e) { c.scenario.traffic.mean_file_size = positive(e); }},
      {"traffic.max_file_size", [](RunConfig& c, const Entry& e) { c.scenario.traffic.max_file_size = positive(e); }},
      {"traffic.file_size_law",
       [](RunConfig& c, const Entry& e) { c.scenario.traffic.file_size_law = file_size_law(e); }},

      {"solver.samples", [](RunConfig& c, const Entry& e) { c.solver.samples = positive_integer(e, 100000000); }},
      {"solver.seed", [](RunConfig& c, const Entry& e) { c.solver.seed = integer(e); }},
      {"solver.sweep_rows", [](RunConfig& c, const Entry& e) { c.solver.sweep_rows = positive_integer(e); }},
      {"solver.lambdas",
       [](RunConfig& c, const Entry& e) {
         if (e.value == "auto") {
           c.solver.lambdas.clear();
           return;
         }
         c.solver.lambdas = number_list(e);
         if (c.solver.lambdas.empty()) fail_at(e, "lambdas needs at least one entry or auto");
         for (double l : c.solver.lambdas)
           if (!(l > 0.0)) fail_at(e, "arrival rates must be positive");
       }},
      {"solver.lambda_points",
       [](RunConfig& c, const Entry& e) { c.solver.lambda_points = positive_integer(e, 100000); }},
      {"solver.lambda_span", [](RunConfig& c, const Entry& e) { c.solver.lambda_span = positive(e); }},
      {"solver.modes", [](RunConfig& c, const Entry& e) { c.solver.modes = mode_list(e); }},
      {"solver.absorb_singletons", [](RunConfig& c, const Entry& e) { c.solver.absorb_singletons = boolean(e); }},
      {"solver.certificate_tolerance",
       [](RunConfig& c, const Entry& e) { c.solver.certificate_tolerance = positive(e); }},

      {"sim.discipline", [](RunConfig& c, const Entry& e) { c.sim.discipline = discipline(e); }},
      {"sim.slot_length", [](RunConfig& c, const Entry& e) { c.sim.slot_length = positive(e); }},
      {"sim.horizon", [](RunConfig& c, const Entry& e) { c.sim.horizon = positive(e); }},
      {"sim.warmup",
       [](RunConfig& c, const Entry& e) { c.sim.warmup = e.value == "auto" ? -1.0 : non_negative(e); }},
      {"sim.replications",
       [](RunConfig& c, const Entry& e) { c.sim.replications = static_cast<int>(positive_integer(e, 10000)); }},
      {"sim.trajectory_points",
       [](RunConfig& c, const Entry& e) { c.sim.trajectory_points = positive_integer(e, 10000000); }},
      {"sim.threads",
       [](RunConfig& c, const Entry& e) {
         const std::uint64_t n = integer(e);
         if (n > 1024) fail_at(e, "at most 1024 threads");
         c.sim.threads = static_cast<unsigned>(n);
       }},
      {"sim.load", [](RunConfig& c, const Entry& e) { c.sim.load = positive(e); }},
      {"sim.loads",
       [](RunConfig& c, const Entry& e) {
         c.sim.loads = number_list(e);
         if (c.sim.loads.empty()) fail_at(e, "loads needs at least one entry");
         for (double l : c.sim.loads)
           if (!(l > 0.0)) fail_at(e, "loads must be positive");
       }},
      {"sim.f_values", [](RunConfig& c, const Entry& e) { c.sim.f_values = f_list(e); }},
  };
  return table;
}

const char* const kSections[] = {"scenario", "radio", "traffic", "solver", "sim"};

// picoN.x, picoN.y, picoN.radius, picoN.exclusion_radius
bool pico_key(const std::string& key, int& pico, std::string& field) {
  if (key.rfind("pico", 0) != 0) return false;
  const std::size_t dot = key.find('.');
  if (dot == std::string::npos || dot == 4) return false;
  pico = 0;
  for (std::size_t i = 4; i < dot; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(key[i])) || pico > 31) return false;
    pico = pico * 10 + (key[i] - '0');
  }
  field = key.substr(dot + 1);
  return pico >= 1 && (field == "x" || field == "y" || field == "radius" || field == "exclusion_radius");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::isnan(v[i]) ? std::string("optimal") : format_double(v[i]);
  }
  return s;
}

}  // namespace

void RunConfig::validate() const {
  scenario.validate();
  if (!(scenario.traffic.arrival_rate > 0.0)) throw ConfigError("traffic.arrival_rate must be positive");
  if (!solver.modes.empty()) ModeSet{solver.modes}.validate(scenario.num_picos());
  SimConfig sim_check;
  sim_check.discipline = sim.discipline;
  sim_check.thresholds.assign(static_cast<std::size_t>(scenario.num_picos()), 0.0);
  sim_check.slot_length = sim.slot_length;
  sim_check.horizon = sim.horizon;
  sim_check.warmup = sim.warmup;
  sim_check.replications = sim.replications;
  sim_check.trajectory_points = sim.trajectory_points;
  sim_check.validate(scenario.num_picos());
}

RunConfig parse_config(std::istream& is) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view line = raw;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    const int column = static_cast<int>(first) + 1;
    const std::string_view body = trim(line);
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("unterminated section header", line_no, column);
      const std::string name(trim(body.substr(1, body.size() - 2)));
      bool known = false;
      for (const char* s : kSections) known = known || name == s;
      if (!known) throw ConfigError("unknown section [" + name + "]", line_no, column + 1);
      section = name;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", line_no, column);
    if (section.empty()) throw ConfigError("key outside of any section", line_no, column);
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("missing key", line_no, column);
    const std::string_view rest = line.substr(eq + 1);
    const std::size_t vstart = rest.find_first_not_of(" \t");
    Entry e;
    e.value = std::string(trim(rest));
    e.line = line_no;
    e.key_column = column;
    e.value_column = static_cast<int>(eq + 2 + (vstart == std::string_view::npos ? 0 : vstart));
    const std::string full = section + "." + key;
    int pico = 0;
    std::string field;
    const bool is_pico = section == "scenario" && (pico_key(key, pico, field) || key == "num_picos");
    if (!is_pico && setters().count(full) == 0)
      throw ConfigError("unknown key '" + key + "' in [" + section + "]", line_no, column);
    if (!entries.emplace(full, e).second)
      throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line_no, column);
  }

  RunConfig config;
  std::vector<PicoCell>& picos = config.scenario.picos;
  auto nit = entries.find("scenario.num_picos");
  if (nit != entries.end()) {
    const std::uint64_t n = integer(nit->second);
    if (n > 16) fail_at(nit->second, "at most 16 picos are supported");
    picos.resize(static_cast<std::size_t>(n), PicoCell{Point(std::nan(""), std::nan("")), 150.0, 10.0});
  }
  for (const auto& [full, e] : entries) {
    int pico = 0;
    std::string field;
    if (full.rfind("scenario.", 0) == 0 && pico_key(full.substr(9), pico, field)) {
      if (pico > config.scenario.num_picos())
        throw ConfigError("pico " + std::to_string(pico) + " exceeds num_picos", e.line, e.key_column);
      PicoCell& cell = picos[static_cast<std::size_t>(pico - 1)];
      if (field == "x") cell.center.x() = number(e);
      else if (field == "y") cell.center.y() = number(e);
      else if (field == "radius") cell.radius = positive(e);
      else cell.exclusion_radius = non_negative(e);
    } else if (full != "scenario.num_picos") {
      setters().at(full)(config, e);
    }
  }
  for (int l = 1; l <= config.scenario.num_picos(); ++l) {
    if (std::isnan(picos[static_cast<std::size_t>(l - 1)].center.x()) ||
        std::isnan(picos[static_cast<std::size_t>(l - 1)].center.y()))
      throw ConfigError("pico" + std::to_string(l) + ".x and pico" + std::to_string(l) + ".y are required",
                        nit->second.line, nit->second.key_column);
  }
  // A changed pico count invalidates the built-in region split.
  if (nit != entries.end() && entries.count("traffic.region_probs") == 0 &&
      config.scenario.traffic.region_probs.size() != picos.size() + 1)
    throw ConfigError("traffic.region_probs must be given when num_picos changes", nit->second.line,
                      nit->second.key_column);
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what(), e.line(), e.column());
  }
}

std::string dump_config(const RunConfig& c) {
  std::ostringstream os;
  const Scenario& s = c.scenario;
  const RadioParams& r = s.radio;
  const TrafficModel& t = s.traffic;
  auto d = [](double v) { return format_double(v); };
  os << "[scenario]\n"
     << "macro_radius = " << d(s.macro_radius) << '\n'
     << "macro_exclusion_radius = " << d(s.macro_exclusion_radius) << '\n'
     << "num_picos = " << s.num_picos() << '\n';
  for (int l = 1; l <= s.num_picos(); ++l) {
    const PicoCell& p = s.picos[static_cast<std::size_t>(l - 1)];
    const std::string k = "pico" + std::to_string(l) + ".";
    os << k << "x = " << d(p.center.x()) << '\n'
       << k << "y = " << d(p.center.y()) << '\n'
       << k << "radius = " << d(p.radius) << '\n'
       << k << "exclusion_radius = " << d(p.exclusion_radius) << '\n';
  }
  os << "\n[radio]\n"
     << "macro_tx_power_dbm = " << d(r.macro_tx_power_dbm) << '\n'
     << "macro_antenna_gain_dbi = " << d(r.macro_antenna_gain_dbi) << '\n'
     << "macro_pl_intercept_db = " << d(r.macro_pl_intercept_db) << '\n'
     << "macro_pl_slope_db = " << d(r.macro_pl_slope_db) << '\n'
     << "pico_tx_power_dbm = " << d(r.pico_tx_power_dbm) << '\n'
     << "pico_antenna_gain_dbi = " << d(r.pico_antenna_gain_dbi) << '\n'
     << "pico_pl_intercept_db = " << d(r.pico_pl_intercept_db) << '\n'
     << "pico_pl_slope_db = " << d(r.pico_pl_slope_db) << '\n'
     << "noise_power_dbm = " << d(r.noise_power_dbm) << '\n'
     << "bandwidth_hz = " << d(r.bandwidth_hz) << '\n'
     << "interference = " << (r.interference == InterferenceMode::AllPicosOn ? "all-on" : "none") << '\n';
  const char* law = t.file_size_law == FileSizeLaw::Deterministic ? "deterministic"
                    : t.file_size_law == FileSizeLaw::Uniform     ? "uniform"
                                                                  : "truncated-exponential";
  os << "\n[traffic]\n"
     << "arrival_rate = " << d(t.arrival_rate) << '\n'
     << "region_probs = " << join(t.region_probs) << '\n'
     << "mean_file_size = " << d(t.mean_file_size) << '\n'
     << "max_file_size = " << d(t.max_file_size) << '\n'
     << "file_size_law = " << law << '\n';
  os << "\n[solver]\n"
     << "samples = " << c.solver.samples << '\n'
     << "seed = " << c.solver.seed << '\n'
     << "sweep_rows = " << c.solver.sweep_rows << '\n'
     << "lambdas = " << (c.solver.lambdas.empty() ? std::string("auto") : join(c.solver.lambdas)) << '\n'
     << "lambda_points = " << c.solver.lambda_points << '\n'
     << "lambda_span = " << d(c.solver.lambda_span) << '\n'
     << "modes = ";
  if (c.solver.modes.empty()) os << "all";
  for (std::size_t i = 0; i < c.solver.modes.size(); ++i) {
    if (i) os << ", ";
    bool first = true;
    for (int l = 1; l <= 31; ++l) {
      if (!(c.solver.modes[i] & pico_bit(l))) continue;
      os << (first ? "" : "+") << l;
      first = false;
    }
  }
  os << '\n'
     << "absorb_singletons = " << (c.solver.absorb_singletons ? "true" : "false") << '\n'
     << "certificate_tolerance = " << d(c.solver.certificate_tolerance) << '\n';
  const char* disc = c.sim.discipline == Discipline::ProcessorSharing ? "ps"
                     : c.sim.discipline == Discipline::SlottedFCFS    ? "fcfs"
                                                                      : "round-robin";
  os << "\n[sim]\n"
     << "discipline = " << disc << '\n'
     << "slot_length = " << d(c.sim.slot_length) << '\n'
     << "horizon = " << d(c.sim.horizon) << '\n'
     << "warmup = " << (c.sim.warmup < 0.0 ? std::string("auto") : d(c.sim.warmup)) << '\n'
     << "replications = " << c.sim.replications << '\n'
     << "trajectory_points = " << c.sim.trajectory_points << '\n'
     << "threads = " << c.sim.threads << '\n'
     << "load = " << d(c.sim.load) << '\n'
     << "loads = " << join(c.sim.loads) << '\n'
     << "f_values = " << join(c.sim.f_values) << '\n';
  return os.str();
}

}  // namespace hetcap
