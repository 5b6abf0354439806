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
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetcap/onoff.hpp"
#include "hetcap/scenario.hpp"
#include "hetcap/simqueue.hpp"

namespace hetcap {

/// File system failures: unreadable config or instance, unwritable output.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverSettings {
  std::size_t samples = 200000;    // per region
  std::uint64_t seed = 1;
  std::size_t sweep_rows = 500;
  /// Absolute arrival rates for feasible-f; empty: an even grid up to
  /// lambda_span times capacity.
  std::vector<double> lambdas;
  std::size_t lambda_points = 41;
  double lambda_span = 1.1;
  /// On-off modes as pico masks; empty: every subset with two or more picos.
  std::vector<PicoMask> modes;
  bool absorb_singletons = true;
  double certificate_tolerance = 1e-3;
};

struct SimSettings {
  Discipline discipline = Discipline::ProcessorSharing;
  double slot_length = 1e-3;
  double horizon = 1e4;
  double warmup = -1.0;
  int replications = 4;
  std::size_t trajectory_points = 2000;
  unsigned threads = 0;
  /// Load of the detailed run, as a multiple of capacity.
  double load = 0.9;
  /// Sweep rates as multiples of capacity.
  std::vector<double> loads = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1};
  /// Pico time per unit arrival rate; NaN stands for the optimum.
  std::vector<double> f_values = {0.028, std::numeric_limits<double>::quiet_NaN(), 0.203};
};

struct RunConfig {
  Scenario scenario = reference_scenario();
  SolverSettings solver;
  SimSettings sim;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses the sectioned key = value format. Unknown sections or keys, bad
/// values and duplicates raise ConfigError with the line and column.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

/// Every resolved setting in the input format, so the output parses back
/// to the same configuration.
std::string dump_config(const RunConfig& config);

struct RunManifest {
  std::string config_path;
  std::string subcommand;
  std::string resolved_config;     // dump_config
  std::string extra;               // command line values outside the config
  std::string output_dir;
  std::string version = HETCAP_VERSION;
  double wall_clock = 0.0;         // seconds

  /// Hash of the fields that determine the output. Paths and timing are
  /// left out so identical runs produce identical files.
  std::uint64_t hash() const;
  std::string hash_hex() const;
  /// Comment line placed above every CSV header.
  std::string header_line() const;
};

/// Exit codes of run_cli.
enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitCertificate = 3, kExitIo = 4 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hetcap
