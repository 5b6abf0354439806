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
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "hetcap/cli.hpp"
#include "hetcap/error.hpp"

using namespace hetcap;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hetcap");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string config(const std::string& name) { return std::string(HETCAP_CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hetcap_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

double field(const std::string& text, const std::string& key) {
  const auto at = text.find(" " + key + "=");
  REQUIRE(at != std::string::npos);
  return std::stod(text.substr(at + key.size() + 2));
}

RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

std::string dump(const RunConfig& c) { return dump_config(c); }

void expect_error_at(const std::string& text, int line, int column) {
  try {
    parse(text);
    FAIL("no error for: " << text);
  } catch (const ConfigError& e) {
    CHECK(e.line() == line);
    CHECK(e.column() == column);
  }
}

}  // namespace

TEST_CASE("empty config is the reference setup") {
  CHECK(dump(parse("")) == dump(RunConfig{}));
  CHECK(dump(parse("# nothing\n\n; still nothing\n")) == dump(RunConfig{}));
}

TEST_CASE("config errors carry a location") {
  expect_error_at("[traffic]\narrival_rate = 2\nbogus = 1\n", 3, 1);
  expect_error_at("[nowhere]\n", 1, 2);
  expect_error_at("[traffic]\narrival_rate = 2\narrival_rate = 3\n", 3, 1);
  expect_error_at("[traffic]\narrival_rate = two\n", 2, 16);
  expect_error_at("[radio]\n  interference = sometimes\n", 2, 18);
  expect_error_at("arrival_rate = 2\n", 1, 1);
  expect_error_at("[sim]\ndiscipline = lifo\n", 2, 14);
  expect_error_at("[scenario]\nnum_picos = 2\n", 2, 1);
}

TEST_CASE("config values") {
  const RunConfig c = parse(
      "[traffic]\narrival_rate = 2.5 # comment\nfile_size_law = uniform\n"
      "[solver]\nmodes = 1+2, 1+2+3\nlambdas = 1, 2\n"
      "[sim]\ndiscipline = round-robin\nf_values = 0.05, optimal\nwarmup = auto\nthreads = 0\n"
      "[radio]\ninterference = all-on\n");
  CHECK(c.scenario.traffic.arrival_rate == 2.5);
  CHECK(c.scenario.traffic.file_size_law == FileSizeLaw::Uniform);
  CHECK(c.scenario.radio.interference == InterferenceMode::AllPicosOn);
  CHECK(c.solver.modes == std::vector<PicoMask>{3, 7});
  CHECK(c.solver.lambdas == std::vector<double>{1.0, 2.0});
  CHECK(c.sim.discipline == Discipline::RoundRobin);
  REQUIRE(c.sim.f_values.size() == 2);
  CHECK(c.sim.f_values[0] == 0.05);
  CHECK(std::isnan(c.sim.f_values[1]));
  CHECK(c.sim.warmup < 0.0);
}

TEST_CASE("dump parses back") {
  for (const char* name : {"reference.ini", "all_on.ini", "macro_only.ini", "two_picos.ini",
                           "delay_curves.ini", "onoff.ini"}) {
    const RunConfig c = load_config(config(name));
    CHECK(dump(parse(dump(c))) == dump(c));
  }
  CHECK_THROWS_AS(load_config(config("missing.ini")), IoError);
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({"--frobnicate", "capacity"}).code == kExitConfig);
  CHECK(cli({"--lambda", "-1", "capacity"}).code == kExitConfig);
  CHECK(cli({"--interference", "sometimes", "capacity"}).code == kExitConfig);
  CHECK(cli({"--config", config("missing.ini"), "capacity"}).code == kExitIo);
  CHECK(cli({"disclp", config("missing.csv")}).code == kExitIo);

  const fs::path bad = scratch("bad.ini");
  std::ofstream(bad) << "[traffic]\narrival_rate = fast\n";
  const Run r = cli({"--config", bad.string(), "capacity"});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("line 2, column 16") != std::string::npos);
  fs::remove(bad);

  const fs::path blocker = scratch("blocker");
  std::ofstream(blocker) << "x";
  CHECK(cli({"--samples", "2000", "--out", (blocker / "sub").string(), "capacity"}).code == kExitIo);
  fs::remove(blocker);
}

TEST_CASE("capacity without picos") {
  const Run r = cli({"--config", config("macro_only.ini"), "--samples", "20000", "capacity"});
  REQUIRE(r.code == kExitOk);
  const double cap = field(r.out, "lambda_cap");
  const double se = field(r.out, "lambda_cap_se");
  CHECK(std::abs(cap - 3.56) <= 3.0 * se + 0.01);
  CHECK(field(r.out, "f_star") == 0.0);
}

TEST_CASE("seeds agree within their errors") {
  const Run a = cli({"--samples", "20000", "--seed", "1", "capacity"});
  const Run b = cli({"--samples", "20000", "--seed", "2", "capacity"});
  REQUIRE(a.code == kExitOk);
  REQUIRE(b.code == kExitOk);
  CHECK(a.out != b.out);
  const double sa = field(a.out, "lambda_cap_se"), sb = field(b.out, "lambda_cap_se");
  CHECK(std::abs(field(a.out, "lambda_cap") - field(b.out, "lambda_cap")) <= 3.0 * std::hypot(sa, sb));
}

TEST_CASE("arrival rate scales the times, not the capacity") {
  const Run a = cli({"--samples", "20000", "capacity"});
  const Run b = cli({"--samples", "20000", "--lambda", "2", "capacity"});
  CHECK(field(b.out, "tau_star") == doctest::Approx(2.0 * field(a.out, "tau_star")).epsilon(1e-12));
  CHECK(field(b.out, "lambda_cap") == doctest::Approx(field(a.out, "lambda_cap")).epsilon(1e-12));
}

TEST_CASE("outputs are byte identical across runs") {
  const fs::path short_sim = scratch("short_sim.ini");
  std::ofstream(short_sim) << "[sim]\nhorizon = 300\nreplications = 2\nthreads = 2\n"
                              "loads = 0.5, 1.1\nf_values = optimal, 0.03\n";
  const std::vector<std::vector<std::string>> runs = {
      {"--config", short_sim.string(), "--samples", "3000", "simulate"},
      {"--samples", "5000", "capacity"},
      {"--samples", "5000", "tau-sweep"},
      {"--samples", "5000", "feasible-f"},
      {"--config", config("onoff.ini"), "--samples", "3000", "onoff"},
      {"disclp", config("instance.csv")},
  };
  for (const auto& args : runs) {
    const fs::path x = scratch("x"), y = scratch("y");
    std::vector<std::string> ax = {"--out", x.string()}, ay = {"--out", y.string()};
    ax.insert(ax.end(), args.begin(), args.end());
    ay.insert(ay.end(), args.begin(), args.end());
    const Run rx = cli(ax), ry = cli(ay);
    CHECK(rx.code == ry.code);
    CHECK(rx.out == ry.out);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(x)) {
      ++files;
      CHECK(slurp(entry.path()) == slurp(y / entry.path().filename()));
    }
    CHECK(files >= 2);
    fs::remove_all(x);
    fs::remove_all(y);
  }
  fs::remove(short_sim);
}

TEST_CASE("stdout carries the primary table") {
  const Run r = cli({"disclp", config("instance.csv")});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.rfind("# hetcap ", 0) == 0);
  CHECK(r.out.find("user,pico_index,pico_bits,macro_bits\n") != std::string::npos);
  CHECK(field(r.err, "clear_time") == doctest::Approx(1.56).epsilon(1e-12));
  CHECK(r.err.find("manifest=") != std::string::npos);
}

TEST_CASE("a manifest reruns the same job") {
  const fs::path first = scratch("manifest_a"), second = scratch("manifest_b");
  REQUIRE(cli({"--out", first.string(), "--samples", "2000", "--seed", "9", "capacity"}).code == kExitOk);
  const fs::path saved = scratch("manifest.ini");
  fs::copy_file(first / "manifest.ini", saved);
  REQUIRE(cli({"--out", second.string(), "--config", saved.string(), "capacity"}).code == kExitOk);
  const std::string a = slurp(first / "manifest.ini");
  const std::string b = slurp(second / "manifest.ini");
  CHECK(a.substr(0, a.find('\n')) == b.substr(0, b.find('\n')));
  CHECK(slurp(first / "capacity.csv").substr(a.find('\n')) == slurp(second / "capacity.csv").substr(b.find('\n')));
  fs::remove_all(first);
  fs::remove_all(second);
  fs::remove(saved);
}
