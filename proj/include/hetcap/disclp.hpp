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

#include <iosfwd>
#include <vector>

namespace hetcap {

struct DiscreteUser {
  int pico = 0;          // 0 = macro only
  double pico_rate = 0.0;
  double macro_rate = 0.0;
  double demand = 0.0;   // bits
};

struct DiscreteInstance {
  int num_picos = 0;
  std::vector<DiscreteUser> users;

  /// Throws DomainError on non-positive rates or demands.
  void validate() const;
};

struct DiscreteSolution {
  double f = 0.0;
  std::vector<double> pico_bits;    // x_n
  std::vector<double> macro_bits;   // y_n
  double objective = 0.0;
  std::vector<double> thresholds;   // per pico, 0 when the pico takes everyone
  std::vector<int> fractional_user; // per pico, -1 if none
};

DiscreteSolution clear_time(const DiscreteInstance& instance);

/// Brute force through the LP dual at every subset-sum value of f.
/// Refuses (DomainError) above 12 users or 3 picos.
double oracle_clear_time(const DiscreteInstance& instance);

void write_instance_csv(const DiscreteInstance& instance, std::ostream& os);

/// Throws ConfigError with the offending line.
DiscreteInstance read_instance_csv(std::istream& is);

}  // namespace hetcap
