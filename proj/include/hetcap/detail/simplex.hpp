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

#include <Eigen/Core>

namespace hetcap::detail {

struct SimplexResult {
  bool optimal = false;      // false: unbounded or iteration cap hit
  Eigen::VectorXd x;
  Eigen::VectorXd duals;     // one per row, >= 0
  double objective = 0.0;
  int iterations = 0;
};

/// min c'x subject to A x <= b, x >= 0, with b >= 0 so the slack basis is
/// feasible. Dense tableau; Dantzig pricing with a fall back to Bland's rule
/// on degenerate runs.
SimplexResult simplex_min(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c, int max_iterations = 100000);

}  // namespace hetcap::detail
