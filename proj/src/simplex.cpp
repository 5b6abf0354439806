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

#include "hetcap/detail/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hetcap/error.hpp"

namespace hetcap::detail {

SimplexResult simplex_min(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c, int max_iterations) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (b.size() != m || c.size() != n) throw DomainError("simplex: shape mismatch");
  if ((b.array() < 0.0).any()) throw DomainError("simplex: needs b >= 0");

  // Columns: n structural, m slack, then the right-hand side.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.topRightCorner(m, 1) = b;
  T.bottomLeftCorner(1, n) = c.transpose();
  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = n + i;

  double scale = 1.0;
  if (A.size() > 0) scale = std::max(scale, A.cwiseAbs().maxCoeff());
  if (c.size() > 0) scale = std::max(scale, c.cwiseAbs().maxCoeff());
  const double eps = 1e-12 * scale;
  SimplexResult res;
  int degenerate_run = 0;
  for (;;) {
    // Dantzig pricing, Bland's rule while pivots stay degenerate.
    Eigen::Index enter = -1;
    if (degenerate_run < 32) {
      double most = -eps;
      for (Eigen::Index j = 0; j < n + m; ++j)
        if (T(m, j) < most) { most = T(m, j); enter = j; }
    } else {
      for (Eigen::Index j = 0; j < n + m; ++j)
        if (T(m, j) < -eps) { enter = j; break; }
    }
    if (enter < 0) { res.optimal = true; break; }
    if (res.iterations >= max_iterations) break;

    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, enter) <= eps) continue;
      const double r = T(i, n + m) / T(i, enter);
      if (leave < 0 || r < best - 1e-15 ||
          (r <= best + 1e-15 && basis[i] < basis[leave])) {
        leave = i;
        best = r;
      }
    }
    if (leave < 0) break;  // unbounded
    degenerate_run = best <= 0.0 ? degenerate_run + 1 : 0;

    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double factor = T(i, enter);
      if (factor != 0.0) T.row(i) -= factor * T.row(leave);
    }
    basis[leave] = enter;
    ++res.iterations;
  }

  res.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < n) res.x(basis[i]) = T(i, n + m);
  // Reduced cost of slack i equals the dual price of row i.
  res.duals = T.bottomRows(1).middleCols(n, m).transpose();
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace hetcap::detail
