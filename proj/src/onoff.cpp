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

#include "hetcap/onoff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include <Eigen/Cholesky>

#include "hetcap/csv.hpp"
#include "hetcap/detail/simplex.hpp"
#include "hetcap/error.hpp"

namespace hetcap {

ModeSet ModeSet::all_multi(int num_picos) {
  ModeSet s;
  for (PicoMask m = 1; m < (PicoMask{1} << num_picos); ++m)
    if (std::popcount(m) >= 2) s.modes.push_back(m);
  return s;
}

void ModeSet::validate(int num_picos) const {
  if (modes.empty()) throw ConfigError("on-off needs at least one mode");
  std::set<PicoMask> seen;
  const PicoMask all = (PicoMask{1} << num_picos) - 1;
  for (PicoMask m : modes) {
    if (std::popcount(m) < 2) throw ConfigError("mode with fewer than two picos");
    if (m & ~all) throw ConfigError("mode names a pico that does not exist");
    if (!seen.insert(m).second) throw ConfigError("duplicate mode");
  }
}

OnOffCloud build_onoff_cloud(const Scenario& scenario, const SampleCloud& cloud,
                             const ModeSet& modes, bool absorb_singletons) {
  modes.validate(scenario.num_picos());
  if (cloud.num_picos() != scenario.num_picos())
    throw DomainError("cloud and scenario disagree on pico count");
  const double d = cloud.mean_file_size();
  OnOffCloud out;
  out.modes = modes;
  out.arrival_rate = cloud.arrival_rate();
  const CloudRegion& r0 = cloud.region(0);
  out.region0_load = (r0.weight * d / r0.macro_rate).sum();
  for (int l = 1; l <= scenario.num_picos(); ++l) {
    const CloudRegion& reg = cloud.region(l);
    OnOffRegion region;
    for (std::size_t k = 0; k < modes.size(); ++k)
      if (modes.contains(k, l)) region.modes.push_back(k);
    const Eigen::Index m = reg.size();
    const auto K = static_cast<Eigen::Index>(region.modes.size());
    region.weight = reg.weight.matrix();
    region.macro_time.resize(m);
    region.pico_time.resize(m, K);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Point p = reg.position(i);
      double s = reg.macro_rate(i);
      if (absorb_singletons) s = std::max(s, link_rate_pico(scenario, l, p, PicoMask{0}));
      region.macro_time(i) = reg.weight(i) * d / s;
      for (Eigen::Index k = 0; k < K; ++k) {
        const PicoMask others = modes.modes[region.modes[k]] & ~pico_bit(l);
        region.pico_time(i, k) = reg.weight(i) * d / link_rate_pico(scenario, l, p, others);
      }
    }
    out.picos.push_back(std::move(region));
  }
  return out;
}

double pico_dual_objective(const OnOffRegion& region, const Eigen::VectorXd& f_sigma,
                           const Eigen::VectorXd& mu) {
  double phi = mu.dot(f_sigma);
  for (Eigen::Index i = 0; i < region.macro_time.size(); ++i) {
    double best = 0.0;
    for (Eigen::Index k = 0; k < mu.size(); ++k)
      best = std::max(best, region.macro_time(i) - mu(k) * region.pico_time(i, k));
    phi += best;
  }
  return phi;
}

namespace {

// Smallest mu >= 0 with sum_{t_i > mu} g_i <= budget.
double weighted_threshold(std::vector<double>& t, std::vector<double>& g,
                          std::vector<std::size_t>& idx, double budget) {
  idx.clear();
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > 0.0) {
      idx.push_back(i);
      total += g[i];
    }
  if (total <= budget) return 0.0;
  std::size_t lo = 0, hi = idx.size();
  double acc = 0.0;
  const auto desc = [&](std::size_t a, std::size_t b) { return t[a] > t[b]; };
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi, desc);
    double s = acc;
    for (std::size_t j = lo; j < mid; ++j) s += g[idx[j]];
    if (s > budget) {
      hi = mid;
    } else {
      acc = s;
      lo = mid;
    }
  }
  return t[idx[lo]];
}

struct PolishResult {
  double macro_time = 0.0;
  Eigen::VectorXd used;
  Eigen::VectorXd duals;
  bool ok = false;
};

// Exact LP over `atoms` with capacities `cap`, each atom restricted to the
// local modes in its candidate list.
PolishResult polish(const OnOffRegion& region, const std::vector<Eigen::Index>& atoms,
                    const std::vector<std::vector<Eigen::Index>>& candidates,
                    const Eigen::VectorXd& cap) {
  const auto K = cap.size();
  const auto n_atoms = static_cast<Eigen::Index>(atoms.size());
  Eigen::Index cols = 0;
  for (const auto& c : candidates) cols += static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_atoms + K, cols);
  Eigen::VectorXd b(n_atoms + K);
  Eigen::VectorXd c(cols);
  Eigen::Index col = 0;
  for (Eigen::Index a = 0; a < n_atoms; ++a) {
    const Eigen::Index i = atoms[a];
    b(a) = 1.0;
    for (Eigen::Index k : candidates[a]) {
      A(a, col) = 1.0;
      A(n_atoms + k, col) = region.pico_time(i, k);
      c(col) = -region.macro_time(i);
      ++col;
    }
  }
  b.tail(K) = cap.cwiseMax(0.0);
  const detail::SimplexResult lp = detail::simplex_min(A, b, c);
  PolishResult out;
  out.ok = lp.optimal;
  out.used = Eigen::VectorXd::Zero(K);
  out.duals = lp.duals.tail(K);
  col = 0;
  for (Eigen::Index a = 0; a < n_atoms; ++a) {
    const Eigen::Index i = atoms[a];
    double share = 0.0;
    for (Eigen::Index k : candidates[a]) {
      share += lp.x(col);
      out.used(k) += lp.x(col) * region.pico_time(i, k);
      ++col;
    }
    out.macro_time += region.macro_time(i) * std::max(0.0, 1.0 - share);
  }
  return out;
}


struct SmoothResult {
  double eps = 0.0;
  double phi = 0.0;          // smoothed dual value at the final width
  Eigen::MatrixXd curvature; // inverse Hessian on free coordinates, active x active
};

double final_smoothing(const DualOptions& opts, Eigen::Index atoms) {
  if (opts.smoothing_final > 0.0) return opts.smoothing_final;
  return std::clamp(0.2 / static_cast<double>(atoms), 1e-7, 1e-4);
}

// Damped Newton on the dual with each atom's max replaced by a log-sum-exp
// of width eps * b_i, for decreasing eps. Modes without time are left out.
SmoothResult smooth_multipliers(const OnOffRegion& region, const Eigen::VectorXd& f,
                                const std::vector<Eigen::Index>& active, bool warm,
                                Eigen::VectorXd& mu, const DualOptions& opts) {
  const Eigen::Index m = region.macro_time.size();
  const auto A = static_cast<Eigen::Index>(active.size());
  const double eps_final = final_smoothing(opts, m);
  SmoothResult res;
  res.eps = eps_final;
  res.curvature = Eigen::MatrixXd::Zero(A, A);
  if (A == 0) return res;
  Eigen::VectorXd x(A), fa(A);
  for (Eigen::Index a = 0; a < A; ++a) {
    x(a) = std::max(0.0, mu(active[a]));
    fa(a) = f(active[a]);
  }
  Eigen::MatrixXd G(m, A);
  for (Eigen::Index a = 0; a < A; ++a) G.col(a) = region.pico_time.col(active[a]);
  const Eigen::VectorXd& b = region.macro_time;
  // Above cap(a) no atom prefers mode a, so the minimum lies below it.
  Eigen::VectorXd cap(A);
  for (Eigen::Index a = 0; a < A; ++a) {
    cap(a) = (b.array() / G.col(a).array()).maxCoeff();
    x(a) = std::min(x(a), cap(a));
  }

  Eigen::VectorXd p(A + 1);
  const auto value = [&](const Eigen::VectorXd& y, double eps, Eigen::VectorXd* grad,
                         Eigen::MatrixXd* hess) {
    double phi = y.dot(fa);
    if (grad) *grad = fa;
    if (hess) hess->setZero(A, A);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = eps * b(i);
      double top = 0.0;
      for (Eigen::Index a = 0; a < A; ++a) top = std::max(top, b(i) - y(a) * G(i, a));
      double z = std::exp(-top / s);
      for (Eigen::Index a = 0; a < A; ++a) {
        p(a) = std::exp((b(i) - y(a) * G(i, a) - top) / s);
        z += p(a);
      }
      phi += top + s * std::log(z);
      if (!grad) continue;
      p.head(A) /= z;
      for (Eigen::Index a = 0; a < A; ++a) {
        (*grad)(a) -= G(i, a) * p(a);
        if (!hess) continue;
        for (Eigen::Index c = 0; c < A; ++c)
          (*hess)(a, c) += G(i, a) * G(i, c) / s * ((a == c ? p(a) : 0.0) - p(a) * p(c));
      }
    }
    return phi;
  };

  const double fscale = std::max(fa.maxCoeff(), 1e-300);
  double eps = warm ? std::min(eps_final * 100.0, opts.smoothing_start) : opts.smoothing_start;
  eps = std::max(eps, eps_final);
  for (;; eps = std::max(eps * 0.1, eps_final)) {
    for (int it = 0; it < opts.newton_iterations; ++it) {
      Eigen::VectorXd grad;
      Eigen::MatrixXd hess;
      const double phi = value(x, eps, &grad, &hess);
      // Coordinates held at zero by a positive gradient stay there.
      std::vector<Eigen::Index> free;
      for (Eigen::Index a = 0; a < A; ++a)
        if (x(a) > 0.0 || grad(a) < 0.0) free.push_back(a);
      if (free.empty()) break;
      const auto F = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd H(F, F);
      Eigen::VectorXd g(F);
      for (Eigen::Index r = 0; r < F; ++r) {
        g(r) = grad(free[r]);
        for (Eigen::Index c = 0; c < F; ++c) H(r, c) = hess(free[r], free[c]);
      }
      if (g.cwiseAbs().maxCoeff() <= 1e-12 * fscale) break;
      const double damping = 1e-9 * std::max(H.diagonal().maxCoeff(), 1e-300);
      H.diagonal().array() += damping;
      Eigen::VectorXd step = -H.ldlt().solve(g);
      if (!step.allFinite() || step.dot(g) >= 0.0) step = -g;
      double t = 1.0;
      for (Eigen::Index r = 0; r < F; ++r)
        if (std::abs(step(r)) > cap(free[r])) t = std::min(t, cap(free[r]) / std::abs(step(r)));
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        Eigen::VectorXd y = x;
        for (Eigen::Index r = 0; r < F; ++r)
          y(free[r]) = std::clamp(x(free[r]) + t * step(r), 0.0, cap(free[r]));
        const double trial = value(y, eps, nullptr, nullptr);
        if (trial <= phi + 1e-4 * g.dot((y - x)(free))) {
          moved = (y - x).cwiseAbs().maxCoeff() > 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff());
          x = y;
          break;
        }
      }
      if (!moved) break;
    }
    if (eps <= eps_final) break;
  }
  for (Eigen::Index a = 0; a < A; ++a) mu(active[a]) = x(a);

  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  res.phi = value(x, eps_final, &grad, &hess);
  std::vector<Eigen::Index> free;
  for (Eigen::Index a = 0; a < A; ++a)
    if (x(a) > 0.0) free.push_back(a);
  if (!free.empty()) {
    const auto F = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd H(F, F);
    for (Eigen::Index r = 0; r < F; ++r)
      for (Eigen::Index c = 0; c < F; ++c) H(r, c) = hess(free[r], free[c]);
    H.diagonal().array() += 1e-12 * std::max(H.diagonal().maxCoeff(), 1e-300);
    const Eigen::MatrixXd inv = H.ldlt().solve(Eigen::MatrixXd::Identity(F, F));
    if (inv.allFinite())
      for (Eigen::Index r = 0; r < F; ++r)
        for (Eigen::Index c = 0; c < F; ++c) res.curvature(free[r], free[c]) = inv(r, c);
  }
  res.eps = eps_final;
  return res;
}

// Shares p_ik of the smoothed max at width eps, atoms x active modes.
Eigen::MatrixXd soft_shares(const OnOffRegion& region, const std::vector<Eigen::Index>& active,
                            const Eigen::VectorXd& mu, double eps) {
  const Eigen::Index m = region.macro_time.size();
  const auto A = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd p(m, A);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double b = region.macro_time(i);
    const double s = eps * b;
    double top = 0.0;
    for (Eigen::Index a = 0; a < A; ++a)
      top = std::max(top, b - mu(active[a]) * region.pico_time(i, active[a]));
    double z = std::exp(-top / s);
    for (Eigen::Index a = 0; a < A; ++a) {
      p(i, a) = std::exp((b - mu(active[a]) * region.pico_time(i, active[a]) - top) / s);
      z += p(i, a);
    }
    p.row(i) /= z;
  }
  return p;
}

}  // namespace

PicoDual solve_pico_dual(const OnOffRegion& region, const Eigen::VectorXd& f_sigma,
                         const Eigen::VectorXd& warm_mu, const DualOptions& opts) {
  const Eigen::Index m = region.macro_time.size();
  const Eigen::Index K = region.pico_time.cols();
  if (f_sigma.size() != K) throw DomainError("one time share per local mode expected");
  if ((f_sigma.array() < 0.0).any()) throw DomainError("time shares must be non-negative");
  PicoDual out;
  const double total_macro = region.macro_time.sum();

  if (static_cast<std::size_t>(m) <= opts.dense_limit) {
    std::vector<Eigen::Index> atoms(m);
    std::iota(atoms.begin(), atoms.end(), Eigen::Index{0});
    std::vector<Eigen::Index> all(K);
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    const std::vector<std::vector<Eigen::Index>> cand(m, all);
    const PolishResult lp = polish(region, atoms, cand, f_sigma);
    if (!lp.ok) throw SolverError("pico dual: dense LP did not reach optimality");
    out.mu = lp.duals;
    out.pico_used = lp.used;
    out.macro_time = lp.macro_time;
    out.smoothed_macro_time = lp.macro_time;
    out.curvature = Eigen::MatrixXd::Zero(K, K);
    out.exact = true;
  } else {
    Eigen::VectorXd mu(K);
    if (warm_mu.size() == K) {
      mu = warm_mu;
    } else {
      for (Eigen::Index k = 0; k < K; ++k)
        mu(k) = (region.macro_time.array() / region.pico_time.col(k).array()).maxCoeff();
    }
    std::vector<double> t(m), g(m);
    std::vector<std::size_t> idx;
    idx.reserve(m);
    // Smallest mu_k meeting budget f_k given the other modes; modes without
    // time are left out of the comparison.
    const auto coordinate = [&](Eigen::Index k) {
      for (Eigen::Index i = 0; i < m; ++i) {
        double ci = 0.0;
        for (Eigen::Index j = 0; j < K; ++j)
          if (j != k && f_sigma(j) > 0.0)
            ci = std::max(ci, region.macro_time(i) - mu(j) * region.pico_time(i, j));
        g[i] = region.pico_time(i, k);
        t[i] = (region.macro_time(i) - ci) / g[i];
      }
      return weighted_threshold(t, g, idx, f_sigma(k));
    };
    std::vector<Eigen::Index> active;
    for (Eigen::Index k = 0; k < K; ++k)
      if (f_sigma(k) > 0.0) active.push_back(k);
    if (warm_mu.size() != K) {
      // Each mode on its own, as if the others did not exist.
      for (Eigen::Index k : active) mu(k) = coordinate(k);
    }
    const SmoothResult smooth =
        smooth_multipliers(region, f_sigma, active, warm_mu.size() == K, mu, opts);
    const double last_eps = smooth.eps;
    out.smoothed_macro_time = total_macro - smooth.phi;
    out.curvature = Eigen::MatrixXd::Zero(K, K);
    for (std::size_t a = 0; a < active.size(); ++a)
      for (std::size_t c = 0; c < active.size(); ++c)
        out.curvature(active[a], active[c]) = smooth.curvature(static_cast<Eigen::Index>(a),
                                                               static_cast<Eigen::Index>(c));

    // Primal from the smoothed shares; any overflow goes back to the macro.
    Eigen::MatrixXd share = soft_shares(region, active, mu, last_eps);
    Eigen::VectorXd used = Eigen::VectorXd::Zero(K);
    for (std::size_t a = 0; a < active.size(); ++a)
      used(active[a]) = region.pico_time.col(active[a]).dot(share.col(a));
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Eigen::Index k = active[a];
      if (used(k) > f_sigma(k)) {
        share.col(a) *= f_sigma(k) / used(k);
        used(k) = f_sigma(k);
      }
    }
    out.pico_used = used;
    out.macro_time =
        region.macro_time.dot((Eigen::VectorXd::Ones(m) - share.rowwise().sum()).cwiseMax(0.0));
    const auto park_inactive = [&] {
      for (Eigen::Index k = 0; k < K; ++k)
        if (!(f_sigma(k) > 0.0)) mu(k) = coordinate(k);
    };
    park_inactive();
    // Exact line minimization per mode; kept only while the bound improves.
    double phi = pico_dual_objective(region, f_sigma, mu);
    for (int pass = 0; pass < opts.coordinate_passes; ++pass) {
      const Eigen::VectorXd before = mu;
      for (Eigen::Index k : active) mu(k) = coordinate(k);
      park_inactive();
      const double next = pico_dual_objective(region, f_sigma, mu);
      if (next > phi) {
        mu = before;
        break;
      }
      phi = next;
      if (mu == before) break;
    }
    out.mu = mu;
  }
  out.zero_multipliers = K > 0 && (out.mu.array() == 0.0).all() && total_macro > 0.0;
  out.dual_macro_time = total_macro - pico_dual_objective(region, f_sigma, out.mu);
  return out;
}

namespace {

// Fills the certificate fields from a primal (f, used) and multipliers mu.
ModePolicy make_policy(const OnOffCloud& cloud, const Eigen::VectorXd& f,
                       const Eigen::MatrixXd& mu, const Eigen::MatrixXd& used, double tau,
                       double dual_tau) {
  ModePolicy p;
  p.f_sigma = f;
  p.tau_bar = tau;
  p.dual_tau_bar = dual_tau;
  p.mu = mu;
  p.pico_used = used;
  for (Eigen::Index s = 0; s < f.size(); ++s) {
    double sum = 0.0;
    for (int l = 1; l <= cloud.num_picos(); ++l)
      if (cloud.modes.contains(static_cast<std::size_t>(s), l)) sum += mu(s, l - 1);
    if (f(s) > 0.0)
      p.max_sum_residual = std::max(p.max_sum_residual, std::abs(sum - 1.0));
    else
      p.max_inactive_excess = std::max(p.max_inactive_excess, sum - 1.0);
  }
  for (int l = 1; l <= cloud.num_picos(); ++l) {
    const OnOffRegion& reg = cloud.picos[l - 1];
    bool all_zero = !reg.modes.empty() && reg.macro_time.sum() > 0.0;
    for (std::size_t k = 0; k < reg.modes.size(); ++k)
      all_zero = all_zero && mu(static_cast<Eigen::Index>(reg.modes[k]), l - 1) <= 1e-12;
    p.zero_multipliers = p.zero_multipliers || all_zero;
    // Nothing left on the macro: slack here is complementary to mu = 0.
    if (all_zero) continue;
    for (std::size_t k = 0; k < reg.modes.size(); ++k) {
      const auto s = static_cast<Eigen::Index>(reg.modes[k]);
      if (!(f(s) > 0.0)) continue;
      const double largest = reg.pico_time.col(static_cast<Eigen::Index>(k)).maxCoeff();
      p.max_tightness_atoms = std::max(p.max_tightness_atoms, (f(s) - used(s, l - 1)) / largest);
    }
  }
  return p;
}

Eigen::MatrixXd absent(const OnOffCloud& cloud) {
  return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(cloud.modes.size()),
                                   cloud.num_picos(),
                                   std::numeric_limits<double>::quiet_NaN());
}

std::size_t joint_size(const OnOffCloud& cloud) {
  std::size_t n = cloud.modes.size();
  for (const OnOffRegion& reg : cloud.picos)
    n += static_cast<std::size_t>(reg.pico_time.rows() * reg.pico_time.cols());
  return n;
}

// Mode times and atom shares in one LP. Rows: each atom's shares sum to at
// most one, and each pico's time in a mode stays within the mode's time.
ModePolicy solve_joint(const OnOffCloud& cloud) {
  const auto n_modes = static_cast<Eigen::Index>(cloud.modes.size());
  const int L = cloud.num_picos();
  Eigen::Index cols = n_modes, atom_rows = 0, mode_rows = 0;
  for (const OnOffRegion& reg : cloud.picos) {
    cols += reg.pico_time.rows() * reg.pico_time.cols();
    atom_rows += reg.pico_time.rows();
    mode_rows += reg.pico_time.cols();
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(atom_rows + mode_rows, cols);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(atom_rows + mode_rows);
  b.head(atom_rows).setOnes();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
  c.head(n_modes).setOnes();
  double total_macro = 0.0;
  Eigen::Index col = n_modes, arow = 0, mrow = atom_rows;
  for (const OnOffRegion& reg : cloud.picos) {
    const Eigen::Index K = reg.pico_time.cols();
    total_macro += reg.macro_time.sum();
    for (Eigen::Index k = 0; k < K; ++k)
      A(mrow + k, static_cast<Eigen::Index>(reg.modes[k])) = -1.0;
    for (Eigen::Index i = 0; i < reg.pico_time.rows(); ++i, ++arow)
      for (Eigen::Index k = 0; k < K; ++k, ++col) {
        A(arow, col) = 1.0;
        A(mrow + k, col) = reg.pico_time(i, k);
        c(col) = -reg.macro_time(i);
      }
    mrow += K;
  }
  const detail::SimplexResult lp = detail::simplex_min(A, b, c);
  if (!lp.optimal) throw SolverError("on/off: joint LP did not reach optimality");

  const Eigen::VectorXd f = lp.x.head(n_modes);
  Eigen::MatrixXd mu = absent(cloud);
  Eigen::MatrixXd used = mu;
  double dual_tau = f.sum() + cloud.region0_load;
  col = n_modes;
  mrow = atom_rows;
  for (int l = 1; l <= L; ++l) {
    const OnOffRegion& reg = cloud.picos[l - 1];
    const Eigen::Index K = reg.pico_time.cols();
    Eigen::VectorXd local(K), m(K);
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto s = static_cast<Eigen::Index>(reg.modes[k]);
      local(k) = f(s);
      m(k) = lp.duals(mrow + k);
      mu(s, l - 1) = m(k);
      used(s, l - 1) = 0.0;
    }
    for (Eigen::Index i = 0; i < reg.pico_time.rows(); ++i)
      for (Eigen::Index k = 0; k < K; ++k, ++col)
        used(static_cast<Eigen::Index>(reg.modes[k]), l - 1) += lp.x(col) * reg.pico_time(i, k);
    dual_tau += reg.macro_time.sum() - pico_dual_objective(reg, local, m);
    mrow += K;
  }
  ModePolicy p = make_policy(cloud, f, mu, used,
                             lp.objective + total_macro + cloud.region0_load, dual_tau);
  p.exact = true;
  p.converged = true;
  p.iterations = lp.iterations;
  return p;
}

// With the mode times eliminated, the problem is
//   minimize sum_l Psi_l(mu_l)  subject to  sum_{l in sigma} mu_sigma,l <= 1, mu >= 0,
// where Psi_l is the per-pico dual at zero time. Each max is smoothed and
// the constraints enter through a log barrier; the mode times come back as
// the pico time of the smoothed shares.
class JointDual {
 public:
  explicit JointDual(const OnOffCloud& cloud) : cloud_(cloud) {
    for (const OnOffRegion& reg : cloud.picos) {
      offset_.push_back(n_);
      n_ += reg.pico_time.cols();
      for (std::size_t s : reg.modes) mode_of_.push_back(s);
      total_macro_ += reg.macro_time.sum();
    }
  }

  Eigen::Index size() const { return n_; }
  double total_macro() const { return total_macro_; }

  // Smoothed objective plus barrier; +inf outside the open feasible set.
  double value(const Eigen::VectorXd& mu, double eps, double t, Eigen::VectorXd* grad,
               Eigen::MatrixXd* hess) const {
    Eigen::VectorXd slack = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cloud_.modes.size()));
    for (Eigen::Index v = 0; v < n_; ++v) {
      if (!(mu(v) > 0.0)) return std::numeric_limits<double>::infinity();
      slack(static_cast<Eigen::Index>(mode_of_[v])) -= mu(v);
    }
    if (!(slack.array() > 0.0).all()) return std::numeric_limits<double>::infinity();
    if (grad) grad->setZero(n_);
    if (hess) hess->setZero(n_, n_);
    double val = 0.0;
    Eigen::VectorXd p;
    for (std::size_t l = 0; l < cloud_.picos.size(); ++l) {
      const OnOffRegion& reg = cloud_.picos[l];
      const Eigen::Index K = reg.pico_time.cols();
      const Eigen::Index o = offset_[l];
      p.resize(K);
      for (Eigen::Index i = 0; i < reg.macro_time.size(); ++i) {
        const double b = reg.macro_time(i);
        const double s = eps * b;
        double top = 0.0;
        for (Eigen::Index k = 0; k < K; ++k)
          top = std::max(top, b - mu(o + k) * reg.pico_time(i, k));
        double z = std::exp(-top / s);
        for (Eigen::Index k = 0; k < K; ++k) {
          p(k) = std::exp((b - mu(o + k) * reg.pico_time(i, k) - top) / s);
          z += p(k);
        }
        val += top + s * std::log(z);
        if (!grad) continue;
        p /= z;
        for (Eigen::Index k = 0; k < K; ++k) {
          const double gk = reg.pico_time(i, k);
          (*grad)(o + k) -= gk * p(k);
          if (!hess) continue;
          for (Eigen::Index c = 0; c < K; ++c)
            (*hess)(o + k, o + c) +=
                gk * reg.pico_time(i, c) / s * ((k == c ? p(k) : 0.0) - p(k) * p(c));
        }
      }
    }
    for (Eigen::Index v = 0; v < n_; ++v) {
      const double sv = slack(static_cast<Eigen::Index>(mode_of_[v]));
      val -= t * std::log(mu(v));
      if (grad) (*grad)(v) += -t / mu(v) + t / sv;
      if (hess) (*hess)(v, v) += t / (mu(v) * mu(v));
    }
    for (Eigen::Index s = 0; s < slack.size(); ++s) val -= t * std::log(slack(s));
    if (hess)
      for (Eigen::Index v = 0; v < n_; ++v)
        for (Eigen::Index w = 0; w < n_; ++w)
          if (mode_of_[v] == mode_of_[w]) {
            const double sv = slack(static_cast<Eigen::Index>(mode_of_[v]));
            (*hess)(v, w) += t / (sv * sv);
          }
    return val;
  }

  // Primal from the smoothed shares at mu, with modes whose multipliers sum
  // below 1 - tol switched off.
  ModePolicy recover(const Eigen::VectorXd& mu, double eps, double tol) const {
    const auto n_modes = static_cast<Eigen::Index>(cloud_.modes.size());
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(n_modes);
    for (Eigen::Index v = 0; v < n_; ++v) sums(static_cast<Eigen::Index>(mode_of_[v])) += mu(v);
    const Eigen::Array<bool, Eigen::Dynamic, 1> on = sums.array() >= 1.0 - tol;

    Eigen::MatrixXd mu_out = absent(cloud_);
    Eigen::MatrixXd used = mu_out;
    double macro = 0.0, psi = 0.0;
    for (std::size_t l = 0; l < cloud_.picos.size(); ++l) {
      const OnOffRegion& reg = cloud_.picos[l];
      const Eigen::Index K = reg.pico_time.cols();
      const Eigen::Index o = offset_[l];
      const auto col = static_cast<Eigen::Index>(l);
      for (Eigen::Index k = 0; k < K; ++k) {
        mu_out(static_cast<Eigen::Index>(reg.modes[k]), col) = mu(o + k);
        used(static_cast<Eigen::Index>(reg.modes[k]), col) = 0.0;
      }
      Eigen::VectorXd p(K);
      for (Eigen::Index i = 0; i < reg.macro_time.size(); ++i) {
        const double b = reg.macro_time(i);
        const double s = eps * b;
        double top = 0.0;
        for (Eigen::Index k = 0; k < K; ++k)
          top = std::max(top, b - mu(o + k) * reg.pico_time(i, k));
        psi += top;
        double z = std::exp(-top / s);
        for (Eigen::Index k = 0; k < K; ++k) {
          p(k) = std::exp((b - mu(o + k) * reg.pico_time(i, k) - top) / s);
          z += p(k);
        }
        p /= z;
        double share = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) {
          const auto sk = static_cast<Eigen::Index>(reg.modes[k]);
          if (!on(sk)) continue;
          share += p(k);
          used(sk, col) += p(k) * reg.pico_time(i, k);
        }
        macro += b * std::max(0.0, 1.0 - share);
      }
    }
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n_modes);
    for (Eigen::Index s = 0; s < n_modes; ++s) {
      if (!on(s)) continue;
      for (Eigen::Index l = 0; l < used.cols(); ++l)
        if (!std::isnan(used(s, l))) f(s) = std::max(f(s), used(s, l));
    }
    const double tau = f.sum() + cloud_.region0_load + macro;
    const double dual_tau = cloud_.region0_load + total_macro_ - psi;
    return make_policy(cloud_, f, mu_out, used, tau, dual_tau);
  }

 private:
  const OnOffCloud& cloud_;
  std::vector<Eigen::Index> offset_;
  std::vector<std::size_t> mode_of_;
  Eigen::Index n_ = 0;
  double total_macro_ = 0.0;
};

}  // namespace

ModePolicy solve_onoff(const OnOffCloud& cloud, const OnOffOptions& opts) {
  cloud.modes.validate(cloud.num_picos());
  if (joint_size(cloud) <= opts.dense_limit) return solve_joint(cloud);

  const JointDual dual(cloud);
  const Eigen::Index n = dual.size();
  Eigen::Index atoms = 0;
  for (const OnOffRegion& reg : cloud.picos) atoms = std::max(atoms, reg.macro_time.size());
  const double eps_final = final_smoothing(opts.dual, atoms);
  const double scale = std::max(dual.total_macro(), 1e-300);

  // Start inside: every mode's multipliers sum to one half.
  Eigen::VectorXd mu(n);
  {
    Eigen::VectorXd count = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud.modes.size()));
    for (const OnOffRegion& reg : cloud.picos)
      for (std::size_t s : reg.modes) count(static_cast<Eigen::Index>(s)) += 1.0;
    Eigen::Index v = 0;
    for (const OnOffRegion& reg : cloud.picos)
      for (std::size_t s : reg.modes) mu(v++) = 0.5 / count(static_cast<Eigen::Index>(s));
  }

  double eps = std::max(opts.dual.smoothing_start, eps_final);
  double t = 1e-3 * scale;
  const double t_final = 1e-12 * scale;
  int steps = 0;
  bool done = false;
  while (!done && steps < opts.max_iterations) {
    for (int it = 0; it < opts.dual.newton_iterations && steps < opts.max_iterations; ++it) {
      Eigen::VectorXd grad;
      Eigen::MatrixXd hess;
      const double val = dual.value(mu, eps, t, &grad, &hess);
      const Eigen::VectorXd d = -hess.ldlt().solve(grad);
      const double decrement = -grad.dot(d);
      if (!d.allFinite() || decrement <= 1e-14 * scale) break;
      ++steps;
      double alpha = 1.0;
      for (Eigen::Index v = 0; v < n; ++v)
        if (d(v) < 0.0) alpha = std::min(alpha, -0.99 * mu(v) / d(v));
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        const Eigen::VectorXd trial = mu + alpha * d;
        if (dual.value(trial, eps, t, nullptr, nullptr) <= val - 1e-4 * alpha * decrement) {
          mu = trial;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    done = eps <= eps_final && t <= t_final;
    eps = std::max(0.1 * eps, eps_final);
    t = std::max(0.1 * t, t_final);
  }

  ModePolicy p = dual.recover(mu, eps_final, opts.certificate_tolerance);
  p.iterations = steps;
  p.converged = done && p.certified(opts.certificate_tolerance);
  return p;
}

void write_mode_policy_csv(const OnOffCloud& cloud, const ModePolicy& policy,
                           std::ostream& os) {
  os << "mode,f_sigma,pico,mu\n";
  for (std::size_t s = 0; s < cloud.modes.size(); ++s) {
    const auto ss = static_cast<Eigen::Index>(s);
    for (int l = 1; l <= cloud.num_picos(); ++l) {
      if (!cloud.modes.contains(s, l)) continue;
      os << cloud.modes.modes[s] << ',' << format_double(policy.f_sigma(ss)) << ',' << l
         << ',' << format_double(policy.mu(ss, l - 1)) << '\n';
    }
  }
}

}  // namespace hetcap
