#pragma once

// Independent oracles used to freeze expected values: brute-force grid
// minimization of the bounding programs, golden-section search for the
// constant fit, and exhaustive sign enumeration for tiny Rademacher cases.
// None of these share code with the implementation paths they check.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ropl/aux_erm.hpp"
#include "ropl/core.hpp"
#include "ropl/estimators.hpp"

namespace ropl::testing {

inline double golden_section_min(const std::function<double(double)>& fn, double lo,
                                 double hi, int iters = 200) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < iters && b - a > 1e-14; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = fn(d);
    }
  }
  return 0.5 * (a + b);
}

/// Endpoint-inclusive uniform grid with `steps` intervals.
inline std::vector<double> grid_points(double lo, double hi, int steps) {
  std::vector<double> pts(steps + 1);
  for (int j = 0; j <= steps; ++j)
    pts[j] = lo + (hi - lo) * static_cast<double>(j) / steps;
  pts.front() = lo;
  pts.back() = hi;
  return pts;
}

/// Brute-force optimum of the IPS program: the objective is a sum of
/// per-sample terms pi_i r_i / p_i over independent intervals, so the grid
/// scans each sample separately.
inline double grid_ips_bound(const LoggedDataset& data, const PolicyProbs& policy,
                             const UncertaintyBudget& budget, bool lower,
                             bool truncated = false, int steps = 1000) {
  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const int a = data.actions[i];
    const FeasibleInterval iv =
        truncated ? feasible_interval_truncated(data.propensities.row(i), a, budget)
                  : feasible_interval(data.propensities.row(i), a, budget);
    const double c = policy.probs(i, a) * data.rewards[i];
    double best = lower ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    for (double p : grid_points(iv.lo, iv.hi, steps)) {
      const double t = c / p;
      best = lower ? std::min(best, t) : std::max(best, t);
    }
    total += best;
  }
  return total / static_cast<double>(data.n());
}

/// Brute-force optimum of the DR program. Per sample the term is gridded
/// over (r(a_i, x_i), p); the unobserved-action coordinates enter linearly
/// with coefficient pi(a|x_i) >= 0, so their interval optimum is taken in
/// closed form (still independent of the implementation's argmin logic).
inline double grid_dr_bound(const LoggedDataset& data, const PolicyProbs& policy,
                            const UncertaintyBudget& budget,
                            const RewardBoundsTable& bounds, bool lower,
                            int steps = 200) {
  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const int ai = data.actions[i];
    const FeasibleInterval iv = feasible_interval(data.propensities.row(i), ai, budget);
    double others = 0.0;
    for (Index a = 0; a < data.k(); ++a) {
      if (a == static_cast<Index>(ai)) continue;
      const double c = policy.probs(i, a);
      const double at_lo = c * bounds.lower(i, a);
      const double at_hi = c * bounds.upper(i, a);
      others += lower ? std::min(at_lo, at_hi) : std::max(at_lo, at_hi);
    }
    const double pi_obs = policy.probs(i, ai);
    double best = lower ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    for (double r : grid_points(bounds.lower(i, ai), bounds.upper(i, ai), steps))
      for (double p : grid_points(iv.lo, iv.hi, steps)) {
        const double t = pi_obs * r + pi_obs * (data.rewards[i] - r) / p;
        best = lower ? std::min(best, t) : std::max(best, t);
      }
    total += others + best;
  }
  return total / static_cast<double>(data.n());
}

/// Brute-force w-grid minimum of the self-normalized program. Coordinates
/// are the observed-action weights w_i in their per-sample intervals; the
/// grid includes both endpoints, where the optimum of a linear-fractional
/// objective over a box lives.
inline double grid_nips_bound(const LoggedDataset& data, const PolicyProbs& policy,
                              const UncertaintyBudget& budget, int points = 64) {
  const Index n = data.n();
  std::vector<double> w_lo(n), w_hi(n);
  for (Index i = 0; i < n; ++i) {
    const int ai = data.actions[i];
    const double p0 = data.propensities(i, ai);
    double others_lo = 0.0;
    for (Index a = 0; a < data.k(); ++a)
      if (a != static_cast<Index>(ai)) others_lo += budget.ratio_lo * data.propensities(i, a);
    const double p_lo = budget.ratio_lo * p0;
    const double p_hi = std::max(p_lo, std::min(budget.ratio_hi * p0, 1.0 - others_lo));
    w_lo[i] = 1.0 / p_hi;
    w_hi[i] = 1.0 / p_lo;
  }
  std::vector<std::vector<double>> grids(n);
  for (Index i = 0; i < n; ++i) grids[i] = grid_points(w_lo[i], w_hi[i], points - 1);

  std::vector<std::size_t> cursor(n, 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double w = grids[i][cursor[i]];
      const double pi_obs = policy.probs(i, data.actions[i]);
      num += w * pi_obs * data.rewards[i];
      den += w * pi_obs;
    }
    if (den > 0.0) best = std::min(best, num / den);
    Index pos = 0;
    while (pos < n && ++cursor[pos] == grids[pos].size()) {
      cursor[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
  return best;
}

/// Exact Rademacher complexity of a finite policy set by enumerating all
/// 2^(n k) sign patterns. Only for tiny n k.
inline double rademacher_exhaustive(const std::vector<PolicyProbs>& policy_set) {
  const Index n = policy_set.front().n();
  const Index k = policy_set.front().k();
  const int bits = static_cast<int>(n * k);
  double acc = 0.0;
  for (long mask = 0; mask < (1L << bits); ++mask) {
    double sup = 0.0;
    for (const auto& p : policy_set) {
      double s = 0.0;
      int b = 0;
      for (Index i = 0; i < n; ++i)
        for (Index a = 0; a < k; ++a, ++b)
          s += ((mask >> b) & 1 ? 1.0 : -1.0) * p.probs(i, a);
      sup = std::max(sup, std::abs(s / static_cast<double>(n)));
    }
    acc += sup;
  }
  return acc / static_cast<double>(1L << bits);
}

/// Central finite differences for gradients.
template <typename F>
std::vector<double> finite_difference_gradient(const F& fn, std::vector<double> x,
                                               double step = 1e-5) {
  std::vector<double> grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = x[j];
    x[j] = saved + step;
    const double up = fn(x);
    x[j] = saved - step;
    const double down = fn(x);
    x[j] = saved;
    grad[j] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace ropl::testing
