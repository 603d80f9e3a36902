#pragma once

// Shared generators for the test suites: random datasets with propensities
// bounded away from the simplex boundary, random candidate policies, and a
// Gaussian-blob classification sampler for the end-to-end runs.

#include <cstdint>
#include <vector>

#include "ropl/core.hpp"
#include "ropl/estimators.hpp"

namespace ropl::testing {

inline Matrix random_simplex_rows(Index n, Index k, Rng& rng, double floor = 0.2) {
  Matrix rows(n, k);
  for (Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Index a = 0; a < k; ++a) {
      rows(i, a) = floor + rng.uniform();
      sum += rows(i, a);
    }
    rows.row(i) /= sum;
  }
  return rows;
}

struct DatasetOptions {
  Index n = 8;
  Index k = 3;
  Index d = 2;
  double reward_lo = -1.0;
  double reward_hi = 1.0;
  bool with_full_rewards = false;
};

inline LoggedDataset random_dataset(const DatasetOptions& opt, std::uint64_t seed) {
  Rng rng(seed);
  LoggedDataset data;
  data.contexts = Matrix(opt.n, opt.d);
  for (Index i = 0; i < opt.n; ++i)
    for (Index j = 0; j < opt.d; ++j) data.contexts(i, j) = rng.uniform(-1.0, 1.0);
  data.propensities = random_simplex_rows(opt.n, opt.k, rng);
  data.actions.resize(opt.n);
  data.rewards = Vector(opt.n);
  for (Index i = 0; i < opt.n; ++i) {
    data.actions[i] = static_cast<int>(rng.uniform_below(opt.k));
    data.rewards[i] = rng.uniform(opt.reward_lo, opt.reward_hi);
  }
  if (opt.with_full_rewards) {
    Matrix full(opt.n, opt.k);
    for (Index i = 0; i < opt.n; ++i)
      for (Index a = 0; a < opt.k; ++a) full(i, a) = rng.uniform(0.0, 1.0);
    for (Index i = 0; i < opt.n; ++i) data.rewards[i] = full(i, data.actions[i]);
    data.full_reward_matrix = std::move(full);
  }
  return data;
}

inline PolicyProbs random_policy(Index n, Index k, std::uint64_t seed) {
  Rng rng(seed);
  return {random_simplex_rows(n, k, rng, 0.05)};
}

struct Blobs {
  Matrix features;
  std::vector<int> labels;
};

/// k Gaussian clusters on a circle; separation scales the circle radius
/// against unit noise.
inline Blobs make_blobs(Index n, Index d, int k, std::uint64_t seed,
                        double separation = 2.5) {
  Rng rng(seed);
  Blobs out;
  out.features = Matrix(n, d);
  out.labels.resize(n);
  const double two_pi = 6.283185307179586;
  for (Index i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % k);
    out.labels[i] = label;
    const double angle = two_pi * label / k;
    for (Index j = 0; j < d; ++j) {
      const double center =
          j == 0 ? separation * std::cos(angle)
                 : (j == 1 ? separation * std::sin(angle) : 0.3 * label);
      // sum of three uniforms approximates a unit gaussian well enough here
      const double noise = rng.uniform(-1.0, 1.0) + rng.uniform(-1.0, 1.0) +
                           rng.uniform(-1.0, 1.0);
      out.features(i, j) = center + 0.6 * noise;
    }
  }
  return out;
}

}  // namespace ropl::testing
