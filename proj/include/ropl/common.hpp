#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace ropl {

/// Raised when a configuration or input file violates its contract.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative numerical routine fails to converge or a
/// program instance is infeasible.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Small deterministic RNG (xoshiro256**, seeded through splitmix64).
/// Identical seeds produce identical streams on every platform, which the
/// stdlib distributions do not guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_below(std::uint64_t n);

  /// Fair coin; true with probability 1/2.
  bool coin();

 private:
  std::uint64_t state_[4];
};

/// Derives an independent stream seed, e.g. per row or per action.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Thread budget: min(cap set by the CLI, ROPL_THREADS env var, hardware).
/// Defaults to 1 so library calls stay sequential unless asked otherwise.
int thread_count();
void set_thread_cap(int cap);

/// Runs fn(i) for i in [0, n), possibly on several threads. Each call must
/// write only to its own per-index slot; reductions happen afterwards in
/// index order so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// FNV-1a 64-bit hash, used for config digests.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace ropl
