#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ropl/aux_erm.hpp"
#include "ropl/bounds.hpp"
#include "ropl/policy.hpp"

namespace ropl {

enum class PolicyClass { softmax_linear, two_layer_mlp };

PolicyClass policy_class_from_string(const std::string& s);
const char* to_string(PolicyClass c);

struct LearnConfig {
  double alpha = 0.3;
  PolicyClass policy_class = PolicyClass::two_layer_mlp;
  int hidden_size = 5;
  int inner_steps = 200;   // Adam steps per outer iteration
  double adam_lr = 0.05;
  int outer_max = 100;
  double rel_tol = 1e-6;   // relative improvement treated as a plateau
  std::uint64_t seed = 0;
};

struct LearnRecord {
  int iteration = 0;
  double surrogate = 0.0;     // surrogate value at the new parameters
  double lower_bound = 0.0;   // re-minimized DR lower bound
  std::optional<double> oracle;
  bool accepted = false;
};

struct LearnTrace {
  double initial_lower_bound = 0.0;
  std::vector<LearnRecord> records;
  /// "converged" | "guard" | "outer_max"
  std::string stop_reason;

  std::string to_jsonl() const;
};

/// Alternates maximizing the DR surrogate at the frozen certificate with
/// re-solving the certificate at the new policy. A step is accepted only
/// when the re-minimized lower bound does not decrease, so the accepted
/// lower-bound sequence is non-decreasing by construction; improvements
/// below rel_tol stop the loop. Returns the last accepted policy.
std::pair<ParametricPolicy, LearnTrace> minorize_maximize(
    const LoggedDataset& train, const UncertaintyBudget& budget,
    const RewardBoundsTable& reward_bounds, const LearnConfig& config);

}  // namespace ropl
