#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ropl/aux_erm.hpp"
#include "ropl/learn.hpp"
#include "ropl/simulate.hpp"

namespace ropl {

/// Configuration sections accepted by the CLI, mirroring the library
/// structs. Unknown keys are rejected so typos cannot silently fall back
/// to defaults.
struct RunConfig {
  std::uint64_t seed = 0;
  double alpha = 0.3;
  double cutoff_q = 0.0;
  SplitSpec split;
  LoggingConfig logging;

  struct LearnSection {
    PolicyClass policy_class = PolicyClass::two_layer_mlp;
    std::vector<int> hidden_sizes{5};
    std::vector<double> adam_lrs{0.05};
    int inner_steps = 200;
    int outer_max = 100;
    double rel_tol = 1e-6;
  } learn;

  HyperGrid boost;

  static RunConfig from_json_text(const std::string& text);
  /// Empty path yields the documented defaults.
  static RunConfig load(const std::string& path);

  /// Key-sorted JSON with every effective value filled in.
  std::string canonical_json() const;
  /// FNV-1a hash of the canonical form, as 16 hex digits.
  std::string digest_hex() const;
};

}  // namespace ropl
