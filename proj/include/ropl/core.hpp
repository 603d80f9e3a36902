#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "ropl/common.hpp"

namespace ropl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Logged bandit feedback: one row per impression. Propensity row i holds
/// the full logging distribution over the k actions at context i. The full
/// reward matrix is simulation-only ground truth and absent on real data.
struct LoggedDataset {
  Matrix contexts;            // n x d
  std::vector<int> actions;   // n entries in [0, k)
  Vector rewards;             // n
  Matrix propensities;        // n x k, rows on the open simplex
  std::optional<Matrix> full_reward_matrix;  // n x k

  Index n() const { return propensities.rows(); }
  Index d() const { return contexts.cols(); }
  Index k() const { return propensities.cols(); }
};

/// Uncertainty degree alpha with its derived log-ratio limits. cutoff_q is
/// the propensity floor for the truncated variants; 0 disables it.
struct UncertaintyBudget {
  double alpha = 0.0;
  double ratio_hi = 1.0;  // e^{alpha}
  double ratio_lo = 1.0;  // e^{-alpha}
  double cutoff_q = 0.0;

  static UncertaintyBudget from_alpha(double alpha, double cutoff_q = 0.0);
};

/// Range of the optimization-policy mass p(a_i|x_i). Invariant 0 < lo <= hi <= 1.
struct FeasibleInterval {
  double lo = 0.0;
  double hi = 0.0;
};

enum class Direction { lower, upper };

const char* to_string(Direction d);
Direction direction_from_string(const std::string& s);

/// A bound value together with the feasible minimizer attaining it:
/// the per-sample optimization-policy masses p*, and for DR also the
/// per-(sample, action) reward-model values r*.
struct BoundCertificate {
  double value = 0.0;
  Vector p_star;                   // n
  std::optional<Matrix> r_star;    // n x k, DR only
  Direction direction = Direction::lower;
};

struct ValidationIssue {
  std::string kind;  // "row-sum" | "range" | "nan" | "action" | "shape"
  Index row = -1;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

/// Report-style check of every dataset invariant: propensity entries in
/// (0,1), rows summing to 1 within 1e-9, action indices in range, finite
/// values, matching shapes.
ValidationReport validate_dataset(const LoggedDataset& data);

/// Throws std::invalid_argument listing the first violations.
void require_valid(const LoggedDataset& data);

/// Feasible range of p(a_i|x) under the ratio box e^{-alpha}..e^{alpha}
/// around the logging propensities combined with exact normalization of the
/// remaining actions (whose per-action masses are capped at 1 before the
/// subtraction). The logging mass itself is always feasible.
FeasibleInterval feasible_interval(const Eigen::Ref<const Vector>& prop_row,
                                   int observed_action,
                                   const UncertaintyBudget& budget);

/// Truncated variant: floor the propensity at cutoff_q and drop the
/// normalization coupling. Throws std::invalid_argument when the
/// configuration is infeasible (e^{-alpha} q exceeding min(e^{alpha} pi0, 1)).
FeasibleInterval feasible_interval_truncated(
    const Eigen::Ref<const Vector>& prop_row, int observed_action,
    const UncertaintyBudget& budget);

/// CSV schema: header ctx_0..ctx_{d-1},action,reward,prop_0..prop_{k-1}
/// and optionally r_0..r_{k-1} for the full reward matrix.
LoggedDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const LoggedDataset& data, const std::string& path);

}  // namespace ropl
