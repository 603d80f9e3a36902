#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ropl/aux_erm.hpp"
#include "ropl/core.hpp"
#include "ropl/estimators.hpp"

namespace ropl {

/// Train/validation/test fractions plus the nested split used when fitting
/// reward surrogates. by_order keeps rows chronological instead of
/// permuting.
struct SplitSpec {
  double train = 0.56;
  double val = 0.24;
  double test = 0.20;
  double rm_train = 0.80;
  double rm_val = 0.20;
  std::uint64_t seed = 0;
  bool by_order = false;
};

/// How the synthetic logging policy is built: a multinomial logistic model
/// fit on a fraction of the data, softened by a softmax temperature.
struct LoggingConfig {
  double fit_fraction = 0.3;
  double temperature = 2.0;
  std::uint64_t seed = 0;
};

/// Cost-sensitive reduction of a classification set: reward 1 at the true
/// label and 0 elsewhere, actions sampled from the constructed logging
/// policy, propensities stored exactly as the sampled-from probabilities.
LoggedDataset convert_supervised(const Matrix& features,
                                 const std::vector<int>& labels,
                                 const LoggingConfig& logging, std::uint64_t seed);

/// (1/n) sum_i sum_a r(i,a) pi(a|x_i); simulation-only ground truth.
double oracle_value(const PolicyProbs& policy, const Matrix& full_reward_matrix);

/// Draws a random executed policy inside the ratio ball: multiplies each
/// row by exp(u), u uniform in [-alpha/2, alpha/2], renormalizes, and
/// verifies the ratio constraint (resampling, then shrinking the draw
/// range, on the rare numerical violation).
Matrix sample_perturbed_policy(const Matrix& propensities,
                               const UncertaintyBudget& budget, std::uint64_t seed);

enum class EstimatorKind { ips, tips, nips_greedy, dr };

EstimatorKind estimator_kind_from_string(const std::string& s);
const char* to_string(EstimatorKind k);

/// Point estimate minus certified lower bound. The dr kind needs the
/// surrogate bounds table and the point-model predictions.
double fluctuation(const LoggedDataset& data, const PolicyProbs& policy,
                   const UncertaintyBudget& budget, EstimatorKind kind,
                   const RewardBoundsTable* bounds = nullptr,
                   const Matrix* point_preds = nullptr);

struct SplitResult {
  LoggedDataset train;
  LoggedDataset val;
  LoggedDataset test;
};

SplitResult split(const LoggedDataset& data, const SplitSpec& spec);
std::pair<LoggedDataset, LoggedDataset> rm_split(const LoggedDataset& train,
                                                 const SplitSpec& spec);

/// Supervised CSV schema: ctx_0..ctx_{d-1},label.
std::pair<Matrix, std::vector<int>> read_supervised_csv(const std::string& path);
void write_supervised_csv(const Matrix& features, const std::vector<int>& labels,
                          const std::string& path);

}  // namespace ropl
