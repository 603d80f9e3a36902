#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ropl/core.hpp"

namespace ropl {

/// Asymmetric squared loss (r-f)_+^2 + weight * (r-f)_-^2. The lower
/// direction penalizes the negative part by e^{2 alpha} and shifts fits
/// downward; the upper direction uses e^{-2 alpha}. weight = 1 is plain
/// least squares.
struct AsymLossSpec {
  double alpha = 0.0;
  Direction direction = Direction::lower;
  double weight = 1.0;

  static AsymLossSpec lower(double alpha);
  static AsymLossSpec upper(double alpha);
  static AsymLossSpec least_squares();
};

double asym_loss(double r, double f, const AsymLossSpec& spec);

struct GradHess {
  double g = 0.0;
  double h = 0.0;
};

/// First and second derivative of asym_loss in f. At the kink r == f the
/// positive-side values (0, 2) apply.
GradHess asym_loss_grad_hess(double r, double f, const AsymLossSpec& spec);

/// Exact minimizer of sum_j asym_loss(r_j, c) over constants c, found by
/// scanning the piecewise-linear first-order condition between sorted
/// distinct reward values. Throws std::invalid_argument on empty input.
double fit_constant(const std::vector<double>& rewards, const AsymLossSpec& spec);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const Eigen::Ref<const Vector>& x) const;
};

/// Additive stack of depth-limited regression trees on top of a constant
/// base score; each tree is scaled by the learning rate.
struct TreeEnsembleModel {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;

  double predict_row(const Eigen::Ref<const Vector>& x) const;
  Vector predict(const Matrix& features) const;

  std::string to_json() const;
  static TreeEnsembleModel from_json(const std::string& text);
};

struct BoostHyperParams {
  double learning_rate = 0.1;
  int max_depth = 3;
  int n_rounds = 100;
};

/// Newton boosting on the asymmetric loss: base score from fit_constant,
/// then trees fit to (g, h) with leaf value -G/(H + 1). When validation
/// data is supplied, stops after `patience` rounds without improvement and
/// keeps the best-round prefix.
TreeEnsembleModel fit_tree_ensemble(const Matrix& features, const Vector& rewards,
                                    const AsymLossSpec& spec,
                                    const BoostHyperParams& hp,
                                    const Matrix* val_features = nullptr,
                                    const Vector* val_rewards = nullptr,
                                    int patience = 10);

/// Mean asymmetric loss of a model on a labelled set.
double ensemble_loss(const TreeEnsembleModel& model, const Matrix& features,
                     const Vector& rewards, const AsymLossSpec& spec);

/// Per-(sample, action) surrogate reward bounds f_hat <= g_hat.
struct RewardBoundsTable {
  Matrix lower;  // n x k
  Matrix upper;  // n x k
  int clamp_count = 0;  // ordering violations repaired at construction

  double m_alpha() const;  // max |entry| over both tables

  std::string to_csv() const;
  static RewardBoundsTable from_csv(const std::string& text);
};

struct HyperGrid {
  std::vector<double> learning_rates{0.01, 0.1, 0.3, 0.5};
  std::vector<int> max_depths{2, 3, 4};
  int n_rounds = 100;
};

/// Per-action surrogates fitted on a training split; evaluable on any
/// context matrix. Actions observed fewer than 5 times fall back to a
/// constant fit.
struct SurrogateModelSet {
  std::vector<TreeEnsembleModel> lower_models;   // k entries
  std::vector<TreeEnsembleModel> upper_models;   // k entries
  std::vector<TreeEnsembleModel> point_models;   // k entries, weight-1 fits

  RewardBoundsTable tabulate(const Matrix& contexts) const;
  Matrix point_predictions(const Matrix& contexts) const;
};

/// Fits lower/upper/point surrogates per action. Hyper-parameters are
/// grid-searched on an action-local 80/20 split scored by the asymmetric
/// validation loss; the winning configuration is refit on the full action
/// subset.
SurrogateModelSet fit_reward_surrogates(const LoggedDataset& train,
                                        const UncertaintyBudget& budget,
                                        const HyperGrid& grid, std::uint64_t seed);

/// Surrogate bounds evaluated back on the training contexts.
RewardBoundsTable build_reward_bounds(const LoggedDataset& train,
                                      const UncertaintyBudget& budget,
                                      const HyperGrid& grid, std::uint64_t seed);

}  // namespace ropl
