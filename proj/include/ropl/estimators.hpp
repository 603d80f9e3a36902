#pragma once

#include "ropl/core.hpp"

namespace ropl {

/// Candidate-policy probabilities evaluated on the dataset contexts:
/// row i holds pi(.|x_i).
struct PolicyProbs {
  Matrix probs;  // n x k, simplex rows

  Index n() const { return probs.rows(); }
  Index k() const { return probs.cols(); }
};

/// Throws std::invalid_argument unless probs is n x k with simplex rows.
void require_policy_probs(const LoggedDataset& data, const PolicyProbs& policy);

/// (1/n) sum_i pi(a_i|x_i)/pi0(a_i|x_i) r_i
double ips_value(const LoggedDataset& data, const PolicyProbs& policy);

/// IPS with the denominator floored at q.
double tips_value(const LoggedDataset& data, const PolicyProbs& policy, double q);

/// Self-normalized IPS: sum_i w_i r_i / sum_i w_i. Throws NumericalError
/// when the candidate puts zero mass on every logged action.
double nips_value(const LoggedDataset& data, const PolicyProbs& policy);

/// Direct-method value (1/n) sum_i sum_a pi(a|x_i) model_preds(i,a).
double rm_value(const LoggedDataset& data, const PolicyProbs& policy,
                const Matrix& model_preds);

/// Doubly robust value: the model term plus the importance-weighted
/// residual at the logged action.
double dr_value(const LoggedDataset& data, const PolicyProbs& policy,
                const Matrix& model_preds);

}  // namespace ropl
