#include "ropl/estimators.hpp"

#include <cmath>

namespace ropl {

namespace {

void check_preds(const LoggedDataset& data, const Matrix& preds, const char* what) {
  if (preds.rows() != data.n() || preds.cols() != data.k())
    throw std::invalid_argument(std::string(what) + " must be n x k");
}

}  // namespace

void require_policy_probs(const LoggedDataset& data, const PolicyProbs& policy) {
  if (policy.probs.rows() != data.n() || policy.probs.cols() != data.k())
    throw std::invalid_argument("policy probabilities must be n x k");
  for (Index i = 0; i < policy.probs.rows(); ++i) {
    double sum = 0.0;
    for (Index a = 0; a < policy.probs.cols(); ++a) {
      const double v = policy.probs(i, a);
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument("policy probabilities must be finite and nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("policy probability row does not sum to 1");
  }
}

double ips_value(const LoggedDataset& data, const PolicyProbs& policy) {
  require_valid(data);
  require_policy_probs(data, policy);
  double acc = 0.0;  // sequential accumulation keeps results deterministic
  for (Index i = 0; i < data.n(); ++i) {
    const int a = data.actions[i];
    acc += policy.probs(i, a) / data.propensities(i, a) * data.rewards[i];
  }
  return acc / static_cast<double>(data.n());
}

double tips_value(const LoggedDataset& data, const PolicyProbs& policy, double q) {
  if (!(q >= 0.0) || q >= 1.0)
    throw std::invalid_argument("truncation cutoff q must lie in [0,1)");
  require_valid(data);
  require_policy_probs(data, policy);
  double acc = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const int a = data.actions[i];
    const double denom = std::max(q, data.propensities(i, a));
    acc += policy.probs(i, a) / denom * data.rewards[i];
  }
  return acc / static_cast<double>(data.n());
}

double nips_value(const LoggedDataset& data, const PolicyProbs& policy) {
  require_valid(data);
  require_policy_probs(data, policy);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const int a = data.actions[i];
    const double w = policy.probs(i, a) / data.propensities(i, a);
    num += w * data.rewards[i];
    den += w;
  }
  if (den == 0.0)
    throw NumericalError(
        "nIPS weights are degenerate: the candidate puts zero mass on every "
        "logged action");
  return num / den;
}

double rm_value(const LoggedDataset& data, const PolicyProbs& policy,
                const Matrix& model_preds) {
  require_valid(data);
  require_policy_probs(data, policy);
  check_preds(data, model_preds, "model predictions");
  double acc = 0.0;
  for (Index i = 0; i < data.n(); ++i)
    for (Index a = 0; a < data.k(); ++a)
      acc += policy.probs(i, a) * model_preds(i, a);
  return acc / static_cast<double>(data.n());
}

double dr_value(const LoggedDataset& data, const PolicyProbs& policy,
                const Matrix& model_preds) {
  require_valid(data);
  require_policy_probs(data, policy);
  check_preds(data, model_preds, "model predictions");
  double acc = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    double term = 0.0;
    for (Index a = 0; a < data.k(); ++a) term += policy.probs(i, a) * model_preds(i, a);
    const int ai = data.actions[i];
    term += (data.rewards[i] - model_preds(i, ai)) * policy.probs(i, ai) /
            data.propensities(i, ai);
    acc += term;
  }
  return acc / static_cast<double>(data.n());
}

}  // namespace ropl
