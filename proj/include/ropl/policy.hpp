#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ropl/core.hpp"
#include "ropl/estimators.hpp"

namespace ropl {

/// Softmax over a single linear layer. Initialized at zero, i.e. the
/// uniform policy.
struct SoftmaxLinearPolicy {
  Matrix weights;  // k x d
  Vector bias;     // k

  static SoftmaxLinearPolicy init(Index k, Index d, std::uint64_t seed);
};

/// Two-layer ReLU MLP with a softmax head. The hidden layer gets a
/// Kaiming-style scaled-uniform draw; the output layer starts at zero so
/// the initial policy is uniform.
struct TwoLayerMlpPolicy {
  Matrix w1;  // hidden x d
  Vector b1;  // hidden
  Matrix w2;  // k x hidden
  Vector b2;  // k

  static TwoLayerMlpPolicy init(Index k, Index d, Index hidden, std::uint64_t seed);
};

using ParametricPolicy = std::variant<SoftmaxLinearPolicy, TwoLayerMlpPolicy>;

/// Forward pass with a numerically stable softmax (row max subtracted).
PolicyProbs policy_probs(const ParametricPolicy& policy, const Matrix& contexts);

Index param_count(const ParametricPolicy& policy);
std::vector<double> get_params(const ParametricPolicy& policy);
void set_params(ParametricPolicy& policy, const std::vector<double>& values);

/// Per-(sample, action) coefficients of the DR surrogate fixed at a
/// certificate: c_{i,a} = r*(a, x_i) + [a == a_i] (r_i - r*(a_i, x_i)) / p*_i.
/// The surrogate objective is (1/n) sum_{i,a} c_{i,a} pi_theta(a|x_i).
Matrix surrogate_coefficients(const LoggedDataset& data, const BoundCertificate& cert);

struct SurrogateEval {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Objective value and analytic gradient through the softmax Jacobian and
/// ReLU backprop (subgradient 0 at the kink).
SurrogateEval surrogate_objective_and_gradient(const ParametricPolicy& policy,
                                               const LoggedDataset& data,
                                               const BoundCertificate& cert);

double surrogate_objective(const ParametricPolicy& policy, const LoggedDataset& data,
                           const BoundCertificate& cert);

struct AdamConfig {
  int steps = 200;
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam ascent on the surrogate; mutates the policy in place and returns
/// the surrogate value observed at the start of each step.
std::vector<double> adam_maximize(ParametricPolicy& policy, const LoggedDataset& data,
                                  const BoundCertificate& cert, const AdamConfig& config);

std::string policy_to_json(const ParametricPolicy& policy);
ParametricPolicy policy_from_json(const std::string& text);

}  // namespace ropl
