#pragma once

#include <cstdint>
#include <vector>

#include "ropl/estimators.hpp"

namespace ropl {

/// Inputs of the generalization-slack formula. q is the propensity floor
/// (the formula needs 0 < q < 1/2), m_alpha the surrogate-bound envelope,
/// r_bar the max absolute reward, rademacher the policy-class complexity.
struct SlackInputs {
  double q = 0.25;
  double m_alpha = 0.0;
  double r_bar = 0.0;
  std::int64_t n = 1;
  double delta = 0.05;
  double rademacher = 0.0;
};

/// -6((q+1)/q M + r_bar) sqrt(2 log(3/delta) / n) - 2 max(M, r_bar/q) R_n.
/// Always nonpositive.
double generalization_slack(const SlackInputs& inputs);

/// Monte-Carlo empirical Rademacher complexity of a finite policy set:
/// mean over draws of sup_pi |(1/n) sum_{i,a} eps_{i,a} pi(a|x_i)|.
double rademacher_mc(const std::vector<PolicyProbs>& policy_set, int draws,
                     std::uint64_t seed);

}  // namespace ropl
