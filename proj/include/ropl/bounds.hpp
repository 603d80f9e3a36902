#pragma once

#include "ropl/aux_erm.hpp"
#include "ropl/core.hpp"
#include "ropl/estimators.hpp"

namespace ropl {

/// Exact optimum of the per-sample IPS bounding program: the objective is
/// separable and monotone in each p(a_i|x_i), so the minimizing mass sits
/// at an interval endpoint chosen by the sign of pi(a_i|x_i) r_i.
BoundCertificate ips_bound(const LoggedDataset& data, const PolicyProbs& policy,
                           const UncertaintyBudget& budget, Direction direction);

/// Same endpoint rule over the truncated intervals (propensity floored at
/// cutoff_q, no normalization coupling).
BoundCertificate tips_bound(const LoggedDataset& data, const PolicyProbs& policy,
                            const UncertaintyBudget& budget, Direction direction);

/// Two-step greedy lower bound for nIPS: evaluates the self-normalized
/// objective at the IPS-optimal optimization policy p*. Always an upper
/// bound on the exact nIPS minimum.
double nips_bound_greedy(const LoggedDataset& data, const PolicyProbs& policy,
                         const UncertaintyBudget& budget);

/// Exact nIPS lower bound via Dinkelbach iteration on the linear-fractional
/// program in w = 1/p. Guarded to small instances (n*k <= max_vars) since
/// the objective is not separable across samples.
double nips_bound_exact(const LoggedDataset& data, const PolicyProbs& policy,
                        const UncertaintyBudget& budget, Index max_vars = 64);

/// Robust RM value: per (sample, action) the expected-potential-value bound
/// is linear in the perturbed mass pi_u(a|x_i), so the optimum sits at an
/// endpoint of [e^{-alpha} pi0, min(e^{alpha} pi0, 1)].
double rm_bound(const LoggedDataset& data, const PolicyProbs& policy,
                const UncertaintyBudget& budget, const RewardBoundsTable& bounds,
                const Matrix& point_model_preds,
                Direction direction = Direction::lower);

/// Robust DR value with the minimizing (p*, r*) certificate. Separable per
/// sample; each sample solves in closed form because the objective is
/// coordinate-wise affine over a box.
BoundCertificate dr_bound(const LoggedDataset& data, const PolicyProbs& policy,
                          const UncertaintyBudget& budget,
                          const RewardBoundsTable& bounds, Direction direction);

std::string certificate_to_json(const BoundCertificate& cert);
BoundCertificate certificate_from_json(const std::string& text);

}  // namespace ropl
