#include "ropl/learn.hpp"

#include <cmath>

#include "json.hpp"
#include "ropl/simulate.hpp"

namespace ropl {

PolicyClass policy_class_from_string(const std::string& s) {
  if (s == "softmax_linear") return PolicyClass::softmax_linear;
  if (s == "two_layer_mlp") return PolicyClass::two_layer_mlp;
  throw ConfigError("unknown policy class '" + s +
                    "' (expected softmax_linear|two_layer_mlp)");
}

const char* to_string(PolicyClass c) {
  return c == PolicyClass::softmax_linear ? "softmax_linear" : "two_layer_mlp";
}

std::string LearnTrace::to_jsonl() const {
  std::string out;
  for (const auto& rec : records) {
    nlohmann::json j;
    j["iteration"] = rec.iteration;
    j["surrogate"] = rec.surrogate;
    j["lower_bound"] = rec.lower_bound;
    if (rec.oracle) j["oracle"] = *rec.oracle;
    j["accepted"] = rec.accepted;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::pair<ParametricPolicy, LearnTrace> minorize_maximize(
    const LoggedDataset& train, const UncertaintyBudget& budget,
    const RewardBoundsTable& reward_bounds, const LearnConfig& config) {
  if (config.outer_max < 1 || config.inner_steps < 0 || config.rel_tol < 0.0)
    throw std::invalid_argument("bad learn configuration");
  require_valid(train);

  ParametricPolicy policy =
      config.policy_class == PolicyClass::softmax_linear
          ? ParametricPolicy(SoftmaxLinearPolicy::init(train.k(), train.d(), config.seed))
          : ParametricPolicy(TwoLayerMlpPolicy::init(train.k(), train.d(),
                                                     config.hidden_size, config.seed));
  const AdamConfig adam{config.inner_steps, config.adam_lr, 0.9, 0.999, 1e-8};

  auto oracle_of = [&](const ParametricPolicy& p) -> std::optional<double> {
    if (!train.full_reward_matrix) return std::nullopt;
    return oracle_value(policy_probs(p, train.contexts), *train.full_reward_matrix);
  };

  // The reward-bound constraint set is fixed; only (p*, r*) are re-solved.
  BoundCertificate cert =
      dr_bound(train, policy_probs(policy, train.contexts), budget, reward_bounds,
               Direction::lower);
  LearnTrace trace;
  trace.initial_lower_bound = cert.value;
  double accepted_lb = cert.value;
  ParametricPolicy accepted_policy = policy;
  trace.stop_reason = "outer_max";

  for (int outer = 1; outer <= config.outer_max; ++outer) {
    adam_maximize(policy, train, cert, adam);
    const double surrogate = surrogate_objective(policy, train, cert);
    const BoundCertificate new_cert =
        dr_bound(train, policy_probs(policy, train.contexts), budget, reward_bounds,
                 Direction::lower);

    LearnRecord rec;
    rec.iteration = outer;
    rec.surrogate = surrogate;
    rec.lower_bound = new_cert.value;
    rec.oracle = oracle_of(policy);
    rec.accepted = new_cert.value >= accepted_lb;
    trace.records.push_back(rec);

    if (!rec.accepted) {
      trace.stop_reason = "guard";
      break;
    }
    const double improvement = new_cert.value - accepted_lb;
    accepted_lb = new_cert.value;
    accepted_policy = policy;
    cert = new_cert;
    if (improvement <= config.rel_tol * std::max(1.0, std::abs(accepted_lb)) &&
        outer < config.outer_max) {
      trace.stop_reason = "converged";
      break;
    }
  }
  return {std::move(accepted_policy), std::move(trace)};
}

}  // namespace ropl
