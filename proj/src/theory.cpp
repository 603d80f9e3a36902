#include "ropl/theory.hpp"

#include <cmath>

namespace ropl {

double generalization_slack(const SlackInputs& in) {
  if (!(in.q > 0.0 && in.q < 0.5))
    throw std::invalid_argument("slack: q must lie in (0, 1/2)");
  if (!(in.m_alpha >= 0.0)) throw std::invalid_argument("slack: m_alpha must be >= 0");
  if (!(in.r_bar >= 0.0)) throw std::invalid_argument("slack: r_bar must be >= 0");
  if (in.n < 1) throw std::invalid_argument("slack: n must be >= 1");
  if (!(in.delta > 0.0 && in.delta < 3.0))
    throw std::invalid_argument("slack: delta must lie in (0,3) to keep log(3/delta) positive");
  if (!(in.rademacher >= 0.0))
    throw std::invalid_argument("slack: rademacher term must be >= 0");

  const double concentration =
      6.0 * ((in.q + 1.0) / in.q * in.m_alpha + in.r_bar) *
      std::sqrt(2.0 * std::log(3.0 / in.delta) / static_cast<double>(in.n));
  const double complexity =
      2.0 * std::max(in.m_alpha, in.r_bar / in.q) * in.rademacher;
  return -concentration - complexity;
}

double rademacher_mc(const std::vector<PolicyProbs>& policy_set, int draws,
                     std::uint64_t seed) {
  if (policy_set.empty())
    throw std::invalid_argument("rademacher_mc: policy set must be non-empty");
  if (draws < 1) throw std::invalid_argument("rademacher_mc: draws must be >= 1");
  const Index n = policy_set.front().n();
  const Index k = policy_set.front().k();
  for (const auto& p : policy_set)
    if (p.n() != n || p.k() != k)
      throw std::invalid_argument("rademacher_mc: policies must share n and k");

  double acc = 0.0;
  for (int t = 0; t < draws; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    Matrix signs(n, k);
    for (Index i = 0; i < n; ++i)
      for (Index a = 0; a < k; ++a) signs(i, a) = rng.coin() ? 1.0 : -1.0;
    double sup = 0.0;
    for (const auto& p : policy_set) {
      const double avg = signs.cwiseProduct(p.probs).sum() / static_cast<double>(n);
      sup = std::max(sup, std::abs(avg));
    }
    acc += sup;
  }
  return acc / static_cast<double>(draws);
}

}  // namespace ropl
