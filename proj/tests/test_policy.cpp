#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "ropl/bounds.hpp"
#include "ropl/policy.hpp"

using namespace ropl;
using namespace ropl::testing;

namespace {

BoundCertificate certificate_for(const LoggedDataset& data, double alpha,
                                 std::uint64_t table_seed) {
  Rng rng(table_seed);
  RewardBoundsTable table;
  table.lower = Matrix(data.n(), data.k());
  table.upper = Matrix(data.n(), data.k());
  for (Index i = 0; i < data.n(); ++i)
    for (Index a = 0; a < data.k(); ++a) {
      const double lo = rng.uniform(-1.0, 1.0);
      table.lower(i, a) = lo;
      table.upper(i, a) = lo + rng.uniform(0.0, 1.0);
    }
  const auto probs = random_policy(data.n(), data.k(), table_seed + 1);
  return dr_bound(data, probs, UncertaintyBudget::from_alpha(alpha), table,
                  Direction::lower);
}

}  // namespace

TEST_CASE("policy_probs basics") {
  const Matrix X = Matrix::Random(6, 3);
  ParametricPolicy linear = SoftmaxLinearPolicy::init(4, 3, 0);
  const auto uniform = policy_probs(linear, X);
  CHECK((uniform.probs.array() - 0.25).abs().maxCoeff() <= 1e-15);

  ParametricPolicy mlp = TwoLayerMlpPolicy::init(4, 3, 5, 7);
  const auto mlp_probs = policy_probs(mlp, X);
  for (Index i = 0; i < 6; ++i)
    CHECK(mlp_probs.probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));

  // softmax shift invariance: adding a constant to every output bias
  auto& p = std::get<TwoLayerMlpPolicy>(mlp);
  ParametricPolicy shifted = mlp;
  std::get<TwoLayerMlpPolicy>(shifted).b2.array() += 13.5;
  const auto shifted_probs = policy_probs(shifted, X);
  CHECK((shifted_probs.probs - mlp_probs.probs).cwiseAbs().maxCoeff() <= 1e-12);

  // one dominant logit
  p.b2.setZero();
  p.w2.setZero();
  std::get<TwoLayerMlpPolicy>(mlp).b2[2] = 50.0;
  const auto dominant = policy_probs(mlp, X);
  CHECK(dominant.probs.col(2).minCoeff() >= 1.0 - 1e-9);
}

TEST_CASE("surrogate value and gradient") {
  DatasetOptions opt;
  opt.n = 7;
  opt.k = 3;
  opt.d = 2;
  const auto data = random_dataset(opt, 31);

  // constant coefficients: value is the constant and the gradient vanishes
  BoundCertificate flat;
  flat.direction = Direction::lower;
  flat.p_star = Vector::Constant(data.n(), 0.5);
  flat.r_star = Matrix::Constant(data.n(), data.k(), 0.8);
  LoggedDataset aligned = data;
  for (Index i = 0; i < data.n(); ++i)
    aligned.rewards[i] = 0.8;  // residual zero -> coefficients all 0.8
  ParametricPolicy mlp = TwoLayerMlpPolicy::init(data.k(), data.d(), 5, 3);
  const auto eval = surrogate_objective_and_gradient(mlp, aligned, flat);
  CHECK(eval.value == doctest::Approx(0.8).epsilon(1e-12));
  for (double g : eval.gradient) CHECK(std::abs(g) <= 1e-12);

  // alpha = 0 with the exact reward model: surrogate equals dr_value
  DatasetOptions full = opt;
  full.with_full_rewards = true;
  const auto sim = random_dataset(full, 32);
  RewardBoundsTable exact;
  exact.lower = *sim.full_reward_matrix;
  exact.upper = *sim.full_reward_matrix;
  ParametricPolicy pol = TwoLayerMlpPolicy::init(sim.k(), sim.d(), 5, 4);
  const auto probs = policy_probs(pol, sim.contexts);
  const auto cert =
      dr_bound(sim, probs, UncertaintyBudget::from_alpha(0.0), exact, Direction::lower);
  CHECK(surrogate_objective(pol, sim, cert) ==
        doctest::Approx(dr_value(sim, probs, *sim.full_reward_matrix)).epsilon(1e-10));
}

TEST_CASE("analytic gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    DatasetOptions opt;
    opt.n = 5;
    opt.k = 3;
    opt.d = 2;
    const auto data = random_dataset(opt, 100 + seed);
    const auto cert = certificate_for(data, 0.3, 200 + seed);

    for (int variant = 0; variant < 2; ++variant) {
      ParametricPolicy policy =
          variant == 0
              ? ParametricPolicy(TwoLayerMlpPolicy::init(data.k(), data.d(), 5, seed))
              : ParametricPolicy(SoftmaxLinearPolicy::init(data.k(), data.d(), seed));
      // move params off zero so ReLU kinks are unlikely under the fd step
      auto params = get_params(policy);
      Rng rng(300 + seed);
      for (auto& v : params) v += rng.uniform(-0.7, 0.7);
      set_params(policy, params);

      const auto eval = surrogate_objective_and_gradient(policy, data, cert);
      const auto fd = finite_difference_gradient(
          [&](const std::vector<double>& x) {
            ParametricPolicy probe = policy;
            set_params(probe, x);
            return surrogate_objective(probe, data, cert);
          },
          params);
      for (std::size_t j = 0; j < fd.size(); ++j)
        CHECK(std::abs(eval.gradient[j] - fd[j]) <=
              1e-4 * std::max(1.0, std::abs(fd[j])));
    }
  }
}

TEST_CASE("adam_maximize basics") {
  DatasetOptions opt;
  opt.n = 1;
  opt.k = 3;
  opt.d = 2;
  const auto data = random_dataset(opt, 41);
  const auto cert = certificate_for(data, 0.2, 42);

  ParametricPolicy policy = TwoLayerMlpPolicy::init(data.k(), data.d(), 5, 5);
  const auto before = get_params(policy);
  CHECK(adam_maximize(policy, data, cert, {0, 0.1, 0.9, 0.999, 1e-8}).empty());
  CHECK(get_params(policy) == before);

  const auto frozen = adam_maximize(policy, data, cert, {50, 0.0, 0.9, 0.999, 1e-8});
  for (double v : frozen) CHECK(v == doctest::Approx(frozen.front()).epsilon(1e-15));

  // linear-in-probability objective drives mass to the argmax coefficient
  const Matrix coeffs = surrogate_coefficients(data, cert);
  Index best_action = 0;
  coeffs.row(0).maxCoeff(&best_action);
  adam_maximize(policy, data, cert, {500, 0.1, 0.9, 0.999, 1e-8});
  const auto probs = policy_probs(policy, data.contexts);
  CHECK(probs.probs(0, best_action) >= 0.95);

  // surrogate at the returned parameters improved
  ParametricPolicy fresh = TwoLayerMlpPolicy::init(data.k(), data.d(), 5, 5);
  const double initial = surrogate_objective(fresh, data, cert);
  adam_maximize(fresh, data, cert, {200, 0.01, 0.9, 0.999, 1e-8});
  CHECK(surrogate_objective(fresh, data, cert) >= initial - 1e-12);
}

TEST_CASE("policy JSON round trip") {
  const Matrix X = Matrix::Random(4, 3);
  ParametricPolicy mlp = TwoLayerMlpPolicy::init(2, 3, 7, 9);
  auto params = get_params(mlp);
  Rng rng(10);
  for (auto& v : params) v += rng.uniform(-1.0, 1.0);
  set_params(mlp, params);
  const auto back = policy_from_json(policy_to_json(mlp));
  CHECK((policy_probs(back, X).probs - policy_probs(mlp, X).probs)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  ParametricPolicy linear = SoftmaxLinearPolicy::init(3, 3, 0);
  auto lp = get_params(linear);
  for (auto& v : lp) v += rng.uniform(-1.0, 1.0);
  set_params(linear, lp);
  const auto back2 = policy_from_json(policy_to_json(linear));
  CHECK((policy_probs(back2, X).probs - policy_probs(linear, X).probs)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}
