#include "ropl/bounds.hpp"

#include <cmath>
#include <vector>

#include "json.hpp"

namespace ropl {

namespace {

constexpr double kDinkelbachTol = 1e-10;
constexpr int kDinkelbachMaxIter = 200;

void check_bounds_table(const LoggedDataset& data, const RewardBoundsTable& bounds) {
  if (bounds.lower.rows() != data.n() || bounds.lower.cols() != data.k() ||
      bounds.upper.rows() != data.n() || bounds.upper.cols() != data.k())
    throw std::invalid_argument("reward bounds table must cover every (sample, action) pair");
}

BoundCertificate ratio_endpoint_bound(const LoggedDataset& data,
                                      const PolicyProbs& policy,
                                      const UncertaintyBudget& budget,
                                      Direction direction, bool truncated) {
  require_valid(data);
  require_policy_probs(data, policy);
  const Index n = data.n();
  BoundCertificate cert;
  cert.direction = direction;
  cert.p_star = Vector(n);
  std::vector<double> terms(n);
  parallel_for(n, [&](std::size_t i) {
    const Index row = static_cast<Index>(i);
    const int a = data.actions[row];
    const FeasibleInterval iv =
        truncated ? feasible_interval_truncated(data.propensities.row(row), a, budget)
                  : feasible_interval(data.propensities.row(row), a, budget);
    const double c = policy.probs(row, a) * data.rewards[row];
    double p;
    if (direction == Direction::lower)
      p = c >= 0.0 ? iv.hi : iv.lo;
    else
      p = c >= 0.0 ? iv.lo : iv.hi;
    cert.p_star[row] = p;
    terms[i] = c / p;
  });
  double acc = 0.0;
  for (double t : terms) acc += t;
  cert.value = acc / static_cast<double>(n);
  return cert;
}

/// p(a_i|x_i) range under the sub-simplex variant (sum over actions <= 1),
/// used by the nIPS program.
FeasibleInterval nips_interval(const Eigen::Ref<const Vector>& prop_row,
                               int observed_action, const UncertaintyBudget& budget) {
  const double p0 = prop_row[observed_action];
  double others_lo = 0.0;
  for (Index a = 0; a < prop_row.size(); ++a)
    if (a != static_cast<Index>(observed_action)) others_lo += budget.ratio_lo * prop_row[a];
  const double lo = budget.ratio_lo * p0;
  double hi = std::min(budget.ratio_hi * p0, 1.0 - others_lo);
  if (hi < lo) hi = lo;
  return {lo, hi};
}

}  // namespace

BoundCertificate ips_bound(const LoggedDataset& data, const PolicyProbs& policy,
                           const UncertaintyBudget& budget, Direction direction) {
  return ratio_endpoint_bound(data, policy, budget, direction, false);
}

BoundCertificate tips_bound(const LoggedDataset& data, const PolicyProbs& policy,
                            const UncertaintyBudget& budget, Direction direction) {
  return ratio_endpoint_bound(data, policy, budget, direction, true);
}

double nips_bound_greedy(const LoggedDataset& data, const PolicyProbs& policy,
                         const UncertaintyBudget& budget) {
  const BoundCertificate cert = ips_bound(data, policy, budget, Direction::lower);
  double control = 0.0;
  for (Index i = 0; i < data.n(); ++i)
    control += policy.probs(i, data.actions[i]) / cert.p_star[i];
  if (control == 0.0)
    throw NumericalError(
        "nIPS control covariate is degenerate: the candidate puts zero mass "
        "on every logged action");
  return static_cast<double>(data.n()) * cert.value / control;
}

double nips_bound_exact(const LoggedDataset& data, const PolicyProbs& policy,
                        const UncertaintyBudget& budget, Index max_vars) {
  require_valid(data);
  require_policy_probs(data, policy);
  const Index n = data.n();
  if (n * data.k() > max_vars)
    throw std::invalid_argument(
        "nips_bound_exact is guarded to n*k <= " + std::to_string(max_vars) +
        " optimization variables; use nips_bound_greedy at scale");

  // Variables w(a_i, x_i) = 1/p(a_i|x_i); masses at unobserved actions only
  // relax the sub-simplex constraint and are eliminated at their extremes.
  std::vector<double> v_lo(n), v_hi(n), num_coef(n), den_coef(n);
  double den_probe = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int a = data.actions[i];
    const FeasibleInterval iv = nips_interval(data.propensities.row(i), a, budget);
    v_lo[i] = 1.0 / iv.hi;
    v_hi[i] = 1.0 / iv.lo;
    den_coef[i] = policy.probs(i, a);
    num_coef[i] = policy.probs(i, a) * data.rewards[i];
    den_probe += den_coef[i];
  }
  if (den_probe == 0.0)
    throw NumericalError(
        "nIPS objective is degenerate: the candidate puts zero mass on every "
        "logged action");

  // Dinkelbach: each parametric subproblem is linear per coordinate.
  double lambda = 0.0;
  {
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double v0 = 1.0 / data.propensities(i, data.actions[i]);
      num += num_coef[i] * v0;
      den += den_coef[i] * v0;
    }
    lambda = num / den;
  }
  for (int iter = 0; iter < kDinkelbachMaxIter; ++iter) {
    double num = 0.0, den = 0.0, residual = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double coef = num_coef[i] - lambda * den_coef[i];
      const double v = coef >= 0.0 ? v_lo[i] : v_hi[i];
      num += num_coef[i] * v;
      den += den_coef[i] * v;
      residual += coef * v;
    }
    if (std::abs(residual) <= kDinkelbachTol) return num / den;
    lambda = num / den;
  }
  throw NumericalError("nips_bound_exact: Dinkelbach iteration did not converge");
}

double rm_bound(const LoggedDataset& data, const PolicyProbs& policy,
                const UncertaintyBudget& budget, const RewardBoundsTable& bounds,
                const Matrix& point_model_preds, Direction direction) {
  require_valid(data);
  require_policy_probs(data, policy);
  check_bounds_table(data, bounds);
  if (point_model_preds.rows() != data.n() || point_model_preds.cols() != data.k())
    throw std::invalid_argument("point model predictions must be n x k");

  const Index n = data.n(), k = data.k();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    double row_val = 0.0;
    for (Index a = 0; a < k; ++a) {
      const double pi0 = data.propensities(i, a);
      const double mass_lo = budget.ratio_lo * pi0;
      const double mass_hi = std::min(budget.ratio_hi * pi0, 1.0);
      const double surrogate =
          direction == Direction::lower ? bounds.lower(i, a) : bounds.upper(i, a);
      const double coef = point_model_preds(i, a) - surrogate;
      double mass;
      if (direction == Direction::lower)
        mass = coef >= 0.0 ? mass_lo : mass_hi;
      else
        mass = coef >= 0.0 ? mass_hi : mass_lo;
      row_val += policy.probs(i, a) * (surrogate + mass * coef);
    }
    acc += row_val;
  }
  return acc / static_cast<double>(n);
}

BoundCertificate dr_bound(const LoggedDataset& data, const PolicyProbs& policy,
                          const UncertaintyBudget& budget,
                          const RewardBoundsTable& bounds, Direction direction) {
  require_valid(data);
  require_policy_probs(data, policy);
  check_bounds_table(data, bounds);

  const Index n = data.n(), k = data.k();
  BoundCertificate cert;
  cert.direction = direction;
  cert.p_star = Vector(n);
  cert.r_star = Matrix(n, k);
  Matrix& r_star = *cert.r_star;
  std::vector<double> terms(n);
  const bool lower = direction == Direction::lower;

  parallel_for(n, [&](std::size_t s) {
    const Index i = static_cast<Index>(s);
    const int ai = data.actions[i];
    const FeasibleInterval iv = feasible_interval(data.propensities.row(i), ai, budget);

    // Counterfactual coordinates carry coefficient pi(a|x_i) >= 0; the
    // observed coordinate's coefficient pi(a_i|x_i)(1 - 1/p) is <= 0 for
    // every feasible p. Zero coefficients break to the upper surrogate.
    for (Index a = 0; a < k; ++a) {
      if (a == static_cast<Index>(ai)) continue;
      const double coef = policy.probs(i, a);
      if (lower)
        r_star(i, a) = coef > 0.0 ? bounds.lower(i, a) : bounds.upper(i, a);
      else
        r_star(i, a) = bounds.upper(i, a);
    }
    const double pi_obs = policy.probs(i, ai);
    if (lower)
      r_star(i, ai) = bounds.upper(i, ai);
    else
      r_star(i, ai) = pi_obs > 0.0 ? bounds.lower(i, ai) : bounds.upper(i, ai);

    const double residual_coef = pi_obs * (data.rewards[i] - r_star(i, ai));
    double p;
    if (lower)
      p = residual_coef >= 0.0 ? iv.hi : iv.lo;
    else
      p = residual_coef > 0.0 ? iv.lo : iv.hi;
    cert.p_star[i] = p;

    double term = residual_coef / p;
    for (Index a = 0; a < k; ++a) term += policy.probs(i, a) * r_star(i, a);
    terms[s] = term;
  });

  double acc = 0.0;
  for (double t : terms) acc += t;
  cert.value = acc / static_cast<double>(n);
  return cert;
}

std::string certificate_to_json(const BoundCertificate& cert) {
  nlohmann::json j;
  j["value"] = cert.value;
  j["direction"] = to_string(cert.direction);
  j["p_star"] = std::vector<double>(cert.p_star.data(),
                                    cert.p_star.data() + cert.p_star.size());
  if (cert.r_star) {
    auto rows = nlohmann::json::array();
    for (Index i = 0; i < cert.r_star->rows(); ++i) {
      std::vector<double> row(cert.r_star->cols());
      for (Index a = 0; a < cert.r_star->cols(); ++a) row[a] = (*cert.r_star)(i, a);
      rows.push_back(std::move(row));
    }
    j["r_star"] = std::move(rows);
  }
  return j.dump();
}

BoundCertificate certificate_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  BoundCertificate cert;
  cert.value = j.at("value").get<double>();
  cert.direction = direction_from_string(j.at("direction").get<std::string>());
  const auto p = j.at("p_star").get<std::vector<double>>();
  cert.p_star = Eigen::Map<const Vector>(p.data(), static_cast<Index>(p.size()));
  if (j.contains("r_star")) {
    const auto& rows = j.at("r_star");
    const Index n = static_cast<Index>(rows.size());
    const Index k = n > 0 ? static_cast<Index>(rows[0].size()) : 0;
    Matrix r(n, k);
    for (Index i = 0; i < n; ++i)
      for (Index a = 0; a < k; ++a) r(i, a) = rows[i][a].get<double>();
    cert.r_star = std::move(r);
  }
  return cert;
}

}  // namespace ropl
