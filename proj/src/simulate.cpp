#include "ropl/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "ropl/bounds.hpp"

namespace ropl {

namespace {

constexpr double kPropensityFloor = 1e-6;

Matrix softmax_rows_scaled(const Matrix& logits, double inv_temp) {
  Matrix probs(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff() * inv_temp;
    double sum = 0.0;
    for (Index a = 0; a < logits.cols(); ++a) {
      probs(i, a) = std::exp(logits(i, a) * inv_temp - m);
      sum += probs(i, a);
    }
    probs.row(i) /= sum;
  }
  return probs;
}

/// Full-batch gradient descent on the multinomial cross-entropy; small and
/// deterministic, which is all the synthetic logging model needs.
struct LogisticModel {
  Matrix weights;  // k x d
  Vector bias;     // k
  Vector mean;     // d, standardization
  Vector scale;    // d

  Matrix logits(const Matrix& X) const {
    Matrix Z = (X.rowwise() - mean.transpose()).array().rowwise() /
               scale.transpose().array();
    return (Z * weights.transpose()).rowwise() + bias.transpose();
  }
};

LogisticModel fit_logistic(const Matrix& X, const std::vector<int>& y, Index k,
                           int iters = 300, double lr = 0.5) {
  const Index m = X.rows(), d = X.cols();
  LogisticModel model;
  model.mean = X.colwise().mean();
  model.scale = Vector(d);
  for (Index j = 0; j < d; ++j) {
    double var = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double c = X(i, j) - model.mean[j];
      var += c * c;
    }
    model.scale[j] = std::max(std::sqrt(var / static_cast<double>(m)), 1e-12);
  }
  Matrix Z = (X.rowwise() - model.mean.transpose()).array().rowwise() /
             model.scale.transpose().array();
  model.weights = Matrix::Zero(k, d);
  model.bias = Vector::Zero(k);
  for (int it = 0; it < iters; ++it) {
    Matrix logits = (Z * model.weights.transpose()).rowwise() + model.bias.transpose();
    Matrix probs = softmax_rows_scaled(logits, 1.0);
    for (Index i = 0; i < m; ++i) probs(i, y[i]) -= 1.0;
    probs /= static_cast<double>(m);
    model.weights -= lr * (probs.transpose() * Z);
    model.bias -= lr * probs.colwise().sum().transpose();
  }
  return model;
}

LoggedDataset subset(const LoggedDataset& data, const std::vector<Index>& rows) {
  LoggedDataset out;
  const Index n = static_cast<Index>(rows.size());
  out.contexts = Matrix(n, data.d());
  out.propensities = Matrix(n, data.k());
  out.rewards = Vector(n);
  out.actions.resize(n);
  if (data.full_reward_matrix) out.full_reward_matrix = Matrix(n, data.k());
  for (Index i = 0; i < n; ++i) {
    const Index src = rows[i];
    out.contexts.row(i) = data.contexts.row(src);
    out.propensities.row(i) = data.propensities.row(src);
    out.rewards[i] = data.rewards[src];
    out.actions[i] = data.actions[src];
    if (data.full_reward_matrix)
      out.full_reward_matrix->row(i) = data.full_reward_matrix->row(src);
  }
  return out;
}

std::vector<Index> permutation(Index n, std::uint64_t seed, bool identity) {
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  if (identity) return order;
  Rng rng(seed);
  for (Index i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_below(static_cast<std::uint64_t>(i + 1))]);
  return order;
}

}  // namespace

EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "ips") return EstimatorKind::ips;
  if (s == "tips") return EstimatorKind::tips;
  if (s == "nips-greedy" || s == "nips_greedy") return EstimatorKind::nips_greedy;
  if (s == "dr") return EstimatorKind::dr;
  throw ConfigError("unknown estimator '" + s + "' (expected ips|tips|nips-greedy|dr)");
}

const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::ips: return "ips";
    case EstimatorKind::tips: return "tips";
    case EstimatorKind::nips_greedy: return "nips-greedy";
    default: return "dr";
  }
}

LoggedDataset convert_supervised(const Matrix& features,
                                 const std::vector<int>& labels,
                                 const LoggingConfig& logging, std::uint64_t seed) {
  const Index n = features.rows();
  if (n < 1 || static_cast<Index>(labels.size()) != n)
    throw std::invalid_argument("features and labels must align and be non-empty");
  if (!(logging.fit_fraction > 0.0 && logging.fit_fraction < 1.0))
    throw std::invalid_argument("logging fit fraction must lie in (0,1)");
  if (!(logging.temperature > 0.0))
    throw std::invalid_argument("logging temperature must be positive");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  if (k < 2) throw std::invalid_argument("need at least two classes");
  {
    std::set<int> seen(labels.begin(), labels.end());
    if (*seen.begin() < 0) throw std::invalid_argument("labels must be nonnegative");
    if (static_cast<int>(seen.size()) < k)
      throw std::invalid_argument("fewer than k distinct labels present");
  }

  // Logging model on a seeded subsample.
  const auto order = permutation(n, mix_seed(logging.seed, 0x10667), false);
  const Index m_fit = std::clamp<Index>(
      static_cast<Index>(std::llround(logging.fit_fraction * static_cast<double>(n))),
      std::min<Index>(n, k), n);
  Matrix Xfit(m_fit, features.cols());
  std::vector<int> yfit(m_fit);
  for (Index i = 0; i < m_fit; ++i) {
    Xfit.row(i) = features.row(order[i]);
    yfit[i] = labels[order[i]];
  }
  const LogisticModel model = fit_logistic(Xfit, yfit, k);

  Matrix propensities =
      softmax_rows_scaled(model.logits(features), 1.0 / logging.temperature);
  // Keep rows strictly inside the simplex so extreme logits cannot produce
  // zero propensities; the floored row is the actual sampling distribution.
  for (Index i = 0; i < n; ++i) {
    for (Index a = 0; a < k; ++a)
      propensities(i, a) = std::max(propensities(i, a), kPropensityFloor);
    propensities.row(i) /= propensities.row(i).sum();
  }

  LoggedDataset data;
  data.contexts = features;
  data.propensities = propensities;
  data.actions.resize(n);
  data.rewards = Vector(n);
  data.full_reward_matrix = Matrix::Zero(n, k);
  for (Index i = 0; i < n; ++i)
    (*data.full_reward_matrix)(i, labels[i]) = 1.0;
  for (Index i = 0; i < n; ++i) {
    Rng row_rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const double u = row_rng.uniform();
    double cum = 0.0;
    int a = k - 1;
    for (Index b = 0; b < k; ++b) {
      cum += propensities(i, b);
      if (u < cum) {
        a = static_cast<int>(b);
        break;
      }
    }
    data.actions[i] = a;
    data.rewards[i] = (*data.full_reward_matrix)(i, a);
  }
  return data;
}

double oracle_value(const PolicyProbs& policy, const Matrix& full_reward_matrix) {
  if (policy.probs.rows() != full_reward_matrix.rows() ||
      policy.probs.cols() != full_reward_matrix.cols())
    throw std::invalid_argument("policy and reward matrix shapes differ");
  if (policy.probs.rows() == 0) throw std::invalid_argument("empty inputs");
  return policy.probs.cwiseProduct(full_reward_matrix).sum() /
         static_cast<double>(policy.probs.rows());
}

Matrix sample_perturbed_policy(const Matrix& propensities,
                               const UncertaintyBudget& budget, std::uint64_t seed) {
  if (budget.alpha == 0.0) return propensities;
  const Index n = propensities.rows(), k = propensities.cols();
  Matrix out(n, k);
  for (Index i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    double beta = budget.alpha / 2.0;
    int attempts = 0;
    for (;;) {
      Vector row(k);
      for (Index a = 0; a < k; ++a)
        row[a] = propensities(i, a) * std::exp(rng.uniform(-beta, beta));
      row /= row.sum();
      bool ok = true;
      for (Index a = 0; a < k && ok; ++a) {
        const double ratio = row[a] / propensities(i, a);
        ok = ratio >= budget.ratio_lo && ratio <= budget.ratio_hi;
      }
      if (ok) {
        out.row(i) = row;
        break;
      }
      if (++attempts >= 100) {
        beta *= 0.5;  // shrinking the draw range guarantees termination
        attempts = 0;
      }
    }
  }
  return out;
}

double fluctuation(const LoggedDataset& data, const PolicyProbs& policy,
                   const UncertaintyBudget& budget, EstimatorKind kind,
                   const RewardBoundsTable* bounds, const Matrix* point_preds) {
  switch (kind) {
    case EstimatorKind::ips:
      return ips_value(data, policy) -
             ips_bound(data, policy, budget, Direction::lower).value;
    case EstimatorKind::tips:
      return tips_value(data, policy, budget.cutoff_q) -
             tips_bound(data, policy, budget, Direction::lower).value;
    case EstimatorKind::nips_greedy:
      return nips_value(data, policy) - nips_bound_greedy(data, policy, budget);
    case EstimatorKind::dr:
      if (bounds == nullptr || point_preds == nullptr)
        throw std::invalid_argument(
            "dr fluctuation needs reward bounds and point predictions");
      return dr_value(data, policy, *point_preds) -
             dr_bound(data, policy, budget, *bounds, Direction::lower).value;
  }
  throw std::invalid_argument("unknown estimator kind");
}

SplitResult split(const LoggedDataset& data, const SplitSpec& spec) {
  if (!(spec.train > 0.0 && spec.val > 0.0 && spec.test > 0.0))
    throw std::invalid_argument("split fractions must be positive");
  if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-12)
    throw std::invalid_argument("split fractions must sum to 1");
  require_valid(data);
  const Index n = data.n();
  const auto order = permutation(n, mix_seed(spec.seed, 0x5911), spec.by_order);
  const Index n_tr = static_cast<Index>(std::llround(spec.train * static_cast<double>(n)));
  const Index n_tv =
      static_cast<Index>(std::llround((spec.train + spec.val) * static_cast<double>(n)));
  if (n_tr < 1 || n_tv <= n_tr || n_tv >= n)
    throw std::invalid_argument("dataset too small for the requested split");
  SplitResult out;
  out.train = subset(data, {order.begin(), order.begin() + n_tr});
  out.val = subset(data, {order.begin() + n_tr, order.begin() + n_tv});
  out.test = subset(data, {order.begin() + n_tv, order.end()});
  return out;
}

std::pair<LoggedDataset, LoggedDataset> rm_split(const LoggedDataset& train,
                                                 const SplitSpec& spec) {
  if (!(spec.rm_train > 0.0 && spec.rm_val > 0.0))
    throw std::invalid_argument("rm split fractions must be positive");
  if (std::abs(spec.rm_train + spec.rm_val - 1.0) > 1e-12)
    throw std::invalid_argument("rm split fractions must sum to 1");
  require_valid(train);
  const Index n = train.n();
  const auto order = permutation(n, mix_seed(spec.seed, 0x8020), spec.by_order);
  const Index n_tr =
      static_cast<Index>(std::llround(spec.rm_train * static_cast<double>(n)));
  if (n_tr < 1 || n_tr >= n)
    throw std::invalid_argument("dataset too small for the rm split");
  return {subset(train, {order.begin(), order.begin() + n_tr}),
          subset(train, {order.begin() + n_tr, order.end()})};
}

std::pair<Matrix, std::vector<int>> read_supervised_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open supervised file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty supervised file");
  std::vector<std::string> header;
  {
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        header.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    header.push_back(cur);
  }
  Index d = 0;
  while (static_cast<std::size_t>(d) < header.size() &&
         header[d] == "ctx_" + std::to_string(d))
    ++d;
  if (static_cast<std::size_t>(d) + 1 != header.size() || header.back() != "label")
    throw ConfigError("supervised header must read ctx_0..ctx_{d-1},label");

  std::vector<double> ctx;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t start = 0, field = 0;
    for (std::size_t p = 0; p <= line.size(); ++p) {
      if (p == line.size() || line[p] == ',') {
        const std::string tok = line.substr(start, p - start);
        if (field < static_cast<std::size_t>(d)) {
          double v = 0.0;
          auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
          if (ec != std::errc{} || ptr != tok.data() + tok.size())
            throw ConfigError("row " + std::to_string(line_no) + ": bad context '" + tok + "'");
          ctx.push_back(v);
        } else if (field == static_cast<std::size_t>(d)) {
          int v = 0;
          auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
          if (ec != std::errc{} || ptr != tok.data() + tok.size())
            throw ConfigError("row " + std::to_string(line_no) + ": bad label '" + tok + "'");
          labels.push_back(v);
        } else {
          throw ConfigError("row " + std::to_string(line_no) + ": too many fields");
        }
        ++field;
        start = p + 1;
      }
    }
    if (field != static_cast<std::size_t>(d) + 1)
      throw ConfigError("row " + std::to_string(line_no) + ": missing fields");
  }
  const Index n = static_cast<Index>(labels.size());
  if (n == 0) throw ConfigError("supervised file has no rows");
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) X(i, j) = ctx[static_cast<std::size_t>(i * d + j)];
  return {std::move(X), std::move(labels)};
}

void write_supervised_csv(const Matrix& features, const std::vector<int>& labels,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write supervised file '" + path + "'");
  for (Index j = 0; j < features.cols(); ++j) out << "ctx_" << j << ",";
  out << "label\n";
  char buf[40];
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index j = 0; j < features.cols(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), features(i, j));
      (void)ec;
      out.write(buf, ptr - buf);
      out << ",";
    }
    out << labels[i] << "\n";
  }
}

}  // namespace ropl
