#include "ropl/aux_erm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace ropl {

namespace {

constexpr double kLeafReg = 1.0;   // L2 regularization on leaf values
constexpr int kMinLeaf = 2;        // minimum samples per leaf
constexpr double kMinGain = 1e-12;

}  // namespace

AsymLossSpec AsymLossSpec::lower(double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
  return {alpha, Direction::lower, std::exp(2.0 * alpha)};
}

AsymLossSpec AsymLossSpec::upper(double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
  return {alpha, Direction::upper, std::exp(-2.0 * alpha)};
}

AsymLossSpec AsymLossSpec::least_squares() { return {0.0, Direction::lower, 1.0}; }

double asym_loss(double r, double f, const AsymLossSpec& spec) {
  const double d = r - f;
  return d > 0.0 ? d * d : spec.weight * d * d;
}

GradHess asym_loss_grad_hess(double r, double f, const AsymLossSpec& spec) {
  const double d = r - f;
  if (d > 0.0) return {-2.0 * d, 2.0};
  if (d < 0.0) return {-2.0 * spec.weight * d, 2.0 * spec.weight};
  return {0.0, 2.0};  // kink convention: positive side
}

double fit_constant(const std::vector<double>& rewards, const AsymLossSpec& spec) {
  if (rewards.empty()) throw std::invalid_argument("fit_constant: empty input");
  std::vector<double> sorted(rewards);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  distinct.reserve(sorted.size());
  for (double v : sorted)
    if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
  if (distinct.size() == 1) return distinct.front();

  const double w = spec.weight;
  // Scan segments [v_t, v_{t+1}]: the first-order condition is linear on
  // each with partition {r <= v_t} below and {r >= v_{t+1}} above.
  std::size_t below_cnt = 0;
  double below_sum = 0.0;
  std::size_t pos = 0;
  const std::size_t m = sorted.size();
  double total_sum = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  for (std::size_t t = 0; t + 1 < distinct.size(); ++t) {
    while (pos < m && sorted[pos] <= distinct[t]) {
      below_sum += sorted[pos];
      ++below_cnt;
      ++pos;
    }
    const std::size_t above_cnt = m - below_cnt;
    const double above_sum = total_sum - below_sum;
    const double denom = static_cast<double>(above_cnt) + w * static_cast<double>(below_cnt);
    const double cand = (above_sum + w * below_sum) / denom;
    const double eps = 1e-12 * (1.0 + std::abs(cand));
    if (cand >= distinct[t] - eps && cand <= distinct[t + 1] + eps)
      return std::clamp(cand, distinct.front(), distinct.back());
  }
  throw NumericalError("fit_constant: first-order condition scan found no root");
}

double RegressionTree::predict(const Eigen::Ref<const Vector>& x) const {
  int idx = 0;
  while (!nodes[idx].is_leaf())
    idx = x[nodes[idx].feature] < nodes[idx].threshold ? nodes[idx].left
                                                       : nodes[idx].right;
  return nodes[idx].leaf_value;
}

double TreeEnsembleModel::predict_row(const Eigen::Ref<const Vector>& x) const {
  double out = base_score;
  for (const auto& tree : trees) out += learning_rate * tree.predict(x);
  return out;
}

Vector TreeEnsembleModel::predict(const Matrix& features) const {
  Vector out(features.rows());
  for (Index i = 0; i < features.rows(); ++i) out[i] = predict_row(features.row(i));
  return out;
}

namespace {

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Exact greedy split over sorted feature values; empty choice when no
// partition improves the regularized objective.
SplitChoice find_split(const Matrix& features, const std::vector<double>& g,
                       const std::vector<double>& h,
                       const std::vector<int>& node_idx) {
  SplitChoice best;
  const std::size_t m = node_idx.size();
  if (m < 2 * kMinLeaf) return best;
  double g_total = 0.0, h_total = 0.0;
  for (int i : node_idx) {
    g_total += g[i];
    h_total += h[i];
  }
  const double parent_score = g_total * g_total / (h_total + kLeafReg);

  std::vector<std::pair<double, int>> order(m);
  for (int f = 0; f < features.cols(); ++f) {
    for (std::size_t j = 0; j < m; ++j)
      order[j] = {features(node_idx[j], f), node_idx[j]};
    std::sort(order.begin(), order.end());
    double g_left = 0.0, h_left = 0.0;
    for (std::size_t j = 0; j + 1 < m; ++j) {
      g_left += g[order[j].second];
      h_left += h[order[j].second];
      if (order[j].first == order[j + 1].first) continue;  // no gap to cut
      const std::size_t left_cnt = j + 1;
      if (left_cnt < kMinLeaf || m - left_cnt < kMinLeaf) continue;
      const double g_right = g_total - g_left;
      const double h_right = h_total - h_left;
      const double gain = g_left * g_left / (h_left + kLeafReg) +
                          g_right * g_right / (h_right + kLeafReg) - parent_score;
      if (gain > best.gain + kMinGain) {
        best.gain = gain;
        best.feature = f;
        best.threshold = 0.5 * (order[j].first + order[j + 1].first);
      }
    }
  }
  return best;
}

RegressionTree build_tree(const Matrix& features, const std::vector<double>& g,
                          const std::vector<double>& h, int max_depth,
                          std::vector<int>& leaf_of_sample) {
  RegressionTree tree;
  struct Work {
    int node;
    int depth;
    std::vector<int> idx;
  };
  std::vector<int> all(features.rows());
  std::iota(all.begin(), all.end(), 0);
  tree.nodes.emplace_back();
  std::vector<Work> stack;
  stack.push_back({0, 0, std::move(all)});
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    SplitChoice split;
    if (w.depth < max_depth) split = find_split(features, g, h, w.idx);
    if (split.feature < 0) {
      double g_sum = 0.0, h_sum = 0.0;
      for (int i : w.idx) {
        g_sum += g[i];
        h_sum += h[i];
        leaf_of_sample[i] = w.node;
      }
      tree.nodes[w.node].leaf_value = -g_sum / (h_sum + kLeafReg);
      continue;
    }
    std::vector<int> left_idx, right_idx;
    for (int i : w.idx)
      (features(i, split.feature) < split.threshold ? left_idx : right_idx)
          .push_back(i);
    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[w.node].feature = split.feature;
    tree.nodes[w.node].threshold = split.threshold;
    tree.nodes[w.node].left = left;
    tree.nodes[w.node].right = right;
    stack.push_back({left, w.depth + 1, std::move(left_idx)});
    stack.push_back({right, w.depth + 1, std::move(right_idx)});
  }
  return tree;
}

}  // namespace

TreeEnsembleModel fit_tree_ensemble(const Matrix& features, const Vector& rewards,
                                    const AsymLossSpec& spec,
                                    const BoostHyperParams& hp,
                                    const Matrix* val_features,
                                    const Vector* val_rewards, int patience) {
  const Index m = features.rows();
  if (m < 2) throw std::invalid_argument("fit_tree_ensemble needs at least 2 samples");
  if (rewards.size() != m)
    throw std::invalid_argument("rewards length differs from features");
  if (hp.learning_rate <= 0.0 || hp.max_depth < 1 || hp.n_rounds < 0)
    throw std::invalid_argument("bad boosting hyper-parameters");
  const bool use_val = val_features != nullptr && val_rewards != nullptr;
  if (use_val && val_features->rows() != val_rewards->size())
    throw std::invalid_argument("validation shapes differ");

  TreeEnsembleModel model;
  model.learning_rate = hp.learning_rate;
  {
    std::vector<double> r(rewards.data(), rewards.data() + m);
    model.base_score = fit_constant(r, spec);
  }

  Vector preds = Vector::Constant(m, model.base_score);
  Vector val_preds;
  double best_val = std::numeric_limits<double>::infinity();
  int best_rounds = 0;
  if (use_val) {
    val_preds = Vector::Constant(val_rewards->size(), model.base_score);
    double loss = 0.0;
    for (Index i = 0; i < val_rewards->size(); ++i)
      loss += asym_loss((*val_rewards)[i], val_preds[i], spec);
    best_val = loss / std::max<Index>(1, val_rewards->size());
  }

  std::vector<double> g(m), h(m);
  std::vector<int> leaf_of_sample(m, 0);
  for (int round = 0; round < hp.n_rounds; ++round) {
    for (Index i = 0; i < m; ++i) {
      const GradHess gh = asym_loss_grad_hess(rewards[i], preds[i], spec);
      g[i] = gh.g;
      h[i] = gh.h;
    }
    RegressionTree tree = build_tree(features, g, h, hp.max_depth, leaf_of_sample);
    for (Index i = 0; i < m; ++i)
      preds[i] += hp.learning_rate * tree.nodes[leaf_of_sample[i]].leaf_value;
    model.trees.push_back(std::move(tree));

    if (use_val) {
      for (Index i = 0; i < val_preds.size(); ++i)
        val_preds[i] += hp.learning_rate * model.trees.back().predict(val_features->row(i));
      double loss = 0.0;
      for (Index i = 0; i < val_rewards->size(); ++i)
        loss += asym_loss((*val_rewards)[i], val_preds[i], spec);
      loss /= std::max<Index>(1, val_rewards->size());
      if (loss < best_val) {
        best_val = loss;
        best_rounds = static_cast<int>(model.trees.size());
      } else if (static_cast<int>(model.trees.size()) - best_rounds >= patience) {
        break;
      }
    }
  }
  if (use_val) model.trees.resize(best_rounds);
  return model;
}

double ensemble_loss(const TreeEnsembleModel& model, const Matrix& features,
                     const Vector& rewards, const AsymLossSpec& spec) {
  if (features.rows() == 0) return 0.0;
  double loss = 0.0;
  for (Index i = 0; i < features.rows(); ++i)
    loss += asym_loss(rewards[i], model.predict_row(features.row(i)), spec);
  return loss / static_cast<double>(features.rows());
}

std::string TreeEnsembleModel::to_json() const {
  nlohmann::json j;
  j["base_score"] = base_score;
  j["learning_rate"] = learning_rate;
  auto& arr = j["trees"] = nlohmann::json::array();
  for (const auto& tree : trees) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& n : tree.nodes)
      t.push_back({{"f", n.feature},
                   {"t", n.threshold},
                   {"l", n.left},
                   {"r", n.right},
                   {"v", n.leaf_value}});
    arr.push_back(std::move(t));
  }
  return j.dump();
}

TreeEnsembleModel TreeEnsembleModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TreeEnsembleModel model;
  model.base_score = j.at("base_score").get<double>();
  model.learning_rate = j.at("learning_rate").get<double>();
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    for (const auto& n : t) {
      TreeNode node;
      node.feature = n.at("f").get<int>();
      node.threshold = n.at("t").get<double>();
      node.left = n.at("l").get<int>();
      node.right = n.at("r").get<int>();
      node.leaf_value = n.at("v").get<double>();
      tree.nodes.push_back(node);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

double RewardBoundsTable::m_alpha() const {
  double m = 0.0;
  if (lower.size() > 0) m = std::max(m, lower.cwiseAbs().maxCoeff());
  if (upper.size() > 0) m = std::max(m, upper.cwiseAbs().maxCoeff());
  return m;
}

std::string RewardBoundsTable::to_csv() const {
  std::string out = "i,a,lower,upper\n";
  char buf[96];
  for (Index i = 0; i < lower.rows(); ++i)
    for (Index a = 0; a < lower.cols(); ++a) {
      std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g,%.17g\n",
                    static_cast<long long>(i), static_cast<long long>(a),
                    lower(i, a), upper(i, a));
      out += buf;
    }
  return out;
}

RewardBoundsTable RewardBoundsTable::from_csv(const std::string& text) {
  std::vector<std::array<double, 4>> rows;
  std::size_t start = 0;
  bool header = true;
  Index n = 0, k = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    if (header) {
      if (line != "i,a,lower,upper")
        throw ConfigError("reward bounds CSV must start with 'i,a,lower,upper'");
      header = false;
      continue;
    }
    std::array<double, 4> vals{};
    std::size_t field = 0, fs = 0;
    for (std::size_t p = 0; p <= line.size(); ++p) {
      if (p == line.size() || line[p] == ',') {
        if (field >= 4) throw ConfigError("reward bounds CSV: too many fields");
        vals[field++] = std::strtod(line.c_str() + fs, nullptr);
        fs = p + 1;
      }
    }
    if (field != 4) throw ConfigError("reward bounds CSV: expected 4 fields");
    rows.push_back(vals);
    n = std::max(n, static_cast<Index>(vals[0]) + 1);
    k = std::max(k, static_cast<Index>(vals[1]) + 1);
  }
  if (rows.empty()) throw ConfigError("reward bounds CSV has no rows");
  RewardBoundsTable table;
  table.lower = Matrix::Constant(n, k, std::numeric_limits<double>::quiet_NaN());
  table.upper = table.lower;
  for (const auto& r : rows) {
    table.lower(static_cast<Index>(r[0]), static_cast<Index>(r[1])) = r[2];
    table.upper(static_cast<Index>(r[0]), static_cast<Index>(r[1])) = r[3];
  }
  if (table.lower.hasNaN() || table.upper.hasNaN())
    throw ConfigError("reward bounds CSV does not cover every (i,a) pair");
  return table;
}

namespace {

TreeEnsembleModel constant_model(double value) {
  TreeEnsembleModel m;
  m.base_score = value;
  return m;
}

TreeEnsembleModel fit_action_model(const Matrix& X, const Vector& r,
                                   const AsymLossSpec& spec, const HyperGrid& grid,
                                   std::uint64_t seed,
                                   const std::vector<double>& pooled_rewards) {
  const Index m = X.rows();
  if (m < 5) {
    std::vector<double> vals;
    if (m > 0)
      vals.assign(r.data(), r.data() + m);
    else
      vals = pooled_rewards;
    return constant_model(fit_constant(vals, spec));
  }

  // Action-local 80/20 split for hyper-parameter selection.
  std::vector<Index> perm(m);
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  for (Index i = m - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_below(static_cast<std::uint64_t>(i + 1))]);
  const Index m_tr = std::clamp<Index>(std::llround(0.8 * static_cast<double>(m)), 1, m - 1);
  Matrix Xtr(m_tr, X.cols()), Xva(m - m_tr, X.cols());
  Vector rtr(m_tr), rva(m - m_tr);
  for (Index i = 0; i < m_tr; ++i) {
    Xtr.row(i) = X.row(perm[i]);
    rtr[i] = r[perm[i]];
  }
  for (Index i = m_tr; i < m; ++i) {
    Xva.row(i - m_tr) = X.row(perm[i]);
    rva[i - m_tr] = r[perm[i]];
  }

  double best_loss = std::numeric_limits<double>::infinity();
  BoostHyperParams best_hp;
  int best_rounds = 0;
  for (double lr : grid.learning_rates)
    for (int depth : grid.max_depths) {
      const BoostHyperParams hp{lr, depth, grid.n_rounds};
      const TreeEnsembleModel candidate =
          fit_tree_ensemble(Xtr, rtr, spec, hp, &Xva, &rva);
      const double loss = ensemble_loss(candidate, Xva, rva, spec);
      if (loss < best_loss) {
        best_loss = loss;
        best_hp = hp;
        best_rounds = static_cast<int>(candidate.trees.size());
      }
    }

  // Refit on the full action subset at the selected configuration.
  if (best_rounds == 0) {
    std::vector<double> vals(r.data(), r.data() + m);
    TreeEnsembleModel flat = constant_model(fit_constant(vals, spec));
    flat.learning_rate = best_hp.learning_rate;
    return flat;
  }
  BoostHyperParams refit_hp = best_hp;
  refit_hp.n_rounds = best_rounds;
  return fit_tree_ensemble(X, r, spec, refit_hp);
}

}  // namespace

RewardBoundsTable SurrogateModelSet::tabulate(const Matrix& contexts) const {
  const Index n = contexts.rows();
  const Index k = static_cast<Index>(lower_models.size());
  RewardBoundsTable table;
  table.lower = Matrix(n, k);
  table.upper = Matrix(n, k);
  for (Index a = 0; a < k; ++a) {
    table.lower.col(a) = lower_models[a].predict(contexts);
    table.upper.col(a) = upper_models[a].predict(contexts);
  }
  for (Index i = 0; i < n; ++i)
    for (Index a = 0; a < k; ++a)
      if (table.lower(i, a) > table.upper(i, a)) {
        table.lower(i, a) = table.upper(i, a);
        ++table.clamp_count;
      }
  return table;
}

Matrix SurrogateModelSet::point_predictions(const Matrix& contexts) const {
  const Index n = contexts.rows();
  const Index k = static_cast<Index>(point_models.size());
  Matrix preds(n, k);
  for (Index a = 0; a < k; ++a) preds.col(a) = point_models[a].predict(contexts);
  return preds;
}

SurrogateModelSet fit_reward_surrogates(const LoggedDataset& train,
                                        const UncertaintyBudget& budget,
                                        const HyperGrid& grid, std::uint64_t seed) {
  require_valid(train);
  const Index k = train.k();
  const AsymLossSpec lower_spec = AsymLossSpec::lower(budget.alpha);
  const AsymLossSpec upper_spec = AsymLossSpec::upper(budget.alpha);
  const AsymLossSpec point_spec = AsymLossSpec::least_squares();
  std::vector<double> pooled(train.rewards.data(),
                             train.rewards.data() + train.n());

  SurrogateModelSet set;
  set.lower_models.resize(k);
  set.upper_models.resize(k);
  set.point_models.resize(k);
  std::vector<Index> action_rows;
  for (Index a = 0; a < k; ++a) {
    action_rows.clear();
    for (Index i = 0; i < train.n(); ++i)
      if (train.actions[i] == a) action_rows.push_back(i);
    const Index m = static_cast<Index>(action_rows.size());
    Matrix X(m, train.d());
    Vector r(m);
    for (Index j = 0; j < m; ++j) {
      X.row(j) = train.contexts.row(action_rows[j]);
      r[j] = train.rewards[action_rows[j]];
    }
    const std::uint64_t action_seed = mix_seed(seed, static_cast<std::uint64_t>(a));
    set.lower_models[a] = fit_action_model(X, r, lower_spec, grid, action_seed, pooled);
    set.upper_models[a] = fit_action_model(X, r, upper_spec, grid, action_seed, pooled);
    set.point_models[a] = fit_action_model(X, r, point_spec, grid, action_seed, pooled);
  }
  return set;
}

RewardBoundsTable build_reward_bounds(const LoggedDataset& train,
                                      const UncertaintyBudget& budget,
                                      const HyperGrid& grid, std::uint64_t seed) {
  return fit_reward_surrogates(train, budget, grid, seed).tabulate(train.contexts);
}

}  // namespace ropl
