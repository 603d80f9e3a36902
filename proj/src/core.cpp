#include "ropl/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ropl {

namespace {

constexpr double kRowSumTol = 1e-9;

void check_prop_row(const Eigen::Ref<const Vector>& row, int action) {
  if (action < 0 || action >= row.size())
    throw std::invalid_argument("observed action out of range");
  double sum = 0.0;
  for (Index a = 0; a < row.size(); ++a) {
    const double v = row[a];
    if (!std::isfinite(v) || v <= 0.0 || v >= 1.0)
      throw std::invalid_argument("propensity entry outside (0,1)");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kRowSumTol)
    throw std::invalid_argument("propensity row does not sum to 1");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& tok, const char* what, std::size_t line_no) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw ConfigError("row " + std::to_string(line_no) + ": bad " +
                      std::string(what) + " value '" + tok + "'");
  return v;
}

long parse_int(const std::string& tok, const char* what, std::size_t line_no) {
  long v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw ConfigError("row " + std::to_string(line_no) + ": bad " +
                      std::string(what) + " value '" + tok + "'");
  return v;
}

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

UncertaintyBudget UncertaintyBudget::from_alpha(double alpha, double cutoff_q) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must be a nonnegative real");
  if (!(cutoff_q >= 0.0) || cutoff_q >= 1.0)
    throw std::invalid_argument("cutoff_q must lie in [0,1)");
  UncertaintyBudget b;
  b.alpha = alpha;
  b.ratio_hi = std::exp(alpha);
  b.ratio_lo = 1.0 / b.ratio_hi;  // keeps ratio_lo * ratio_hi == 1 exactly-ish
  b.cutoff_q = cutoff_q;
  return b;
}

const char* to_string(Direction d) {
  return d == Direction::lower ? "lower" : "upper";
}

Direction direction_from_string(const std::string& s) {
  if (s == "lower") return Direction::lower;
  if (s == "upper") return Direction::upper;
  throw ConfigError("unknown direction '" + s + "' (expected lower|upper)");
}

ValidationReport validate_dataset(const LoggedDataset& data) {
  ValidationReport rep;
  const Index n = data.n();
  const Index k = data.k();
  auto add = [&rep](std::string kind, Index row, std::string detail) {
    rep.issues.push_back({std::move(kind), row, std::move(detail)});
  };

  if (n < 1) add("shape", -1, "dataset must contain at least one sample");
  if (k < 2) add("shape", -1, "dataset must expose at least two actions");
  if (data.contexts.rows() != n)
    add("shape", -1, "contexts row count differs from propensities");
  if (static_cast<Index>(data.actions.size()) != n)
    add("shape", -1, "actions length differs from propensities");
  if (data.rewards.size() != n)
    add("shape", -1, "rewards length differs from propensities");
  if (data.full_reward_matrix &&
      (data.full_reward_matrix->rows() != n || data.full_reward_matrix->cols() != k))
    add("shape", -1, "full reward matrix shape differs from propensities");
  if (!rep.ok()) return rep;

  for (Index i = 0; i < n; ++i) {
    double sum = 0.0;
    bool row_ok = true;
    for (Index a = 0; a < k; ++a) {
      const double v = data.propensities(i, a);
      if (!std::isfinite(v)) {
        add("nan", i, "propensity entry is not finite");
        row_ok = false;
        break;
      }
      if (v <= 0.0 || v >= 1.0) {
        add("range", i, "propensity entry outside (0,1)");
        row_ok = false;
        break;
      }
      sum += v;
    }
    if (row_ok && std::abs(sum - 1.0) > kRowSumTol)
      add("row-sum", i, "propensity row sums to " + std::to_string(sum));
    if (data.actions[i] < 0 || data.actions[i] >= k)
      add("action", i, "action index out of range");
    if (!std::isfinite(data.rewards[i])) add("nan", i, "reward is not finite");
    for (Index c = 0; c < data.contexts.cols(); ++c)
      if (!std::isfinite(data.contexts(i, c))) {
        add("nan", i, "context entry is not finite");
        break;
      }
  }
  return rep;
}

void require_valid(const LoggedDataset& data) {
  const ValidationReport rep = validate_dataset(data);
  if (rep.ok()) return;
  std::ostringstream msg;
  msg << "invalid dataset:";
  const std::size_t shown = std::min<std::size_t>(rep.issues.size(), 4);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& iss = rep.issues[i];
    msg << " [" << iss.kind;
    if (iss.row >= 0) msg << " row " << iss.row;
    msg << ": " << iss.detail << "]";
  }
  if (rep.issues.size() > shown)
    msg << " (+" << rep.issues.size() - shown << " more)";
  throw std::invalid_argument(msg.str());
}

FeasibleInterval feasible_interval(const Eigen::Ref<const Vector>& prop_row,
                                   int observed_action,
                                   const UncertaintyBudget& budget) {
  check_prop_row(prop_row, observed_action);
  const double p0 = prop_row[observed_action];
  double others_hi = 0.0;  // sum of per-action upper masses, each capped at 1
  double others_lo = 0.0;
  for (Index a = 0; a < prop_row.size(); ++a) {
    if (a == observed_action) continue;
    others_hi += std::min(budget.ratio_hi * prop_row[a], 1.0);
    others_lo += budget.ratio_lo * prop_row[a];
  }
  double lo = std::max(budget.ratio_lo * p0, 1.0 - others_hi);
  double hi = std::min(budget.ratio_hi * p0, 1.0 - others_lo);
  hi = std::min(hi, 1.0);
  // pi0 itself is feasible, so lo <= hi up to the row-sum tolerance.
  if (lo > hi) lo = hi;
  return {lo, hi};
}

FeasibleInterval feasible_interval_truncated(
    const Eigen::Ref<const Vector>& prop_row, int observed_action,
    const UncertaintyBudget& budget) {
  check_prop_row(prop_row, observed_action);
  const double p0 = prop_row[observed_action];
  const double lo = budget.ratio_lo * std::max(budget.cutoff_q, p0);
  const double hi = std::min(budget.ratio_hi * p0, 1.0);
  if (lo > hi)
    throw std::invalid_argument(
        "infeasible truncation configuration: e^{-alpha} max(q, pi0) = " +
        format_double(lo) + " exceeds " + format_double(hi));
  return {lo, hi};
}

LoggedDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty dataset file");
  const auto header = split_csv_line(line);

  Index d = 0, k = 0;
  bool has_full = false;
  {
    std::size_t pos = 0;
    while (pos < header.size() && header[pos] == "ctx_" + std::to_string(pos)) ++pos;
    d = static_cast<Index>(pos);
    if (pos >= header.size() || header[pos] != "action")
      throw ConfigError("dataset header must read ctx_0..ctx_{d-1},action,...");
    ++pos;
    if (pos >= header.size() || header[pos] != "reward")
      throw ConfigError("dataset header missing 'reward' column");
    ++pos;
    std::size_t kp = 0;
    while (pos + kp < header.size() && header[pos + kp] == "prop_" + std::to_string(kp)) ++kp;
    k = static_cast<Index>(kp);
    if (k < 2) throw ConfigError("dataset header needs at least prop_0,prop_1");
    pos += kp;
    if (pos < header.size()) {
      std::size_t rp = 0;
      while (pos + rp < header.size() && header[pos + rp] == "r_" + std::to_string(rp)) ++rp;
      if (static_cast<Index>(rp) != k || pos + rp != header.size())
        throw ConfigError("trailing dataset columns must be r_0..r_{k-1}");
      has_full = true;
    }
  }

  std::vector<double> ctx_buf, rew_buf, prop_buf, full_buf;
  std::vector<int> act_buf;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tok = split_csv_line(line);
    const std::size_t expected =
        static_cast<std::size_t>(d) + 2 + static_cast<std::size_t>(k) * (has_full ? 2 : 1);
    if (tok.size() != expected)
      throw ConfigError("row " + std::to_string(line_no) + ": expected " +
                        std::to_string(expected) + " fields, got " +
                        std::to_string(tok.size()));
    std::size_t p = 0;
    for (Index c = 0; c < d; ++c) ctx_buf.push_back(parse_double(tok[p++], "context", line_no));
    act_buf.push_back(static_cast<int>(parse_int(tok[p++], "action", line_no)));
    rew_buf.push_back(parse_double(tok[p++], "reward", line_no));
    for (Index a = 0; a < k; ++a) prop_buf.push_back(parse_double(tok[p++], "propensity", line_no));
    if (has_full)
      for (Index a = 0; a < k; ++a) full_buf.push_back(parse_double(tok[p++], "reward matrix", line_no));
  }

  const Index n = static_cast<Index>(act_buf.size());
  if (n == 0) throw ConfigError("dataset file has a header but no rows");
  LoggedDataset data;
  data.contexts = Matrix(n, d);
  data.propensities = Matrix(n, k);
  data.rewards = Vector(n);
  data.actions = std::move(act_buf);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < d; ++c) data.contexts(i, c) = ctx_buf[i * d + c];
    data.rewards[i] = rew_buf[i];
    for (Index a = 0; a < k; ++a) data.propensities(i, a) = prop_buf[i * k + a];
  }
  if (has_full) {
    Matrix full(n, k);
    for (Index i = 0; i < n; ++i)
      for (Index a = 0; a < k; ++a) full(i, a) = full_buf[i * k + a];
    data.full_reward_matrix = std::move(full);
  }
  return data;
}

void write_dataset_csv(const LoggedDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file '" + path + "'");
  const Index n = data.n(), d = data.d(), k = data.k();
  for (Index c = 0; c < d; ++c) out << "ctx_" << c << ",";
  out << "action,reward";
  for (Index a = 0; a < k; ++a) out << ",prop_" << a;
  if (data.full_reward_matrix)
    for (Index a = 0; a < k; ++a) out << ",r_" << a;
  out << "\n";
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < d; ++c) out << format_double(data.contexts(i, c)) << ",";
    out << data.actions[i] << "," << format_double(data.rewards[i]);
    for (Index a = 0; a < k; ++a) out << "," << format_double(data.propensities(i, a));
    if (data.full_reward_matrix)
      for (Index a = 0; a < k; ++a)
        out << "," << format_double((*data.full_reward_matrix)(i, a));
    out << "\n";
  }
}

}  // namespace ropl
