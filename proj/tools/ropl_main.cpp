// Command-line front end: supervised-to-bandit conversion, robust value
// bounds, minorize-maximization learning, policy evaluation, and the
// generalization-slack calculator.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ropl/bounds.hpp"
#include "ropl/cli_config.hpp"
#include "ropl/learn.hpp"
#include "ropl/simulate.hpp"
#include "ropl/theory.hpp"

namespace {

using nlohmann::json;
using namespace ropl;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file '" + path + "'");
  out << content;
}

std::string flags_digest(const json& flags) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(flags.dump())));
  return buf;
}

Matrix read_point_preds(const std::string& path, Index n, Index k) {
  const std::string text = read_file(path);
  Matrix preds = Matrix::Constant(n, k, std::numeric_limits<double>::quiet_NaN());
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "i,a,pred")
    throw ConfigError("point predictions CSV must start with 'i,a,pred'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long i = -1, a = -1;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%ld,%ld,%lf", &i, &a, &v) != 3)
      throw ConfigError("bad point predictions row '" + line + "'");
    if (i < 0 || i >= n || a < 0 || a >= k)
      throw ConfigError("point predictions index out of range in '" + line + "'");
    preds(i, a) = v;
  }
  if (preds.hasNaN())
    throw ConfigError("point predictions CSV does not cover every (i,a) pair");
  return preds;
}

std::string point_preds_csv(const Matrix& preds) {
  std::string out = "i,a,pred\n";
  char buf[80];
  for (Index i = 0; i < preds.rows(); ++i)
    for (Index a = 0; a < preds.cols(); ++a) {
      std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g\n", static_cast<long long>(i),
                    static_cast<long long>(a), preds(i, a));
      out += buf;
    }
  return out;
}

struct ConvertOpts {
  std::string input, output, config;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_convert(const ConvertOpts& opt) {
  RunConfig cfg = RunConfig::load(opt.config);
  if (opt.seed_set) cfg.seed = opt.seed;
  auto [features, labels] = read_supervised_csv(opt.input);
  LoggingConfig logging = cfg.logging;
  logging.seed = mix_seed(cfg.seed, 0xA1);
  const LoggedDataset data =
      convert_supervised(features, labels, logging, mix_seed(cfg.seed, 0xA2));
  write_dataset_csv(data, opt.output);

  json meta;
  meta["command"] = "convert";
  meta["config_digest"] = cfg.digest_hex();
  meta["seed"] = cfg.seed;
  meta["n"] = data.n();
  meta["d"] = data.d();
  meta["k"] = data.k();
  meta["output"] = opt.output;
  write_file(opt.output + ".meta.json", meta.dump() + "\n");
  std::cout << meta.dump() << "\n";
  return 0;
}

struct BoundOpts {
  std::string data, policy, estimator = "ips", direction = "lower";
  std::string bounds_path, point_preds_path, certificate_path;
  double alpha = 0.0, q = 0.0;
};

int run_bound(const BoundOpts& opt) {
  const LoggedDataset data = read_dataset_csv(opt.data);
  const ParametricPolicy policy = policy_from_json(read_file(opt.policy));
  const PolicyProbs probs = policy_probs(policy, data.contexts);
  const UncertaintyBudget budget = UncertaintyBudget::from_alpha(opt.alpha, opt.q);
  const Direction dir = direction_from_string(opt.direction);

  double value = 0.0, point = 0.0;
  std::optional<BoundCertificate> cert;
  if (opt.estimator == "ips") {
    cert = ips_bound(data, probs, budget, dir);
    value = cert->value;
    point = ips_value(data, probs);
  } else if (opt.estimator == "tips") {
    cert = tips_bound(data, probs, budget, dir);
    value = cert->value;
    point = tips_value(data, probs, opt.q);
  } else if (opt.estimator == "nips-greedy" || opt.estimator == "nips-exact") {
    if (dir != Direction::lower)
      throw std::invalid_argument("nips bounds support only --direction lower");
    value = opt.estimator == "nips-greedy" ? nips_bound_greedy(data, probs, budget)
                                           : nips_bound_exact(data, probs, budget);
    point = nips_value(data, probs);
  } else if (opt.estimator == "dr") {
    if (opt.bounds_path.empty())
      throw std::invalid_argument("reward bounds required: pass --bounds <csv> for dr");
    const RewardBoundsTable table = RewardBoundsTable::from_csv(read_file(opt.bounds_path));
    Matrix point_preds;
    if (!opt.point_preds_path.empty())
      point_preds = read_point_preds(opt.point_preds_path, data.n(), data.k());
    else
      point_preds = 0.5 * (table.lower + table.upper);
    cert = dr_bound(data, probs, budget, table, dir);
    value = cert->value;
    point = dr_value(data, probs, point_preds);
  } else {
    throw std::invalid_argument("unknown estimator '" + opt.estimator +
                                "' (expected ips|tips|nips-greedy|nips-exact|dr)");
  }

  if (!opt.certificate_path.empty()) {
    if (!cert)
      throw std::invalid_argument("no certificate available for estimator '" +
                                  opt.estimator + "'");
    write_file(opt.certificate_path, certificate_to_json(*cert) + "\n");
  }

  json flags{{"command", "bound"}, {"alpha", opt.alpha},     {"q", opt.q},
             {"estimator", opt.estimator}, {"direction", opt.direction}};
  json out;
  out["estimator"] = opt.estimator;
  out["alpha"] = opt.alpha;
  out["direction"] = opt.direction;
  out["value"] = value;
  out["point_estimate"] = point;
  out["fluctuation"] = dir == Direction::lower ? point - value : value - point;
  out["config_digest"] = flags_digest(flags);
  std::cout << out.dump() << "\n";
  return 0;
}

struct LearnOpts {
  std::string data, config, out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_learn(const LearnOpts& opt) {
  RunConfig cfg = RunConfig::load(opt.config);
  if (opt.seed_set) cfg.seed = opt.seed;
  const LoggedDataset data = read_dataset_csv(opt.data);
  const UncertaintyBudget budget = UncertaintyBudget::from_alpha(cfg.alpha, cfg.cutoff_q);

  SplitSpec split_spec = cfg.split;
  split_spec.seed = mix_seed(cfg.seed, 0xB1);
  const SplitResult parts = split(data, split_spec);

  const SurrogateModelSet surrogates =
      fit_reward_surrogates(parts.train, budget, cfg.boost, mix_seed(cfg.seed, 0xB2));
  const RewardBoundsTable train_table = surrogates.tabulate(parts.train.contexts);
  const RewardBoundsTable val_table = surrogates.tabulate(parts.val.contexts);
  const Matrix train_point = surrogates.point_predictions(parts.train.contexts);

  // Hidden size and Adam rate are selected by the robust objective on the
  // untouched validation split.
  struct Candidate {
    ParametricPolicy policy;
    LearnTrace trace;
    double val_lb = -std::numeric_limits<double>::infinity();
    int hidden = 0;
    double adam_lr = 0.0;
  };
  std::optional<Candidate> best;
  const bool is_linear = cfg.learn.policy_class == PolicyClass::softmax_linear;
  const std::vector<int> hiddens = is_linear ? std::vector<int>{0} : cfg.learn.hidden_sizes;
  for (int hidden : hiddens)
    for (double adam_lr : cfg.learn.adam_lrs) {
      LearnConfig lc;
      lc.alpha = cfg.alpha;
      lc.policy_class = cfg.learn.policy_class;
      lc.hidden_size = std::max(1, hidden);
      lc.inner_steps = cfg.learn.inner_steps;
      lc.adam_lr = adam_lr;
      lc.outer_max = cfg.learn.outer_max;
      lc.rel_tol = cfg.learn.rel_tol;
      lc.seed = mix_seed(cfg.seed, 0xB3);
      auto [policy, trace] = minorize_maximize(parts.train, budget, train_table, lc);
      const double val_lb =
          dr_bound(parts.val, policy_probs(policy, parts.val.contexts), budget,
                   val_table, Direction::lower)
              .value;
      if (!best || val_lb > best->val_lb)
        best = Candidate{std::move(policy), std::move(trace), val_lb, hidden, adam_lr};
    }

  std::filesystem::create_directories(opt.out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(opt.out_dir) / name).string();
  };
  write_file(path("policy.json"), policy_to_json(best->policy) + "\n");
  write_file(path("trace.jsonl"), best->trace.to_jsonl());
  write_file(path("reward_bounds.csv"), train_table.to_csv());
  write_file(path("point_preds.csv"), point_preds_csv(train_point));
  {
    std::string plot = "iteration,lower_bound,surrogate,oracle\n";
    char buf[128];
    for (const auto& rec : best->trace.records) {
      if (rec.oracle)
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", rec.iteration,
                      rec.lower_bound, rec.surrogate, *rec.oracle);
      else
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,\n", rec.iteration,
                      rec.lower_bound, rec.surrogate);
      plot += buf;
    }
    write_file(path("plot.csv"), plot);
  }

  json out;
  out["command"] = "learn";
  out["config_digest"] = cfg.digest_hex();
  out["seed"] = cfg.seed;
  out["alpha"] = cfg.alpha;
  out["selected_hidden"] = best->hidden;
  out["selected_adam_lr"] = best->adam_lr;
  out["iterations"] = best->trace.records.size();
  out["stop_reason"] = best->trace.stop_reason;
  out["initial_lower_bound"] = best->trace.initial_lower_bound;
  out["final_lower_bound"] = best->trace.records.empty()
                                 ? best->trace.initial_lower_bound
                                 : best->trace.records.back().lower_bound;
  out["val_lower_bound"] = best->val_lb;
  if (!best->trace.records.empty() && best->trace.records.back().oracle)
    out["final_oracle"] = *best->trace.records.back().oracle;
  out["out_dir"] = opt.out_dir;
  std::cout << out.dump() << "\n";
  return 0;
}

struct EvaluateOpts {
  std::string data, policy, bounds_path, point_preds_path;
  double alpha = 0.0, q = 0.0;
  int perturb_seeds = 0;
  std::uint64_t seed = 0;
};

int run_evaluate(const EvaluateOpts& opt) {
  const LoggedDataset data = read_dataset_csv(opt.data);
  const ParametricPolicy policy = policy_from_json(read_file(opt.policy));
  const PolicyProbs probs = policy_probs(policy, data.contexts);
  const UncertaintyBudget budget = UncertaintyBudget::from_alpha(opt.alpha, opt.q);

  json out;
  out["command"] = "evaluate";
  out["alpha"] = opt.alpha;
  if (data.full_reward_matrix)
    out["oracle"] = oracle_value(probs, *data.full_reward_matrix);

  json estimates, lower, upper, fluct;
  estimates["ips"] = ips_value(data, probs);
  estimates["nips"] = nips_value(data, probs);
  lower["ips"] = ips_bound(data, probs, budget, Direction::lower).value;
  upper["ips"] = ips_bound(data, probs, budget, Direction::upper).value;
  lower["nips-greedy"] = nips_bound_greedy(data, probs, budget);
  fluct["ips"] = fluctuation(data, probs, budget, EstimatorKind::ips);
  fluct["nips-greedy"] = fluctuation(data, probs, budget, EstimatorKind::nips_greedy);
  if (opt.q > 0.0) {
    estimates["tips"] = tips_value(data, probs, opt.q);
    lower["tips"] = tips_bound(data, probs, budget, Direction::lower).value;
    upper["tips"] = tips_bound(data, probs, budget, Direction::upper).value;
    fluct["tips"] = fluctuation(data, probs, budget, EstimatorKind::tips);
  }
  if (!opt.bounds_path.empty()) {
    const RewardBoundsTable table = RewardBoundsTable::from_csv(read_file(opt.bounds_path));
    Matrix point_preds;
    if (!opt.point_preds_path.empty())
      point_preds = read_point_preds(opt.point_preds_path, data.n(), data.k());
    else
      point_preds = 0.5 * (table.lower + table.upper);
    estimates["dr"] = dr_value(data, probs, point_preds);
    lower["dr"] = dr_bound(data, probs, budget, table, Direction::lower).value;
    upper["dr"] = dr_bound(data, probs, budget, table, Direction::upper).value;
    fluct["dr"] =
        fluctuation(data, probs, budget, EstimatorKind::dr, &table, &point_preds);
  }
  out["estimates"] = estimates;
  out["lower_bounds"] = lower;
  out["upper_bounds"] = upper;
  out["fluctuations"] = fluct;

  if (opt.perturb_seeds > 0) {
    double worst_ips = std::numeric_limits<double>::infinity();
    double worst_nips = std::numeric_limits<double>::infinity();
    for (int s = 0; s < opt.perturb_seeds; ++s) {
      const Matrix perturbed = sample_perturbed_policy(
          data.propensities, budget, mix_seed(opt.seed, 0xC0 + static_cast<std::uint64_t>(s)));
      double acc = 0.0, num = 0.0, den = 0.0;
      for (Index i = 0; i < data.n(); ++i) {
        const int a = data.actions[i];
        const double w = probs.probs(i, a) / perturbed(i, a);
        acc += w * data.rewards[i];
        num += w * data.rewards[i];
        den += w;
      }
      worst_ips = std::min(worst_ips, acc / static_cast<double>(data.n()));
      if (den > 0.0) worst_nips = std::min(worst_nips, num / den);
    }
    json pert;
    pert["seeds"] = opt.perturb_seeds;
    pert["worst_ips"] = worst_ips;
    if (std::isfinite(worst_nips)) pert["worst_nips"] = worst_nips;
    out["perturbed"] = pert;
  }

  json flags{{"command", "evaluate"},
             {"alpha", opt.alpha},
             {"q", opt.q},
             {"perturb_seeds", opt.perturb_seeds},
             {"seed", opt.seed}};
  out["config_digest"] = flags_digest(flags);
  std::cout << out.dump() << "\n";
  return 0;
}

struct SlackOpts {
  double q = 0.25, m_alpha = 0.0, r_bar = 0.0, delta = 0.05, rademacher = 0.0;
  std::int64_t n = 1;
};

int run_slack(const SlackOpts& opt) {
  SlackInputs in{opt.q, opt.m_alpha, opt.r_bar, opt.n, opt.delta, opt.rademacher};
  json out;
  out["q"] = in.q;
  out["m_alpha"] = in.m_alpha;
  out["r_bar"] = in.r_bar;
  out["n"] = in.n;
  out["delta"] = in.delta;
  out["rademacher"] = in.rademacher;
  out["slack"] = generalization_slack(in);
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"runtime-uncertainty-robust off-policy value bounds and learning"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "cap on worker threads (default 1)");

  ConvertOpts convert_opts;
  auto* convert = app.add_subcommand("convert", "supervised CSV -> logged bandit CSV");
  convert->add_option("--input", convert_opts.input, "supervised CSV (ctx_*,label)")
      ->required();
  convert->add_option("--output", convert_opts.output, "dataset CSV to write")->required();
  convert->add_option("--config", convert_opts.config, "run configuration JSON");
  convert->add_option("--seed", convert_opts.seed, "seed override")
      ->each([&](const std::string&) { convert_opts.seed_set = true; });

  BoundOpts bound_opts;
  auto* bound = app.add_subcommand("bound", "robust value bound for a policy");
  bound->add_option("--data", bound_opts.data, "dataset CSV")->required();
  bound->add_option("--policy", bound_opts.policy, "policy JSON")->required();
  bound->add_option("--alpha", bound_opts.alpha, "uncertainty degree")->required();
  bound->add_option("--estimator", bound_opts.estimator,
                    "ips|tips|nips-greedy|nips-exact|dr");
  bound->add_option("--direction", bound_opts.direction, "lower|upper");
  bound->add_option("--q", bound_opts.q, "truncation cutoff");
  bound->add_option("--bounds", bound_opts.bounds_path, "reward bounds CSV (dr)");
  bound->add_option("--point-preds", bound_opts.point_preds_path,
                    "point predictions CSV (dr)");
  bound->add_option("--certificate", bound_opts.certificate_path,
                    "write the minimizer certificate JSON here");

  LearnOpts learn_opts;
  auto* learn = app.add_subcommand("learn", "robust policy learning (Algorithm: minorize-maximize)");
  learn->add_option("--data", learn_opts.data, "dataset CSV")->required();
  learn->add_option("--config", learn_opts.config, "run configuration JSON");
  learn->add_option("--out-dir", learn_opts.out_dir, "output directory")->required();
  learn->add_option("--seed", learn_opts.seed, "seed override")
      ->each([&](const std::string&) { learn_opts.seed_set = true; });

  EvaluateOpts eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "estimates, bounds, and fluctuations");
  evaluate->add_option("--data", eval_opts.data, "dataset CSV")->required();
  evaluate->add_option("--policy", eval_opts.policy, "policy JSON")->required();
  evaluate->add_option("--alpha", eval_opts.alpha, "uncertainty degree")->required();
  evaluate->add_option("--q", eval_opts.q, "truncation cutoff");
  evaluate->add_option("--bounds", eval_opts.bounds_path, "reward bounds CSV");
  evaluate->add_option("--point-preds", eval_opts.point_preds_path,
                       "point predictions CSV");
  evaluate->add_option("--perturb-seeds", eval_opts.perturb_seeds,
                       "number of sampled perturbed logging policies");
  evaluate->add_option("--seed", eval_opts.seed, "perturbation seed");

  SlackOpts slack_opts;
  auto* slack = app.add_subcommand("slack", "generalization slack calculator");
  slack->add_option("--q", slack_opts.q, "propensity floor in (0, 1/2)")->required();
  slack->add_option("--m-alpha", slack_opts.m_alpha, "surrogate bound envelope")
      ->required();
  slack->add_option("--r-bar", slack_opts.r_bar, "max absolute reward")->required();
  slack->add_option("--n", slack_opts.n, "sample count")->required();
  slack->add_option("--delta", slack_opts.delta, "confidence level in (0,1)")->required();
  slack->add_option("--rademacher", slack_opts.rademacher, "complexity estimate");

  try {
    app.parse(argc, argv);
    if (threads > 0) set_thread_cap(threads);
    if (convert->parsed()) return run_convert(convert_opts);
    if (bound->parsed()) return run_bound(bound_opts);
    if (learn->parsed()) return run_learn(learn_opts);
    if (evaluate->parsed()) return run_evaluate(eval_opts);
    if (slack->parsed()) return run_slack(slack_opts);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
