// Python bindings over the C++ core: dataset handling, point estimators,
// robust bounds, surrogate reward bounds, conversion, learning, and the
// theory helpers.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ropl/bounds.hpp"
#include "ropl/learn.hpp"
#include "ropl/simulate.hpp"
#include "ropl/theory.hpp"

namespace py = pybind11;
using namespace ropl;

namespace {

UncertaintyBudget budget_of(double alpha, double q = 0.0) {
  return UncertaintyBudget::from_alpha(alpha, q);
}

RewardBoundsTable table_of(const Matrix& lower, const Matrix& upper) {
  RewardBoundsTable t;
  t.lower = lower;
  t.upper = upper;
  return t;
}

py::dict cert_dict(const BoundCertificate& cert) {
  py::dict d;
  d["value"] = cert.value;
  d["direction"] = std::string(to_string(cert.direction));
  d["p_star"] = Vector(cert.p_star);
  if (cert.r_star) d["r_star"] = Matrix(*cert.r_star);
  return d;
}

}  // namespace

PYBIND11_MODULE(_ropl, m) {
  m.doc() = "runtime-uncertainty-robust off-policy value bounds and learning";

  py::class_<LoggedDataset>(m, "LoggedDataset")
      .def(py::init([](Matrix contexts, std::vector<int> actions, Vector rewards,
                       Matrix propensities, std::optional<Matrix> full_rewards) {
             LoggedDataset d;
             d.contexts = std::move(contexts);
             d.actions = std::move(actions);
             d.rewards = std::move(rewards);
             d.propensities = std::move(propensities);
             d.full_reward_matrix = std::move(full_rewards);
             require_valid(d);
             return d;
           }),
           py::arg("contexts"), py::arg("actions"), py::arg("rewards"),
           py::arg("propensities"), py::arg("full_reward_matrix") = std::nullopt)
      .def_readonly("contexts", &LoggedDataset::contexts)
      .def_readonly("actions", &LoggedDataset::actions)
      .def_readonly("rewards", &LoggedDataset::rewards)
      .def_readonly("propensities", &LoggedDataset::propensities)
      .def_readonly("full_reward_matrix", &LoggedDataset::full_reward_matrix)
      .def_property_readonly("n", &LoggedDataset::n)
      .def_property_readonly("d", &LoggedDataset::d)
      .def_property_readonly("k", &LoggedDataset::k);

  m.def("validate_dataset", [](const LoggedDataset& d) {
    py::list out;
    for (const auto& issue : validate_dataset(d).issues)
      out.append(py::make_tuple(issue.kind, issue.row, issue.detail));
    return out;
  });

  m.def(
      "feasible_interval",
      [](const Vector& row, int action, double alpha) {
        const auto iv = feasible_interval(row, action, budget_of(alpha));
        return py::make_tuple(iv.lo, iv.hi);
      },
      py::arg("prop_row"), py::arg("observed_action"), py::arg("alpha"));
  m.def(
      "feasible_interval_truncated",
      [](const Vector& row, int action, double alpha, double q) {
        const auto iv = feasible_interval_truncated(row, action, budget_of(alpha, q));
        return py::make_tuple(iv.lo, iv.hi);
      },
      py::arg("prop_row"), py::arg("observed_action"), py::arg("alpha"), py::arg("q"));

  m.def("ips_value", [](const LoggedDataset& d, const Matrix& probs) {
    return ips_value(d, {probs});
  });
  m.def("tips_value", [](const LoggedDataset& d, const Matrix& probs, double q) {
    return tips_value(d, {probs}, q);
  });
  m.def("nips_value", [](const LoggedDataset& d, const Matrix& probs) {
    return nips_value(d, {probs});
  });
  m.def("rm_value", [](const LoggedDataset& d, const Matrix& probs, const Matrix& preds) {
    return rm_value(d, {probs}, preds);
  });
  m.def("dr_value", [](const LoggedDataset& d, const Matrix& probs, const Matrix& preds) {
    return dr_value(d, {probs}, preds);
  });

  m.def(
      "ips_bound",
      [](const LoggedDataset& d, const Matrix& probs, double alpha,
         const std::string& direction) {
        return cert_dict(
            ips_bound(d, {probs}, budget_of(alpha), direction_from_string(direction)));
      },
      py::arg("dataset"), py::arg("policy_probs"), py::arg("alpha"),
      py::arg("direction") = "lower");
  m.def(
      "tips_bound",
      [](const LoggedDataset& d, const Matrix& probs, double alpha, double q,
         const std::string& direction) {
        return cert_dict(tips_bound(d, {probs}, budget_of(alpha, q),
                                    direction_from_string(direction)));
      },
      py::arg("dataset"), py::arg("policy_probs"), py::arg("alpha"), py::arg("q"),
      py::arg("direction") = "lower");
  m.def("nips_bound_greedy",
        [](const LoggedDataset& d, const Matrix& probs, double alpha) {
          return nips_bound_greedy(d, {probs}, budget_of(alpha));
        });
  m.def(
      "nips_bound_exact",
      [](const LoggedDataset& d, const Matrix& probs, double alpha, Index max_vars) {
        return nips_bound_exact(d, {probs}, budget_of(alpha), max_vars);
      },
      py::arg("dataset"), py::arg("policy_probs"), py::arg("alpha"),
      py::arg("max_vars") = 64);
  m.def(
      "rm_bound",
      [](const LoggedDataset& d, const Matrix& probs, double alpha, const Matrix& lower,
         const Matrix& upper, const Matrix& point_preds, const std::string& direction) {
        return rm_bound(d, {probs}, budget_of(alpha), table_of(lower, upper),
                        point_preds, direction_from_string(direction));
      },
      py::arg("dataset"), py::arg("policy_probs"), py::arg("alpha"), py::arg("lower"),
      py::arg("upper"), py::arg("point_preds"), py::arg("direction") = "lower");
  m.def(
      "dr_bound",
      [](const LoggedDataset& d, const Matrix& probs, double alpha, const Matrix& lower,
         const Matrix& upper, const std::string& direction) {
        return cert_dict(dr_bound(d, {probs}, budget_of(alpha), table_of(lower, upper),
                                  direction_from_string(direction)));
      },
      py::arg("dataset"), py::arg("policy_probs"), py::arg("alpha"), py::arg("lower"),
      py::arg("upper"), py::arg("direction") = "lower");

  m.def(
      "asym_loss",
      [](double r, double f, double alpha, const std::string& direction) {
        const auto spec = direction_from_string(direction) == Direction::lower
                              ? AsymLossSpec::lower(alpha)
                              : AsymLossSpec::upper(alpha);
        return asym_loss(r, f, spec);
      },
      py::arg("r"), py::arg("f"), py::arg("alpha"), py::arg("direction") = "lower");
  m.def(
      "fit_constant",
      [](const std::vector<double>& rewards, double alpha, const std::string& direction) {
        const auto spec = direction_from_string(direction) == Direction::lower
                              ? AsymLossSpec::lower(alpha)
                              : AsymLossSpec::upper(alpha);
        return fit_constant(rewards, spec);
      },
      py::arg("rewards"), py::arg("alpha"), py::arg("direction") = "lower");

  m.def(
      "build_reward_bounds",
      [](const LoggedDataset& train, double alpha, std::uint64_t seed,
         const std::vector<double>& learning_rates, const std::vector<int>& max_depths,
         int n_rounds) {
        HyperGrid grid{learning_rates, max_depths, n_rounds};
        const auto table = build_reward_bounds(train, budget_of(alpha), grid, seed);
        return py::make_tuple(table.lower, table.upper, table.clamp_count);
      },
      py::arg("train"), py::arg("alpha"), py::arg("seed") = 0,
      py::arg("learning_rates") = std::vector<double>{0.01, 0.1, 0.3, 0.5},
      py::arg("max_depths") = std::vector<int>{2, 3, 4}, py::arg("n_rounds") = 100);
  m.def(
      "reward_surrogate_tables",
      [](const LoggedDataset& train, double alpha, std::uint64_t seed,
         const Matrix& eval_contexts) {
        const auto models =
            fit_reward_surrogates(train, budget_of(alpha), HyperGrid{}, seed);
        const auto table = models.tabulate(eval_contexts);
        return py::make_tuple(table.lower, table.upper,
                              models.point_predictions(eval_contexts));
      },
      py::arg("train"), py::arg("alpha"), py::arg("seed"), py::arg("eval_contexts"));

  m.def(
      "convert_supervised",
      [](const Matrix& features, const std::vector<int>& labels, double fit_fraction,
         double temperature, std::uint64_t logging_seed, std::uint64_t seed) {
        return convert_supervised(features, labels,
                                  LoggingConfig{fit_fraction, temperature, logging_seed},
                                  seed);
      },
      py::arg("features"), py::arg("labels"), py::arg("fit_fraction") = 0.3,
      py::arg("temperature") = 2.0, py::arg("logging_seed") = 0, py::arg("seed") = 0);
  m.def("oracle_value", [](const Matrix& probs, const Matrix& full) {
    return oracle_value({probs}, full);
  });
  m.def(
      "sample_perturbed_policy",
      [](const Matrix& propensities, double alpha, std::uint64_t seed) {
        return sample_perturbed_policy(propensities, budget_of(alpha), seed);
      },
      py::arg("propensities"), py::arg("alpha"), py::arg("seed") = 0);
  m.def(
      "split_dataset",
      [](const LoggedDataset& data, double train, double val, double test,
         std::uint64_t seed, bool by_order) {
        SplitSpec spec;
        spec.train = train;
        spec.val = val;
        spec.test = test;
        spec.seed = seed;
        spec.by_order = by_order;
        auto parts = split(data, spec);
        return py::make_tuple(std::move(parts.train), std::move(parts.val),
                              std::move(parts.test));
      },
      py::arg("dataset"), py::arg("train") = 0.56, py::arg("val") = 0.24,
      py::arg("test") = 0.20, py::arg("seed") = 0, py::arg("by_order") = false);
  m.def(
      "fluctuation",
      [](const LoggedDataset& d, const Matrix& probs, double alpha,
         const std::string& kind, double q, std::optional<Matrix> lower,
         std::optional<Matrix> upper, std::optional<Matrix> point_preds) {
        const EstimatorKind ek = estimator_kind_from_string(kind);
        if (ek == EstimatorKind::dr) {
          if (!lower || !upper || !point_preds)
            throw std::invalid_argument(
                "dr fluctuation needs lower, upper, and point_preds");
          const RewardBoundsTable table = table_of(*lower, *upper);
          return fluctuation(d, {probs}, budget_of(alpha, q), ek, &table,
                             &*point_preds);
        }
        return fluctuation(d, {probs}, budget_of(alpha, q), ek);
      },
      py::arg("dataset"), py::arg("policy_probs"), py::arg("alpha"), py::arg("kind"),
      py::arg("q") = 0.0, py::arg("lower") = std::nullopt,
      py::arg("upper") = std::nullopt, py::arg("point_preds") = std::nullopt);

  m.def(
      "learn_dr",
      [](const LoggedDataset& train, double alpha, const Matrix& lower,
         const Matrix& upper, const std::string& policy_class, int hidden_size,
         int inner_steps, double adam_lr, int outer_max, double rel_tol,
         std::uint64_t seed) {
        LearnConfig cfg;
        cfg.alpha = alpha;
        cfg.policy_class = policy_class_from_string(policy_class);
        cfg.hidden_size = hidden_size;
        cfg.inner_steps = inner_steps;
        cfg.adam_lr = adam_lr;
        cfg.outer_max = outer_max;
        cfg.rel_tol = rel_tol;
        cfg.seed = seed;
        auto [policy, trace] =
            minorize_maximize(train, budget_of(alpha), table_of(lower, upper), cfg);
        py::list records;
        for (const auto& rec : trace.records) {
          py::dict r;
          r["iteration"] = rec.iteration;
          r["surrogate"] = rec.surrogate;
          r["lower_bound"] = rec.lower_bound;
          if (rec.oracle) r["oracle"] = *rec.oracle;
          r["accepted"] = rec.accepted;
          records.append(std::move(r));
        }
        py::dict out;
        out["policy_json"] = policy_to_json(policy);
        out["train_probs"] = policy_probs(policy, train.contexts).probs;
        out["initial_lower_bound"] = trace.initial_lower_bound;
        out["stop_reason"] = trace.stop_reason;
        out["records"] = std::move(records);
        return out;
      },
      py::arg("train"), py::arg("alpha"), py::arg("lower"), py::arg("upper"),
      py::arg("policy_class") = "two_layer_mlp", py::arg("hidden_size") = 5,
      py::arg("inner_steps") = 200, py::arg("adam_lr") = 0.05,
      py::arg("outer_max") = 100, py::arg("rel_tol") = 1e-6, py::arg("seed") = 0);

  m.def(
      "policy_probs_from_json",
      [](const std::string& policy_json, const Matrix& contexts) {
        return policy_probs(policy_from_json(policy_json), contexts).probs;
      },
      py::arg("policy_json"), py::arg("contexts"));

  m.def(
      "generalization_slack",
      [](double q, double m_alpha, double r_bar, std::int64_t n, double delta,
         double rademacher) {
        return generalization_slack({q, m_alpha, r_bar, n, delta, rademacher});
      },
      py::arg("q"), py::arg("m_alpha"), py::arg("r_bar"), py::arg("n"),
      py::arg("delta"), py::arg("rademacher") = 0.0);
  m.def(
      "rademacher_mc",
      [](const std::vector<Matrix>& policy_set, int draws, std::uint64_t seed) {
        std::vector<PolicyProbs> set;
        set.reserve(policy_set.size());
        for (const auto& p : policy_set) set.push_back({p});
        return rademacher_mc(set, draws, seed);
      },
      py::arg("policy_set"), py::arg("draws") = 2000, py::arg("seed") = 0);

  py::register_exception<NumericalError>(m, "NumericalError");
  py::register_exception<ConfigError>(m, "ConfigError");
}
