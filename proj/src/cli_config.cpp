#include "ropl/cli_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ropl {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* section) {
  if (!j.is_object())
    throw ConfigError(std::string("config section '") + section + "' must be an object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known)
      throw ConfigError("unknown config key '" + item.key() + "' in " + section);
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"seed", "budget", "split", "logging", "learn", "boost"}, "config");

  RunConfig cfg;
  maybe(j, "seed", cfg.seed);
  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    check_keys(b, {"alpha", "cutoff_q"}, "budget");
    maybe(b, "alpha", cfg.alpha);
    maybe(b, "cutoff_q", cfg.cutoff_q);
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    check_keys(s, {"train", "val", "test", "rm_train", "rm_val", "by_order"}, "split");
    maybe(s, "train", cfg.split.train);
    maybe(s, "val", cfg.split.val);
    maybe(s, "test", cfg.split.test);
    maybe(s, "rm_train", cfg.split.rm_train);
    maybe(s, "rm_val", cfg.split.rm_val);
    maybe(s, "by_order", cfg.split.by_order);
  }
  if (j.contains("logging")) {
    const auto& l = j.at("logging");
    check_keys(l, {"fit_fraction", "temperature"}, "logging");
    maybe(l, "fit_fraction", cfg.logging.fit_fraction);
    maybe(l, "temperature", cfg.logging.temperature);
  }
  if (j.contains("learn")) {
    const auto& l = j.at("learn");
    check_keys(l,
               {"policy_class", "hidden_sizes", "adam_lrs", "inner_steps",
                "outer_max", "rel_tol"},
               "learn");
    if (l.contains("policy_class"))
      cfg.learn.policy_class =
          policy_class_from_string(l.at("policy_class").get<std::string>());
    maybe(l, "hidden_sizes", cfg.learn.hidden_sizes);
    maybe(l, "adam_lrs", cfg.learn.adam_lrs);
    maybe(l, "inner_steps", cfg.learn.inner_steps);
    maybe(l, "outer_max", cfg.learn.outer_max);
    maybe(l, "rel_tol", cfg.learn.rel_tol);
    if (cfg.learn.hidden_sizes.empty() || cfg.learn.adam_lrs.empty())
      throw ConfigError("learn grids must be non-empty");
  }
  if (j.contains("boost")) {
    const auto& b = j.at("boost");
    check_keys(b, {"learning_rates", "max_depths", "n_rounds"}, "boost");
    maybe(b, "learning_rates", cfg.boost.learning_rates);
    maybe(b, "max_depths", cfg.boost.max_depths);
    maybe(b, "n_rounds", cfg.boost.n_rounds);
    if (cfg.boost.learning_rates.empty() || cfg.boost.max_depths.empty())
      throw ConfigError("boost grids must be non-empty");
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  if (path.empty()) return RunConfig{};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string RunConfig::canonical_json() const {
  json j;
  j["seed"] = seed;
  j["budget"] = {{"alpha", alpha}, {"cutoff_q", cutoff_q}};
  j["split"] = {{"train", split.train},       {"val", split.val},
                {"test", split.test},         {"rm_train", split.rm_train},
                {"rm_val", split.rm_val},     {"by_order", split.by_order}};
  j["logging"] = {{"fit_fraction", logging.fit_fraction},
                  {"temperature", logging.temperature}};
  j["learn"] = {{"policy_class", to_string(learn.policy_class)},
                {"hidden_sizes", learn.hidden_sizes},
                {"adam_lrs", learn.adam_lrs},
                {"inner_steps", learn.inner_steps},
                {"outer_max", learn.outer_max},
                {"rel_tol", learn.rel_tol}};
  j["boost"] = {{"learning_rates", boost.learning_rates},
                {"max_depths", boost.max_depths},
                {"n_rounds", boost.n_rounds}};
  return j.dump();
}

std::string RunConfig::digest_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_json())));
  return buf;
}

}  // namespace ropl
