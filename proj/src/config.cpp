#include "teql/config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "teql/error.hpp"

namespace teql {

using nlohmann::json;

namespace {

json dims_to_json(const std::vector<DimSpec>& dims) {
  json out = json::array();
  for (const auto& d : dims) out.push_back({{"min", d.lo}, {"max", d.hi}, {"bins", d.bins}});
  return out;
}

std::vector<DimSpec> dims_from_json(const json& j) {
  std::vector<DimSpec> dims;
  for (const auto& item : j) {
    DimSpec d;
    if (item.is_array()) {
      if (item.size() != 3) throw PreconditionError("config: dimension triple must be [min, max, bins]");
      d = {item.at(0).get<double>(), item.at(1).get<double>(), item.at(2).get<int>()};
    } else {
      d = {item.at("min").get<double>(), item.at("max").get<double>(), item.at("bins").get<int>()};
    }
    dims.push_back(d);
  }
  return dims;
}

json policy_to_json(const PolicyConfig& p) {
  return {{"kind", to_string(p.kind)},
          {"c", p.exploration_c},
          {"epsilon0", p.epsilon0},
          {"epsilon_decay", p.epsilon_decay}};
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw PreconditionError("config: '" + where + "' must be an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw PreconditionError("config: unknown key '" + item.key() + "' in " + where);
}

void policy_from_json(const json& j, PolicyConfig& p, const std::string& where) {
  check_keys(j, {"kind", "c", "epsilon0", "epsilon_decay"}, where);
  if (j.contains("kind")) p.kind = policy_kind_from_string(j["kind"].get<std::string>());
  if (j.contains("c")) p.exploration_c = j["c"].get<double>();
  if (j.contains("epsilon0")) p.epsilon0 = j["epsilon0"].get<double>();
  if (j.contains("epsilon_decay")) p.epsilon_decay = j["epsilon_decay"].get<double>();
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j[key].get<T>();
}

}  // namespace

json config_to_json(const RunConfig& cfg) {
  json learner = {{"lambda", cfg.learner.penalty_weight},
                  {"penalty_epsilon", cfg.learner.penalty_epsilon},
                  {"alpha0", cfg.learner.alpha0},
                  {"kappa", cfg.learner.lr_decay},
                  {"gamma", cfg.learner.gamma},
                  {"tau", cfg.learner.tolerance},
                  {"max_inner_iterations", cfg.learner.max_inner_iterations},
                  {"auto_lambda", cfg.auto_penalty},
                  {"auto_q_clip", cfg.auto_q_clip}};
  learner["q_clip"] = cfg.learner.q_clip ? json(*cfg.learner.q_clip) : json(nullptr);
  learner["max_step_gain"] =
      cfg.learner.max_step_gain ? json(*cfg.learner.max_step_gain) : json(nullptr);
  return {
      {"environment", cfg.environment},
      {"experiment", to_string(cfg.experiment)},
      {"episodes", cfg.episodes},
      {"max_steps", cfg.max_steps},
      {"seeds", cfg.seeds},
      {"rank", cfg.rank},
      {"init_scale", cfg.init_scale},
      {"master_seed", cfg.master_seed},
      {"output_dir", cfg.output_dir},
      {"workers", cfg.workers},
      {"discretization",
       {{"state", dims_to_json(cfg.discretization.state)},
        {"action", dims_to_json(cfg.discretization.action)}}},
      {"learner", learner},
      {"policy", policy_to_json(cfg.policy)},
      {"baseline_policy", policy_to_json(cfg.baseline_policy)},
      {"regret",
       {{"states", cfg.mdp_states},
        {"actions", cfg.mdp_actions},
        {"mdp_seed", cfg.mdp_seed},
        {"steps", cfg.regret_steps},
        {"restart_interval", cfg.restart_interval}}},
      {"analysis",
       {{"smoothing_window", cfg.analysis.smoothing_window},
        {"tail_fraction", cfg.analysis.tail_fraction},
        {"fractions", cfg.analysis.fractions},
        {"threshold_reference", to_string(cfg.analysis.reference)}}},
  };
}

RunConfig config_from_json(const json& j) {
  check_keys(j,
             {"environment", "experiment", "episodes", "max_steps", "seeds", "rank", "init_scale",
              "master_seed", "output_dir", "workers", "discretization", "learner", "policy",
              "baseline_policy", "regret", "analysis"},
             "top level");
  RunConfig cfg = default_config(j.value("environment", std::string("cartpole")));
  if (j.contains("experiment"))
    cfg.experiment = experiment_kind_from_string(j["experiment"].get<std::string>());
  maybe(j, "episodes", cfg.episodes);
  maybe(j, "max_steps", cfg.max_steps);
  maybe(j, "seeds", cfg.seeds);
  maybe(j, "rank", cfg.rank);
  maybe(j, "init_scale", cfg.init_scale);
  maybe(j, "master_seed", cfg.master_seed);
  maybe(j, "output_dir", cfg.output_dir);
  maybe(j, "workers", cfg.workers);

  if (j.contains("discretization")) {
    const auto& d = j["discretization"];
    check_keys(d, {"state", "action"}, "discretization");
    if (d.contains("state")) cfg.discretization.state = dims_from_json(d["state"]);
    if (d.contains("action")) cfg.discretization.action = dims_from_json(d["action"]);
  }
  if (j.contains("learner")) {
    const auto& l = j["learner"];
    check_keys(l,
               {"lambda", "penalty_epsilon", "alpha0", "kappa", "gamma", "tau",
                "max_inner_iterations", "q_clip", "max_step_gain", "auto_lambda", "auto_q_clip"},
               "learner");
    if (l.contains("lambda")) {
      cfg.learner.penalty_weight = l["lambda"].get<double>();
      cfg.auto_penalty = false;
    }
    maybe(l, "auto_lambda", cfg.auto_penalty);
    maybe(l, "penalty_epsilon", cfg.learner.penalty_epsilon);
    maybe(l, "alpha0", cfg.learner.alpha0);
    maybe(l, "kappa", cfg.learner.lr_decay);
    maybe(l, "gamma", cfg.learner.gamma);
    maybe(l, "tau", cfg.learner.tolerance);
    maybe(l, "max_inner_iterations", cfg.learner.max_inner_iterations);
    if (l.contains("q_clip")) {
      if (l["q_clip"].is_null()) {
        cfg.learner.q_clip.reset();
      } else {
        cfg.learner.q_clip = l["q_clip"].get<double>();
        cfg.auto_q_clip = false;
      }
    }
    maybe(l, "auto_q_clip", cfg.auto_q_clip);
    if (l.contains("max_step_gain")) {
      if (l["max_step_gain"].is_null())
        cfg.learner.max_step_gain.reset();
      else
        cfg.learner.max_step_gain = l["max_step_gain"].get<double>();
    }
  }
  if (j.contains("policy")) policy_from_json(j["policy"], cfg.policy, "policy");
  if (j.contains("baseline_policy"))
    policy_from_json(j["baseline_policy"], cfg.baseline_policy, "baseline_policy");
  if (j.contains("regret")) {
    const auto& r = j["regret"];
    check_keys(r, {"states", "actions", "mdp_seed", "steps", "restart_interval"}, "regret");
    maybe(r, "states", cfg.mdp_states);
    maybe(r, "actions", cfg.mdp_actions);
    maybe(r, "mdp_seed", cfg.mdp_seed);
    maybe(r, "steps", cfg.regret_steps);
    maybe(r, "restart_interval", cfg.restart_interval);
  }
  if (j.contains("analysis")) {
    const auto& a = j["analysis"];
    check_keys(a, {"smoothing_window", "tail_fraction", "fractions", "threshold_reference"},
               "analysis");
    maybe(a, "smoothing_window", cfg.analysis.smoothing_window);
    maybe(a, "tail_fraction", cfg.analysis.tail_fraction);
    if (a.contains("fractions")) cfg.analysis.fractions = a["fractions"].get<std::array<double, 3>>();
    if (a.contains("threshold_reference"))
      cfg.analysis.reference =
          threshold_reference_from_string(a["threshold_reference"].get<std::string>());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw PreconditionError("config parse error in " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file " + path.string());
  out << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace teql
