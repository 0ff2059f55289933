#include <cstdio>
#include <fstream>
#include <set>

#include "ne3/env/combolock.hpp"
#include "ne3/harness.hpp"

namespace ne3::harness {

using nlohmann::json;

namespace {

bool nonnegative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

// Reads the members of one JSON object, remembering which keys were used so
// that leftovers can be reported.
class Fields {
 public:
  Fields(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw SchemaError(path_.empty() ? "$" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return doc_.contains(key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  void get(const std::string& key, int& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number_integer()) throw SchemaError(at(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const std::string& key, std::size_t& out) {
    if (const json* v = raw(key)) {
      if (!nonnegative_integer(*v)) throw SchemaError(at(key), "expected a nonnegative integer");
      out = v->get<std::size_t>();
    }
  }
  void get(const std::string& key, double& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number()) throw SchemaError(at(key), "expected a number");
      out = v->get<double>();
    }
  }
  void get(const std::string& key, bool& out) {
    if (const json* v = raw(key)) {
      if (!v->is_boolean()) throw SchemaError(at(key), "expected a boolean");
      out = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const json* v = raw(key)) {
      if (!v->is_string()) throw SchemaError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = raw(key)) {
      if (!v->is_array()) throw SchemaError(at(key), "expected an array");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!nonnegative_integer((*v)[i]) || (*v)[i].get<std::size_t>() == 0)
          throw SchemaError(at(key) + "[" + std::to_string(i) + "]", "expected a positive integer");
        out.push_back((*v)[i].get<std::size_t>());
      }
    }
  }

  template <class E>
  void choice(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
    std::string s;
    get(key, s);
    if (s.empty() && !has(key)) return;
    for (const auto& [name, value] : names) {
      if (s == name) {
        out = value;
        return;
      }
    }
    std::string allowed;
    for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    throw SchemaError(at(key), "unknown value '" + s + "' (expected one of " + allowed + ")");
  }

  void forbid(const std::string& key, const std::string& why) {
    if (has(key)) throw SchemaError(at(key), why);
  }

  /// Throws on the first key that was never read.
  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.count(key)) throw SchemaError(at(key), "unknown key");
    }
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
void checked(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    throw SchemaError(path, e.what());
  }
}

const std::initializer_list<std::pair<const char*, nn::ActionInput>> kActionInputs = {
    {"none", nn::ActionInput::None}, {"concat", nn::ActionInput::Concat}, {"gate", nn::ActionInput::Gate}};
const std::initializer_list<std::pair<const char*, planners::ExploreMetric>> kMetrics = {
    {"mean_l1", planners::ExploreMetric::MeanL1}, {"pattern_l1", planners::ExploreMetric::PatternL1}};
const std::initializer_list<std::pair<const char*, agents::PlannerKind>> kPlanners = {
    {"mcts", agents::PlannerKind::Mcts}, {"deterministic", agents::PlannerKind::Deterministic}};
const std::initializer_list<std::pair<const char*, agents::ExploitKind>> kExploits = {
    {"offline_q", agents::ExploitKind::OfflineQ}, {"planner", agents::ExploitKind::Planner}};
const std::initializer_list<std::pair<const char*, dreem::DataScheme>> kSchemes = {
    {"per_step", dreem::DataScheme::PerStep}, {"uniform_step", dreem::DataScheme::UniformStep}};

template <class E>
std::string name_of(E value, std::initializer_list<std::pair<const char*, E>> names) {
  for (const auto& [name, v] : names)
    if (v == value) return name;
  return "?";
}

void parse_env(const json& doc, EnvSpec& env) {
  Fields f(doc, "env");
  std::string name;
  f.get("name", name);
  if (!f.has("name")) throw SchemaError("env.name", "required");
  if (name == "combolock") {
    env.kind = EnvKind::Combolock;
    f.get("horizon", env.horizon);
    f.get("flip_prob", env.flip_prob);
    f.get("noise_bits", env.noise_bits);
    f.get("antishaped", env.antishaped);
    std::uint64_t seed = 0;
    f.get("env_seed", seed);
    if (f.has("env_seed")) env.env_seed = seed;
    checked("env", [&] {
      env::CombolockConfig c;
      c.horizon = env.horizon;
      c.flip_prob = env.flip_prob;
      c.validate();
    });
  } else if (name == "maze") {
    env.kind = EnvKind::Maze;
    f.get("size", env.size);
    f.get("time_limit", env.time_limit);
    if (env.size < 3) throw SchemaError("env.size", "must be at least 3");
  } else if (name == "mountain_car") {
    env.kind = EnvKind::MountainCar;
    f.get("time_limit", env.time_limit);
  } else {
    throw SchemaError("env.name", "unknown environment '" + name + "' (expected combolock, maze or mountain_car)");
  }
  if (env.time_limit < 0) throw SchemaError("env.time_limit", "must be nonnegative");
  f.finish();
}

void parse_ensemble(const json& doc, EnsembleConfig& e) {
  Fields f(doc, "agent.ensemble");
  f.get("size", e.size);
  f.get("unroll", e.unroll);
  f.get("learning_rate", e.learning_rate);
  f.get("minibatch", e.minibatch);
  f.get("updates_per_epoch", e.updates_per_epoch);
  f.get("stochastic", e.stochastic);
  f.get("hidden", e.hidden);
  f.choice("action_input", e.action_input, kActionInputs);
  f.get("reward_weight", e.reward_weight);
  f.finish();
  checked("agent.ensemble", [&] { e.validate(); });
}

void parse_q(const json& doc, agents::QConfig& q) {
  Fields f(doc, "agent.q");
  f.get("hidden", q.hidden);
  f.get("learning_rate", q.learning_rate);
  f.get("minibatch", q.minibatch);
  f.get("updates", q.updates);
  f.get("target_refresh", q.target_refresh);
  f.get("gamma", q.gamma);
  f.get("eval_every", q.eval_every);
  f.finish();
  checked("agent.q", [&] { q.validate(); });
}

void parse_agent(const json& doc, ExperimentConfig& c) {
  Fields f(doc, "agent");
  std::string kind;
  f.get("kind", kind);
  if (!f.has("kind")) throw SchemaError("agent.kind", "required");
  if (kind == "neural_e3") c.agent = AgentKind::NeuralE3;
  else if (kind == "ue2") c.agent = AgentKind::Ue2;
  else if (kind == "offline_q_only") c.agent = AgentKind::OfflineQOnly;
  else if (kind == "dreem") c.agent = AgentKind::Dreem;
  else if (kind == "greedy_q") c.agent = AgentKind::GreedyQ;
  else throw SchemaError("agent.kind", "unknown agent '" + kind + "'");

  auto& a = c.neural;
  const bool lock = c.env.kind == EnvKind::Combolock;
  a.planner = lock ? agents::PlannerKind::Mcts : agents::PlannerKind::Deterministic;
  f.get("explore_episodes", a.explore_episodes);
  f.get("exploit_episodes", a.exploit_episodes);
  f.get("episodes_per_epoch", a.episodes_per_epoch);
  f.choice("planner", a.planner, kPlanners);
  f.choice("exploit", a.exploit, kExploits);
  f.get("playouts", a.playouts);
  f.get("samples", a.samples);
  f.get("ucb_c", a.ucb_c);
  f.choice("metric", a.metric, kMetrics);
  f.get("max_nodes", a.max_nodes);
  f.get("q_eval_episodes", a.q_eval_episodes);

  a.ensemble.stochastic = a.planner == agents::PlannerKind::Mcts;
  if (const json* e = f.raw("ensemble")) parse_ensemble(*e, a.ensemble);
  if (const json* q = f.raw("q")) parse_q(*q, a.q);
  c.greedy.q = a.q;

  if (c.agent == AgentKind::GreedyQ) {
    if (const json* g = f.raw("greedy")) {
      Fields gf(*g, "agent.greedy");
      gf.get("epsilon_start", c.greedy.epsilon_start);
      gf.get("epsilon_end", c.greedy.epsilon_end);
      gf.get("updates_per_step", c.greedy.updates_per_step);
      gf.get("warmup_transitions", c.greedy.warmup_transitions);
      gf.finish();
    }
  } else {
    f.forbid("greedy", "only valid for agent kind greedy_q");
  }

  if (c.agent == AgentKind::Dreem) {
    if (!lock || c.env.antishaped) throw SchemaError("agent.kind", "dreem runs on the standard combination lock only");
    if (const json* d = f.raw("dreem")) {
      Fields df(*d, "agent.dreem");
      auto& dc = c.dreem.config;
      df.get("epsilon", dc.epsilon);
      df.get("phi", dc.phi);
      df.get("n", dc.n);
      df.get("delta", dc.delta);
      df.get("oracle_misfit", dc.oracle_misfit);
      df.get("round_cap", dc.round_cap);
      df.get("sample_scale", dc.sample_scale);
      df.choice("scheme", dc.scheme, kSchemes);
      df.get("perturbations", c.dreem.perturbations);
      df.finish();
      if (c.dreem.perturbations < 0) throw SchemaError("agent.dreem.perturbations", "must be nonnegative");
      checked("agent.dreem", [&] { dc.validate(); });
    }
  } else {
    f.forbid("dreem", "only valid for agent kind dreem");
  }
  f.finish();

  checked("agent", [&] { a.validate(); });
  const bool mcts = a.planner == agents::PlannerKind::Mcts;
  if (mcts != lock) throw SchemaError("agent.planner", lock ? "the combination lock needs mcts" : "this environment needs the deterministic planner");
  if (a.ensemble.stochastic != mcts)
    throw SchemaError("agent.ensemble.stochastic", mcts ? "mcts needs a stochastic ensemble" : "the deterministic planner needs a deterministic ensemble");
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Fields f(doc, "");
  f.get("name", c.name);
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
    throw SchemaError("name", "must be a nonempty file stem");
  const json* env = f.raw("env");
  if (!env) throw SchemaError("env", "required");
  parse_env(*env, c.env);
  const json* agent = f.raw("agent");
  if (!agent) throw SchemaError("agent", "required");
  parse_agent(*agent, c);

  if (const json* seeds = f.raw("seeds")) {
    if (!seeds->is_array() || seeds->empty()) throw SchemaError("seeds", "expected a nonempty array");
    c.seeds.clear();
    std::set<std::uint64_t> unique;
    for (std::size_t i = 0; i < seeds->size(); ++i) {
      if (!nonnegative_integer((*seeds)[i])) throw SchemaError("seeds[" + std::to_string(i) + "]", "expected a nonnegative integer");
      c.seeds.push_back((*seeds)[i].get<std::uint64_t>());
      if (!unique.insert(c.seeds.back()).second) throw SchemaError("seeds[" + std::to_string(i) + "]", "duplicate seed");
    }
  }
  f.get("record_timing", c.record_timing);
  f.get("output", c.output);
  f.get("threads", c.threads);
  if (c.threads < 1) throw SchemaError("threads", "must be at least 1");
  f.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string(), "cannot open config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::string to_string(EnvKind k) {
  switch (k) {
    case EnvKind::Combolock: return "combolock";
    case EnvKind::Maze: return "maze";
    case EnvKind::MountainCar: return "mountain_car";
  }
  return "?";
}

std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::NeuralE3: return "neural_e3";
    case AgentKind::Ue2: return "ue2";
    case AgentKind::OfflineQOnly: return "offline_q_only";
    case AgentKind::Dreem: return "dreem";
    case AgentKind::GreedyQ: return "greedy_q";
  }
  return "?";
}

json to_json(const ExperimentConfig& c) {
  json env = {{"name", to_string(c.env.kind)}};
  switch (c.env.kind) {
    case EnvKind::Combolock:
      env["horizon"] = c.env.horizon;
      env["flip_prob"] = c.env.flip_prob;
      env["noise_bits"] = c.env.noise_bits;
      env["antishaped"] = c.env.antishaped;
      if (c.env.env_seed) env["env_seed"] = *c.env.env_seed;
      break;
    case EnvKind::Maze:
      env["size"] = c.env.size;
      env["time_limit"] = c.env.time_limit;
      break;
    case EnvKind::MountainCar:
      env["time_limit"] = c.env.time_limit;
      break;
  }
  const auto& a = c.neural;
  const auto& e = a.ensemble;
  const auto& q = a.q;
  json agent = {
      {"kind", to_string(c.agent)},
      {"explore_episodes", a.explore_episodes},
      {"exploit_episodes", a.exploit_episodes},
      {"episodes_per_epoch", a.episodes_per_epoch},
      {"planner", name_of(a.planner, kPlanners)},
      {"exploit", name_of(a.exploit, kExploits)},
      {"playouts", a.playouts},
      {"samples", a.samples},
      {"ucb_c", a.ucb_c},
      {"metric", name_of(a.metric, kMetrics)},
      {"max_nodes", a.max_nodes},
      {"q_eval_episodes", a.q_eval_episodes},
      {"ensemble",
       {{"size", e.size},
        {"unroll", e.unroll},
        {"learning_rate", e.learning_rate},
        {"minibatch", e.minibatch},
        {"updates_per_epoch", e.updates_per_epoch},
        {"stochastic", e.stochastic},
        {"hidden", e.hidden},
        {"action_input", name_of(e.action_input, kActionInputs)},
        {"reward_weight", e.reward_weight}}},
      {"q",
       {{"hidden", q.hidden},
        {"learning_rate", q.learning_rate},
        {"minibatch", q.minibatch},
        {"updates", q.updates},
        {"target_refresh", q.target_refresh},
        {"gamma", q.gamma},
        {"eval_every", q.eval_every}}}};
  if (c.agent == AgentKind::GreedyQ) {
    agent["greedy"] = {{"epsilon_start", c.greedy.epsilon_start},
                       {"epsilon_end", c.greedy.epsilon_end},
                       {"updates_per_step", c.greedy.updates_per_step},
                       {"warmup_transitions", c.greedy.warmup_transitions}};
  }
  if (c.agent == AgentKind::Dreem) {
    const auto& d = c.dreem.config;
    agent["dreem"] = {{"epsilon", d.epsilon},         {"phi", d.phi},
                      {"n", d.n},                     {"delta", d.delta},
                      {"oracle_misfit", d.oracle_misfit}, {"round_cap", d.round_cap},
                      {"sample_scale", d.sample_scale},   {"scheme", name_of(d.scheme, kSchemes)},
                      {"perturbations", c.dreem.perturbations}};
  }
  return {{"name", c.name},           {"env", std::move(env)},   {"agent", std::move(agent)},
          {"seeds", c.seeds},         {"record_timing", c.record_timing},
          {"output", c.output},       {"threads", c.threads}};
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(config).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ne3::harness
