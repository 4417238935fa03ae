#include "bpomdp/spec_io.hpp"

#include <fstream>
#include <memory>
#include <stdexcept>

namespace bpomdp {
namespace spec_io {

namespace {

using nlohmann::json;

const json& need(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end())
    throw std::invalid_argument(where + ": missing key '" + key + "'");
  return *it;
}

int need_int(const json& j, const std::string& key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number_integer())
    throw std::invalid_argument(where + ": '" + key + "' must be an integer");
  return v.get<int>();
}

// Scalar broadcast or per-entry array of the expected length.
std::vector<int> count_vector(const json& v, size_t len, const std::string& where) {
  std::vector<int> out;
  if (v.is_number_integer()) {
    out.assign(len, v.get<int>());
  } else if (v.is_array()) {
    if (v.size() != len)
      throw std::invalid_argument(where + ": expected " + std::to_string(len) + " entries");
    for (const auto& e : v) out.push_back(e.get<int>());
  } else {
    throw std::invalid_argument(where + ": expected integer or array");
  }
  return out;
}

std::vector<int> per_latent_vector(const json& v, int zs, const std::string& where) {
  return count_vector(v, static_cast<size_t>(zs), where);
}

Dist parse_prior(const json& v, int size, const std::string& where) {
  if (v.is_string() && v.get<std::string>() == "uniform") return Dist::uniform(size);
  if (!v.is_array() || static_cast<int>(v.size()) != size)
    throw std::invalid_argument(where + ": prior must be \"uniform\" or an array of size " +
                                std::to_string(size));
  std::vector<double> p;
  for (const auto& e : v) {
    if (e.is_string())
      p.push_back(parse_probability(e.get<std::string>()));
    else
      p.push_back(e.get<double>());
  }
  Dist d(std::move(p));
  d.validate();
  return d;
}

int label_index(const json& v, const std::vector<std::string>& labels, const std::string& where) {
  if (v.is_number_integer()) {
    int id = v.get<int>();
    if (id < 0 || id >= static_cast<int>(labels.size()))
      throw std::invalid_argument(where + ": label id out of range");
    return id;
  }
  std::string name = v.get<std::string>();
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == name) return static_cast<int>(i);
  throw std::invalid_argument(where + ": unknown label '" + name + "'");
}

using LabelTable = std::vector<std::vector<std::vector<int>>>;  // [t][z][x]

std::function<int(int, int, int)> parse_labels(const json* v, const BridgePomdp& m,
                                               const std::string& where) {
  if (!v) return [](int, int, int) { return 0; };
  if (v->contains("constant")) {
    int id = label_index((*v)["constant"], m.channel_labels, where);
    return [id](int, int, int) { return id; };
  }
  auto table = std::make_shared<LabelTable>();
  table->resize(static_cast<size_t>(m.horizon) + 1);
  for (int t = 0; t <= m.horizon; ++t)
    (*table)[static_cast<size_t>(t)].assign(
        static_cast<size_t>(m.latent.size),
        std::vector<int>(static_cast<size_t>(m.state_count[static_cast<size_t>(t)]), 0));
  if (v->contains("dense")) {
    const json& d = (*v)["dense"];
    if (static_cast<int>(d.size()) != m.horizon + 1)
      throw std::invalid_argument(where + ": dense table needs horizon+1 time slices");
    for (int t = 0; t <= m.horizon; ++t) {
      const json& dt = d[static_cast<size_t>(t)];
      for (int z = 0; z < m.latent.size; ++z) {
        const json& dz = dt.at(static_cast<size_t>(z));
        for (int x = 0; x < m.state_count[static_cast<size_t>(t)]; ++x)
          (*table)[static_cast<size_t>(t)][static_cast<size_t>(z)][static_cast<size_t>(x)] =
              label_index(dz.at(static_cast<size_t>(x)), m.channel_labels, where);
      }
    }
  } else if (v->contains("sparse")) {
    const json& s = (*v)["sparse"];
    int def = s.contains("default") ? label_index(s["default"], m.channel_labels, where) : 0;
    for (auto& layer : *table)
      for (auto& row : layer) std::fill(row.begin(), row.end(), def);
    for (const auto& e : need(s, "entries", where)) {
      if (!e.is_array() || e.size() != 4)
        throw std::invalid_argument(where + ": sparse entries are [t, z, x, label]");
      int t = e[0].get<int>(), z = e[1].get<int>(), x = e[2].get<int>();
      table->at(static_cast<size_t>(t)).at(static_cast<size_t>(z)).at(static_cast<size_t>(x)) =
          label_index(e[3], m.channel_labels, where);
    }
  } else {
    throw std::invalid_argument(where + ": expected constant, dense, or sparse");
  }
  return [table](int t, int z, int x) {
    return table->at(static_cast<size_t>(t)).at(static_cast<size_t>(z)).at(static_cast<size_t>(x));
  };
}

using StepTable = std::vector<std::vector<std::vector<std::vector<StepOut>>>>;  // [t][z][x][a]

std::function<StepOut(int, int, int, int)> parse_step(const json& v, const BridgePomdp& m) {
  auto table = std::make_shared<StepTable>();
  table->resize(static_cast<size_t>(m.horizon));
  for (int t = 0; t < m.horizon; ++t)
    (*table)[static_cast<size_t>(t)].assign(
        static_cast<size_t>(m.latent.size),
        std::vector<std::vector<StepOut>>(
            static_cast<size_t>(m.state_count[static_cast<size_t>(t)]),
            std::vector<StepOut>(static_cast<size_t>(m.action_count[static_cast<size_t>(t)]))));
  auto parse_pair = [](const json& e, const std::string& where) {
    if (!e.is_array() || e.size() != 2)
      throw std::invalid_argument(where + ": transitions are [next_state, observation]");
    return StepOut{e[0].get<int>(), e[1].get<int>()};
  };
  if (v.contains("dense")) {
    const json& d = v["dense"];
    if (static_cast<int>(d.size()) != m.horizon)
      throw std::invalid_argument("step.dense: needs horizon time slices");
    for (int t = 0; t < m.horizon; ++t)
      for (int z = 0; z < m.latent.size; ++z)
        for (int x = 0; x < m.state_count[static_cast<size_t>(t)]; ++x)
          for (int a = 0; a < m.action_count[static_cast<size_t>(t)]; ++a)
            (*table)[static_cast<size_t>(t)][static_cast<size_t>(z)][static_cast<size_t>(x)]
                    [static_cast<size_t>(a)] =
                        parse_pair(d.at(static_cast<size_t>(t))
                                       .at(static_cast<size_t>(z))
                                       .at(static_cast<size_t>(x))
                                       .at(static_cast<size_t>(a)),
                                   "step.dense");
  } else if (v.contains("sparse")) {
    const json& s = v["sparse"];
    StepOut def = s.contains("default") ? parse_pair(s["default"], "step.sparse") : StepOut{0, 0};
    for (auto& lt : *table)
      for (auto& lz : lt)
        for (auto& lx : lz) std::fill(lx.begin(), lx.end(), def);
    for (const auto& e : need(s, "entries", "step.sparse")) {
      if (!e.is_array() || e.size() != 6)
        throw std::invalid_argument("step.sparse: entries are [t, z, x, a, next_state, obs]");
      table->at(static_cast<size_t>(e[0].get<int>()))
          .at(static_cast<size_t>(e[1].get<int>()))
          .at(static_cast<size_t>(e[2].get<int>()))
          .at(static_cast<size_t>(e[3].get<int>())) = StepOut{e[4].get<int>(), e[5].get<int>()};
    }
  } else {
    throw std::invalid_argument("step: expected dense or sparse");
  }
  return [table](int t, int z, int x, int a) {
    return table->at(static_cast<size_t>(t))
        .at(static_cast<size_t>(z))
        .at(static_cast<size_t>(x))
        .at(static_cast<size_t>(a));
  };
}

Quotient parse_quotient(const json& v, const BridgePomdp& m) {
  Quotient q;
  q.name = need(v, "name", "quotients").get<std::string>();
  std::string where = "quotient '" + q.name + "'";
  std::string domain = need(v, "domain", where).get<std::string>();
  q.class_count = need_int(v, "class_count", where);
  auto classes = [&](size_t len) {
    std::vector<int> out;
    const json& c = need(v, "classes", where);
    if (c.size() != len)
      throw std::invalid_argument(where + ": expected " + std::to_string(len) + " classes");
    for (const auto& e : c) {
      int cls = e.get<int>();
      if (cls < 0 || cls >= q.class_count)
        throw std::invalid_argument(where + ": class id out of range");
      out.push_back(cls);
    }
    return out;
  };
  if (domain == "latent") {
    q.domain = Quotient::Domain::Latent;
    q.class_of = classes(static_cast<size_t>(m.latent.size));
  } else if (domain == "state") {
    q.domain = Quotient::Domain::State;
    q.time = need_int(v, "time", where);
    if (q.time < 0 || q.time > m.horizon)
      throw std::invalid_argument(where + ": time out of range");
    q.class_of = classes(static_cast<size_t>(m.state_count[static_cast<size_t>(q.time)]));
  } else if (domain == "last_obs") {
    q.domain = Quotient::Domain::Transcript;
    q.time = m.horizon;
    q.last_obs_class = classes(static_cast<size_t>(m.obs_count[static_cast<size_t>(m.horizon)]));
  } else if (domain == "transcript") {
    q.domain = Quotient::Domain::Transcript;
    q.time = m.horizon;
    for (const auto& e : need(v, "transcripts", where)) {
      std::vector<int> enc;
      for (const auto& n : need(e, "encoding", where)) enc.push_back(n.get<int>());
      int cls = need_int(e, "class", where);
      if (cls < 0 || cls >= q.class_count)
        throw std::invalid_argument(where + ": class id out of range");
      q.transcript_class[enc] = cls;
    }
  } else {
    throw std::invalid_argument(where + ": unknown domain '" + domain + "'");
  }
  return q;
}

using RewardTable = std::vector<std::vector<std::vector<std::vector<double>>>>;

std::function<double(int, int, int, int)> parse_reward(const json& v, const BridgePomdp& m) {
  if (v.contains("constant")) {
    double r = v["constant"].get<double>();
    return [r](int, int, int, int) { return r; };
  }
  if (!v.contains("dense"))
    throw std::invalid_argument("task_reward: expected constant or dense");
  auto table = std::make_shared<RewardTable>();
  const json& d = v["dense"];
  if (static_cast<int>(d.size()) != m.horizon)
    throw std::invalid_argument("task_reward.dense: needs horizon time slices");
  table->resize(static_cast<size_t>(m.horizon));
  for (int t = 0; t < m.horizon; ++t) {
    (*table)[static_cast<size_t>(t)].resize(static_cast<size_t>(m.latent.size));
    for (int z = 0; z < m.latent.size; ++z) {
      (*table)[static_cast<size_t>(t)][static_cast<size_t>(z)].resize(
          static_cast<size_t>(m.state_count[static_cast<size_t>(t)]));
      for (int x = 0; x < m.state_count[static_cast<size_t>(t)]; ++x) {
        auto& cell = (*table)[static_cast<size_t>(t)][static_cast<size_t>(z)][static_cast<size_t>(x)];
        for (int a = 0; a < m.action_count[static_cast<size_t>(t)]; ++a)
          cell.push_back(d.at(static_cast<size_t>(t))
                             .at(static_cast<size_t>(z))
                             .at(static_cast<size_t>(x))
                             .at(static_cast<size_t>(a))
                             .get<double>());
      }
    }
  }
  return [table](int t, int z, int x, int a) {
    return table->at(static_cast<size_t>(t))
        .at(static_cast<size_t>(z))
        .at(static_cast<size_t>(x))
        .at(static_cast<size_t>(a));
  };
}

planner::PlannerConfig parse_planner(const json& v, const BridgePomdp& m,
                                     const std::vector<Quotient>& quotients,
                                     const std::string& where) {
  planner::PlannerConfig cfg;
  cfg.objective = planner::objective_from_name(need(v, "objective", where).get<std::string>());
  cfg.q = find_quotient(quotients, need(v, "target", where).get<std::string>());
  auto opt_quotient = [&](const char* key) -> std::optional<Quotient> {
    if (!v.contains(key)) return std::nullopt;
    return find_quotient(quotients, v[key].get<std::string>());
  };
  cfg.v_q = opt_quotient("v_q");
  cfg.v_tilde = opt_quotient("v_tilde");
  cfg.v_obs = opt_quotient("v_obs");
  cfg.pred_target = opt_quotient("pred_target");
  if (v.contains("factors"))
    for (const auto& f : v["factors"])
      cfg.factors.push_back(find_quotient(quotients, f.get<std::string>()));
  if (v.contains("c_star"))
    for (const auto& c : v["c_star"])
      cfg.c_star.push_back(label_index(c, m.channel_labels, where + ".c_star"));
  if (v.contains("weights")) {
    const json& w = v["weights"];
    auto weight = [&](const char* key, double def) {
      return w.contains(key) ? w[key].get<double>() : def;
    };
    cfg.weights.lambda_c = weight("lambda_c", 1.0);
    cfg.weights.lambda_v = weight("lambda_v", 1.0);
    cfg.weights.lambda_o = weight("lambda_o", 1.0);
    cfg.weights.lambda_d = weight("lambda_d", 1.0);
    cfg.weights.beta = weight("beta", 1.0);
    cfg.weights.tau = weight("tau", 1e-9);
  }
  if (v.contains("mode")) {
    std::string mode = v["mode"].get<std::string>();
    if (mode == "dp")
      cfg.mode = planner::PlanMode::Dp;
    else if (mode == "greedy")
      cfg.mode = planner::PlanMode::Greedy;
    else
      throw std::invalid_argument(where + ": unknown mode '" + mode + "'");
  }
  if (v.contains("channel_term")) {
    std::string t = v["channel_term"].get<std::string>();
    if (t == "any")
      cfg.channel_term = planner::ChannelTermMode::Any;
    else if (t == "all")
      cfg.channel_term = planner::ChannelTermMode::All;
    else
      throw std::invalid_argument(where + ": unknown channel_term '" + t + "'");
  }
  if (v.contains("eval_policy")) {
    std::string t = v["eval_policy"].get<std::string>();
    if (t == "greedy_ig")
      cfg.eval_policy = planner::EvalPolicyMode::GreedyIg;
    else if (t == "worst_case")
      cfg.eval_policy = planner::EvalPolicyMode::WorstCase;
    else
      throw std::invalid_argument(where + ": unknown eval_policy '" + t + "'");
  }
  if (v.contains("task_reward")) cfg.task_reward = parse_reward(v["task_reward"], m);
  if (v.contains("tree_budget")) cfg.tree_budget = v["tree_budget"].get<long long>();
  cfg.weights.validate();
  return cfg;
}

}  // namespace

const Quotient& find_quotient(const std::vector<Quotient>& quotients, const std::string& name) {
  for (const auto& q : quotients)
    if (q.name == name) return q;
  throw std::invalid_argument("no quotient named '" + name + "'");
}

ParsedSpec parse_spec(const json& j) {
  ParsedSpec spec;
  BridgePomdp& m = spec.model;
  m.name = j.contains("name") ? j["name"].get<std::string>() : "";
  m.horizon = need_int(j, "horizon", "spec");
  if (m.horizon < 1) throw std::invalid_argument("spec: horizon must be >= 1");

  const json& latent = need(j, "latent", "spec");
  m.latent.size = need_int(latent, "size", "latent");
  if (m.latent.size < 1) throw std::invalid_argument("latent: size must be >= 1");
  m.latent.prior = parse_prior(need(latent, "prior", "latent"), m.latent.size, "latent");

  m.state_count =
      count_vector(need(j, "state_count", "spec"), static_cast<size_t>(m.horizon) + 1, "state_count");
  m.obs_count =
      count_vector(need(j, "obs_count", "spec"), static_cast<size_t>(m.horizon) + 1, "obs_count");
  m.action_count =
      count_vector(need(j, "action_count", "spec"), static_cast<size_t>(m.horizon), "action_count");

  auto init_vec = [&](const char* key) -> std::vector<int> {
    if (!j.contains(key)) return std::vector<int>(static_cast<size_t>(m.latent.size), 0);
    return per_latent_vector(j[key], m.latent.size, key);
  };
  auto init_state = std::make_shared<std::vector<int>>(init_vec("init_state"));
  auto init_obs = std::make_shared<std::vector<int>>(init_vec("init_obs"));
  m.init_state = [init_state](int z) { return init_state->at(static_cast<size_t>(z)); };
  m.init_obs = [init_obs](int z) { return init_obs->at(static_cast<size_t>(z)); };

  if (j.contains("channel_labels")) {
    m.channel_labels.clear();
    for (const auto& e : j["channel_labels"]) m.channel_labels.push_back(e.get<std::string>());
    if (m.channel_labels.empty())
      throw std::invalid_argument("channel_labels: must not be empty");
  }

  m.step = parse_step(need(j, "step", "spec"), m);
  m.kappa_x = parse_labels(j.contains("kappa") ? &j["kappa"] : nullptr, m, "kappa");
  m.phi_x = parse_labels(j.contains("phi") ? &j["phi"] : nullptr, m, "phi");
  m.validate(true);

  if (j.contains("quotients"))
    for (const auto& q : j["quotients"]) spec.quotients.push_back(parse_quotient(q, m));

  if (j.contains("planner"))
    spec.planner_config = parse_planner(j["planner"], m, spec.quotients, "planner");
  if (j.contains("baseline"))
    spec.baseline_config = parse_planner(j["baseline"], m, spec.quotients, "baseline");
  if (j.contains("policy")) spec.policy = parse_policy_json(j["policy"]);

  if (j.contains("budgets")) {
    const json& b = j["budgets"];
    if (b.contains("enum")) spec.enum_budget = b["enum"].get<long long>();
    if (b.contains("reach")) spec.reach_budget = b["reach"].get<long long>();
  }
  return spec;
}

ParsedSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open spec file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("parse error in '" + path + "': " + e.what());
  }
  try {
    return parse_spec(j);
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed spec '" + path + "': " + e.what());
  }
}

json model_json(const BridgePomdp& m) {
  json j;
  if (!m.name.empty()) j["name"] = m.name;
  j["horizon"] = m.horizon;
  bool uniform = true;
  for (int z = 0; z < m.latent.size; ++z)
    if (m.latent.prior.p[static_cast<size_t>(z)] != m.latent.prior.p[0]) uniform = false;
  if (uniform) {
    j["latent"] = {{"size", m.latent.size}, {"prior", "uniform"}};
  } else {
    j["latent"] = {{"size", m.latent.size}, {"prior", m.latent.prior.p}};
  }
  j["state_count"] = m.state_count;
  j["obs_count"] = m.obs_count;
  j["action_count"] = m.action_count;
  std::vector<int> init_state, init_obs;
  for (int z = 0; z < m.latent.size; ++z) {
    init_state.push_back(m.init_state(z));
    init_obs.push_back(m.init_obs(z));
  }
  j["init_state"] = init_state;
  j["init_obs"] = init_obs;
  j["channel_labels"] = m.channel_labels;

  json dense = json::array();
  for (int t = 0; t < m.horizon; ++t) {
    json dt = json::array();
    for (int z = 0; z < m.latent.size; ++z) {
      json dz = json::array();
      for (int x = 0; x < m.state_count[static_cast<size_t>(t)]; ++x) {
        json dx = json::array();
        for (int a = 0; a < m.action_count[static_cast<size_t>(t)]; ++a) {
          StepOut s = m.step(t, z, x, a);
          dx.push_back(json::array({s.x, s.o}));
        }
        dz.push_back(std::move(dx));
      }
      dt.push_back(std::move(dz));
    }
    dense.push_back(std::move(dt));
  }
  j["step"] = {{"dense", std::move(dense)}};

  auto labels = [&](const std::function<int(int, int, int)>& fn) {
    json d = json::array();
    for (int t = 0; t <= m.horizon; ++t) {
      json dt = json::array();
      for (int z = 0; z < m.latent.size; ++z) {
        json dz = json::array();
        for (int x = 0; x < m.state_count[static_cast<size_t>(t)]; ++x)
          dz.push_back(m.channel_labels.at(static_cast<size_t>(fn(t, z, x))));
        dt.push_back(std::move(dz));
      }
      d.push_back(std::move(dt));
    }
    return json{{"dense", std::move(d)}};
  };
  j["kappa"] = labels(m.kappa_x);
  j["phi"] = labels(m.phi_x);
  return j;
}

json quotient_json(const Quotient& q) {
  json j;
  j["name"] = q.name;
  j["class_count"] = q.class_count;
  switch (q.domain) {
    case Quotient::Domain::Latent:
      j["domain"] = "latent";
      j["classes"] = q.class_of;
      break;
    case Quotient::Domain::State:
      j["domain"] = "state";
      j["time"] = q.time;
      j["classes"] = q.class_of;
      break;
    case Quotient::Domain::Transcript:
      if (!q.last_obs_class.empty()) {
        j["domain"] = "last_obs";
        j["classes"] = q.last_obs_class;
      } else {
        j["domain"] = "transcript";
        json entries = json::array();
        for (const auto& [enc, cls] : q.transcript_class)
          entries.push_back(json{{"encoding", enc}, {"class", cls}});
        j["transcripts"] = std::move(entries);
      }
      break;
  }
  return j;
}

json planner_json(const planner::PlannerConfig& cfg, const BridgePomdp& m,
                  const json& reward_json) {
  json j;
  j["objective"] = planner::objective_name(cfg.objective);
  j["target"] = cfg.q.name;
  if (cfg.v_q) j["v_q"] = cfg.v_q->name;
  if (cfg.v_tilde) j["v_tilde"] = cfg.v_tilde->name;
  if (cfg.v_obs) j["v_obs"] = cfg.v_obs->name;
  if (cfg.pred_target) j["pred_target"] = cfg.pred_target->name;
  if (!cfg.factors.empty()) {
    json f = json::array();
    for (const auto& q : cfg.factors) f.push_back(q.name);
    j["factors"] = std::move(f);
  }
  if (!cfg.c_star.empty()) {
    json c = json::array();
    for (int id : cfg.c_star) c.push_back(m.channel_labels.at(static_cast<size_t>(id)));
    j["c_star"] = std::move(c);
  }
  j["weights"] = {{"lambda_c", cfg.weights.lambda_c}, {"lambda_v", cfg.weights.lambda_v},
                  {"lambda_o", cfg.weights.lambda_o}, {"lambda_d", cfg.weights.lambda_d},
                  {"beta", cfg.weights.beta},         {"tau", cfg.weights.tau}};
  j["mode"] = cfg.mode == planner::PlanMode::Dp ? "dp" : "greedy";
  j["channel_term"] = cfg.channel_term == planner::ChannelTermMode::Any ? "any" : "all";
  j["eval_policy"] =
      cfg.eval_policy == planner::EvalPolicyMode::GreedyIg ? "greedy_ig" : "worst_case";
  if (!reward_json.is_null()) j["task_reward"] = reward_json;
  j["tree_budget"] = cfg.tree_budget;
  return j;
}

json policy_json(const Policy& p) {
  json j;
  if (!p.name.empty()) j["name"] = p.name;
  switch (p.kind) {
    case Policy::Kind::OpenLoop:
      j["open_loop"] = p.seq;
      break;
    case Policy::Kind::History: {
      json entries = json::array();
      for (const auto& [prefix, a] : p.table)
        entries.push_back(json{{"prefix", prefix}, {"action", a}});
      j["table"] = std::move(entries);
      break;
    }
    case Policy::Kind::Mixture: {
      json parts = json::array();
      for (const auto& [w, comp] : p.mix)
        parts.push_back(json{{"weight", w}, {"policy", policy_json(comp)}});
      j["mixture"] = std::move(parts);
      break;
    }
    case Policy::Kind::Callable:
      throw std::invalid_argument("callable policies cannot be serialized");
  }
  return j;
}

Policy parse_policy_json(const json& j) {
  std::string name = j.contains("name") ? j["name"].get<std::string>() : "";
  if (j.contains("open_loop")) {
    std::vector<int> seq;
    for (const auto& a : j["open_loop"]) seq.push_back(a.get<int>());
    return Policy::open_loop(std::move(seq), name);
  }
  if (j.contains("table")) {
    std::map<std::vector<int>, int> table;
    for (const auto& e : j["table"]) {
      std::vector<int> prefix;
      for (const auto& v : need(e, "prefix", "policy.table")) prefix.push_back(v.get<int>());
      table[prefix] = need_int(e, "action", "policy.table");
    }
    return Policy::from_table(std::move(table), name);
  }
  if (j.contains("mixture")) {
    std::vector<std::pair<double, Policy>> parts;
    for (const auto& e : j["mixture"]) {
      const json& w = need(e, "weight", "policy.mixture");
      double weight = w.is_string() ? parse_probability(w.get<std::string>()) : w.get<double>();
      parts.emplace_back(weight, parse_policy_json(need(e, "policy", "policy.mixture")));
    }
    return Policy::mixture(std::move(parts), name);
  }
  throw std::invalid_argument("policy: expected open_loop, table, or mixture");
}

Policy load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open policy file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("parse error in '" + path + "': " + e.what());
  }
  return parse_policy_json(j);
}

void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(1) << "\n";
}

}  // namespace spec_io
}  // namespace bpomdp
