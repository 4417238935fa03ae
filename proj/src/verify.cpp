#include "bpomdp/verify.hpp"

#include "bpomdp/spec_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace bpomdp {
namespace verify {

namespace {

constexpr double kTol = 1e-9;

using nlohmann::json;

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Bounded sampling is hand-rolled on top of the fixed mt19937_64 stream so
// summaries are reproducible across standard libraries.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t s) : gen(s) {}
  int below(int n) { return n <= 1 ? 0 : static_cast<int>(gen() % static_cast<std::uint64_t>(n)); }
  int range(int lo, int hi) { return lo + below(hi - lo + 1); }
  bool chance(int num, int den) { return below(den) < num; }
};

struct CheckCase {
  BridgePomdp model;
  std::vector<Quotient> quotients;
  std::optional<Policy> policy;
  json params;
};

struct Caps {
  int zs, xs, as, horizon;
};

Caps clip(const VerifyConfig& cfg, int zs, int xs, int as, int horizon) {
  return Caps{std::min(cfg.max_latents, zs), std::min(cfg.max_states, xs),
              std::min(cfg.max_actions, as), std::min(cfg.max_horizon, horizon)};
}

enum class ObsMode { Free, FromState };

BridgePomdp random_model(Rng& r, const Caps& caps, ObsMode obs_mode) {
  BridgePomdp m;
  m.horizon = r.range(1, caps.horizon);
  m.latent.size = r.range(1, caps.zs);
  std::vector<double> prior(static_cast<size_t>(m.latent.size), 0.0);
  int total = 0;
  for (double& p : prior)
    if (r.chance(3, 4)) {
      p = r.range(1, 4);
      total += static_cast<int>(p);
    }
  if (total == 0) {
    prior[static_cast<size_t>(r.below(m.latent.size))] = 1.0;
    total = 1;
  }
  for (double& p : prior) p /= total;
  m.latent.prior = Dist(std::move(prior));

  for (int t = 0; t <= m.horizon; ++t) m.state_count.push_back(r.range(1, caps.xs));
  m.obs_count.push_back(r.range(1, 2));
  for (int t = 1; t <= m.horizon; ++t) m.obs_count.push_back(r.range(1, 4));
  for (int t = 0; t < m.horizon; ++t) m.action_count.push_back(r.range(1, caps.as));

  std::vector<int> init_state, init_obs;
  for (int z = 0; z < m.latent.size; ++z) {
    init_state.push_back(r.below(m.state_count[0]));
    init_obs.push_back(r.below(m.obs_count[0]));
  }
  m.init_state = [init_state](int z) { return init_state.at(static_cast<size_t>(z)); };
  m.init_obs = [init_obs](int z) { return init_obs.at(static_cast<size_t>(z)); };

  // Optional readout tables make every observation a function of the next
  // state (given the latent), which some inequalities assume.
  std::vector<std::vector<std::vector<int>>> readout;
  if (obs_mode == ObsMode::FromState) {
    readout.resize(static_cast<size_t>(m.horizon) + 1);
    for (int t = 1; t <= m.horizon; ++t) {
      readout[static_cast<size_t>(t)].resize(static_cast<size_t>(m.latent.size));
      for (int z = 0; z < m.latent.size; ++z)
        for (int x = 0; x < m.state_count[static_cast<size_t>(t)]; ++x)
          readout[static_cast<size_t>(t)][static_cast<size_t>(z)].push_back(
              r.below(m.obs_count[static_cast<size_t>(t)]));
    }
  }

  std::vector<std::vector<std::vector<std::vector<StepOut>>>> table(
      static_cast<size_t>(m.horizon));
  for (int t = 0; t < m.horizon; ++t) {
    table[static_cast<size_t>(t)].resize(static_cast<size_t>(m.latent.size));
    for (int z = 0; z < m.latent.size; ++z) {
      table[static_cast<size_t>(t)][static_cast<size_t>(z)].resize(
          static_cast<size_t>(m.state_count[static_cast<size_t>(t)]));
      for (int x = 0; x < m.state_count[static_cast<size_t>(t)]; ++x)
        for (int a = 0; a < m.action_count[static_cast<size_t>(t)]; ++a) {
          StepOut s;
          s.x = r.below(m.state_count[static_cast<size_t>(t) + 1]);
          s.o = obs_mode == ObsMode::FromState
                    ? readout[static_cast<size_t>(t) + 1][static_cast<size_t>(z)]
                              [static_cast<size_t>(s.x)]
                    : r.below(m.obs_count[static_cast<size_t>(t) + 1]);
          table[static_cast<size_t>(t)][static_cast<size_t>(z)][static_cast<size_t>(x)]
              .push_back(s);
        }
    }
  }
  m.step = [table](int t, int z, int x, int a) {
    return table.at(static_cast<size_t>(t))
        .at(static_cast<size_t>(z))
        .at(static_cast<size_t>(x))
        .at(static_cast<size_t>(a));
  };
  m.kappa_x = [](int, int, int) { return 0; };
  m.phi_x = [](int, int, int) { return 0; };
  return m;
}

Quotient random_latent_quotient(Rng& r, const BridgePomdp& m, std::string name) {
  Quotient q;
  q.domain = Quotient::Domain::Latent;
  q.name = std::move(name);
  int spread = r.range(1, std::max(1, m.latent.size));
  std::map<int, int> remap;
  for (int z = 0; z < m.latent.size; ++z) {
    int raw = r.below(spread);
    auto [it, fresh] = remap.emplace(raw, static_cast<int>(remap.size()));
    (void)fresh;
    q.class_of.push_back(it->second);
  }
  q.class_count = static_cast<int>(remap.size());
  return q;
}

Quotient random_state_quotient(Rng& r, const BridgePomdp& m, int time, std::string name) {
  Quotient q;
  q.domain = Quotient::Domain::State;
  q.time = time;
  q.name = std::move(name);
  int states = m.state_count[static_cast<size_t>(time)];
  int spread = r.range(1, std::max(1, states));
  std::map<int, int> remap;
  for (int x = 0; x < states; ++x) {
    int raw = r.below(spread);
    auto [it, fresh] = remap.emplace(raw, static_cast<int>(remap.size()));
    (void)fresh;
    q.class_of.push_back(it->second);
  }
  q.class_count = static_cast<int>(remap.size());
  return q;
}

Quotient last_obs_identity(const BridgePomdp& m, std::string name) {
  std::vector<int> cls(static_cast<size_t>(m.obs_count[static_cast<size_t>(m.horizon)]));
  for (size_t i = 0; i < cls.size(); ++i) cls[i] = static_cast<int>(i);
  return Quotient::transcript_last_obs(m, cls, static_cast<int>(cls.size()), std::move(name));
}

Quotient random_last_obs_quotient(Rng& r, const BridgePomdp& m, std::string name) {
  int obs = m.obs_count[static_cast<size_t>(m.horizon)];
  int spread = r.range(1, std::max(1, obs));
  std::map<int, int> remap;
  std::vector<int> cls;
  for (int o = 0; o < obs; ++o) {
    int raw = r.below(spread);
    auto [it, fresh] = remap.emplace(raw, static_cast<int>(remap.size()));
    (void)fresh;
    cls.push_back(it->second);
  }
  return Quotient::transcript_last_obs(m, cls, static_cast<int>(remap.size()), std::move(name));
}

Policy random_policy(Rng& r, const BridgePomdp& m, bool allow_mixture) {
  auto open_loop = [&] {
    std::vector<int> seq;
    for (int t = 0; t < m.horizon; ++t)
      seq.push_back(r.below(m.action_count[static_cast<size_t>(t)]));
    return Policy::open_loop(std::move(seq));
  };
  int kind = r.below(allow_mixture ? 3 : 2);
  if (kind == 0) return open_loop();
  if (kind == 2) {
    Policy a = open_loop(), b = open_loop();
    return Policy::mixture({{0.5, std::move(a)}, {0.5, std::move(b)}});
  }
  // Random history policy over exactly the reachable prefixes.
  std::map<std::vector<int>, int> table;
  for (int z : m.latent.prior.support()) {
    int x = m.init_state(z);
    std::vector<int> prefix{m.init_obs(z)};
    for (int t = 0; t < m.horizon; ++t) {
      auto [it, fresh] = table.try_emplace(prefix, 0);
      if (fresh) it->second = r.below(m.action_count[static_cast<size_t>(t)]);
      StepOut s = m.step(t, z, x, it->second);
      x = s.x;
      prefix.push_back(it->second);
      prefix.push_back(s.o);
    }
  }
  return Policy::from_table(std::move(table));
}

// Terminal latent entropy minus starting latent entropy, grouped by history.
double realized_information_gain(const BridgePomdp& m, const Policy& policy) {
  auto rows = enumerate_closed_loop(m, policy);
  auto grouped_entropy = [&](auto key_of) {
    std::map<std::vector<int>, std::map<int, double>> groups;
    for (const auto& row : rows) groups[key_of(row)][row.z] += row.probability;
    double h = 0.0;
    for (const auto& [key, mass] : groups) {
      double total = 0.0;
      std::vector<double> w;
      for (const auto& [z, p] : mass) {
        total += p;
        w.push_back(p);
      }
      h += total * info::entropy_bits(w);
    }
    return h;
  };
  double start = grouped_entropy(
      [](const ClosedLoopRow& row) { return std::vector<int>{row.trajectory.observations[0]}; });
  double end = grouped_entropy(
      [](const ClosedLoopRow& row) { return row.trajectory.transcript(); });
  return start - end;
}

Quotient transcript_identity(const std::vector<ClosedLoopRow>& rows, std::string name) {
  info::TranscriptIndex idx = info::index_transcripts(rows);
  Quotient q;
  q.domain = Quotient::Domain::Transcript;
  q.name = std::move(name);
  q.class_count = static_cast<int>(idx.encodings.size());
  q.transcript_class = idx.ids;
  return q;
}

// ---- check cores ----

double core_sandwich(const CheckCase& c) {
  if (!c.policy) throw std::invalid_argument("sandwich: missing policy");
  const Quotient& q = spec_io::find_quotient(c.quotients, "q");
  const Quotient& w = spec_io::find_quotient(c.quotients, "w");
  const Quotient& v = spec_io::find_quotient(c.quotients, "v");
  const Quotient& vt = spec_io::find_quotient(c.quotients, "vt");
  int z = c.params.at("z").get<int>();
  info::Context ctx{z, c.model.init_state(z), 0};
  gap::SandwichCheck chk = gap::theorem1_check(c.model, *c.policy, q, w, v, vt, ctx);
  return std::min(std::min(chk.compression_lower_slack, chk.compression_upper_slack),
                  std::min(chk.control_lower_slack, chk.control_upper_slack));
}

double core_regret(const CheckCase& c) {
  gap::ObjectiveTable table;
  table.objectives = {"Ji", "Jj"};
  for (const auto& name : c.params.at("options")) table.options.push_back(name.get<std::string>());
  table.values.clear();
  for (const auto& row : c.params.at("values")) {
    std::vector<double> vals;
    for (const auto& v : row) vals.push_back(v.get<double>());
    table.values.push_back(std::move(vals));
  }
  double eta = c.params.at("eta").get<double>();
  double omega = c.params.at("omega").get<double>();

  gap::RegretTransfer res = gap::regret_transfer_check(table, "Ji", "Jj", eta);
  double margin = res.bound - res.worst_regret;

  gap::ObjectiveTable tight = gap::tightness_construction(eta, omega);
  gap::RegretTransfer res2 = gap::regret_transfer_check(tight, "Ji", "Jj", eta);
  double attained = -std::fabs(res2.worst_regret - (eta + omega));
  if (!res2.tight) attained = std::min(attained, -1.0);
  return std::min(margin, attained);
}

double core_fibers(const CheckCase& c) {
  auto rows = enumerate_closed_loop(c.model, *c.policy);
  std::map<std::vector<int>, std::map<int, double>> groups;
  for (const auto& row : rows) groups[row.trajectory.transcript()][row.z] += row.probability;
  double worst = 0.0;
  std::map<int, double> latent_total;
  for (const auto& [enc, mass] : groups) {
    double total = 0.0;
    for (const auto& [z, p] : mass) total += p;
    Dist post = info::posterior_latent(c.model, *c.policy, enc);
    for (int z = 0; z < c.model.latent.size; ++z) {
      double expected = mass.count(z) ? mass.at(z) / total : 0.0;
      worst = std::max(worst, std::fabs(post.p[static_cast<size_t>(z)] - expected));
    }
    for (const auto& [z, p] : mass) latent_total[z] += p;
  }
  // The fibers partition the support: per-latent masses recompose the prior.
  for (int z : c.model.latent.prior.support())
    worst = std::max(worst, std::fabs(latent_total[z] - c.model.latent.prior.at(z)));
  return -worst;
}

double core_witness(const CheckCase& c) {
  const Quotient& q = spec_io::find_quotient(c.quotients, "q");
  int z = c.params.at("z").get<int>();
  int t = c.params.at("t").get<int>();
  std::vector<int> prefix = rollout(c.model, *c.policy, z).prefix(t);
  gap::MissingBits mb = gap::missing_sensing_bits(c.model, *c.policy, q, prefix);
  if (!mb.witness_ok) return -1.0;
  return -std::max(std::fabs(mb.witness_cond_entropy),
                   std::fabs(mb.witness_entropy - mb.bits));
}

double core_refinement(const CheckCase& c) {
  std::vector<int> fine, coarse;
  for (const auto& v : c.params.at("fine")) fine.push_back(v.get<int>());
  for (const auto& v : c.params.at("coarse")) coarse.push_back(v.get<int>());
  gap::RefinementCheck chk = gap::refinement_check(c.model.latent.prior, fine, coarse);
  if (!chk.refines || !chk.monotone_ok) return -1.0;
  return chk.i_fine - chk.i_coarse;
}

planner::PlannerConfig config_from_params(const CheckCase& c) {
  planner::PlannerConfig cfg;
  cfg.objective = planner::Objective::Bgp;
  const json& p = c.params;
  cfg.q = spec_io::find_quotient(c.quotients, p.at("q").get<std::string>());
  if (p.contains("v_q"))
    cfg.v_q = spec_io::find_quotient(c.quotients, p["v_q"].get<std::string>());
  if (p.contains("v_tilde"))
    cfg.v_tilde = spec_io::find_quotient(c.quotients, p["v_tilde"].get<std::string>());
  if (p.contains("factors"))
    for (const auto& f : p["factors"])
      cfg.factors.push_back(spec_io::find_quotient(c.quotients, f.get<std::string>()));
  if (p.contains("c_star"))
    for (const auto& l : p["c_star"]) cfg.c_star.push_back(l.get<int>());
  const json& w = p.at("weights");
  cfg.weights.lambda_c = w.at("lambda_c").get<double>();
  cfg.weights.lambda_v = w.at("lambda_v").get<double>();
  cfg.weights.lambda_o = w.at("lambda_o").get<double>();
  cfg.weights.lambda_d = w.at("lambda_d").get<double>();
  cfg.weights.beta = w.at("beta").get<double>();
  cfg.weights.tau = w.at("tau").get<double>();
  if (p.contains("reward")) {
    auto table = std::make_shared<json>(p["reward"]);
    cfg.task_reward = [table](int t, int z, int x, int a) {
      return table->at(static_cast<size_t>(t))
          .at(static_cast<size_t>(z))
          .at(static_cast<size_t>(x))
          .at(static_cast<size_t>(a))
          .get<double>();
    };
  }
  return cfg;
}

double core_telescoping(const CheckCase& c) {
  planner::PlannerConfig cfg = config_from_params(c);
  double via_groups = planner::evaluate_objective(c.model, *c.policy, cfg);

  // Independent route: per-path task reward plus potential drop, summed step
  // by step.
  auto rows = enumerate_closed_loop(c.model, *c.policy);
  std::map<std::vector<int>, double> phi_cache;
  auto phi_at = [&](const std::vector<int>& prefix) {
    auto it = phi_cache.find(prefix);
    if (it != phi_cache.end()) return it->second;
    double phi = planner::bgp_potential(c.model, cfg, planner::belief_at(c.model, prefix)).total;
    phi_cache.emplace(prefix, phi);
    return phi;
  };
  double stepwise = 0.0;
  for (const auto& row : rows) {
    double path = 0.0;
    for (int t = 0; t < c.model.horizon; ++t) {
      if (cfg.task_reward)
        path += cfg.task_reward(t, row.z, row.trajectory.states[static_cast<size_t>(t)],
                                row.trajectory.actions[static_cast<size_t>(t)]);
      path += cfg.weights.beta *
              (phi_at(row.trajectory.prefix(t)) - phi_at(row.trajectory.prefix(t + 1)));
    }
    stepwise += row.probability * path;
  }
  return -std::fabs(via_groups - stepwise);
}

double core_massey(const CheckCase& c) {
  const BridgePomdp& m = c.model;
  auto rows = enumerate_closed_loop(m, *c.policy);
  std::vector<info::Column> cols;
  for (int t = 0; t < m.horizon; ++t) {
    cols.push_back(info::Column{"A" + std::to_string(t + 1),
                                m.action_count[static_cast<size_t>(t)],
                                [t](const ClosedLoopRow& row) {
                                  return row.trajectory.actions[static_cast<size_t>(t)];
                                }});
    cols.push_back(info::Column{"O" + std::to_string(t + 1),
                                m.obs_count[static_cast<size_t>(t) + 1],
                                [t](const ClosedLoopRow& row) {
                                  return row.trajectory.observations[static_cast<size_t>(t) + 1];
                                }});
  }
  info::JointTable joint = info::build_joint(m, *c.policy, cols);
  info::DirectedInfoResult di = info::directed_information(joint, m.horizon);
  double conservation =
      -std::fabs(di.actions_to_observations + di.observations_to_actions - di.mutual);

  // Mediated budget form: everything is carried by B = (component, latent).
  std::map<std::pair<int, int>, int> b_index;
  for (const auto& row : rows) b_index.try_emplace({row.component, row.z},
                                                   static_cast<int>(b_index.size()));
  auto cols_b = cols;
  cols_b.push_back(info::Column{"B", static_cast<int>(b_index.size()),
                                [&b_index](const ClosedLoopRow& row) {
                                  return b_index.at({row.component, row.z});
                                }});
  double budget_bits = 0.0;
  for (int t = 0; t < m.horizon; ++t)
    budget_bits += std::log2(static_cast<double>(m.action_count[static_cast<size_t>(t)]));
  info::JointTable joint_b = info::build_joint(m, *c.policy, cols_b);
  gap::DiBudgetCheck chk = gap::di_budget_check(joint_b, budget_bits);
  double budget_margin = std::min(chk.h_b, chk.budget) - chk.mutual;
  return std::min(conservation, budget_margin);
}

double core_absorption(const CheckCase& c) {
  const Quotient& q = spec_io::find_quotient(c.quotients, "q");
  const Quotient& v = spec_io::find_quotient(c.quotients, "v");
  const Quotient& mem = spec_io::find_quotient(c.quotients, "memory");
  gap::AbsorptionReport rep = gap::absorption_report(c.model, *c.policy, q, v, mem);
  double margin = 0.0;
  if (rep.bound_applicable) {
    margin = std::min(rep.i_q_m - rep.i_q_v, rep.h_q_given_v - rep.h_q_given_m);
  }
  if (rep.identification != (rep.h_q_given_v <= kTol)) margin = std::min(margin, -1.0);
  if (rep.overwrite_collapse != (rep.h_q_given_v > kTol && rep.h_v_given_m <= kTol))
    margin = std::min(margin, -1.0);
  if (rep.h_q_given_m <= kTol) {
    double count_margin =
        std::log2(static_cast<double>(rep.memory_class_count)) - rep.h_q;
    margin = std::min(margin, count_margin);
    if (!rep.memory_count_ok) margin = std::min(margin, -1.0);
  }
  return margin;
}

double core_counting(const CheckCase& c) {
  const Quotient& q = spec_io::find_quotient(c.quotients, "q");
  const Quotient& mem = spec_io::find_quotient(c.quotients, "memory");
  gap::AbsorptionReport rep = gap::absorption_report(c.model, *c.policy, q, mem, mem);
  // The instance is built so the transcript pins the latent down; the class
  // count must then cover the target entropy.
  if (rep.h_q_given_m > kTol) return -1.0;
  return std::log2(static_cast<double>(rep.memory_class_count)) - rep.h_q;
}

double core_ig_telescoping(const CheckCase& c) {
  const BridgePomdp& m = c.model;
  auto rows = enumerate_closed_loop(m, *c.policy);
  std::map<std::vector<int>, double> prefix_mass;
  for (const auto& row : rows)
    for (int t = 0; t < m.horizon; ++t) prefix_mass[row.trajectory.prefix(t)] += row.probability;
  // Deduplicate: several rows share prefixes; information_gain is a property
  // of the prefix alone.
  double total = 0.0;
  for (const auto& [prefix, mass] : prefix_mass) {
    int t = static_cast<int>(prefix.size() / 2);
    int a = c.policy->action_at(prefix, t);
    total += mass * info::information_gain(m, *c.policy, prefix, a);
  }
  return -std::fabs(total - realized_information_gain(m, *c.policy));
}

double core_bottleneck(const CheckCase& c) {
  int z = c.params.at("z").get<int>();
  info::Context ctx{z, c.model.init_state(z), 0};
  Quotient state_id = Quotient::state_identity(c.model, c.model.horizon, "terminal");
  Quotient obs_id = last_obs_identity(c.model, "readout");
  double emp_x = info::empowerment_det(c.model, ctx, c.model.horizon, state_id);
  double emp_o =
      std::log2(static_cast<double>(gap::context_reach(c.model, obs_id, ctx).size()));
  return emp_x - emp_o;
}

double core_steering(const CheckCase& c) {
  const BridgePomdp& m = c.model;
  int cstar = m.label_id("cstar");
  std::vector<Policy> policies;
  try {
    policies = planner::enumerate_policies(m, 512);
  } catch (const std::runtime_error&) {
    // Too many history policies: fall back to the open-loop subset.
    std::vector<int> seq(static_cast<size_t>(m.horizon), 0);
    while (true) {
      policies.push_back(Policy::open_loop(seq));
      int i = m.horizon - 1;
      for (; i >= 0; --i) {
        if (++seq[static_cast<size_t>(i)] < m.action_count[static_cast<size_t>(i)]) break;
        seq[static_cast<size_t>(i)] = 0;
      }
      if (i < 0) break;
    }
  }
  double margin = 0.0;
  for (const auto& policy : policies) {
    double gain = realized_information_gain(m, policy);
    if (gain <= kTol) continue;
    // Information was gained, so some path must have sat in the sensing
    // condition when an observation was emitted.
    bool visited = false;
    for (const auto& row : enumerate_closed_loop(m, policy))
      for (int t = 0; t < m.horizon && !visited; ++t)
        if (row.trajectory.phi_labels[static_cast<size_t>(t)] == cstar) visited = true;
    if (!visited) margin = std::min(margin, -gain);
  }
  return margin;
}

double core_authority(const CheckCase& c) {
  const BridgePomdp& m = c.model;
  gap::AuthorityReport rep = gap::authority_report(m, m.horizon);
  auto support = m.latent.prior.support();
  int failures = 0;

  // Independent enumeration of terminal states per (sequence, latent).
  long long seq_count = 1;
  for (int t = 0; t < m.horizon; ++t) seq_count *= m.action_count[static_cast<size_t>(t)];
  auto run_seq = [&](long long s, int z) {
    std::vector<int> seq(static_cast<size_t>(m.horizon));
    long long rest = s;
    for (int i = m.horizon - 1; i >= 0; --i) {
      seq[static_cast<size_t>(i)] = static_cast<int>(rest % m.action_count[static_cast<size_t>(i)]);
      rest /= m.action_count[static_cast<size_t>(i)];
    }
    int x = m.init_state(z);
    for (int t = 0; t < m.horizon; ++t) x = m.step(t, z, x, seq[static_cast<size_t>(t)]).x;
    return x;
  };
  std::vector<std::vector<int>> term(static_cast<size_t>(seq_count));
  for (long long s = 0; s < seq_count; ++s)
    for (int z : support) term[static_cast<size_t>(s)].push_back(run_seq(s, z));

  int terminals = m.state_count[static_cast<size_t>(m.horizon)];
  bool brute_state = true, brute_strong = true;
  for (int target = 0; target < terminals; ++target) {
    bool strong_here = false;
    for (long long s = 0; s < seq_count && !strong_here; ++s) {
      bool all = true;
      for (size_t i = 0; i < support.size(); ++i)
        if (term[static_cast<size_t>(s)][i] != target) all = false;
      strong_here = all;
    }
    if (!strong_here) brute_strong = false;
    for (size_t i = 0; i < support.size(); ++i) {
      bool reach = false;
      for (long long s = 0; s < seq_count && !reach; ++s)
        if (term[static_cast<size_t>(s)][i] == target) reach = true;
      if (!reach) brute_state = false;
    }
  }
  if (rep.state_conditioned != brute_state) ++failures;
  if (rep.strong_overwrite != brute_strong) ++failures;

  // Replay every recorded witness.
  for (const auto& tgt : rep.targets) {
    if (tgt.strong_sequence) {
      for (int z : support) {
        int x = m.init_state(z);
        for (int t = 0; t < m.horizon; ++t)
          x = m.step(t, z, x, tgt.strong_sequence->at(static_cast<size_t>(t))).x;
        if (x != tgt.target_state) ++failures;
      }
    }
    for (size_t i = 0; i < support.size(); ++i) {
      if (!tgt.per_latent_sequence[i]) continue;
      int x = m.init_state(support[i]);
      for (int t = 0; t < m.horizon; ++t)
        x = m.step(t, support[i], x, tgt.per_latent_sequence[i]->at(static_cast<size_t>(t))).x;
      if (x != tgt.target_state) ++failures;
    }
  }

  // Ambiguity: same first observation, some target reachable by both starts
  // but never under one shared sequence.
  std::set<std::pair<int, int>> brute_pairs;
  for (size_t i = 0; i < support.size(); ++i)
    for (size_t j = i + 1; j < support.size(); ++j) {
      if (m.init_obs(support[i]) != m.init_obs(support[j])) continue;
      std::set<int> ri, rj, shared;
      for (long long s = 0; s < seq_count; ++s) {
        ri.insert(term[static_cast<size_t>(s)][i]);
        rj.insert(term[static_cast<size_t>(s)][j]);
        if (term[static_cast<size_t>(s)][i] == term[static_cast<size_t>(s)][j])
          shared.insert(term[static_cast<size_t>(s)][i]);
      }
      for (int target : ri)
        if (rj.count(target) && !shared.count(target)) {
          brute_pairs.insert({support[i], support[j]});
          break;
        }
    }
  std::set<std::pair<int, int>> reported(rep.ambiguous_pairs.begin(), rep.ambiguous_pairs.end());
  if (reported != brute_pairs) ++failures;

  return failures == 0 ? 0.0 : -static_cast<double>(failures);
}

// ---- case generators ----

CheckCase gen_sandwich(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 64, 16, 4, 3), ObsMode::Free);
  c.model.name = "sandwich_case";
  c.policy = random_policy(r, c.model, true);
  Quotient q = r.chance(1, 2) ? Quotient::latent_identity(c.model, "q")
                              : random_latent_quotient(r, c.model, "q");
  c.quotients = {q, random_last_obs_quotient(r, c.model, "w"),
                 random_state_quotient(r, c.model, c.model.horizon, "v"),
                 random_last_obs_quotient(r, c.model, "vt")};
  auto support = c.model.latent.prior.support();
  c.params["z"] = support[static_cast<size_t>(r.below(static_cast<int>(support.size())))];
  return c;
}

CheckCase gen_regret(Rng& r, const VerifyConfig&) {
  CheckCase c;
  int options = r.range(2, 5);
  json names = json::array(), ji = json::array(), jj = json::array();
  for (int i = 0; i < options; ++i) {
    names.push_back("u" + std::to_string(i));
    ji.push_back(r.below(17) / 16.0);
    jj.push_back(r.below(17) / 16.0);
  }
  int eta16 = r.below(9);
  c.params["options"] = names;
  c.params["values"] = json::array({ji, jj});
  c.params["eta"] = eta16 / 16.0;
  c.params["omega"] = r.below(17 - eta16) / 16.0;
  return c;
}

CheckCase gen_fibers(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 64, 16, 4, 3), ObsMode::Free);
  c.model.name = "fibers_case";
  c.policy = random_policy(r, c.model, false);
  return c;
}

CheckCase gen_witness(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 64, 16, 4, 3), ObsMode::Free);
  c.model.name = "witness_case";
  c.policy = random_policy(r, c.model, false);
  c.quotients = {r.chance(1, 2) ? Quotient::latent_identity(c.model, "q")
                                : random_latent_quotient(r, c.model, "q")};
  auto support = c.model.latent.prior.support();
  c.params["z"] = support[static_cast<size_t>(r.below(static_cast<int>(support.size())))];
  c.params["t"] = r.below(c.model.horizon + 1);
  return c;
}

CheckCase gen_refinement(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 64, 4, 2, 1), ObsMode::Free);
  c.model.name = "refinement_case";
  int labels = r.range(1, 6);
  json fine = json::array(), coarse = json::array();
  std::vector<int> merge;
  for (int l = 0; l < labels; ++l) merge.push_back(r.below(std::max(1, labels / 2 + 1)));
  for (int z = 0; z < c.model.latent.size; ++z) {
    int f = r.below(labels);
    fine.push_back(f);
    coarse.push_back(merge[static_cast<size_t>(f)]);
  }
  c.params["fine"] = fine;
  c.params["coarse"] = coarse;
  return c;
}

CheckCase gen_telescoping(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 8, 4, 3, 2), ObsMode::Free);
  c.model.name = "telescoping_case";
  c.model.channel_labels = {"base", "cstar"};
  // Random label pattern so the channel term actually varies.
  std::vector<std::vector<std::vector<int>>> phi(static_cast<size_t>(c.model.horizon) + 1);
  for (int t = 0; t <= c.model.horizon; ++t) {
    phi[static_cast<size_t>(t)].resize(static_cast<size_t>(c.model.latent.size));
    for (int z = 0; z < c.model.latent.size; ++z)
      for (int x = 0; x < c.model.state_count[static_cast<size_t>(t)]; ++x)
        phi[static_cast<size_t>(t)][static_cast<size_t>(z)].push_back(r.chance(1, 4) ? 1 : 0);
  }
  c.model.phi_x = [phi](int t, int z, int x) {
    return phi.at(static_cast<size_t>(t)).at(static_cast<size_t>(z)).at(static_cast<size_t>(x));
  };
  c.policy = random_policy(r, c.model, false);
  c.quotients = {random_latent_quotient(r, c.model, "q"),
                 random_state_quotient(r, c.model, c.model.horizon, "vq"),
                 random_last_obs_quotient(r, c.model, "vt"),
                 random_state_quotient(r, c.model, c.model.horizon, "d0")};
  c.params["q"] = "q";
  if (r.chance(1, 2)) {
    c.params["v_q"] = "vq";
    c.params["v_tilde"] = "vt";
  }
  if (r.chance(1, 2)) c.params["factors"] = json::array({"d0"});
  if (r.chance(1, 2)) c.params["c_star"] = json::array({1});
  c.params["weights"] = {{"lambda_c", r.below(3) / 2.0}, {"lambda_v", r.below(3) / 2.0},
                         {"lambda_o", r.below(3) / 2.0}, {"lambda_d", r.below(3) / 2.0},
                         {"beta", r.range(1, 4) / 2.0},  {"tau", 1e-9}};
  if (r.chance(1, 2)) {
    json reward = json::array();
    for (int t = 0; t < c.model.horizon; ++t) {
      json rt = json::array();
      for (int z = 0; z < c.model.latent.size; ++z) {
        json rz = json::array();
        for (int x = 0; x < c.model.state_count[static_cast<size_t>(t)]; ++x) {
          json rx = json::array();
          for (int a = 0; a < c.model.action_count[static_cast<size_t>(t)]; ++a)
            rx.push_back(r.below(5) / 4.0);
          rz.push_back(std::move(rx));
        }
        rt.push_back(std::move(rz));
      }
      reward.push_back(std::move(rt));
    }
    c.params["reward"] = std::move(reward);
  }
  return c;
}

CheckCase gen_massey(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 32, 8, 4, 3), ObsMode::Free);
  c.model.name = "massey_case";
  c.policy = random_policy(r, c.model, true);
  return c;
}

CheckCase gen_absorption(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 32, 8, 4, 3), ObsMode::Free);
  c.model.name = "absorption_case";
  c.policy = random_policy(r, c.model, false);
  auto rows = enumerate_closed_loop(c.model, *c.policy);
  Quotient memory = transcript_identity(rows, "memory");
  // The observed variable is a coarsening of memory, so it is predictable
  // from memory by construction.
  Quotient v = memory;
  v.name = "v";
  std::map<int, int> merge;
  int spread = r.range(1, std::max(1, memory.class_count));
  std::vector<int> to(static_cast<size_t>(memory.class_count));
  for (int cls = 0; cls < memory.class_count; ++cls) {
    int raw = r.below(spread);
    auto [it, fresh] = merge.emplace(raw, static_cast<int>(merge.size()));
    (void)fresh;
    to[static_cast<size_t>(cls)] = it->second;
  }
  for (auto& [enc, cls] : v.transcript_class) cls = to[static_cast<size_t>(cls)];
  v.class_count = static_cast<int>(merge.size());
  c.quotients = {random_latent_quotient(r, c.model, "q"), v, memory};
  return c;
}

CheckCase gen_counting(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 32, 8, 4, 3), ObsMode::Free);
  c.model.name = "counting_case";
  // Make the first transition reveal the latent outright.
  c.model.obs_count[1] = c.model.latent.size;
  auto inner = c.model.step;
  c.model.step = [inner](int t, int z, int x, int a) {
    StepOut s = inner(t, z, x, a);
    if (t == 0) s.o = z;
    return s;
  };
  c.policy = random_policy(r, c.model, false);
  auto rows = enumerate_closed_loop(c.model, *c.policy);
  c.quotients = {r.chance(1, 2) ? Quotient::latent_identity(c.model, "q")
                                : random_latent_quotient(r, c.model, "q"),
                 transcript_identity(rows, "memory")};
  return c;
}

CheckCase gen_ig_telescoping(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 32, 8, 4, 3), ObsMode::Free);
  c.model.name = "ig_case";
  c.policy = random_policy(r, c.model, false);
  return c;
}

CheckCase gen_bottleneck(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 64, 16, 4, 3), ObsMode::FromState);
  c.model.name = "bottleneck_case";
  auto support = c.model.latent.prior.support();
  c.params["z"] = support[static_cast<size_t>(r.below(static_cast<int>(support.size())))];
  return c;
}

CheckCase gen_steering(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 6, 4, 3, 2), ObsMode::Free);
  c.model.name = "steering_case";
  BridgePomdp& m = c.model;
  m.channel_labels = {"base", "cstar"};
  std::vector<std::vector<std::vector<int>>> phi(static_cast<size_t>(m.horizon) + 1);
  for (int t = 0; t <= m.horizon; ++t) {
    phi[static_cast<size_t>(t)].resize(static_cast<size_t>(m.latent.size));
    for (int z = 0; z < m.latent.size; ++z)
      for (int x = 0; x < m.state_count[static_cast<size_t>(t)]; ++x)
        phi[static_cast<size_t>(t)][static_cast<size_t>(z)].push_back(r.chance(1, 4) ? 1 : 0);
  }
  auto phi_table = phi;
  m.phi_x = [phi_table](int t, int z, int x) {
    return phi_table.at(static_cast<size_t>(t))
        .at(static_cast<size_t>(z))
        .at(static_cast<size_t>(x));
  };
  // Observations carry latent information only when emitted from the sensing
  // condition; the initial observation is flattened to keep the start blind.
  for (int t = 1; t <= m.horizon; ++t) m.obs_count[static_cast<size_t>(t)] = r.range(2, 3);
  m.obs_count[0] = 1;
  auto init_obs = [](int) { return 0; };
  m.init_obs = init_obs;
  auto inner = m.step;
  auto obs_count = m.obs_count;
  m.step = [inner, phi_table, obs_count](int t, int z, int x, int a) {
    StepOut s = inner(t, z, x, a);
    bool sensing = phi_table.at(static_cast<size_t>(t))
                       .at(static_cast<size_t>(z))
                       .at(static_cast<size_t>(x)) == 1;
    s.o = sensing ? z % obs_count.at(static_cast<size_t>(t) + 1) : 0;
    return s;
  };
  return c;
}

CheckCase gen_authority(Rng& r, const VerifyConfig& cfg) {
  CheckCase c;
  c.model = random_model(r, clip(cfg, 12, 6, 3, 2), ObsMode::Free);
  c.model.name = "authority_case";
  return c;
}

struct CheckDef {
  const char* name;
  CheckCase (*gen)(Rng&, const VerifyConfig&);
  double (*core)(const CheckCase&);
};

const CheckDef kChecks[] = {
    {"sandwich", gen_sandwich, core_sandwich},
    {"regret_transfer", gen_regret, core_regret},
    {"fibers", gen_fibers, core_fibers},
    {"sensing_witness", gen_witness, core_witness},
    {"refinement", gen_refinement, core_refinement},
    {"telescoping", gen_telescoping, core_telescoping},
    {"massey", gen_massey, core_massey},
    {"absorption", gen_absorption, core_absorption},
    {"counting", gen_counting, core_counting},
    {"ig_telescoping", gen_ig_telescoping, core_ig_telescoping},
    {"sensing_bottleneck", gen_bottleneck, core_bottleneck},
    {"steering", gen_steering, core_steering},
    {"authority", gen_authority, core_authority},
};

json case_json(const std::string& check, double margin, const CheckCase& c) {
  json j;
  if (c.model.horizon >= 1) {
    j = spec_io::model_json(c.model);
    if (!c.quotients.empty()) {
      json qs = json::array();
      for (const auto& q : c.quotients) qs.push_back(spec_io::quotient_json(q));
      j["quotients"] = std::move(qs);
    }
    if (c.policy) j["policy"] = spec_io::policy_json(*c.policy);
  }
  j["check"] = check;
  j["margin"] = margin;
  if (!c.params.is_null()) j["params"] = c.params;
  return j;
}

double run_core(const std::string& name, const CheckCase& c) {
  for (const auto& def : kChecks)
    if (name == def.name) return def.core(c);
  throw std::invalid_argument("unknown check '" + name + "'");
}

}  // namespace

void VerifyConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  for (int cap : {max_latents, max_states, max_actions, max_horizon})
    if (cap < 1) throw std::invalid_argument("size caps must be >= 1");
  for (const auto& name : checks) {
    bool known = false;
    for (const auto& def : kChecks)
      if (name == def.name) known = true;
    if (!known) throw std::invalid_argument("unknown check '" + name + "'");
  }
}

std::vector<std::string> check_names() {
  std::vector<std::string> names;
  for (const auto& def : kChecks) names.emplace_back(def.name);
  return names;
}

VerifySummary run_verify(const VerifyConfig& cfg) {
  cfg.validate();
  VerifySummary summary;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "verify seed=%llu trials=%d caps=%d,%d,%d,%d\n",
                static_cast<unsigned long long>(cfg.seed), cfg.trials, cfg.max_latents,
                cfg.max_states, cfg.max_actions, cfg.max_horizon);
  summary.text += buf;
  std::snprintf(buf, sizeof(buf), "%-20s %8s %9s %14s\n", "check", "trials", "failures",
                "worst_margin");
  summary.text += buf;

  for (size_t ci = 0; ci < std::size(kChecks); ++ci) {
    const CheckDef& def = kChecks[ci];
    if (!cfg.checks.empty() &&
        std::find(cfg.checks.begin(), cfg.checks.end(), def.name) == cfg.checks.end())
      continue;
    CheckOutcome out;
    out.check = def.name;
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < cfg.trials; ++trial) {
      Rng r(mix64(mix64(cfg.seed ^ mix64(ci + 1)) + static_cast<std::uint64_t>(trial)));
      CheckCase c = def.gen(r, cfg);
      double margin = def.core(c);
      if (cfg.negate) margin = -margin - 1e-6;
      ++out.trials;
      worst = std::min(worst, margin);
      if (margin < -kTol) {
        ++out.failures;
        if (out.counterexample_path.empty()) {
          std::string path = cfg.dump_dir + "/counterexample_" + def.name + "_" +
                             std::to_string(trial) + ".json";
          spec_io::save_json(path, case_json(def.name, margin, c));
          out.counterexample_path = path;
        }
      }
    }
    out.worst_margin = worst;
    if (out.failures > 0) summary.all_passed = false;
    std::snprintf(buf, sizeof(buf), "%-20s %8d %9d %14.6e\n", out.check.c_str(), out.trials,
                  out.failures, out.worst_margin);
    summary.text += buf;
    summary.outcomes.push_back(std::move(out));
  }
  summary.text += summary.all_passed ? "result: PASS\n" : "result: FAIL\n";
  return summary;
}

double replay_counterexample(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open counterexample '" + path + "'");
  json j;
  in >> j;
  std::string check = j.at("check").get<std::string>();
  CheckCase c;
  if (j.contains("horizon")) {
    spec_io::ParsedSpec spec = spec_io::parse_spec(j);
    c.model = std::move(spec.model);
    c.quotients = std::move(spec.quotients);
    c.policy = std::move(spec.policy);
  }
  if (j.contains("params")) c.params = j["params"];
  return run_core(check, c);
}

}  // namespace verify
}  // namespace bpomdp
