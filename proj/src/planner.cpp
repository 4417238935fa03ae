#include "bpomdp/planner.hpp"

#include "bpomdp/gap.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

namespace bpomdp {
namespace planner {

namespace {

constexpr double kTol = 1e-9;

std::vector<double> class_masses(const BeliefNode& node, const Quotient& q) {
  std::vector<double> mass(static_cast<size_t>(q.class_count), 0.0);
  for (size_t i = 0; i < node.zs.size(); ++i)
    mass[static_cast<size_t>(q.of_latent(node.zs[i]))] += node.posterior.at(node.zs[i]);
  return mass;
}

// Terminal class of a quotient for latent z ending in state x with full
// transcript enc.
int terminal_class(const BridgePomdp& m, const Quotient& q, int z, int x,
                   const std::vector<int>& enc) {
  switch (q.domain) {
    case Quotient::Domain::Latent:
      return q.of_latent(z);
    case Quotient::Domain::State:
      if (q.time != m.horizon)
        throw std::invalid_argument("terminal quotient '" + q.name + "' is not at the horizon");
      return q.of_state(x);
    case Quotient::Domain::Transcript:
      return q.of_transcript(enc);
  }
  throw std::logic_error("unhandled quotient domain");
}

// All action tails from time t0 to the horizon, lexicographic.
std::vector<std::vector<int>> action_tails(const BridgePomdp& m, int t0) {
  long long budget = env_budget("BPOMDP_REACH_BUDGET", 1LL << 28);
  long long count = 1;
  for (int t = t0; t < m.horizon; ++t) {
    count *= m.action_count[static_cast<size_t>(t)];
    if (count > budget)
      throw std::runtime_error("action tail count exceeds budget " + std::to_string(budget));
  }
  std::vector<std::vector<int>> tails;
  tails.reserve(static_cast<size_t>(count));
  std::vector<int> cur(static_cast<size_t>(m.horizon - t0), 0);
  for (long long s = 0; s < count; ++s) {
    long long rest = s;
    for (int i = m.horizon - t0 - 1; i >= 0; --i) {
      int acts = m.action_count[static_cast<size_t>(t0 + i)];
      cur[static_cast<size_t>(i)] = static_cast<int>(rest % acts);
      rest /= acts;
    }
    tails.push_back(cur);
  }
  return tails;
}

struct Run {
  const BridgePomdp& m;
  const PlannerConfig& cfg;
  long long nodes_made = 0;

  std::map<std::tuple<int, int, int>, std::set<int>> label_cache;           // (z,x,t)
  std::map<std::tuple<const Quotient*, int, int, int>, double> reach_cache; // (q,z,x,t)
  std::map<const Quotient*, double> supp_cache;
  std::map<std::vector<int>, PotentialBreakdown> phi_cache;                  // by prefix

  Run(const BridgePomdp& model, const PlannerConfig& config) : m(model), cfg(config) {
    cfg.weights.validate();
    if (cfg.q.domain != Quotient::Domain::Latent)
      throw std::invalid_argument("planner target quotient must partition the latents");
  }

  // ---- belief machinery ----

  BeliefNode make_root(int o0) {
    BeliefNode node;
    node.t = 0;
    node.prefix = {o0};
    std::vector<double> w(static_cast<size_t>(m.latent.size), 0.0);
    double total = 0.0;
    for (int z : m.latent.prior.support()) {
      if (m.init_obs(z) != o0) continue;
      node.zs.push_back(z);
      node.xs.push_back(m.init_state(z));
      w[static_cast<size_t>(z)] = m.latent.prior.at(z);
      total += m.latent.prior.at(z);
    }
    if (node.zs.empty()) throw std::invalid_argument("initial observation is not realizable");
    for (double& x : w) x /= total;
    node.posterior = Dist(std::move(w));
    bump_budget();
    return node;
  }

  // Children of node under action a keyed by the produced observation; the
  // pair also carries the transition probability mass P(o | node, a).
  std::map<int, std::pair<double, BeliefNode>> children(const BeliefNode& node, int a) {
    std::map<int, std::pair<double, BeliefNode>> out;
    for (size_t i = 0; i < node.zs.size(); ++i) {
      int z = node.zs[i];
      StepOut s = m.step(node.t, z, node.xs[i], a);
      auto& slot = out[s.o];
      BeliefNode& child = slot.second;
      if (child.prefix.empty()) {
        child.t = node.t + 1;
        child.prefix = node.prefix;
        child.prefix.push_back(a);
        child.prefix.push_back(s.o);
        child.posterior.p.assign(static_cast<size_t>(m.latent.size), 0.0);
        bump_budget();
      }
      slot.first += node.posterior.at(z);
      child.zs.push_back(z);
      child.xs.push_back(s.x);
      child.posterior.p[static_cast<size_t>(z)] = node.posterior.at(z);
    }
    for (auto& [o, slot] : out) {
      for (double& w : slot.second.posterior.p) w /= slot.first;
    }
    return out;
  }

  void bump_budget() {
    if (++nodes_made > cfg.tree_budget)
      throw std::runtime_error("belief tree budget of " + std::to_string(cfg.tree_budget) +
                               " nodes exceeded");
  }

  // ---- potential terms ----

  const std::set<int>& labels_reachable(int z, int x, int t) {
    auto key = std::make_tuple(z, x, t);
    auto it = label_cache.find(key);
    if (it != label_cache.end()) return it->second;
    std::set<int> labels;
    std::set<int> frontier{x};
    for (int tt = t; tt <= m.horizon; ++tt) {
      for (int xs : frontier) {
        labels.insert(m.kappa_x(tt, z, xs));
        labels.insert(m.phi_x(tt, z, xs));
      }
      if (tt == m.horizon) break;
      std::set<int> next;
      for (int xs : frontier)
        for (int a = 0; a < m.action_count[static_cast<size_t>(tt)]; ++a)
          next.insert(m.step(tt, z, xs, a).x);
      frontier = std::move(next);
    }
    return label_cache.emplace(key, std::move(labels)).first->second;
  }

  double reach_bits(const Quotient& q, int z, int x, int t) {
    auto key = std::make_tuple(&q, z, x, t);
    auto it = reach_cache.find(key);
    if (it != reach_cache.end()) return it->second;
    double bits = std::log2(
        static_cast<double>(gap::context_reach(m, q, info::Context{z, x, t}).size()));
    reach_cache.emplace(key, bits);
    return bits;
  }

  double support_bits(const Quotient& q) {
    auto it = supp_cache.find(&q);
    if (it != supp_cache.end()) return it->second;
    std::set<int> classes;
    for (int z : m.latent.prior.support()) {
      auto per_z = gap::context_reach(m, q, info::Context{z, m.init_state(z), 0});
      classes.insert(per_z.begin(), per_z.end());
    }
    double bits = std::log2(static_cast<double>(classes.size()));
    supp_cache.emplace(&q, bits);
    return bits;
  }

  double channel_term(const BeliefNode& node) {
    if (cfg.c_star.empty() || cfg.weights.lambda_c == 0.0) return 0.0;
    std::set<int> hit;
    for (size_t i = 0; i < node.zs.size(); ++i) {
      const auto& labels = labels_reachable(node.zs[i], node.xs[i], node.t);
      for (int c : cfg.c_star)
        if (labels.count(c)) hit.insert(c);
    }
    double deficit;
    if (cfg.channel_term == ChannelTermMode::Any) {
      // Zero exactly when some informative condition is still reachable,
      // positive (and monotone in the condition count) otherwise.
      deficit = hit.empty() ? std::log2(1.0 + static_cast<double>(cfg.c_star.size())) : 0.0;
    } else {
      double r = static_cast<double>(std::max<size_t>(1, hit.size()));
      deficit = std::max(0.0, std::log2(static_cast<double>(cfg.c_star.size())) - std::log2(r));
    }
    return cfg.weights.lambda_c * deficit;
  }

  double expected_reach(const Quotient& q, const BeliefNode& node) {
    double bits = 0.0;
    for (size_t i = 0; i < node.zs.size(); ++i)
      bits += node.posterior.at(node.zs[i]) * reach_bits(q, node.zs[i], node.xs[i], node.t);
    return bits;
  }

  double control_term(const BeliefNode& node) {
    if (!cfg.v_q || cfg.weights.lambda_v == 0.0) return 0.0;
    return cfg.weights.lambda_v *
           std::max(0.0, support_bits(*cfg.v_q) - expected_reach(*cfg.v_q, node));
  }

  // Greedy one-step information-gain action at a node (latent-level gain).
  int greedy_ig_action(const BeliefNode& node) {
    int best_a = -1;
    double best = 0.0;
    for (int a = 0; a < m.action_count[static_cast<size_t>(node.t)]; ++a) {
      double gain = one_step_ig(node, a);
      if (best_a < 0 || gain > best + kTol) {
        best = gain;
        best_a = a;
      }
    }
    return best_a;
  }

  void obs_loss_leaves(const BeliefNode& node, std::map<std::pair<int, int>, double>& joint) {
    if (node.t == m.horizon) {
      for (size_t i = 0; i < node.zs.size(); ++i) {
        int v = terminal_class(m, *cfg.v_q, node.zs[i], node.xs[i], node.prefix);
        int vt = terminal_class(m, *cfg.v_tilde, node.zs[i], node.xs[i], node.prefix);
        joint[{v, vt}] += node.posterior.at(node.zs[i]);
      }
      return;
    }
    int a = greedy_ig_action(node);
    for (auto& [o, slot] : children(node, a)) {
      std::map<std::pair<int, int>, double> sub;
      obs_loss_leaves(slot.second, sub);
      for (const auto& [key, w] : sub) joint[key] += slot.first * w;
    }
  }

  static double cond_entropy_of_joint(const std::map<std::pair<int, int>, double>& joint) {
    std::map<int, std::vector<double>> by_vt;
    for (const auto& [key, w] : joint) by_vt[key.second].push_back(w);
    double h = 0.0;
    for (const auto& [vt, ws] : by_vt) {
      double mass = 0.0;
      for (double w : ws) mass += w;
      if (mass > 0.0) h += mass * info::entropy_bits(ws);
    }
    return h;
  }

  double obs_loss_term(const BeliefNode& node) {
    if (!cfg.v_q || !cfg.v_tilde || cfg.weights.lambda_o == 0.0) return 0.0;
    if (cfg.eval_policy == EvalPolicyMode::GreedyIg || node.t == m.horizon) {
      std::map<std::pair<int, int>, double> joint;
      obs_loss_leaves(node, joint);
      return cfg.weights.lambda_o * cond_entropy_of_joint(joint);
    }
    // Worst case over open-loop continuations.
    double worst = 0.0;
    for (const auto& tail : action_tails(m, node.t)) {
      std::map<std::pair<int, int>, double> joint;
      for (size_t i = 0; i < node.zs.size(); ++i) {
        int z = node.zs[i], x = node.xs[i];
        std::vector<int> enc = node.prefix;
        for (size_t k = 0; k < tail.size(); ++k) {
          StepOut s = m.step(node.t + static_cast<int>(k), z, x, tail[k]);
          x = s.x;
          enc.push_back(tail[k]);
          enc.push_back(s.o);
        }
        int v = terminal_class(m, *cfg.v_q, z, x, enc);
        int vt = terminal_class(m, *cfg.v_tilde, z, x, enc);
        joint[{v, vt}] += node.posterior.at(z);
      }
      worst = std::max(worst, cond_entropy_of_joint(joint));
    }
    return cfg.weights.lambda_o * worst;
  }

  GateResult gate(const BeliefNode& node, int factor_index) {
    const Quotient& y = cfg.factors.at(static_cast<size_t>(factor_index));
    GateResult res;
    // Lexicographically first tail forcing each factor value for every latent
    // still possible at the node.
    std::map<int, std::vector<int>> forced;
    for (const auto& tail : action_tails(m, node.t)) {
      int common = -1;
      bool all_same = true;
      for (size_t i = 0; i < node.zs.size() && all_same; ++i) {
        int z = node.zs[i], x = node.xs[i];
        std::vector<int> enc = node.prefix;
        for (size_t k = 0; k < tail.size(); ++k) {
          StepOut s = m.step(node.t + static_cast<int>(k), z, x, tail[k]);
          x = s.x;
          enc.push_back(tail[k]);
          enc.push_back(s.o);
        }
        int c = terminal_class(m, y, z, x, enc);
        if (common < 0)
          common = c;
        else if (c != common)
          all_same = false;
      }
      if (all_same && common >= 0) forced.emplace(common, tail);
      if (static_cast<int>(forced.size()) == y.class_count) break;
    }
    res.forceable_values = static_cast<int>(forced.size());
    if (forced.empty()) return res;

    double h_now = node.target_entropy(cfg.q);
    std::optional<double> rew_lo, rew_hi;
    for (const auto& [yval, tail] : forced) {
      // Expected terminal target ambiguity after playing the forcing tail:
      // group latents by the observation stream the tail produces.
      std::map<std::vector<int>, std::vector<int>> groups;
      double reward = 0.0;
      for (size_t i = 0; i < node.zs.size(); ++i) {
        int z = node.zs[i], x = node.xs[i];
        std::vector<int> obs_stream;
        for (size_t k = 0; k < tail.size(); ++k) {
          int t = node.t + static_cast<int>(k);
          if (cfg.task_reward) reward += node.posterior.at(z) * cfg.task_reward(t, z, x, tail[k]);
          StepOut s = m.step(t, z, x, tail[k]);
          x = s.x;
          obs_stream.push_back(s.o);
        }
        groups[obs_stream].push_back(z);
      }
      double h_after = 0.0;
      for (const auto& [stream, zs] : groups) {
        double mass = 0.0;
        std::vector<double> cls(static_cast<size_t>(cfg.q.class_count), 0.0);
        for (int z : zs) {
          mass += node.posterior.at(z);
          cls[static_cast<size_t>(cfg.q.of_latent(z))] += node.posterior.at(z);
        }
        if (mass > 0.0) h_after += mass * info::entropy_bits(cls);
      }
      res.delta_q = std::max(res.delta_q, std::max(0.0, h_now - h_after));
      if (cfg.task_reward) {
        rew_lo = rew_lo ? std::min(*rew_lo, reward) : reward;
        rew_hi = rew_hi ? std::max(*rew_hi, reward) : reward;
      }
    }
    if (rew_lo) res.delta_r = *rew_hi - *rew_lo;
    res.open = res.delta_q + res.delta_r > cfg.weights.tau;
    return res;
  }

  const PotentialBreakdown& potential(const BeliefNode& node) {
    auto it = phi_cache.find(node.prefix);
    if (it != phi_cache.end()) return it->second;
    PotentialBreakdown b;
    b.ambiguity = node.target_entropy(cfg.q);
    b.channel = channel_term(node);
    b.control = control_term(node);
    b.obs_loss = obs_loss_term(node);
    for (int i = 0; i < static_cast<int>(cfg.factors.size()); ++i) {
      GateResult g = gate(node, i);
      double cap = expected_reach(cfg.factors[static_cast<size_t>(i)], node);
      b.gates.push_back(g);
      b.factor_capacity.push_back(cap);
      if (!g.open) b.distractor += cfg.weights.lambda_d * cap;
    }
    b.total = b.ambiguity + b.channel + b.control + b.obs_loss + b.distractor;
    return phi_cache.emplace(node.prefix, std::move(b)).first->second;
  }

  // ---- objective-specific one-step rewards and terminal values ----

  double step_task_reward(const BeliefNode& node, int a) {
    if (!cfg.task_reward) return 0.0;
    double r = 0.0;
    for (size_t i = 0; i < node.zs.size(); ++i)
      r += node.posterior.at(node.zs[i]) * cfg.task_reward(node.t, node.zs[i], node.xs[i], a);
    return r;
  }

  // Expected empowerment of the context the action leads into; zero once no
  // steps remain.
  double next_context_empowerment(const BeliefNode& node, int a) {
    if (node.t + 1 >= m.horizon) return 0.0;
    double bits = 0.0;
    for (size_t i = 0; i < node.zs.size(); ++i) {
      int z = node.zs[i];
      StepOut s = m.step(node.t, z, node.xs[i], a);
      bits += node.posterior.at(z) * reach_bits(*cfg.v_obs, z, s.x, node.t + 1);
    }
    return bits;
  }

  double one_step_ig(const BeliefNode& node, int a) {
    std::vector<double> now;
    for (int z : node.zs) now.push_back(node.posterior.at(z));
    double h_now = info::entropy_bits(now);
    double h_next = 0.0;
    for (auto& [o, slot] : children(node, a)) {
      std::vector<double> w;
      for (int z : slot.second.zs) w.push_back(slot.second.posterior.at(z));
      h_next += slot.first * info::entropy_bits(w);
    }
    return h_now - h_next;
  }

  double terminal_value(const BeliefNode& node) {
    switch (cfg.objective) {
      case Objective::Bgp:
        return -cfg.weights.beta * potential(node).total;
      case Objective::PredictionLoss: {
        std::vector<double> mass(static_cast<size_t>(cfg.pred_target->class_count), 0.0);
        for (size_t i = 0; i < node.zs.size(); ++i)
          mass[static_cast<size_t>(
              terminal_class(m, *cfg.pred_target, node.zs[i], node.xs[i], node.prefix))] +=
              node.posterior.at(node.zs[i]);
        return -info::entropy_bits(mass);
      }
      default:
        return 0.0;
    }
  }

  double step_reward(const BeliefNode& node, int a) {
    switch (cfg.objective) {
      case Objective::Bgp:
      case Objective::CoarseReturn:
        return step_task_reward(node, a);
      case Objective::EmpowermentUngated:
        return next_context_empowerment(node, a);
      case Objective::IgOneStep:
        return one_step_ig(node, a);
      case Objective::EfeOneStep:
        return one_step_ig(node, a) + step_task_reward(node, a);
      case Objective::PredictionLoss:
        return 0.0;
    }
    return 0.0;
  }

  void require_declared() {
    if (cfg.objective == Objective::EmpowermentUngated && !cfg.v_obs)
      throw std::invalid_argument("raw-empowerment objective needs an observable quotient");
    if (cfg.objective == Objective::PredictionLoss && !cfg.pred_target)
      throw std::invalid_argument("prediction objective needs a prediction target");
    if (cfg.objective == Objective::CoarseReturn && !cfg.task_reward)
      throw std::invalid_argument("return objective needs a task reward");
  }

  // ---- planning ----

  double dp(const BeliefNode& node, PlanResult& out) {
    if (node.t == m.horizon) {
      double v = terminal_value(node);
      out.node_values[node.prefix] = v;
      return v;
    }
    // Objectives whose terminal value is identically zero need no leaf
    // expansion; skipping it keeps wide final layers within the node budget.
    bool flat_leaves = (cfg.objective == Objective::EmpowermentUngated ||
                        cfg.objective == Objective::CoarseReturn) &&
                       node.t + 1 == m.horizon;
    double best = 0.0;
    int best_a = -1;
    for (int a = 0; a < m.action_count[static_cast<size_t>(node.t)]; ++a) {
      double v = step_reward(node, a);
      if (!flat_leaves)
        for (auto& [o, slot] : children(node, a)) v += slot.first * dp(slot.second, out);
      if (best_a < 0 || v > best + kTol) {
        best = v;
        best_a = a;
      }
    }
    out.node_values[node.prefix] = best;
    out.chosen[node.prefix] = best_a;
    return best;
  }

  // Myopic pass: at each node pick the best one-step score, then only expand
  // the chosen branch.
  void greedy(const BeliefNode& node, PlanResult& out) {
    if (node.t == m.horizon) {
      out.node_values[node.prefix] = terminal_value(node);
      return;
    }
    double best = 0.0;
    int best_a = -1;
    for (int a = 0; a < m.action_count[static_cast<size_t>(node.t)]; ++a) {
      double score;
      if (cfg.objective == Objective::Bgp) {
        // Shaped one-step score: task reward plus the expected potential drop.
        double drop = potential(node).total;
        for (auto& [o, slot] : children(node, a)) drop -= slot.first * potential(slot.second).total;
        score = step_task_reward(node, a) + cfg.weights.beta * drop;
      } else {
        score = step_reward(node, a);
      }
      if (best_a < 0 || score > best + kTol) {
        best = score;
        best_a = a;
      }
    }
    out.node_values[node.prefix] = best;
    out.chosen[node.prefix] = best_a;
    for (auto& [o, slot] : children(node, best_a)) greedy(slot.second, out);
  }

  PlanResult plan() {
    require_declared();
    PlanResult out;
    out.objective = cfg.objective;
    std::map<int, double> root_mass;
    for (int z : m.latent.prior.support()) root_mass[m.init_obs(z)] += m.latent.prior.at(z);

    bool greedy_rule = cfg.mode == PlanMode::Greedy || cfg.objective == Objective::IgOneStep ||
                       cfg.objective == Objective::EfeOneStep;
    double value = 0.0;
    for (const auto& [o0, mass] : root_mass) {
      BeliefNode root = make_root(o0);
      if (greedy_rule) {
        greedy(root, out);
      } else {
        double v = dp(root, out);
        if (cfg.objective == Objective::Bgp) v += cfg.weights.beta * potential(root).total;
        value += mass * v;
      }
    }
    out.policy = Policy::from_table(out.chosen, objective_name(cfg.objective));
    if (greedy_rule) value = objective_value(out.policy);
    out.value = value;
    // The potential trajectory can be expensive (it replays relevance gates at
    // every visited node), so attach it only when it is the planned quantity.
    out.eval = eval(out.policy, cfg.q, cfg.objective == Objective::Bgp);
    return out;
  }

  // ---- policy evaluation ----

  struct PathGroups {
    std::vector<ClosedLoopRow> rows;
    std::map<std::vector<int>, std::vector<const ClosedLoopRow*>> by_transcript;
    std::map<int, std::vector<const ClosedLoopRow*>> by_o0;
  };

  PathGroups grouped(const Policy& policy) {
    PathGroups g;
    g.rows = enumerate_closed_loop(m, policy);
    for (const auto& row : g.rows) {
      g.by_transcript[row.trajectory.transcript()].push_back(&row);
      g.by_o0[row.trajectory.observations[0]].push_back(&row);
    }
    return g;
  }

  double task_total(const std::vector<ClosedLoopRow>& rows) {
    if (!cfg.task_reward) return 0.0;
    double total = 0.0;
    for (const auto& row : rows)
      for (int t = 0; t < m.horizon; ++t)
        total += row.probability * cfg.task_reward(t, row.z, row.trajectory.states[static_cast<size_t>(t)],
                                                   row.trajectory.actions[static_cast<size_t>(t)]);
    return total;
  }

  static double group_latent_entropy(const std::vector<const ClosedLoopRow*>& rows) {
    std::map<int, double> mass;
    for (const auto* row : rows) mass[row->z] += row->probability;
    std::vector<double> w;
    for (const auto& [z, p] : mass) w.push_back(p);
    return info::entropy_bits(w);
  }

  double objective_value(const Policy& policy) {
    require_declared();
    if (!policy.deterministic())
      throw std::invalid_argument("objective evaluation needs a deterministic policy");
    PathGroups g = grouped(policy);
    switch (cfg.objective) {
      case Objective::Bgp: {
        double phi0 = 0.0, phiT = 0.0;
        for (const auto& [o0, rows] : g.by_o0) {
          double mass = 0.0;
          for (const auto* row : rows) mass += row->probability;
          phi0 += mass * potential(belief_at(m, {o0})).total;
        }
        for (const auto& [enc, rows] : g.by_transcript) {
          double mass = 0.0;
          for (const auto* row : rows) mass += row->probability;
          phiT += mass * potential(belief_at(m, enc)).total;
        }
        return task_total(g.rows) + cfg.weights.beta * (phi0 - phiT);
      }
      case Objective::EmpowermentUngated: {
        double total = 0.0;
        for (const auto& row : g.rows)
          for (int t = 1; t < m.horizon; ++t)
            total += row.probability *
                     reach_bits(*cfg.v_obs, row.z, row.trajectory.states[static_cast<size_t>(t)], t);
        return total;
      }
      case Objective::IgOneStep:
      case Objective::EfeOneStep: {
        double h0 = 0.0, hT = 0.0;
        for (const auto& [o0, rows] : g.by_o0) {
          double mass = 0.0;
          for (const auto* row : rows) mass += row->probability;
          h0 += mass * group_latent_entropy(rows);
        }
        for (const auto& [enc, rows] : g.by_transcript) {
          double mass = 0.0;
          for (const auto* row : rows) mass += row->probability;
          hT += mass * group_latent_entropy(rows);
        }
        double ig = h0 - hT;
        return cfg.objective == Objective::EfeOneStep ? ig + task_total(g.rows) : ig;
      }
      case Objective::PredictionLoss: {
        double loss = 0.0;
        for (const auto& [enc, rows] : g.by_transcript) {
          double mass = 0.0;
          std::vector<double> cls(static_cast<size_t>(cfg.pred_target->class_count), 0.0);
          for (const auto* row : rows) {
            mass += row->probability;
            cls[static_cast<size_t>(terminal_class(m, *cfg.pred_target, row->z,
                                                   row->trajectory.states.back(), enc))] +=
                row->probability;
          }
          loss += mass * info::entropy_bits(cls);
        }
        return -loss;
      }
      case Objective::CoarseReturn:
        return task_total(g.rows);
    }
    throw std::logic_error("unhandled objective");
  }

  double terminal_phi(const Policy& policy) {
    PathGroups g = grouped(policy);
    double phiT = 0.0;
    for (const auto& [enc, rows] : g.by_transcript) {
      double mass = 0.0;
      for (const auto* row : rows) mass += row->probability;
      phiT += mass * potential(belief_at(m, enc)).total;
    }
    return phiT;
  }

  EvalResult eval(const Policy& policy, const Quotient& target, bool with_phi) {
    PathGroups g = grouped(policy);
    EvalResult res;
    bool uniform = true;
    auto support = m.latent.prior.support();
    for (int z : support)
      if (m.latent.prior.at(z) != m.latent.prior.at(support.front())) uniform = false;
    long long correct_count = 0;

    for (const auto& [enc, rows] : g.by_transcript) {
      HistoryOutcome h;
      h.transcript = enc;
      std::vector<double> cls(static_cast<size_t>(target.class_count), 0.0);
      for (const auto* row : rows) {
        h.mass += row->probability;
        cls[static_cast<size_t>(target.of_latent(row->z))] += row->probability;
      }
      h.residual_bits = info::entropy_bits(cls);
      h.map_class = static_cast<int>(
          std::max_element(cls.begin(), cls.end()) - cls.begin());  // first max = lowest id
      for (const auto* row : rows)
        if (target.of_latent(row->z) == h.map_class) {
          h.correct_mass += row->probability;
          if (policy.deterministic()) ++correct_count;
        }
      res.residual_bits += h.mass * h.residual_bits;
      res.success += h.correct_mass;
      res.per_history.push_back(std::move(h));
    }
    if (uniform && policy.deterministic())
      res.success_exact = Rational(correct_count, static_cast<long long>(support.size()));

    if (with_phi) {
      res.phi_trajectory.assign(static_cast<size_t>(m.horizon) + 1, 0.0);
      double path_drop = 0.0;
      for (const auto& row : g.rows) {
        double prev = 0.0;
        for (int t = 0; t <= m.horizon; ++t) {
          double phi = potential(belief_at(m, row.trajectory.prefix(t))).total;
          res.phi_trajectory[static_cast<size_t>(t)] += row.probability * phi;
          if (t > 0) path_drop += row.probability * (prev - phi);
          prev = phi;
        }
      }
      res.telescoping_slack =
          std::fabs(path_drop - (res.phi_trajectory.front() - res.phi_trajectory.back()));
    }
    return res;
  }
};

}  // namespace

Objective objective_from_name(const std::string& name) {
  if (name == "bgp") return Objective::Bgp;
  if (name == "empowerment_ungated") return Objective::EmpowermentUngated;
  if (name == "ig_one_step") return Objective::IgOneStep;
  if (name == "efe_one_step") return Objective::EfeOneStep;
  if (name == "prediction_loss") return Objective::PredictionLoss;
  if (name == "coarse_return") return Objective::CoarseReturn;
  throw std::invalid_argument("unknown objective '" + name + "'");
}

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::Bgp: return "bgp";
    case Objective::EmpowermentUngated: return "empowerment_ungated";
    case Objective::IgOneStep: return "ig_one_step";
    case Objective::EfeOneStep: return "efe_one_step";
    case Objective::PredictionLoss: return "prediction_loss";
    case Objective::CoarseReturn: return "coarse_return";
  }
  throw std::logic_error("unhandled objective");
}

void BgpWeights::validate() const {
  for (double w : {lambda_c, lambda_v, lambda_o, lambda_d, beta, tau})
    if (w < 0.0) throw std::invalid_argument("planner weights must be nonnegative");
}

double BeliefNode::target_entropy(const Quotient& q) const {
  return info::entropy_bits(class_masses(*this, q));
}

BeliefNode belief_at(const BridgePomdp& m, const std::vector<int>& prefix) {
  if (prefix.empty() || prefix.size() % 2 == 0)
    throw std::invalid_argument("prefix must be [o_0, a_0, ..., o_t]");
  int t_end = static_cast<int>(prefix.size() / 2);
  if (t_end > m.horizon) throw std::invalid_argument("prefix longer than the horizon");
  BeliefNode node;
  node.t = t_end;
  node.prefix = prefix;
  std::vector<double> w(static_cast<size_t>(m.latent.size), 0.0);
  double total = 0.0;
  for (int z : m.latent.prior.support()) {
    if (m.init_obs(z) != prefix[0]) continue;
    int x = m.init_state(z);
    bool ok = true;
    for (int t = 0; t < t_end && ok; ++t) {
      StepOut s = m.step(t, z, x, prefix[static_cast<size_t>(2 * t + 1)]);
      if (s.o != prefix[static_cast<size_t>(2 * t + 2)])
        ok = false;
      else
        x = s.x;
    }
    if (!ok) continue;
    node.zs.push_back(z);
    node.xs.push_back(x);
    w[static_cast<size_t>(z)] = m.latent.prior.at(z);
    total += m.latent.prior.at(z);
  }
  if (node.zs.empty()) throw std::invalid_argument("prefix is not realizable");
  for (double& v : w) v /= total;
  node.posterior = Dist(std::move(w));
  return node;
}

PotentialBreakdown bgp_potential(const BridgePomdp& m, const PlannerConfig& cfg,
                                 const BeliefNode& node) {
  Run run(m, cfg);
  return run.potential(node);
}

GateResult relevance_gate(const BridgePomdp& m, const PlannerConfig& cfg, const BeliefNode& node,
                          int factor_index) {
  Run run(m, cfg);
  return run.gate(node, factor_index);
}

EvalResult evaluate_policy(const BridgePomdp& m, const Policy& policy, const Quotient& target,
                           const PlannerConfig* phi_config) {
  if (phi_config) {
    Run run(m, *phi_config);
    return run.eval(policy, target, true);
  }
  PlannerConfig cfg;
  cfg.q = target;
  Run run(m, cfg);
  return run.eval(policy, target, false);
}

PlanResult plan_exact(const BridgePomdp& m, const PlannerConfig& cfg) {
  Run run(m, cfg);
  return run.plan();
}

double evaluate_objective(const BridgePomdp& m, const Policy& policy, const PlannerConfig& cfg) {
  Run run(m, cfg);
  return run.objective_value(policy);
}

double expected_terminal_phi(const BridgePomdp& m, const Policy& policy,
                             const PlannerConfig& cfg) {
  Run run(m, cfg);
  return run.terminal_phi(policy);
}

namespace {

void enumerate_policies_rec(const BridgePomdp& m, std::map<std::vector<int>, int>& table,
                            std::vector<Policy>& out, long long max_count) {
  std::vector<int> missing;
  int missing_t = -1;
  for (int z : m.latent.prior.support()) {
    int x = m.init_state(z);
    std::vector<int> prefix{m.init_obs(z)};
    for (int t = 0; t < m.horizon; ++t) {
      auto it = table.find(prefix);
      if (it == table.end()) {
        if (missing.empty() || prefix < missing) {
          missing = prefix;
          missing_t = t;
        }
        break;
      }
      StepOut s = m.step(t, z, x, it->second);
      x = s.x;
      prefix.push_back(it->second);
      prefix.push_back(s.o);
    }
  }
  if (missing.empty()) {
    if (static_cast<long long>(out.size()) >= max_count)
      throw std::runtime_error("more than " + std::to_string(max_count) +
                               " deterministic policies");
    out.push_back(Policy::from_table(table));
    return;
  }
  for (int a = 0; a < m.action_count[static_cast<size_t>(missing_t)]; ++a) {
    table[missing] = a;
    enumerate_policies_rec(m, table, out, max_count);
    table.erase(missing);
  }
}

}  // namespace

std::vector<Policy> enumerate_policies(const BridgePomdp& m, long long max_count) {
  std::vector<Policy> out;
  std::map<std::vector<int>, int> table;
  enumerate_policies_rec(m, table, out, max_count);
  return out;
}

std::string policy_digest(const BridgePomdp& m, const Policy& policy) {
  int z = m.latent.prior.support().front();
  Trajectory tr = rollout(m, policy, z);
  std::string out = "[";
  for (size_t i = 0; i < tr.actions.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(tr.actions[i]);
  }
  return out + "]";
}

}  // namespace planner
}  // namespace bpomdp
