#include "bpomdp/info.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bpomdp {
namespace info {

double entropy_bits(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("negative weight in entropy computation");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("entropy of an all-zero weight vector");
  double h = 0.0;
  for (double w : weights) {
    if (w <= 0.0) continue;
    double p = w / total;
    h -= p * std::log2(p);
  }
  return h;
}

double entropy_bits(const Dist& d) { return entropy_bits(d.p); }

int JointTable::axis_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(axes.size()); ++i)
    if (axes[static_cast<size_t>(i)].name == name) return i;
  throw std::invalid_argument("unknown joint axis '" + name + "'");
}

void JointTable::add(const std::vector<int>& tuple, double probability) {
  if (tuple.size() != axes.size()) throw std::invalid_argument("joint tuple arity mismatch");
  if (!(probability > 0.0)) return;
  cells[tuple] += probability;
}

void JointTable::validate() const {
  double total = 0.0;
  for (const auto& [tuple, p] : cells) {
    if (tuple.size() != axes.size()) throw std::invalid_argument("joint tuple arity mismatch");
    for (size_t i = 0; i < tuple.size(); ++i)
      if (tuple[i] < 0 || tuple[i] >= axes[i].size)
        throw std::invalid_argument("joint tuple out of range on axis " + axes[i].name);
    if (!(p > 0.0)) throw std::invalid_argument("nonpositive joint cell");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("joint mass is " + std::to_string(total) +
                                ", expected 1 within 1e-9");
}

namespace {

std::vector<int> axis_indices(const JointTable& joint, const std::vector<std::string>& names) {
  std::vector<int> idx;
  idx.reserve(names.size());
  for (const auto& n : names) idx.push_back(joint.axis_index(n));
  return idx;
}

double projected_entropy(const JointTable& joint, const std::vector<int>& idx) {
  if (idx.empty()) return 0.0;
  std::map<std::vector<int>, double> proj;
  std::vector<int> key(idx.size());
  for (const auto& [tuple, p] : joint.cells) {
    for (size_t i = 0; i < idx.size(); ++i) key[i] = tuple[static_cast<size_t>(idx[i])];
    proj[key] += p;
  }
  double h = 0.0;
  for (const auto& [k, p] : proj)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

std::vector<int> merge_indices(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out = a;
  for (int v : b)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

}  // namespace

double marginal_entropy(const JointTable& joint, const std::vector<std::string>& axes) {
  return projected_entropy(joint, axis_indices(joint, axes));
}

double cond_entropy(const JointTable& joint, const std::vector<std::string>& target,
                    const std::vector<std::string>& given) {
  auto t = axis_indices(joint, target);
  auto g = axis_indices(joint, given);
  return projected_entropy(joint, merge_indices(t, g)) - projected_entropy(joint, g);
}

double mutual_info(const JointTable& joint, const std::vector<std::string>& a,
                   const std::vector<std::string>& b) {
  auto ia = axis_indices(joint, a);
  auto ib = axis_indices(joint, b);
  return projected_entropy(joint, ia) + projected_entropy(joint, ib) -
         projected_entropy(joint, merge_indices(ia, ib));
}

double cond_mutual_info(const JointTable& joint, const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const std::vector<std::string>& c) {
  auto ia = axis_indices(joint, a);
  auto ib = axis_indices(joint, b);
  auto ic = axis_indices(joint, c);
  return projected_entropy(joint, merge_indices(ia, ic)) +
         projected_entropy(joint, merge_indices(ib, ic)) - projected_entropy(joint, ic) -
         projected_entropy(joint, merge_indices(merge_indices(ia, ib), ic));
}

JointTable build_joint(const BridgePomdp& m, const Policy& policy,
                       const std::vector<Column>& columns) {
  JointTable joint;
  for (const auto& col : columns) joint.axes.push_back({col.name, col.size});
  for (const ClosedLoopRow& row : enumerate_closed_loop(m, policy)) {
    std::vector<int> tuple;
    tuple.reserve(columns.size());
    for (const auto& col : columns) tuple.push_back(col.of(row));
    joint.add(tuple, row.probability);
  }
  joint.validate();
  return joint;
}

int TranscriptIndex::id_of(const std::vector<int>& encoding) const {
  auto it = ids.find(encoding);
  if (it == ids.end()) throw std::invalid_argument("transcript missing from index");
  return it->second;
}

TranscriptIndex index_transcripts(const std::vector<ClosedLoopRow>& rows) {
  TranscriptIndex idx;
  for (const auto& row : rows) {
    auto enc = row.trajectory.transcript();
    if (idx.ids.emplace(enc, static_cast<int>(idx.encodings.size())).second)
      idx.encodings.push_back(enc);
  }
  return idx;
}

Dist posterior_latent(const BridgePomdp& m, const Policy& policy,
                      const std::vector<int>& prefix) {
  if (prefix.empty() || prefix.size() % 2 == 0)
    throw std::invalid_argument("prefix must be [o_0, a_0, ..., o_t]");
  int t_end = static_cast<int>(prefix.size() / 2);
  if (t_end > m.horizon) throw std::invalid_argument("prefix longer than the horizon");

  std::vector<double> weight(static_cast<size_t>(m.latent.size), 0.0);
  double total = 0.0;
  for (int z : m.latent.prior.support()) {
    for (int c = 0; c < policy.component_count(); ++c) {
      const Policy& comp = policy.component(c);
      int x = m.init_state(z);
      if (m.init_obs(z) != prefix[0]) continue;
      std::vector<int> sub{prefix[0]};
      bool consistent = true;
      for (int t = 0; t < t_end && consistent; ++t) {
        int a = prefix[static_cast<size_t>(2 * t + 1)];
        if (comp.action_at(sub, t) != a) {
          consistent = false;
          break;
        }
        StepOut s = m.step(t, z, x, a);
        if (s.o != prefix[static_cast<size_t>(2 * t + 2)]) {
          consistent = false;
          break;
        }
        x = s.x;
        sub.push_back(a);
        sub.push_back(s.o);
      }
      if (consistent) {
        double w = m.latent.prior.at(z) * policy.component_weight(c);
        weight[static_cast<size_t>(z)] += w;
        total += w;
      }
    }
  }
  if (total <= 0.0) throw std::invalid_argument("prefix is not realizable under this policy");
  for (double& w : weight) w /= total;
  return Dist(std::move(weight));
}

std::set<int> reach_states(const BridgePomdp& m, const Context& ctx, int horizon,
                           long long budget) {
  if (budget <= 0) budget = env_budget("BPOMDP_REACH_BUDGET", 1LL << 28);
  if (ctx.t < 0 || ctx.t + horizon > m.horizon)
    throw std::invalid_argument("reach horizon extends past the model horizon");
  if (ctx.z < 0 || ctx.z >= m.latent.size) throw std::invalid_argument("context latent out of range");
  if (ctx.x < 0 || ctx.x >= m.state_count[static_cast<size_t>(ctx.t)])
    throw std::invalid_argument("context state out of range");
  std::set<int> frontier{ctx.x};
  long long work = 0;
  for (int i = 0; i < horizon; ++i) {
    int t = ctx.t + i;
    int acts = m.action_count[static_cast<size_t>(t)];
    work += static_cast<long long>(frontier.size()) * acts;
    if (work > budget)
      throw std::runtime_error("reach enumeration work " + std::to_string(work) +
                               " exceeds budget " + std::to_string(budget));
    std::set<int> next;
    for (int x : frontier)
      for (int a = 0; a < acts; ++a) next.insert(m.step(t, ctx.z, x, a).x);
    frontier = std::move(next);
  }
  return frontier;
}

std::set<int> reach_set(const BridgePomdp& m, const Context& ctx, int horizon,
                        const Quotient& v, long long budget) {
  if (v.domain != Quotient::Domain::State)
    throw std::invalid_argument("reach_set needs a state quotient");
  if (v.time != ctx.t + horizon)
    throw std::invalid_argument("quotient time does not match context + horizon");
  std::set<int> classes;
  for (int x : reach_states(m, ctx, horizon, budget)) classes.insert(v.of_state(x));
  return classes;
}

double empowerment_det(const BridgePomdp& m, const Context& ctx, int horizon,
                       const Quotient& v, long long budget) {
  return std::log2(static_cast<double>(reach_set(m, ctx, horizon, v, budget).size()));
}

void Channel::validate() const {
  if (inputs <= 0 || outputs <= 0) throw std::invalid_argument("channel needs alphabets");
  if (static_cast<int>(rows.size()) != inputs) throw std::invalid_argument("channel row count");
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != outputs) throw std::invalid_argument("channel row width");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw std::invalid_argument("negative channel probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw std::invalid_argument("channel row not normalized");
  }
}

CapacityResult channel_capacity(const Channel& ch, double tol, int max_iters) {
  ch.validate();
  std::vector<double> q(static_cast<size_t>(ch.inputs), 1.0 / ch.inputs);
  CapacityResult res;
  for (int iter = 1; iter <= max_iters; ++iter) {
    std::vector<double> out(static_cast<size_t>(ch.outputs), 0.0);
    for (int x = 0; x < ch.inputs; ++x)
      for (int y = 0; y < ch.outputs; ++y)
        out[static_cast<size_t>(y)] += q[static_cast<size_t>(x)] * ch.rows[static_cast<size_t>(x)][static_cast<size_t>(y)];
    // Per-input relative entropy D(p(.|x) || out); capacity is sandwiched
    // between the q-average and the max of these.
    double lower = 0.0, upper = 0.0;
    std::vector<double> d(static_cast<size_t>(ch.inputs), 0.0);
    for (int x = 0; x < ch.inputs; ++x) {
      double dx = 0.0;
      for (int y = 0; y < ch.outputs; ++y) {
        double p = ch.rows[static_cast<size_t>(x)][static_cast<size_t>(y)];
        if (p > 0.0) dx += p * std::log2(p / out[static_cast<size_t>(y)]);
      }
      d[static_cast<size_t>(x)] = dx;
      lower += q[static_cast<size_t>(x)] * dx;
      upper = std::max(upper, dx);
    }
    res.bits = lower;
    res.iterations = iter;
    if (upper - lower <= tol) {
      res.converged = true;
      return res;
    }
    double norm = 0.0;
    for (int x = 0; x < ch.inputs; ++x) {
      q[static_cast<size_t>(x)] *= std::exp2(d[static_cast<size_t>(x)]);
      norm += q[static_cast<size_t>(x)];
    }
    for (double& v : q) v /= norm;
  }
  return res;
}

Channel induced_action_channel(const BridgePomdp& m, const Context& ctx, int horizon,
                               const Quotient& v, long long budget) {
  if (budget <= 0) budget = env_budget("BPOMDP_REACH_BUDGET", 1LL << 28);
  if (v.domain != Quotient::Domain::State || v.time != ctx.t + horizon)
    throw std::invalid_argument("induced channel needs a state quotient at context + horizon");
  long long seqs = 1;
  for (int i = 0; i < horizon; ++i) {
    seqs *= m.action_count[static_cast<size_t>(ctx.t + i)];
    if (seqs > budget)
      throw std::runtime_error("action sequence count exceeds budget " + std::to_string(budget));
  }
  Channel ch;
  ch.inputs = static_cast<int>(seqs);
  ch.outputs = v.class_count;
  ch.rows.assign(static_cast<size_t>(seqs), std::vector<double>(static_cast<size_t>(v.class_count), 0.0));
  for (long long s = 0; s < seqs; ++s) {
    long long rest = s;
    int x = ctx.x;
    for (int i = 0; i < horizon; ++i) {
      int acts = m.action_count[static_cast<size_t>(ctx.t + i)];
      int a = static_cast<int>(rest % acts);
      rest /= acts;
      x = m.step(ctx.t + i, ctx.z, x, a).x;
    }
    ch.rows[static_cast<size_t>(s)][static_cast<size_t>(v.of_state(x))] = 1.0;
  }
  return ch;
}

namespace {

// Depth-first enumeration of deterministic history policies as action tables
// over reachable prefixes; bails out via exception once the budget is hit.
struct PolicyEnumBudget : std::runtime_error {
  PolicyEnumBudget() : std::runtime_error("policy enumeration budget exceeded") {}
};

void enumerate_policies_rec(const BridgePomdp& m, std::map<std::vector<int>, int>& table,
                            std::vector<std::map<std::vector<int>, int>>& out, long long budget) {
  // Find the earliest reachable prefix missing an action by simulating all
  // latents under the partial table.
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
    out.push_back(table);
    if (static_cast<long long>(out.size()) > budget) throw PolicyEnumBudget();
    return;
  }
  for (int a = 0; a < m.action_count[static_cast<size_t>(missing_t)]; ++a) {
    table[missing] = a;
    enumerate_policies_rec(m, table, out, budget);
    table.erase(missing);
  }
}

}  // namespace

std::optional<double> closed_loop_capacity(const BridgePomdp& m, const Quotient& v,
                                           long long policy_budget) {
  std::vector<std::map<std::vector<int>, int>> tables;
  std::map<std::vector<int>, int> partial;
  try {
    enumerate_policies_rec(m, partial, tables, policy_budget);
  } catch (const PolicyEnumBudget&) {
    return std::nullopt;
  }
  Channel ch;
  ch.inputs = static_cast<int>(tables.size());
  ch.outputs = v.class_count;
  ch.rows.assign(tables.size(), std::vector<double>(static_cast<size_t>(v.class_count), 0.0));
  for (size_t i = 0; i < tables.size(); ++i) {
    Policy pol = Policy::from_table(tables[i]);
    for (int z : m.latent.prior.support()) {
      Trajectory tr = rollout(m, pol, z);
      int cls = v.domain == Quotient::Domain::Transcript ? v.of_transcript(tr.transcript())
                                                         : v.of_state(tr.states.back());
      ch.rows[i][static_cast<size_t>(cls)] += m.latent.prior.at(z);
    }
  }
  return channel_capacity(ch).bits;
}

DirectedInfoResult directed_information(const JointTable& joint, int T) {
  auto a_name = [](int t) { return "A" + std::to_string(t); };
  auto o_name = [](int t) { return "O" + std::to_string(t); };
  DirectedInfoResult res;
  std::vector<std::string> a_all, o_all;
  for (int t = 1; t <= T; ++t) {
    a_all.push_back(a_name(t));
    o_all.push_back(o_name(t));
  }
  for (int t = 1; t <= T; ++t) {
    std::vector<std::string> a_prefix(a_all.begin(), a_all.begin() + t);
    std::vector<std::string> o_past(o_all.begin(), o_all.begin() + (t - 1));
    res.actions_to_observations += cond_mutual_info(joint, a_prefix, {o_name(t)}, o_past);
    std::vector<std::string> a_past(a_all.begin(), a_all.begin() + (t - 1));
    res.observations_to_actions += cond_mutual_info(joint, o_past, {a_name(t)}, a_past);
  }
  res.total = res.actions_to_observations + res.observations_to_actions;
  res.mutual = mutual_info(joint, a_all, o_all);
  return res;
}

double information_gain(const BridgePomdp& m, const Policy& policy,
                        const std::vector<int>& prefix, int action) {
  Dist post = posterior_latent(m, policy, prefix);
  int t = static_cast<int>(prefix.size() / 2);
  if (t >= m.horizon) throw std::invalid_argument("no decision left at the end of the horizon");
  if (action < 0 || action >= m.action_count[static_cast<size_t>(t)])
    throw std::invalid_argument("action out of range");
  double h_before = entropy_bits(post);
  // Group the posterior fiber by the observation the action would produce.
  std::map<int, std::vector<double>> groups;
  for (int z : post.support()) {
    int x = m.init_state(z);
    for (int k = 0; k < t; ++k)
      x = m.step(k, z, x, prefix[static_cast<size_t>(2 * k + 1)]).x;
    StepOut s = m.step(t, z, x, action);
    groups[s.o].push_back(post.at(z));
  }
  double h_after = 0.0;
  for (const auto& [o, weights] : groups) {
    double mass = 0.0;
    for (double w : weights) mass += w;
    if (mass > 0.0) h_after += mass * entropy_bits(weights);
  }
  return h_before - h_after;
}

}  // namespace info
}  // namespace bpomdp
