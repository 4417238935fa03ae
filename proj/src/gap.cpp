#include "bpomdp/gap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

namespace bpomdp {
namespace gap {

using info::Context;
using info::JointTable;

namespace {

constexpr double kTol = 1e-9;

std::string display(double bits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", bits);
  return buf;
}

double log2_count(size_t n) { return std::log2(static_cast<double>(n)); }

// Applies an action sequence from (z, x) at time t0 to the end of the
// horizon, returning terminal state and final observation.
std::pair<int, int> run_tail(const BridgePomdp& m, int z, int x, int t0,
                             const std::vector<int>& seq) {
  int o = -1;
  for (size_t i = 0; i < seq.size(); ++i) {
    StepOut s = m.step(t0 + static_cast<int>(i), z, x, seq[i]);
    x = s.x;
    o = s.o;
  }
  return {x, o};
}

// Terminal value of a quotient for a context continued by an open-loop tail.
// Map-backed transcript quotients need the full transcript, so they are only
// valid from the start of the episode.
int tail_class(const BridgePomdp& m, const Quotient& q, int z, int x0, int t0,
               const std::vector<int>& seq) {
  switch (q.domain) {
    case Quotient::Domain::Latent:
      return q.of_latent(z);
    case Quotient::Domain::State: {
      if (q.time != m.horizon)
        throw std::invalid_argument("control quotient '" + q.name + "' is not terminal");
      return q.of_state(run_tail(m, z, x0, t0, seq).first);
    }
    case Quotient::Domain::Transcript: {
      if (!q.last_obs_class.empty()) {
        if (t0 >= m.horizon)
          throw std::invalid_argument("observation quotient needs at least one step remaining");
        return q.last_obs_class.at(static_cast<size_t>(run_tail(m, z, x0, t0, seq).second));
      }
      if (t0 != 0)
        throw std::invalid_argument("map-backed transcript quotient '" + q.name +
                                    "' needs a full-horizon context");
      Trajectory tr = rollout(m, Policy::open_loop(seq), z);
      if (tr.states.front() != x0)
        throw std::invalid_argument("context state disagrees with the latent's initial state");
      return q.of_transcript(tr.transcript());
    }
  }
  throw std::logic_error("unhandled quotient domain");
}

// All action sequences from time t0 to the horizon, lexicographic order with
// the earliest action most significant.
std::vector<std::vector<int>> all_tails(const BridgePomdp& m, int t0, long long budget) {
  if (budget <= 0) budget = env_budget("BPOMDP_REACH_BUDGET", 1LL << 28);
  long long count = 1;
  for (int t = t0; t < m.horizon; ++t) {
    count *= m.action_count[static_cast<size_t>(t)];
    if (count > budget)
      throw std::runtime_error("action sequence count exceeds budget " + std::to_string(budget));
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

}  // namespace

std::set<int> context_reach(const BridgePomdp& m, const Quotient& q, const Context& ctx) {
  if (q.domain == Quotient::Domain::State && q.time == m.horizon) {
    std::set<int> out;
    for (int xs : info::reach_states(m, ctx, m.horizon - ctx.t)) out.insert(q.of_state(xs));
    return out;
  }
  if (q.domain == Quotient::Domain::Latent) return {q.of_latent(ctx.z)};
  std::set<int> out;
  for (const auto& seq : all_tails(m, ctx.t, 0)) out.insert(tail_class(m, q, ctx.z, ctx.x, ctx.t, seq));
  return out;
}

Quotient quotient_from_targets(const BridgePomdp& m,
                               const std::vector<std::vector<int>>& targets,
                               std::string name) {
  for (const auto& target : targets)
    if (static_cast<int>(target.size()) != m.latent.size)
      throw std::invalid_argument("target table must cover every latent");
  Quotient q;
  q.domain = Quotient::Domain::Latent;
  q.class_of.assign(static_cast<size_t>(m.latent.size), -1);
  std::map<std::vector<int>, int> class_by_tuple;
  for (int z = 0; z < m.latent.size; ++z) {
    if (m.latent.prior.at(z) <= 0.0) continue;
    std::vector<int> tuple;
    tuple.reserve(targets.size());
    for (const auto& target : targets) tuple.push_back(target[static_cast<size_t>(z)]);
    auto [it, fresh] = class_by_tuple.emplace(tuple, static_cast<int>(class_by_tuple.size()));
    (void)fresh;
    q.class_of[static_cast<size_t>(z)] = it->second;
  }
  q.class_count = static_cast<int>(class_by_tuple.size());
  if (q.class_count == 0) throw std::invalid_argument("empty prior support");
  // Off-support latents keep class -1; map them to class 0 so the table stays
  // total without creating new classes.
  for (int& c : q.class_of)
    if (c < 0) c = 0;
  q.name = std::move(name);
  return q;
}

void BridgeGapReport::validate() const {
  auto nonneg = [](double v, const char* what) {
    if (v < -kTol) throw std::logic_error(std::string(what) + " is negative");
  };
  nonneg(delta_qw, "quotient-mismatch component");
  nonneg(delta_sense, "sensing component");
  nonneg(delta_v_vtilde, "observation-loss component");
  nonneg(delta_act, "authority component");
  for (double r : {normalized_sense_deficit, normalized_act_deficit})
    if (r < -kTol || r > 1.0 + kTol) throw std::logic_error("normalized deficit out of [0,1]");
}

BridgeGapReport bridge_gap_report(const BridgePomdp& m, const Policy& policy, const Quotient& q,
                                  const Quotient& w, const Quotient& v, const Quotient& vt,
                                  const Context& context) {
  if (q.domain != Quotient::Domain::Latent)
    throw std::invalid_argument("target quotient must partition the latents");
  if (w.domain != Quotient::Domain::Transcript)
    throw std::invalid_argument("comparison quotient must partition the transcripts");

  auto rows = enumerate_closed_loop(m, policy);
  auto tindex = info::index_transcripts(rows);
  JointTable joint;
  joint.axes = {{"Q", q.class_count},
                {"W", w.class_count},
                {"T", static_cast<int>(tindex.encodings.size())}};
  for (const auto& row : rows) {
    auto enc = row.trajectory.transcript();
    joint.add({q.of_latent(row.z), w.of_transcript(enc), tindex.id_of(enc)}, row.probability);
  }
  joint.validate();

  BridgeGapReport r;
  r.context = context;
  r.h_q = info::marginal_entropy(joint, {"Q"});
  r.h_q_given_w = info::cond_entropy(joint, {"Q"}, {"W"});
  r.h_w_given_q = info::cond_entropy(joint, {"W"}, {"Q"});
  r.delta_qw = std::max(r.h_q_given_w, r.h_w_given_q);
  r.delta_sense = info::cond_entropy(joint, {"Q"}, {"T"});
  r.i_q_transcript = r.h_q - r.delta_sense;
  r.i_w_transcript = info::marginal_entropy(joint, {"W"}) - info::cond_entropy(joint, {"W"}, {"T"});

  // Control side: enumerate the (controlled class, observed class) pair each
  // action tail produces from the context.  Piling mass on whichever observed
  // class co-occurs with the most controlled classes attains the worst case,
  // so the suprema reduce to counting.
  std::map<int, std::set<int>> v_by_vt, vt_by_v;
  std::set<int> v_reach, vt_reach;
  for (const auto& seq : all_tails(m, context.t, 0)) {
    int cv = tail_class(m, v, context.z, context.x, context.t, seq);
    int cvt = tail_class(m, vt, context.z, context.x, context.t, seq);
    v_by_vt[cvt].insert(cv);
    vt_by_v[cv].insert(cvt);
    v_reach.insert(cv);
    vt_reach.insert(cvt);
  }
  for (const auto& [cvt, vs] : v_by_vt)
    r.sup_h_v_given_vtilde = std::max(r.sup_h_v_given_vtilde, log2_count(vs.size()));
  for (const auto& [cv, vts] : vt_by_v)
    r.sup_h_vtilde_given_v = std::max(r.sup_h_vtilde_given_v, log2_count(vts.size()));
  r.delta_v_vtilde = std::max(r.sup_h_v_given_vtilde, r.sup_h_vtilde_given_v);
  r.c_v = log2_count(v_reach.size());
  r.c_vtilde = log2_count(vt_reach.size());

  // The value range of the controlled quotient: everything some prior latent
  // can reach from the start, plus the context's own reach so a mid-episode
  // context never reports a negative deficit.
  std::set<int> supp = v_reach;
  for (int z : m.latent.prior.support()) {
    auto per_z = context_reach(m, v, Context{z, m.init_state(z), 0});
    supp.insert(per_z.begin(), per_z.end());
  }
  r.support_v_bits = log2_count(supp.size());
  r.delta_act = r.support_v_bits - r.c_v;

  r.normalized_sense_deficit = r.h_q > 1e-12 ? r.delta_sense / r.h_q : 0.0;
  r.normalized_act_deficit = r.support_v_bits > 1e-12 ? r.delta_act / r.support_v_bits : 0.0;
  r.validate();
  return r;
}

SandwichCheck theorem1_check(const BridgePomdp& m, const Policy& policy, const Quotient& q,
                             const Quotient& w, const Quotient& v, const Quotient& vt,
                             const Context& context) {
  BridgeGapReport r = bridge_gap_report(m, policy, q, w, v, vt, context);
  SandwichCheck c;
  c.compression_diff = r.i_q_transcript - r.i_w_transcript;
  c.compression_lower = -r.h_w_given_q;
  c.compression_upper = r.h_q_given_w;
  c.control_diff = r.c_v - r.c_vtilde;
  c.control_lower = -r.sup_h_vtilde_given_v;
  c.control_upper = r.sup_h_v_given_vtilde;
  c.compression_lower_slack = c.compression_diff - c.compression_lower;
  c.compression_upper_slack = c.compression_upper - c.compression_diff;
  c.control_lower_slack = c.control_diff - c.control_lower;
  c.control_upper_slack = c.control_upper - c.control_diff;
  c.pass = c.compression_lower_slack >= -kTol && c.compression_upper_slack >= -kTol &&
           c.control_lower_slack >= -kTol && c.control_upper_slack >= -kTol;
  return c;
}

int ObjectiveTable::objective_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(objectives.size()); ++i)
    if (objectives[static_cast<size_t>(i)] == name) return i;
  throw std::invalid_argument("unknown objective '" + name + "'");
}

void ObjectiveTable::validate() const {
  if (options.empty()) throw std::invalid_argument("objective table needs at least one option");
  if (values.size() != objectives.size())
    throw std::invalid_argument("one value row per objective required");
  for (const auto& row : values) {
    if (row.size() != options.size())
      throw std::invalid_argument("one value per option required");
    for (double x : row)
      if (x < 0.0 || x > 1.0) throw std::invalid_argument("objective values must lie in [0,1]");
  }
}

double oscillation(const ObjectiveTable& t, const std::string& i, const std::string& j) {
  t.validate();
  const auto& ji = t.values[static_cast<size_t>(t.objective_index(i))];
  const auto& jj = t.values[static_cast<size_t>(t.objective_index(j))];
  double lo = ji[0] - jj[0], hi = lo;
  for (size_t u = 1; u < ji.size(); ++u) {
    double d = ji[u] - jj[u];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi - lo;
}

RegretTransfer regret_transfer_check(const ObjectiveTable& t, const std::string& i,
                                     const std::string& j, double eta) {
  if (eta < 0.0) throw std::invalid_argument("eta must be nonnegative");
  t.validate();
  const auto& ji = t.values[static_cast<size_t>(t.objective_index(i))];
  const auto& jj = t.values[static_cast<size_t>(t.objective_index(j))];
  double best_i = *std::max_element(ji.begin(), ji.end());
  double best_j = *std::max_element(jj.begin(), jj.end());
  RegretTransfer res;
  res.bound = eta + oscillation(t, i, j);
  res.worst_regret = 0.0;
  for (size_t u = 0; u < t.options.size(); ++u) {
    if (ji[u] < best_i - eta - 1e-12) continue;  // not eta-optimal for J_i
    double regret = best_j - jj[u];
    if (regret >= res.worst_regret) {
      res.worst_regret = regret;
      res.worst_option = t.options[u];
    }
  }
  res.within_bound = res.worst_regret <= res.bound + kTol;
  res.tight = res.worst_regret >= res.bound - kTol;
  return res;
}

ObjectiveTable tightness_construction(double eta, double omega) {
  if (eta < 0.0 || omega < 0.0 || eta + omega > 1.0)
    throw std::invalid_argument("need eta, omega >= 0 with eta + omega <= 1");
  ObjectiveTable t;
  t.options = {"a", "b"};
  t.objectives = {"Ji", "Jj"};
  t.values = {{1.0 - eta, 1.0}, {1.0 - eta - omega, 1.0}};
  t.validate();
  return t;
}

MissingBits missing_sensing_bits(const BridgePomdp& m, const Policy& policy, const Quotient& q,
                                 const std::vector<int>& prefix) {
  if (q.domain != Quotient::Domain::Latent)
    throw std::invalid_argument("target quotient must partition the latents");
  Dist post = info::posterior_latent(m, policy, prefix);
  JointTable joint;
  joint.axes = {{"Q", q.class_count}, {"B", q.class_count}};
  for (int z : post.support()) {
    int c = q.of_latent(z);
    joint.add({c, c}, post.at(z));
  }
  joint.validate();
  MissingBits res;
  res.bits = info::marginal_entropy(joint, {"Q"});
  res.witness_cond_entropy = info::cond_entropy(joint, {"Q"}, {"B"});
  res.witness_entropy = info::marginal_entropy(joint, {"B"});
  res.witness_ok = res.witness_cond_entropy <= kTol &&
                   std::fabs(res.witness_entropy - res.bits) <= kTol;
  return res;
}

bool blackwell_refines(const std::vector<int>& e_fine, const std::vector<int>& e_coarse,
                       const std::vector<int>& support) {
  std::map<int, int> coarse_of_fine;
  for (int z : support) {
    int f = e_fine.at(static_cast<size_t>(z));
    int c = e_coarse.at(static_cast<size_t>(z));
    auto [it, fresh] = coarse_of_fine.emplace(f, c);
    if (!fresh && it->second != c) return false;
  }
  return true;
}

RefinementCheck refinement_check(const Dist& prior, const std::vector<int>& e_fine,
                                 const std::vector<int>& e_coarse) {
  auto support = prior.support();
  RefinementCheck res;
  res.refines = blackwell_refines(e_fine, e_coarse, support);
  auto label_entropy = [&](const std::vector<int>& table) {
    std::map<int, double> mass;
    for (int z : support) mass[table.at(static_cast<size_t>(z))] += prior.at(z);
    std::vector<double> weights;
    for (const auto& [label, p] : mass) weights.push_back(p);
    return info::entropy_bits(weights);
  };
  // Deterministic experiments reveal exactly their own entropy about the
  // latent, so the mutual informations are the label entropies.
  res.i_fine = label_entropy(e_fine);
  res.i_coarse = label_entropy(e_coarse);
  res.monotone_ok = !res.refines || res.i_fine >= res.i_coarse - kTol;
  return res;
}

AbsorptionReport absorption_report(const BridgePomdp& m, const Policy& policy, const Quotient& q,
                                   const Quotient& v, const Quotient& memory_quotient,
                                   bool omission_declared) {
  if (q.domain != Quotient::Domain::Latent)
    throw std::invalid_argument("target quotient must partition the latents");
  if (memory_quotient.domain != Quotient::Domain::Transcript)
    throw std::invalid_argument("memory must be a function of the terminal history");
  auto rows = enumerate_closed_loop(m, policy);
  JointTable joint;
  joint.axes = {{"Q", q.class_count}, {"V", v.class_count}, {"M", memory_quotient.class_count}};
  for (const auto& row : rows) {
    int cv;
    if (v.domain == Quotient::Domain::State) {
      if (v.time != m.horizon)
        throw std::invalid_argument("predicted quotient must be terminal");
      cv = v.of_state(row.trajectory.states.back());
    } else if (v.domain == Quotient::Domain::Transcript) {
      cv = v.of_transcript(row.trajectory.transcript());
    } else {
      cv = v.of_latent(row.z);
    }
    joint.add({q.of_latent(row.z), cv, memory_quotient.of_transcript(row.trajectory.transcript())},
              row.probability);
  }
  joint.validate();

  AbsorptionReport r;
  r.h_q = info::marginal_entropy(joint, {"Q"});
  r.h_q_given_v = info::cond_entropy(joint, {"Q"}, {"V"});
  r.h_q_given_m = info::cond_entropy(joint, {"Q"}, {"M"});
  r.h_v_given_m = info::cond_entropy(joint, {"V"}, {"M"});
  r.i_q_v = r.h_q - r.h_q_given_v;
  r.i_q_m = r.h_q - r.h_q_given_m;
  r.identification = r.h_q_given_v <= kTol;
  r.overwrite_collapse = r.h_q_given_v > kTol && r.h_v_given_m <= kTol;
  r.omission = omission_declared;
  r.memory_lower_bound = r.h_q_given_m <= kTol ? r.h_q : 0.0;
  r.memory_class_count = memory_quotient.class_count;
  r.bound_applicable = r.h_v_given_m <= kTol;
  r.bound_ok = !r.bound_applicable ||
               (r.i_q_m >= r.i_q_v - kTol && r.h_q_given_m <= r.h_q_given_v + kTol);
  r.memory_count_ok =
      r.h_q_given_m > kTol || r.memory_class_count >= std::exp2(r.h_q) - 1e-6;
  return r;
}

DiBudgetCheck di_budget_check(const info::JointTable& joint, double budget_bits) {
  int T = (static_cast<int>(joint.axes.size()) - 1) / 2;
  if (static_cast<int>(joint.axes.size()) != 2 * T + 1 || T < 1)
    throw std::invalid_argument("joint must carry T action axes, T observation axes and a bridge axis");
  std::vector<std::string> a_all, o_all;
  for (int t = 1; t <= T; ++t) {
    a_all.push_back("A" + std::to_string(t));
    o_all.push_back("O" + std::to_string(t));
  }
  double leakage = info::cond_mutual_info(joint, a_all, o_all, {"B"});
  if (leakage > kTol)
    throw std::invalid_argument(
        "bridge does not mediate the action/observation dependence (conditional mutual "
        "information " +
        std::to_string(leakage) + " bits)");

  auto di = info::directed_information(joint, T);
  DiBudgetCheck c;
  c.outward = di.actions_to_observations;
  c.inward = di.observations_to_actions;
  c.total = di.total;
  c.mutual = di.mutual;
  c.h_b = info::marginal_entropy(joint, {"B"});
  c.budget = budget_bits;
  c.conservation_ok = std::fabs(c.total - c.mutual) <= kTol;
  c.budget_ok = c.mutual <= std::min(c.h_b, budget_bits) + kTol;
  c.pass = c.conservation_ok && c.budget_ok;
  return c;
}

AuthorityReport authority_report(const BridgePomdp& m, int horizon, long long budget) {
  if (horizon < 1 || horizon > m.horizon)
    throw std::invalid_argument("authority horizon out of range");
  if (budget <= 0) budget = env_budget("BPOMDP_REACH_BUDGET", 1LL << 28);
  long long seq_count = 1;
  for (int t = 0; t < horizon; ++t) seq_count *= m.action_count[static_cast<size_t>(t)];
  auto support = m.latent.prior.support();
  if (seq_count * static_cast<long long>(support.size()) * horizon > budget)
    throw std::runtime_error("authority enumeration exceeds budget " + std::to_string(budget));

  // Mixed-radix decode with the first action most significant, so increasing
  // index is lexicographic order on sequences.
  std::vector<long long> suffix(static_cast<size_t>(horizon), 1);
  for (int t = horizon - 2; t >= 0; --t)
    suffix[static_cast<size_t>(t)] =
        suffix[static_cast<size_t>(t + 1)] * m.action_count[static_cast<size_t>(t + 1)];
  auto decode = [&](long long s) {
    std::vector<int> seq(static_cast<size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
      seq[static_cast<size_t>(t)] =
          static_cast<int>(s / suffix[static_cast<size_t>(t)] %
                           m.action_count[static_cast<size_t>(t)]);
    }
    return seq;
  };

  int terminal_count = m.state_count[static_cast<size_t>(horizon)];
  // term[i][s] = terminal state of support latent i under sequence s.
  std::vector<std::vector<int>> term(support.size(), std::vector<int>(static_cast<size_t>(seq_count)));
  for (size_t i = 0; i < support.size(); ++i) {
    int z = support[i];
    for (long long s = 0; s < seq_count; ++s) {
      int x = m.init_state(z);
      auto seq = decode(s);
      for (int t = 0; t < horizon; ++t) x = m.step(t, z, x, seq[static_cast<size_t>(t)]).x;
      term[i][static_cast<size_t>(s)] = x;
    }
  }

  AuthorityReport r;
  r.targets.resize(static_cast<size_t>(terminal_count));
  r.state_conditioned = true;
  r.strong_overwrite = true;
  for (int xstar = 0; xstar < terminal_count; ++xstar) {
    auto& tgt = r.targets[static_cast<size_t>(xstar)];
    tgt.target_state = xstar;
    tgt.per_latent_sequence.assign(support.size(), std::nullopt);
    for (size_t i = 0; i < support.size(); ++i) {
      for (long long s = 0; s < seq_count; ++s) {
        if (term[i][static_cast<size_t>(s)] == xstar) {
          tgt.per_latent_sequence[i] = decode(s);
          break;
        }
      }
      if (!tgt.per_latent_sequence[i]) r.state_conditioned = false;
    }
    for (long long s = 0; s < seq_count; ++s) {
      bool all = true;
      for (size_t i = 0; i < support.size(); ++i)
        if (term[i][static_cast<size_t>(s)] != xstar) {
          all = false;
          break;
        }
      if (all) {
        tgt.strong_sequence = decode(s);
        break;
      }
    }
    if (!tgt.strong_sequence) r.strong_overwrite = false;
  }

  // Latents that start indistinguishable but demand different sequences for
  // some commonly reachable target.
  for (size_t i = 0; i < support.size(); ++i) {
    for (size_t jdx = i + 1; jdx < support.size(); ++jdx) {
      if (m.init_obs(support[i]) != m.init_obs(support[jdx])) continue;
      std::set<int> common;
      for (long long s = 0; s < seq_count; ++s)
        if (term[i][static_cast<size_t>(s)] == term[jdx][static_cast<size_t>(s)])
          common.insert(term[i][static_cast<size_t>(s)]);
      bool separating = false;
      for (int xstar = 0; xstar < terminal_count && !separating; ++xstar) {
        const auto& tgt = r.targets[static_cast<size_t>(xstar)];
        if (tgt.per_latent_sequence[i] && tgt.per_latent_sequence[jdx] && !common.count(xstar))
          separating = true;
      }
      if (separating) r.ambiguous_pairs.emplace_back(support[i], support[jdx]);
    }
  }
  return r;
}

void to_json(nlohmann::json& j, const BridgeGapReport& r) {
  j = nlohmann::json{{"delta_qw", r.delta_qw},
                     {"delta_sense", r.delta_sense},
                     {"delta_v_vtilde", r.delta_v_vtilde},
                     {"delta_act", r.delta_act},
                     {"delta_qw_display", display(r.delta_qw)},
                     {"delta_sense_display", display(r.delta_sense)},
                     {"delta_v_vtilde_display", display(r.delta_v_vtilde)},
                     {"delta_act_display", display(r.delta_act)},
                     {"h_q", r.h_q},
                     {"h_q_given_w", r.h_q_given_w},
                     {"h_w_given_q", r.h_w_given_q},
                     {"i_q_transcript", r.i_q_transcript},
                     {"i_w_transcript", r.i_w_transcript},
                     {"sup_h_v_given_vtilde", r.sup_h_v_given_vtilde},
                     {"sup_h_vtilde_given_v", r.sup_h_vtilde_given_v},
                     {"c_v", r.c_v},
                     {"c_vtilde", r.c_vtilde},
                     {"support_v_bits", r.support_v_bits},
                     {"normalized_sense_deficit", r.normalized_sense_deficit},
                     {"normalized_act_deficit", r.normalized_act_deficit},
                     {"context", {{"z", r.context.z}, {"x", r.context.x}, {"t", r.context.t}}}};
}

void to_json(nlohmann::json& j, const SandwichCheck& r) {
  j = nlohmann::json{{"compression_diff", r.compression_diff},
                     {"compression_lower", r.compression_lower},
                     {"compression_upper", r.compression_upper},
                     {"control_diff", r.control_diff},
                     {"control_lower", r.control_lower},
                     {"control_upper", r.control_upper},
                     {"compression_lower_slack", r.compression_lower_slack},
                     {"compression_upper_slack", r.compression_upper_slack},
                     {"control_lower_slack", r.control_lower_slack},
                     {"control_upper_slack", r.control_upper_slack},
                     {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const MissingBits& r) {
  j = nlohmann::json{{"bits", r.bits},
                     {"bits_display", display(r.bits)},
                     {"witness_cond_entropy", r.witness_cond_entropy},
                     {"witness_entropy", r.witness_entropy},
                     {"witness_ok", r.witness_ok}};
}

void to_json(nlohmann::json& j, const AbsorptionReport& r) {
  j = nlohmann::json{{"h_q", r.h_q},
                     {"i_q_v", r.i_q_v},
                     {"i_q_m", r.i_q_m},
                     {"h_q_given_v", r.h_q_given_v},
                     {"h_q_given_m", r.h_q_given_m},
                     {"h_v_given_m", r.h_v_given_m},
                     {"h_q_given_m_display", display(r.h_q_given_m)},
                     {"identification", r.identification},
                     {"overwrite_collapse", r.overwrite_collapse},
                     {"omission", r.omission},
                     {"memory_lower_bound", r.memory_lower_bound},
                     {"memory_class_count", r.memory_class_count},
                     {"bound_applicable", r.bound_applicable},
                     {"bound_ok", r.bound_ok},
                     {"memory_count_ok", r.memory_count_ok}};
}

void to_json(nlohmann::json& j, const DiBudgetCheck& r) {
  j = nlohmann::json{{"outward", r.outward},
                     {"inward", r.inward},
                     {"total", r.total},
                     {"mutual", r.mutual},
                     {"outward_display", display(r.outward)},
                     {"inward_display", display(r.inward)},
                     {"h_b", r.h_b},
                     {"budget", r.budget},
                     {"conservation_ok", r.conservation_ok},
                     {"budget_ok", r.budget_ok},
                     {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const AuthorityReport& r) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& tgt : r.targets) {
    nlohmann::json t{{"target_state", tgt.target_state}};
    if (tgt.strong_sequence) t["strong_sequence"] = *tgt.strong_sequence;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& seq : tgt.per_latent_sequence) {
      if (seq)
        per.push_back(*seq);
      else
        per.push_back(nullptr);
    }
    t["per_latent_sequence"] = per;
    targets.push_back(t);
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : r.ambiguous_pairs) pairs.push_back({a, b});
  j = nlohmann::json{{"state_conditioned", r.state_conditioned},
                     {"strong_overwrite", r.strong_overwrite},
                     {"targets", targets},
                     {"ambiguous_pairs", pairs}};
}

}  // namespace gap
}  // namespace bpomdp
