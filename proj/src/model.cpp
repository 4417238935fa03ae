#include "bpomdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>

namespace bpomdp {

void LatentSpace::validate() const {
  if (size <= 0) throw std::invalid_argument("latent size must be >= 1");
  if (prior.size() != size) throw std::invalid_argument("prior size does not match latent size");
  prior.validate();
  if (!labels.empty() && static_cast<int>(labels.size()) != size)
    throw std::invalid_argument("latent labels must be empty or one per latent");
}

int BridgePomdp::label_id(const std::string& label) const {
  for (int i = 0; i < static_cast<int>(channel_labels.size()); ++i)
    if (channel_labels[static_cast<size_t>(i)] == label) return i;
  throw std::invalid_argument("unknown channel label '" + label + "'");
}

void BridgePomdp::validate(bool full) const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  latent.validate();
  auto check_counts = [&](const std::vector<int>& c, size_t want, const char* what) {
    if (c.size() != want)
      throw std::invalid_argument(std::string(what) + " must have " + std::to_string(want) +
                                  " entries");
    for (int v : c)
      if (v <= 0) throw std::invalid_argument(std::string(what) + " entries must be >= 1");
  };
  check_counts(state_count, static_cast<size_t>(horizon) + 1, "state_count");
  check_counts(obs_count, static_cast<size_t>(horizon) + 1, "obs_count");
  check_counts(action_count, static_cast<size_t>(horizon), "action_count");
  if (!init_state || !init_obs || !step) throw std::invalid_argument("missing dynamics functions");
  if (channel_labels.empty()) throw std::invalid_argument("channel_labels must be nonempty");
  if (!kappa_x || !phi_x) throw std::invalid_argument("missing channel label functions");
  if (!full) return;

  int labels = static_cast<int>(channel_labels.size());
  for (int z = 0; z < latent.size; ++z) {
    int x0 = init_state(z);
    if (x0 < 0 || x0 >= state_count[0])
      throw std::invalid_argument("init_state out of range for latent " + std::to_string(z));
    int o0 = init_obs(z);
    if (o0 < 0 || o0 >= obs_count[0])
      throw std::invalid_argument("init_obs out of range for latent " + std::to_string(z));
  }
  for (int t = 0; t < horizon; ++t) {
    for (int z = 0; z < latent.size; ++z) {
      for (int x = 0; x < state_count[static_cast<size_t>(t)]; ++x) {
        for (int a = 0; a < action_count[static_cast<size_t>(t)]; ++a) {
          StepOut s = step(t, z, x, a);
          if (s.x < 0 || s.x >= state_count[static_cast<size_t>(t) + 1])
            throw std::invalid_argument("step next-state out of range at t=" + std::to_string(t));
          if (s.o < 0 || s.o >= obs_count[static_cast<size_t>(t) + 1])
            throw std::invalid_argument("step observation out of range at t=" + std::to_string(t));
        }
      }
    }
  }
  for (int t = 0; t <= horizon; ++t) {
    for (int z = 0; z < latent.size; ++z) {
      for (int x = 0; x < state_count[static_cast<size_t>(t)]; ++x) {
        int k = kappa_x(t, z, x);
        int f = phi_x(t, z, x);
        if (k < 0 || k >= labels || f < 0 || f >= labels)
          throw std::invalid_argument("channel label id out of range at t=" + std::to_string(t));
      }
    }
  }
}

Quotient Quotient::latent_identity(const BridgePomdp& m, std::string name) {
  Quotient q;
  q.domain = Domain::Latent;
  q.class_count = m.latent.size;
  q.class_of.resize(static_cast<size_t>(m.latent.size));
  for (int z = 0; z < m.latent.size; ++z) q.class_of[static_cast<size_t>(z)] = z;
  q.name = std::move(name);
  return q;
}

Quotient Quotient::latent_trivial(const BridgePomdp& m, std::string name) {
  Quotient q;
  q.domain = Domain::Latent;
  q.class_count = 1;
  q.class_of.assign(static_cast<size_t>(m.latent.size), 0);
  q.name = std::move(name);
  return q;
}

Quotient Quotient::state_identity(const BridgePomdp& m, int time, std::string name) {
  if (time < 0 || time > m.horizon) throw std::invalid_argument("state quotient time out of range");
  Quotient q;
  q.domain = Domain::State;
  q.time = time;
  q.class_count = m.state_count[static_cast<size_t>(time)];
  q.class_of.resize(static_cast<size_t>(q.class_count));
  for (int x = 0; x < q.class_count; ++x) q.class_of[static_cast<size_t>(x)] = x;
  q.name = std::move(name);
  return q;
}

Quotient Quotient::state_trivial(const BridgePomdp& m, int time, std::string name) {
  if (time < 0 || time > m.horizon) throw std::invalid_argument("state quotient time out of range");
  Quotient q;
  q.domain = Domain::State;
  q.time = time;
  q.class_count = 1;
  q.class_of.assign(static_cast<size_t>(m.state_count[static_cast<size_t>(time)]), 0);
  q.name = std::move(name);
  return q;
}

Quotient Quotient::transcript_last_obs(const BridgePomdp& m, std::vector<int> class_of,
                                       int class_count, std::string name) {
  int terminal_obs = m.obs_count[static_cast<size_t>(m.horizon)];
  if (static_cast<int>(class_of.size()) != terminal_obs)
    throw std::invalid_argument("last-observation quotient needs one class per terminal observation");
  for (int c : class_of)
    if (c < 0 || c >= class_count)
      throw std::invalid_argument("last-observation quotient class out of range");
  Quotient q;
  q.domain = Domain::Transcript;
  q.time = m.horizon;
  q.class_count = class_count;
  q.last_obs_class = std::move(class_of);
  q.name = std::move(name);
  return q;
}

int Quotient::of_latent(int z) const {
  if (domain != Domain::Latent) throw std::logic_error("quotient is not over latents");
  return class_of.at(static_cast<size_t>(z));
}

int Quotient::of_state(int x) const {
  if (domain != Domain::State) throw std::logic_error("quotient is not over states");
  return class_of.at(static_cast<size_t>(x));
}

int Quotient::of_transcript(const std::vector<int>& encoding) const {
  if (domain != Domain::Transcript) throw std::logic_error("quotient is not over transcripts");
  if (!last_obs_class.empty()) {
    if (encoding.empty()) throw std::invalid_argument("empty transcript encoding");
    return last_obs_class.at(static_cast<size_t>(encoding.back()));
  }
  auto it = transcript_class.find(encoding);
  if (it == transcript_class.end())
    throw std::invalid_argument("transcript not covered by quotient '" + name + "'");
  return it->second;
}

void Quotient::validate_nonempty(const std::vector<int>& support_values) const {
  if (class_count <= 0) throw std::invalid_argument("quotient with no classes");
  std::set<int> seen;
  if (domain == Domain::Transcript && !last_obs_class.empty()) {
    for (int v : support_values) {
      int c = last_obs_class.at(static_cast<size_t>(v));
      if (c < 0 || c >= class_count) throw std::invalid_argument("transcript class out of range");
      seen.insert(c);
    }
  } else if (domain == Domain::Transcript) {
    for (const auto& [enc, c] : transcript_class) {
      if (c < 0 || c >= class_count) throw std::invalid_argument("transcript class out of range");
      seen.insert(c);
    }
  } else {
    for (int v : support_values) {
      int c = class_of.at(static_cast<size_t>(v));
      if (c < 0 || c >= class_count) throw std::invalid_argument("quotient class out of range");
      seen.insert(c);
    }
  }
  if (static_cast<int>(seen.size()) != class_count)
    throw std::invalid_argument("quotient '" + name + "' has empty classes on the support");
}

Policy Policy::open_loop(std::vector<int> actions, std::string name) {
  Policy p;
  p.kind = Kind::OpenLoop;
  p.seq = std::move(actions);
  p.name = std::move(name);
  return p;
}

Policy Policy::from_table(std::map<std::vector<int>, int> table, std::string name) {
  Policy p;
  p.kind = Kind::History;
  p.table = std::move(table);
  p.name = std::move(name);
  return p;
}

Policy Policy::from_fn(std::function<int(const std::vector<int>&, int)> fn, std::string name) {
  Policy p;
  p.kind = Kind::Callable;
  p.fn = std::move(fn);
  p.name = std::move(name);
  return p;
}

Policy Policy::mixture(std::vector<std::pair<double, Policy>> parts, std::string name) {
  Policy p;
  p.kind = Kind::Mixture;
  p.mix = std::move(parts);
  p.name = std::move(name);
  p.validate();
  return p;
}

const Policy& Policy::component(int i) const {
  if (kind != Kind::Mixture) {
    if (i != 0) throw std::logic_error("deterministic policy has a single component");
    return *this;
  }
  return mix.at(static_cast<size_t>(i)).second;
}

double Policy::component_weight(int i) const {
  if (kind != Kind::Mixture) return 1.0;
  return mix.at(static_cast<size_t>(i)).first;
}

int Policy::action_at(const std::vector<int>& prefix, int t) const {
  switch (kind) {
    case Kind::OpenLoop:
      if (t < 0 || t >= static_cast<int>(seq.size()))
        throw std::runtime_error("open-loop policy has no action for time " + std::to_string(t));
      return seq[static_cast<size_t>(t)];
    case Kind::History: {
      auto it = table.find(prefix);
      if (it == table.end())
        throw std::runtime_error("history policy '" + name + "' missing an entry for a reachable prefix");
      return it->second;
    }
    case Kind::Callable:
      return fn(prefix, t);
    case Kind::Mixture:
      throw std::runtime_error("mixture policy needs a component to act");
  }
  throw std::logic_error("unreachable");
}

void Policy::validate() const {
  if (kind == Kind::Mixture) {
    if (mix.empty()) throw std::invalid_argument("mixture with no components");
    double sum = 0.0;
    for (const auto& [w, comp] : mix) {
      if (!(w >= 0.0)) throw std::invalid_argument("negative mixture weight");
      if (comp.kind == Kind::Mixture) throw std::invalid_argument("nested mixture policies");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("mixture weights sum to " + std::to_string(sum));
  }
  if (kind == Kind::Callable && !fn) throw std::invalid_argument("callable policy without function");
}

std::vector<int> Trajectory::transcript() const {
  std::vector<int> enc;
  enc.reserve(observations.size() + actions.size());
  for (size_t t = 0; t < actions.size(); ++t) {
    enc.push_back(observations[t]);
    enc.push_back(actions[t]);
  }
  enc.push_back(observations.back());
  return enc;
}

std::vector<int> Trajectory::prefix(int t) const {
  if (t < 0 || t >= static_cast<int>(observations.size()))
    throw std::invalid_argument("prefix time out of range");
  std::vector<int> enc;
  for (int k = 0; k < t; ++k) {
    enc.push_back(observations[static_cast<size_t>(k)]);
    enc.push_back(actions[static_cast<size_t>(k)]);
  }
  enc.push_back(observations[static_cast<size_t>(t)]);
  return enc;
}

void Trajectory::validate(const BridgePomdp& m) const {
  size_t T = static_cast<size_t>(m.horizon);
  if (states.size() != T + 1 || observations.size() != T + 1 || actions.size() != T ||
      kappa_labels.size() != T + 1 || phi_labels.size() != T + 1)
    throw std::logic_error("trajectory has wrong lengths for the model horizon");
  if (states[0] != m.init_state(z) || observations[0] != m.init_obs(z))
    throw std::logic_error("trajectory initial condition disagrees with the model");
  for (size_t t = 0; t < T; ++t) {
    StepOut s = m.step(static_cast<int>(t), z, states[t], actions[t]);
    if (s.x != states[t + 1] || s.o != observations[t + 1])
      throw std::logic_error("trajectory replay mismatch at t=" + std::to_string(t));
  }
  for (size_t t = 0; t <= T; ++t) {
    if (kappa_labels[t] != m.kappa_x(static_cast<int>(t), z, states[t]) ||
        phi_labels[t] != m.phi_x(static_cast<int>(t), z, states[t]))
      throw std::logic_error("trajectory channel labels disagree with the model");
  }
}

Trajectory rollout(const BridgePomdp& m, const Policy& policy, int z) {
  if (!policy.deterministic())
    throw std::invalid_argument("rollout needs a deterministic policy or mixture component");
  if (z < 0 || z >= m.latent.size) throw std::invalid_argument("latent index out of range");
  Trajectory tr;
  tr.z = z;
  tr.states.push_back(m.init_state(z));
  tr.observations.push_back(m.init_obs(z));
  std::vector<int> prefix{tr.observations[0]};
  for (int t = 0; t < m.horizon; ++t) {
    int a = policy.action_at(prefix, t);
    if (a < 0 || a >= m.action_count[static_cast<size_t>(t)])
      throw std::runtime_error("policy action out of range at t=" + std::to_string(t));
    StepOut s = m.step(t, z, tr.states.back(), a);
    tr.actions.push_back(a);
    tr.states.push_back(s.x);
    tr.observations.push_back(s.o);
    prefix.push_back(a);
    prefix.push_back(s.o);
  }
  for (int t = 0; t <= m.horizon; ++t) {
    tr.kappa_labels.push_back(m.kappa_x(t, z, tr.states[static_cast<size_t>(t)]));
    tr.phi_labels.push_back(m.phi_x(t, z, tr.states[static_cast<size_t>(t)]));
  }
  return tr;
}

long long env_budget(const char* env_name, long long fallback) {
  const char* v = std::getenv(env_name);
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  long long parsed = std::strtoll(v, &end, 10);
  if (end == nullptr || *end != '\0' || parsed <= 0) return fallback;
  return parsed;
}

std::vector<ClosedLoopRow> enumerate_closed_loop(const BridgePomdp& m, const Policy& policy,
                                                 long long budget) {
  if (budget <= 0) budget = env_budget("BPOMDP_ENUM_BUDGET", 1LL << 20);
  std::vector<int> support = m.latent.prior.support();
  long long rows = static_cast<long long>(support.size()) * policy.component_count();
  if (rows > budget)
    throw std::runtime_error("closed-loop enumeration needs " + std::to_string(rows) +
                             " rows, budget is " + std::to_string(budget));
  std::vector<ClosedLoopRow> out;
  out.reserve(static_cast<size_t>(rows));
  for (int z : support) {
    for (int c = 0; c < policy.component_count(); ++c) {
      ClosedLoopRow row;
      row.z = z;
      row.component = c;
      row.probability = m.latent.prior.at(z) * policy.component_weight(c);
      row.trajectory = rollout(m, policy.component(c), z);
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<std::pair<int, double>> transcript_fiber(const BridgePomdp& m, const Policy& policy,
                                                     const std::vector<int>& transcript) {
  if (static_cast<int>(transcript.size()) != 2 * m.horizon + 1)
    throw std::invalid_argument("transcript encoding has wrong length");
  std::vector<std::pair<int, double>> fiber;
  double mass = 0.0;
  for (const ClosedLoopRow& row : enumerate_closed_loop(m, policy)) {
    if (row.trajectory.transcript() == transcript) {
      if (!fiber.empty() && fiber.back().first == row.z)
        fiber.back().second += row.probability;
      else
        fiber.emplace_back(row.z, row.probability);
      mass += row.probability;
    }
  }
  if (fiber.empty() || mass <= 0.0)
    throw std::invalid_argument("transcript is not realizable under this policy");
  for (auto& [z, p] : fiber) p /= mass;
  return fiber;
}

}  // namespace bpomdp
