#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bpomdp/dist.hpp"

namespace bpomdp {

// Latent index Z bundles the initial condition, law bits and noise bits into a
// single finite alphabet; the prior over Z is the only source of randomness in
// an episode besides policy mixing weights.
struct LatentSpace {
  int size = 0;
  Dist prior;
  std::vector<std::string> labels;  // optional, empty or one per latent

  void validate() const;
};

struct StepOut {
  int x = 0;  // next state
  int o = 0;  // observation emitted with the transition
};

// Finite-horizon controlled process with deterministic dynamics given the
// latent: the timeline is observe, act, observe, ..., act, observe.  State,
// observation and action alphabets may vary with time.  Dynamics are stored
// behind std::function so instances can be backed either by parsed tables or
// by procedural constructors without materializing large tables.
struct BridgePomdp {
  int horizon = 0;                 // T >= 1 decisions
  LatentSpace latent;
  std::vector<int> state_count;    // T+1 entries
  std::vector<int> obs_count;      // T+1 entries
  std::vector<int> action_count;   // T entries
  std::function<int(int)> init_state;              // z -> x_0
  std::function<int(int)> init_obs;                // z -> o_0
  std::function<StepOut(int, int, int, int)> step; // (t, z, x, a) -> (x', o')

  // Channel-state labels attached to every (t, z, x) context: kappa describes
  // the actuation-side condition, phi the sensing-side condition.
  std::vector<std::string> channel_labels{"plain"};
  std::function<int(int, int, int)> kappa_x;  // (t, z, x) -> label id, t in [0, T]
  std::function<int(int, int, int)> phi_x;

  std::string name;

  int label_id(const std::string& label) const;  // throws if unknown

  // Range-checks counts and, when full is set, sweeps the whole domain of
  // every table/function checking outputs are in range.  Throws
  // std::invalid_argument on the first violation.
  void validate(bool full = true) const;
};

// Many-to-one relabeling of one of the three domains an analysis can quotient:
// the latent alphabet, the state alphabet at a fixed time, or the set of
// realized transcripts (keyed by their canonical encoding).
struct Quotient {
  enum class Domain { Latent, State, Transcript };

  Domain domain = Domain::Latent;
  int time = -1;       // for Domain::State: which time the classes index
  int class_count = 0;
  std::vector<int> class_of;                        // Latent / State domains
  std::map<std::vector<int>, int> transcript_class; // Transcript domain
  // Alternative transcript representation: class determined by the final
  // observation alone.  Total over all transcripts, unlike the map form.
  std::vector<int> last_obs_class;
  std::string name;

  static Quotient latent_identity(const BridgePomdp& m, std::string name = "Q");
  static Quotient latent_trivial(const BridgePomdp& m, std::string name = "trivial");
  static Quotient state_identity(const BridgePomdp& m, int time, std::string name);
  static Quotient state_trivial(const BridgePomdp& m, int time, std::string name);
  static Quotient transcript_last_obs(const BridgePomdp& m, std::vector<int> class_of,
                                      int class_count, std::string name);

  int of_latent(int z) const;
  int of_state(int x) const;
  int of_transcript(const std::vector<int>& encoding) const;

  // Every class id in [0, class_count) must be hit by the domain restricted to
  // the given support (prior support for latent quotients, reachable states
  // or transcripts otherwise).  Throws std::invalid_argument.
  void validate_nonempty(const std::vector<int>& support_values) const;
};

// Decision rule.  OpenLoop plays a fixed action sequence; History maps every
// reachable interleaved prefix [o_0, a_0, o_1, ..., o_t] to an action;
// Callable is the same but computed on demand; Mixture mixes deterministic
// components with fixed weights (the only stochastic policy form).
struct Policy {
  enum class Kind { OpenLoop, History, Callable, Mixture };

  Kind kind = Kind::OpenLoop;
  std::vector<int> seq;
  std::map<std::vector<int>, int> table;
  std::function<int(const std::vector<int>&, int)> fn;  // (prefix, t) -> action
  std::vector<std::pair<double, Policy>> mix;
  std::string name;

  static Policy open_loop(std::vector<int> actions, std::string name = "");
  static Policy from_table(std::map<std::vector<int>, int> table, std::string name = "");
  static Policy from_fn(std::function<int(const std::vector<int>&, int)> fn,
                        std::string name = "");
  static Policy mixture(std::vector<std::pair<double, Policy>> parts, std::string name = "");

  bool deterministic() const { return kind != Kind::Mixture; }
  int component_count() const { return kind == Kind::Mixture ? static_cast<int>(mix.size()) : 1; }
  const Policy& component(int i) const;
  double component_weight(int i) const;

  // Action for a deterministic policy at the prefix ending with the time-t
  // observation.  Throws std::runtime_error for mixtures or missing entries.
  int action_at(const std::vector<int>& prefix, int t) const;

  void validate() const;
};

// Fully realized episode for one latent under one deterministic component.
struct Trajectory {
  int z = -1;
  std::vector<int> states;        // T+1
  std::vector<int> observations;  // T+1
  std::vector<int> actions;       // T
  std::vector<int> kappa_labels;  // T+1, labels of visited (t, z, x_t)
  std::vector<int> phi_labels;    // T+1

  // Canonical transcript encoding [o_0, a_0, o_1, ..., a_{T-1}, o_T].
  std::vector<int> transcript() const;
  // Prefix encoding ending with the time-t observation.
  std::vector<int> prefix(int t) const;

  // Replays the episode against the model and throws std::logic_error if any
  // recorded element disagrees with the dynamics.
  void validate(const BridgePomdp& m) const;
};

struct ClosedLoopRow {
  int z = -1;
  int component = 0;
  double probability = 0.0;
  Trajectory trajectory;
};

// Deterministic rollout of one latent under one deterministic policy.
Trajectory rollout(const BridgePomdp& m, const Policy& policy, int z);

// Exact closed-loop support: one row per (latent in prior support, mixture
// component), sorted by (z, component), probabilities summing to one.  Throws
// std::runtime_error if the row count would exceed the budget (default 2^20,
// overridable via the BPOMDP_ENUM_BUDGET environment variable).
std::vector<ClosedLoopRow> enumerate_closed_loop(const BridgePomdp& m, const Policy& policy,
                                                 long long budget = 0);

// Latents consistent with an observed transcript under the policy, with their
// posterior masses.  Throws std::invalid_argument if the transcript is not
// realizable under the policy.
std::vector<std::pair<int, double>> transcript_fiber(const BridgePomdp& m, const Policy& policy,
                                                     const std::vector<int>& transcript);

// Budget plumbing shared by the enumeration and reachability routines: takes
// the compiled default unless the named environment variable overrides it.
long long env_budget(const char* env_name, long long fallback);

}  // namespace bpomdp
