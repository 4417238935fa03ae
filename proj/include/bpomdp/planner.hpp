#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bpomdp/dist.hpp"
#include "bpomdp/gap.hpp"
#include "bpomdp/info.hpp"
#include "bpomdp/model.hpp"

namespace bpomdp {
namespace planner {

enum class Objective {
  Bgp,
  EmpowermentUngated,
  IgOneStep,
  EfeOneStep,
  PredictionLoss,
  CoarseReturn,
};

Objective objective_from_name(const std::string& name);
std::string objective_name(Objective o);

// How the channel deficit treats the informative-condition label set: Any
// zeroes the deficit as soon as one such label is reachable in the remaining
// horizon, All requires every label to be reachable.
enum class ChannelTermMode { Any, All };

// Continuation used when estimating how much of the controlled quotient
// survives into the observed quotient from an interior node.
enum class EvalPolicyMode { GreedyIg, WorstCase };

enum class PlanMode { Dp, Greedy };

struct BgpWeights {
  double lambda_c = 1.0;
  double lambda_v = 1.0;
  double lambda_o = 1.0;
  double lambda_d = 1.0;
  double beta = 1.0;
  double tau = 1e-9;  // bits; gate opens strictly above this

  void validate() const;
};

struct PlannerConfig {
  Objective objective = Objective::Bgp;
  PlanMode mode = PlanMode::Dp;
  ChannelTermMode channel_term = ChannelTermMode::Any;
  EvalPolicyMode eval_policy = EvalPolicyMode::GreedyIg;
  BgpWeights weights;

  Quotient q;                          // latent target quotient
  std::optional<Quotient> v_q;         // controlled terminal quotient
  std::optional<Quotient> v_tilde;     // observed terminal quotient
  std::optional<Quotient> v_obs;       // observable quotient for raw empowerment
  std::optional<Quotient> pred_target; // terminal quotient scored by prediction loss
  std::vector<Quotient> factors;       // controllable factors the gate screens
  std::vector<int> c_star;             // label ids of informative channel conditions

  // (t, z, x, a) -> task reward; empty means reward-free.
  std::function<double(int, int, int, int)> task_reward;

  long long tree_budget = 1000000;
};

// Posterior state after an interleaved prefix [o_0, a_0, o_1, ..., o_t]:
// which latents remain possible and where each of them currently is.
struct BeliefNode {
  int t = 0;
  std::vector<int> prefix;
  std::vector<int> zs;  // consistent latents, ascending
  std::vector<int> xs;  // current state per consistent latent
  Dist posterior;       // over the full latent alphabet, zero off the fiber

  double target_entropy(const Quotient& q) const;  // H(q-class | this node)
};

// Policy-free Bayes filter: replays the prefix actions for every latent and
// keeps those whose observations match.  Throws std::invalid_argument if no
// latent is consistent.
BeliefNode belief_at(const BridgePomdp& m, const std::vector<int>& prefix);

struct GateResult {
  bool open = false;
  double delta_q = 0.0;  // best achievable drop in target ambiguity from forcing the factor
  double delta_r = 0.0;  // largest task-reward difference between forced values
  int forceable_values = 0;
};

struct PotentialBreakdown {
  double total = 0.0;
  double ambiguity = 0.0;
  double channel = 0.0;
  double control = 0.0;
  double obs_loss = 0.0;
  double distractor = 0.0;
  std::vector<GateResult> gates;            // one per factor
  std::vector<double> factor_capacity;      // expected reach bits per factor
};

PotentialBreakdown bgp_potential(const BridgePomdp& m, const PlannerConfig& cfg,
                                 const BeliefNode& node);

GateResult relevance_gate(const BridgePomdp& m, const PlannerConfig& cfg, const BeliefNode& node,
                          int factor_index);

struct HistoryOutcome {
  std::vector<int> transcript;
  double mass = 0.0;
  double residual_bits = 0.0;  // H(target | this terminal history)
  int map_class = -1;          // lowest-index posterior mode of the target
  double correct_mass = 0.0;   // share of the mass whose true class is the mode
};

struct EvalResult {
  double success = 0.0;                  // probability the mode matches the true class
  std::optional<Rational> success_exact; // exact value when the prior is uniform on its support
  double residual_bits = 0.0;            // E[H(target | H_T)]
  std::vector<HistoryOutcome> per_history;
  std::vector<double> phi_trajectory;    // E[Phi(H_t)] for t = 0..T when a config is given
  double telescoping_slack = 0.0;        // |path-summed potential drop - endpoint difference|
};

// Terminal metrics of a deterministic policy against a latent target
// quotient; passing a config additionally tracks the potential along the way.
EvalResult evaluate_policy(const BridgePomdp& m, const Policy& policy, const Quotient& target,
                           const PlannerConfig* phi_config = nullptr);

struct PlanResult {
  Objective objective = Objective::Bgp;
  Policy policy;  // deterministic history policy over the reached prefixes
  double value = 0.0;
  std::map<std::vector<int>, double> node_values;
  std::map<std::vector<int>, int> chosen;
  EvalResult eval;  // against cfg.q
};

// Exact backward induction for the cumulative objectives, stepwise selection
// for the one-step rules (and for Bgp in Greedy mode).  Ties always resolve
// to the lowest action index.
PlanResult plan_exact(const BridgePomdp& m, const PlannerConfig& cfg);

// Independent value of an arbitrary deterministic policy under the configured
// objective, computed from the enumerated closed loop rather than the search
// tree; plan_exact's reported value must match this on its own policy.
double evaluate_objective(const BridgePomdp& m, const Policy& policy, const PlannerConfig& cfg);

// E[Phi(H_T)] under a policy; with no task reward, Bgp planning minimizes
// exactly this.
double expected_terminal_phi(const BridgePomdp& m, const Policy& policy,
                             const PlannerConfig& cfg);

// All deterministic history policies of the model, in lexicographic order of
// their action tables.  Throws std::runtime_error if more than max_count
// exist.
std::vector<Policy> enumerate_policies(const BridgePomdp& m, long long max_count);

// Action list the policy takes on the lowest-index latent, e.g. "[2,0]".
std::string policy_digest(const BridgePomdp& m, const Policy& policy);

}  // namespace planner
}  // namespace bpomdp
