#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bpomdp/info.hpp"
#include "bpomdp/model.hpp"

#include "json.hpp"

namespace bpomdp {
namespace gap {

// Coarsest latent partition on which every target table is constant: two
// latents share a class iff all targets agree on them.  Classes are numbered
// by first appearance in latent order.
Quotient quotient_from_targets(const BridgePomdp& m,
                               const std::vector<std::vector<int>>& targets,
                               std::string name = "targets");

// Fixed deterministic rollout context for control-side quantities.
using info::Context;

// Distinct terminal classes of a quotient reachable from a context by the
// remaining action choices.  State quotients use layered search; transcript
// quotients enumerate the action tails.
std::set<int> context_reach(const BridgePomdp& m, const Quotient& q, const Context& ctx);

// Sensing side: how well the transcript pins down the target classes.
// Control side, conditional on a context: how much of the instance-wide value
// range of V this context can actually reach, and how much of what it reaches
// survives into the observed classes.
struct BridgeGapReport {
  double delta_qw = 0.0;       // max{H(Q|W), H(W|Q)}
  double delta_sense = 0.0;    // H(Q | transcript)
  double delta_v_vtilde = 0.0; // max of the two worst-case conditional entropies below
  double delta_act = 0.0;      // log2 |supp V| - log2 |reach V|

  double h_q = 0.0;
  double h_q_given_w = 0.0;
  double h_w_given_q = 0.0;
  double i_q_transcript = 0.0;
  double i_w_transcript = 0.0;
  double sup_h_v_given_vtilde = 0.0;  // attained by piling mass on one observed class
  double sup_h_vtilde_given_v = 0.0;
  double c_v = 0.0;            // log2 |reach of V from the context|
  double c_vtilde = 0.0;       // log2 |reach of observed classes from the context|
  double support_v_bits = 0.0; // log2 |union of V reach over all prior latents from t=0|

  double normalized_sense_deficit = 0.0;  // delta_sense / H(Q); 0 when H(Q)=0
  double normalized_act_deficit = 0.0;    // delta_act / support bits; 0 when support is a singleton

  Context context;

  void validate() const;  // nonnegativity and normalized-range invariants
};

BridgeGapReport bridge_gap_report(const BridgePomdp& m, const Policy& policy, const Quotient& q,
                                  const Quotient& w, const Quotient& v, const Quotient& vt,
                                  const Context& context);

// Sandwich bounds relating the two compression scores and the two control
// capacities; slacks are distances to the bounds and must be >= -1e-9.
struct SandwichCheck {
  double compression_diff = 0.0;  // I(Q;transcript) - I(W;transcript)
  double compression_lower = 0.0; // -H(W|Q)
  double compression_upper = 0.0; // H(Q|W)
  double control_diff = 0.0;      // C_V - C_Vtilde
  double control_lower = 0.0;
  double control_upper = 0.0;
  double compression_lower_slack = 0.0;
  double compression_upper_slack = 0.0;
  double control_lower_slack = 0.0;
  double control_upper_slack = 0.0;
  bool pass = false;
};

SandwichCheck theorem1_check(const BridgePomdp& m, const Policy& policy, const Quotient& q,
                             const Quotient& w, const Quotient& v, const Quotient& vt,
                             const Context& context);

// Scores in [0,1] for a finite option class, one row per named objective.
struct ObjectiveTable {
  std::vector<std::string> options;
  std::vector<std::string> objectives;
  std::vector<std::vector<double>> values;  // [objective][option]

  int objective_index(const std::string& name) const;
  void validate() const;
};

// Width of the range of J_i - J_j over the options.
double oscillation(const ObjectiveTable& t, const std::string& i, const std::string& j);

struct RegretTransfer {
  double bound = 0.0;         // eta + oscillation
  double worst_regret = 0.0;  // over eta-optimal options for J_i, regret under J_j
  std::string worst_option;
  bool within_bound = false;
  bool tight = false;  // some eta-optimal option attains the bound
};

RegretTransfer regret_transfer_check(const ObjectiveTable& t, const std::string& i,
                                     const std::string& j, double eta);

// Two-option table on which an eta-optimal choice under the first objective
// realizes exactly eta + omega regret under the second.  Requires
// eta + omega <= 1 so the scores stay in [0,1].
ObjectiveTable tightness_construction(double eta, double omega);

struct MissingBits {
  double bits = 0.0;  // H(Q | prefix)
  // Appending the target class itself as one extra observation closes the
  // gap; these record that the witness behaves as claimed.
  double witness_cond_entropy = 0.0;  // H(Q | prefix, witness), should be 0
  double witness_entropy = 0.0;       // H(witness | prefix), should equal bits
  bool witness_ok = false;
};

MissingBits missing_sensing_bits(const BridgePomdp& m, const Policy& policy, const Quotient& q,
                                 const std::vector<int>& prefix);

// True iff equal fine labels force equal coarse labels on the support.
bool blackwell_refines(const std::vector<int>& e_fine, const std::vector<int>& e_coarse,
                       const std::vector<int>& support);

struct RefinementCheck {
  bool refines = false;
  double i_fine = 0.0;    // I(Z; fine label) = H(fine label) for deterministic maps
  double i_coarse = 0.0;
  bool monotone_ok = false;  // refines implies i_fine >= i_coarse - 1e-9
};

RefinementCheck refinement_check(const Dist& prior, const std::vector<int>& e_fine,
                                 const std::vector<int>& e_coarse);

// Resource accounting for "prediction was achieved, what did it cost":
// either the latent classes got absorbed into retained state, or the
// predicted quotient collapsed them away.
struct AbsorptionReport {
  double h_q = 0.0;
  double i_q_v = 0.0;
  double i_q_m = 0.0;
  double h_q_given_v = 0.0;
  double h_q_given_m = 0.0;
  double h_v_given_m = 0.0;

  bool identification = false;      // H(Q|V) = 0
  bool overwrite_collapse = false;  // H(Q|V) > 0 while V is predictable from memory
  bool omission = false;            // caller-declared property of the target family

  double memory_lower_bound = 0.0;  // H(Q) when memory pins Q down, else 0
  int memory_class_count = 0;
  bool bound_applicable = false;  // H(V|M) = 0, so the absorption inequalities bind
  bool bound_ok = false;
  bool memory_count_ok = false;  // class count >= 2^{H(Q)} whenever H(Q|M)=0
};

AbsorptionReport absorption_report(const BridgePomdp& m, const Policy& policy, const Quotient& q,
                                   const Quotient& v, const Quotient& memory_quotient,
                                   bool omission_declared = false);

// Budget check for a joint over (A1..AT, O1..OT, B): the action/observation
// dependence must be carried entirely by B, and then the two directed terms
// sum to the mutual information, itself at most min(H(B), budget).
struct DiBudgetCheck {
  double outward = 0.0;  // influence of past actions on the next observation
  double inward = 0.0;   // influence of past observations on the next action
  double total = 0.0;
  double mutual = 0.0;
  double h_b = 0.0;
  double budget = 0.0;
  bool conservation_ok = false;
  bool budget_ok = false;
  bool pass = false;
};

DiBudgetCheck di_budget_check(const info::JointTable& joint, double budget_bits);

struct AuthorityTarget {
  int target_state = 0;
  // Lexicographically first sequence forcing the target for every latent in
  // the prior support, if one exists.
  std::optional<std::vector<int>> strong_sequence;
  // Per latent: first reaching sequence, or empty when the target is
  // unreachable from that latent's start.
  std::vector<std::optional<std::vector<int>>> per_latent_sequence;
};

struct AuthorityReport {
  bool state_conditioned = false;  // every latent can steer to every terminal state
  bool strong_overwrite = false;   // every terminal state forcible by one latent-independent sequence
  std::vector<AuthorityTarget> targets;
  // Latent pairs indistinguishable at the start (same initial observation)
  // whose starts both reach some target but never under a shared sequence.
  std::vector<std::pair<int, int>> ambiguous_pairs;
};

AuthorityReport authority_report(const BridgePomdp& m, int horizon, long long budget = 0);

void to_json(nlohmann::json& j, const BridgeGapReport& r);
void to_json(nlohmann::json& j, const SandwichCheck& r);
void to_json(nlohmann::json& j, const MissingBits& r);
void to_json(nlohmann::json& j, const AbsorptionReport& r);
void to_json(nlohmann::json& j, const DiBudgetCheck& r);
void to_json(nlohmann::json& j, const AuthorityReport& r);

}  // namespace gap
}  // namespace bpomdp
