#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bpomdp/model.hpp"

namespace bpomdp {
namespace info {

// Shannon entropy in bits of a weight vector; zero entries are skipped and the
// vector need not be normalized exactly (weights are renormalized first).
double entropy_bits(const std::vector<double>& weights);
double entropy_bits(const Dist& d);

// Exact finite joint distribution over named axes, stored sparsely.  All
// downstream entropy/information quantities are derived from these tables.
struct JointTable {
  struct Axis {
    std::string name;
    int size = 0;
  };

  std::vector<Axis> axes;
  std::map<std::vector<int>, double> cells;  // tuple -> probability, > 0

  int axis_index(const std::string& name) const;  // throws if unknown
  void add(const std::vector<int>& tuple, double probability);
  // Throws std::invalid_argument unless tuples are in range, probabilities
  // positive, and the total mass is 1 within 1e-9.
  void validate() const;
};

// Entropy in bits of the marginal over a subset of axes (by name).
double marginal_entropy(const JointTable& joint, const std::vector<std::string>& axes);
// H(target | given) in bits.
double cond_entropy(const JointTable& joint, const std::vector<std::string>& target,
                    const std::vector<std::string>& given);
// I(a ; b) and I(a ; b | c) in bits.
double mutual_info(const JointTable& joint, const std::vector<std::string>& a,
                   const std::vector<std::string>& b);
double cond_mutual_info(const JointTable& joint, const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const std::vector<std::string>& c);

// One column of a joint built from the closed-loop support.
struct Column {
  std::string name;
  int size = 0;
  std::function<int(const ClosedLoopRow&)> of;
};

JointTable build_joint(const BridgePomdp& m, const Policy& policy,
                       const std::vector<Column>& columns);

// Transcript ids assigned in first-seen enumeration order, so tests can map
// ids back to encodings deterministically.
struct TranscriptIndex {
  std::vector<std::vector<int>> encodings;
  std::map<std::vector<int>, int> ids;
  int id_of(const std::vector<int>& encoding) const;
};

TranscriptIndex index_transcripts(const std::vector<ClosedLoopRow>& rows);

// Exact Bayes posterior over latents after an interleaved prefix
// [o_0, a_0, ..., o_t].  The policy weighs mixture components that produce
// the prefix's actions.  Throws std::invalid_argument for unrealizable
// prefixes.
Dist posterior_latent(const BridgePomdp& m, const Policy& policy,
                      const std::vector<int>& prefix);

struct Context {
  int z = 0;
  int x = 0;
  int t = 0;
};

// V-classes reachable from the context by some action sequence of the given
// length.  Layered forward search; the work term (sum over layers of frontier
// size times action count) is capped by the budget (default 2^28, env
// override BPOMDP_REACH_BUDGET).
std::set<int> reach_set(const BridgePomdp& m, const Context& ctx, int horizon,
                        const Quotient& v, long long budget = 0);

// log2 of the reach-set size: the deterministic empowerment over V.
double empowerment_det(const BridgePomdp& m, const Context& ctx, int horizon,
                       const Quotient& v, long long budget = 0);

// Raw state reach (no quotient), used by reachability diagnostics.
std::set<int> reach_states(const BridgePomdp& m, const Context& ctx, int horizon,
                           long long budget = 0);

// Discrete memoryless channel rows p(out | in).
struct Channel {
  int inputs = 0;
  int outputs = 0;
  std::vector<std::vector<double>> rows;
  void validate() const;
};

struct CapacityResult {
  double bits = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Blahut-Arimoto with the standard capacity upper/lower bound gap as the
// stopping rule; tolerance in bits.
CapacityResult channel_capacity(const Channel& ch, double tol = 1e-9, int max_iters = 100000);

// Deterministic channel from action sequences to V-classes induced by a
// context; inputs are the |A|^horizon sequences (capped by budget).
Channel induced_action_channel(const BridgePomdp& m, const Context& ctx, int horizon,
                               const Quotient& v, long long budget = 0);

// Capacity of the channel from deterministic history policies to V-classes,
// when the policy class is small enough to enumerate; nullopt otherwise.
std::optional<double> closed_loop_capacity(const BridgePomdp& m, const Quotient& v,
                                           long long policy_budget = 4096);

struct DirectedInfoResult {
  double actions_to_observations = 0.0;  // sum_t I(A^t ; O_t | O^{t-1})
  double observations_to_actions = 0.0;  // sum_t I(O^{t-1} ; A_t | A^{t-1})
  double total = 0.0;
  double mutual = 0.0;                   // I(A^T ; O^T)
};

// Joint must carry axes named A1..AT and O1..OT (feedback indexing: A_t is
// chosen after O^{t-1}).
DirectedInfoResult directed_information(const JointTable& joint, int T);

// One-step information gain about the latent: H(Z | prefix) minus the
// expected posterior entropy after playing a and seeing the next observation.
double information_gain(const BridgePomdp& m, const Policy& policy,
                        const std::vector<int>& prefix, int action);

}  // namespace info
}  // namespace bpomdp
