#pragma once

#include "bpomdp/planner.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bpomdp {
namespace bench {

// A model packaged with the quotients its comparison rows need and the two
// planner configurations the table runs: the family's misaligned proxy and
// the bridge-gap objective on the same model.
struct BenchmarkInstance {
  std::string name;
  std::map<std::string, int> params;
  BridgePomdp model;
  Quotient eval_target;             // latent quotient the success column scores
  std::vector<Quotient> quotients;  // named declarations, for emission and diagnosis
  planner::PlannerConfig baseline;
  planner::PlannerConfig bgp;
  nlohmann::json reward_json;       // serialized task reward, when the family has one
};

// n-bit hidden value; actions either write an m-bit terminal register
// (revealing nothing about the value) or inspect the value, available at the
// first step only.
BenchmarkInstance make_settable_distractor(int n, int m);

// The informative sensor only fires from a channel state one first action
// enters; every first action is equally uninformative immediately.
// enter_first swaps the action indices so the entering action is index 0.
BenchmarkInstance make_delayed_sensor(int n, bool enter_first = false);

// One action copies the hidden value into the terminal variable and reveals
// it; the lower-indexed action overwrites the variable with a constant while
// still producing a perfectly predictable terminal observation.
BenchmarkInstance make_inspect_overwrite(int n);

// Hidden value factored into independent coarse and fine parts; the reward
// pays equally for any action that identifies the coarse part, while
// evaluation scores the full value.
BenchmarkInstance make_quotient_transfer(int n_coarse, int n_fine);

// One-bit persistent value with an optional display action: skipping the
// display keeps the terminal state predictable from memory but absent from
// the observed stream.
BenchmarkInstance make_lossy_display();

// Structural property defining each family; throws std::logic_error if the
// built model violates it.  The constructors call this themselves.
void check_family(const BenchmarkInstance& inst);

struct TableRow {
  std::string family;
  std::string objective;
  double value = 0.0;
  double success = 0.0;  // probability mass in [0, 1]
  std::optional<Rational> success_exact;
  double residual_bits = 0.0;
  std::string policy;
  double seconds = 0.0;
};

struct TableParams {
  int n = 4;
  int m = 8;
  int n_coarse = 2;
  int n_fine = 2;
};

// Baseline and bridge-gap rows for the four standard families.  Families run
// concurrently; row order is fixed regardless.
std::vector<TableRow> run_table(const TableParams& params);

// The two rows (baseline, bridge-gap) for one instance.
std::vector<TableRow> run_rows(const BenchmarkInstance& inst);

// Success mass in [0,1] as a percentage truncated (not rounded) to one
// decimal, e.g. 0.0625 -> 6.2.
double truncated_percent(double success);

std::string format_table(const std::vector<TableRow>& rows);
nlohmann::json table_json(const std::vector<TableRow>& rows);

// The same model with action indices relabeled by the given per-time
// permutations (perms[t][new_index] = old_index).
BridgePomdp permute_actions(const BridgePomdp& m, const std::vector<std::vector<int>>& perms);

// Round-trippable spec file for the instance, including its quotients and
// both planner blocks.
nlohmann::json emit_spec(const BenchmarkInstance& inst);

}  // namespace bench
}  // namespace bpomdp
