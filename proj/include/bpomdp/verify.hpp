#pragma once

#include "bpomdp/gap.hpp"
#include "bpomdp/planner.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bpomdp {
namespace verify {

// Randomized property suite: every analytical guarantee the library exposes
// is replayed on randomly generated instances.  Identical configurations
// produce byte-identical summaries.  Some checks cap their instance sizes
// below the configured maxima to stay exhaustively enumerable.
struct VerifyConfig {
  std::uint64_t seed = 1;
  int trials = 100;
  int max_latents = 64;
  int max_states = 16;
  int max_actions = 4;
  int max_horizon = 3;
  std::vector<std::string> checks;  // empty = run all
  std::string dump_dir = ".";      // counterexamples are written here
  // Flips every margin so each check fails; exercises the counterexample
  // path.  Only tests set this.
  bool negate = false;

  void validate() const;  // throws std::invalid_argument on bad caps
};

struct CheckOutcome {
  std::string check;
  int trials = 0;
  int failures = 0;
  double worst_margin = 0.0;        // most negative slack seen (>= -1e-9 passes)
  std::string counterexample_path;  // first failing dump, if any
};

struct VerifySummary {
  std::vector<CheckOutcome> outcomes;
  bool all_passed = true;
  std::string text;  // deterministic rendering of the outcomes
};

// The available check names in their fixed execution order.
std::vector<std::string> check_names();

VerifySummary run_verify(const VerifyConfig& cfg);

// Reloads a dumped counterexample and reruns its check, returning the
// reproduced margin (negative means the violation is still present).
double replay_counterexample(const std::string& path);

}  // namespace verify
}  // namespace bpomdp
