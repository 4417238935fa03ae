#pragma once

#include "bpomdp/model.hpp"
#include "bpomdp/planner.hpp"

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bpomdp {
namespace spec_io {

// A model description loaded from JSON together with its optional named
// quotients, planner blocks, policy, and budget overrides.
struct ParsedSpec {
  BridgePomdp model;
  std::vector<Quotient> quotients;
  std::optional<planner::PlannerConfig> planner_config;   // block "planner"
  std::optional<planner::PlannerConfig> baseline_config;  // block "baseline"
  std::optional<Policy> policy;
  std::optional<long long> enum_budget;
  std::optional<long long> reach_budget;
};

// Parses and fully validates a model file.  Throws std::invalid_argument with
// the offending key on malformed input.
ParsedSpec parse_spec(const nlohmann::json& j);
ParsedSpec load_spec(const std::string& path);

const Quotient& find_quotient(const std::vector<Quotient>& quotients, const std::string& name);

// Serialization.  Dynamics are materialized as dense tables, so these are
// meant for small instances (toys, counterexamples, benchmark emissions).
nlohmann::json model_json(const BridgePomdp& m);
nlohmann::json quotient_json(const Quotient& q);
nlohmann::json planner_json(const planner::PlannerConfig& cfg, const BridgePomdp& m,
                            const nlohmann::json& reward_json);
nlohmann::json policy_json(const Policy& p);
Policy parse_policy_json(const nlohmann::json& j);
Policy load_policy(const std::string& path);

void save_json(const std::string& path, const nlohmann::json& j);

}  // namespace spec_io
}  // namespace bpomdp
