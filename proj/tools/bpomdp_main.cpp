#include "bpomdp/bench.hpp"
#include "bpomdp/gap.hpp"
#include "bpomdp/spec_io.hpp"
#include "bpomdp/verify.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using namespace bpomdp;

struct BudgetFlags {
  std::optional<long long> enum_budget;
  std::optional<long long> reach_budget;
};

// Precedence: command-line flag, then environment, then spec file value.
void apply_budgets(const BudgetFlags& flags, const spec_io::ParsedSpec* spec) {
  auto apply = [](const char* env_name, std::optional<long long> flag,
                  std::optional<long long> from_file) {
    if (flag) {
      setenv(env_name, std::to_string(*flag).c_str(), 1);
    } else if (from_file && !std::getenv(env_name)) {
      setenv(env_name, std::to_string(*from_file).c_str(), 0);
    }
  };
  apply("BPOMDP_ENUM_BUDGET", flags.enum_budget,
        spec ? spec->enum_budget : std::nullopt);
  apply("BPOMDP_REACH_BUDGET", flags.reach_budget,
        spec ? spec->reach_budget : std::nullopt);
}

info::Context parse_context(const std::string& text) {
  info::Context ctx;
  if (std::sscanf(text.c_str(), "%d,%d,%d", &ctx.z, &ctx.x, &ctx.t) != 3)
    throw CLI::ValidationError("--context", "expected z,x,t");
  return ctx;
}

std::string stem_of(const std::string& path) {
  size_t slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

const Quotient* maybe_find(const std::vector<Quotient>& qs, const std::string& name) {
  for (const auto& q : qs)
    if (q.name == name) return &q;
  return nullptr;
}

Quotient transcript_identity_of(const BridgePomdp& m, const Policy& policy) {
  auto rows = enumerate_closed_loop(m, policy);
  info::TranscriptIndex idx = info::index_transcripts(rows);
  Quotient q;
  q.domain = Quotient::Domain::Transcript;
  q.name = "memory";
  q.class_count = static_cast<int>(idx.encodings.size());
  q.transcript_class = idx.ids;
  return q;
}

int cmd_diagnose(const std::string& spec_path, const std::string& policy_path,
                 const std::string& context_text, const std::string& out_dir,
                 const BudgetFlags& budgets, bool as_json) {
  spec_io::ParsedSpec spec = spec_io::load_spec(spec_path);
  apply_budgets(budgets, &spec);
  const BridgePomdp& m = spec.model;

  Policy policy;
  if (!policy_path.empty()) {
    policy = spec_io::load_policy(policy_path);
  } else if (spec.policy) {
    policy = *spec.policy;
  } else if (spec.planner_config) {
    policy = planner::plan_exact(m, *spec.planner_config).policy;
  } else {
    throw std::invalid_argument(
        "no policy: pass --policy, or declare a policy or planner block in the model file");
  }

  const planner::PlannerConfig* block =
      spec.planner_config ? &*spec.planner_config
                          : (spec.baseline_config ? &*spec.baseline_config : nullptr);
  Quotient q = block ? block->q : Quotient::latent_identity(m, "q");
  Quotient v = block && block->v_q ? *block->v_q
                                   : Quotient::state_identity(m, m.horizon, "v");
  Quotient vt;
  if (block && block->v_tilde) {
    vt = *block->v_tilde;
  } else {
    std::vector<int> cls(static_cast<size_t>(m.obs_count[static_cast<size_t>(m.horizon)]));
    for (size_t i = 0; i < cls.size(); ++i) cls[i] = static_cast<int>(i);
    vt = Quotient::transcript_last_obs(m, cls, static_cast<int>(cls.size()), "vt");
  }
  // The record summary defaults to the full final readout.
  const Quotient* named_w = maybe_find(spec.quotients, "w");
  Quotient w = named_w && named_w->domain == Quotient::Domain::Transcript ? *named_w : vt;

  info::Context ctx;
  if (!context_text.empty()) {
    ctx = parse_context(context_text);
  } else {
    ctx.z = m.latent.prior.support().front();
    ctx.x = m.init_state(ctx.z);
    ctx.t = 0;
  }

  gap::BridgeGapReport report = gap::bridge_gap_report(m, policy, q, w, v, vt, ctx);

  const Policy& det = policy.deterministic() ? policy : policy.component(0);
  std::vector<int> prefix = rollout(m, det, ctx.z).prefix(ctx.t);
  gap::MissingBits missing = gap::missing_sensing_bits(m, det, q, prefix);

  Quotient memory = transcript_identity_of(m, policy);
  gap::AbsorptionReport absorption = gap::absorption_report(m, policy, q, vt, memory);

  double empowerment = info::empowerment_det(m, ctx, m.horizon - ctx.t, v);

  std::vector<info::Column> cols;
  for (int t = 0; t < m.horizon; ++t) {
    cols.push_back(info::Column{"A" + std::to_string(t + 1),
                                m.action_count[static_cast<size_t>(t)],
                                [t](const ClosedLoopRow& row) {
                                  return row.trajectory.actions[static_cast<size_t>(t)];
                                }});
    cols.push_back(info::Column{"O" + std::to_string(t + 1),
                                m.obs_count[static_cast<size_t>(t) + 1],
                                [t](const ClosedLoopRow& row) {
                                  return row.trajectory.observations[static_cast<size_t>(t) + 1];
                                }});
  }
  info::DirectedInfoResult di =
      info::directed_information(info::build_joint(m, policy, cols), m.horizon);

  json out;
  out["spec"] = spec_path;
  out["context"] = {{"z", ctx.z}, {"x", ctx.x}, {"t", ctx.t}};
  out["bridge_gap"] = report;
  out["missing_bits"] = missing;
  out["absorption"] = absorption;
  out["empowerment"] = empowerment;
  out["directed_info"] = {{"actions_to_observations", di.actions_to_observations},
                          {"observations_to_actions", di.observations_to_actions},
                          {"total", di.total},
                          {"mutual", di.mutual}};
  if (block && block->objective == planner::Objective::Bgp) {
    planner::PotentialBreakdown phi =
        planner::bgp_potential(m, *block, planner::belief_at(m, prefix));
    out["potential"] = {{"total", phi.total},         {"ambiguity", phi.ambiguity},
                        {"channel", phi.channel},     {"control", phi.control},
                        {"obs_loss", phi.obs_loss},   {"distractor", phi.distractor}};
  }

  std::string stem = out_dir + "/" + stem_of(spec_path);
  spec_io::save_json(stem + "_bridge_gap.json", out["bridge_gap"]);
  spec_io::save_json(stem + "_absorption.json", out["absorption"]);
  spec_io::save_json(stem + "_missing_bits.json", out["missing_bits"]);
  json side;
  side["empowerment"] = out["empowerment"];
  side["directed_info"] = out["directed_info"];
  if (out.contains("potential")) side["potential"] = out["potential"];
  spec_io::save_json(stem + "_channels.json", side);

  if (as_json) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::printf("diagnosis of %s at context (z=%d, x=%d, t=%d)\n", spec_path.c_str(), ctx.z,
                ctx.x, ctx.t);
    std::printf("  quotient mismatch   %.6f bits\n", report.delta_qw);
    std::printf("  sensing deficit     %.6f bits\n", report.delta_sense);
    std::printf("  observation loss    %.6f bits\n", report.delta_v_vtilde);
    std::printf("  actuation deficit   %.6f bits\n", report.delta_act);
    std::printf("  missing bits        %.6f (witness %s)\n", missing.bits,
                missing.witness_ok ? "ok" : "BAD");
    std::printf("  empowerment         %.6f bits\n", empowerment);
    std::printf("  directed info       forward %.6f + feedback %.6f = %.6f\n",
                di.actions_to_observations, di.observations_to_actions, di.total);
    std::printf("  absorption          identification=%d overwrite=%d classes=%d\n",
                absorption.identification ? 1 : 0, absorption.overwrite_collapse ? 1 : 0,
                absorption.memory_class_count);
    if (out.contains("potential"))
      std::printf("  potential           total %.6f (channel term %.6f)\n",
                  out["potential"]["total"].get<double>(),
                  out["potential"]["channel"].get<double>());
    std::printf("reports written to %s_*.json\n", stem.c_str());
  }
  return 0;
}

int cmd_plan(const std::string& spec_path, const std::string& objective,
             const std::vector<std::pair<std::string, double>>& weight_overrides,
             const std::string& mode, long long tree_budget, const std::string& policy_out,
             const BudgetFlags& budgets, bool as_json) {
  spec_io::ParsedSpec spec = spec_io::load_spec(spec_path);
  apply_budgets(budgets, &spec);
  const BridgePomdp& m = spec.model;

  planner::PlannerConfig cfg;
  if (spec.planner_config) cfg = *spec.planner_config;
  if (cfg.q.class_count == 0) cfg.q = Quotient::latent_identity(m, "q");
  if (!objective.empty()) cfg.objective = planner::objective_from_name(objective);
  for (const auto& [key, value] : weight_overrides) {
    if (key == "lambda_c") cfg.weights.lambda_c = value;
    else if (key == "lambda_v") cfg.weights.lambda_v = value;
    else if (key == "lambda_o") cfg.weights.lambda_o = value;
    else if (key == "lambda_d") cfg.weights.lambda_d = value;
    else if (key == "beta") cfg.weights.beta = value;
    else if (key == "tau") cfg.weights.tau = value;
  }
  if (!mode.empty())
    cfg.mode = mode == "greedy" ? planner::PlanMode::Greedy : planner::PlanMode::Dp;
  if (tree_budget > 0) cfg.tree_budget = tree_budget;

  planner::PlanResult res = planner::plan_exact(m, cfg);

  if (!policy_out.empty()) spec_io::save_json(policy_out, spec_io::policy_json(res.policy));

  if (as_json) {
    json out;
    out["objective"] = planner::objective_name(res.objective);
    out["value"] = res.value;
    out["policy"] = spec_io::policy_json(res.policy);
    out["digest"] = planner::policy_digest(m, res.policy);
    out["success"] = res.eval.success;
    if (res.eval.success_exact) out["success_exact"] = res.eval.success_exact->str();
    out["residual_bits"] = res.eval.residual_bits;
    std::cout << out.dump(2) << "\n";
  } else {
    std::printf("objective      %s\n", planner::objective_name(res.objective).c_str());
    std::printf("value          %.6f\n", res.value);
    std::printf("policy         %s\n", planner::policy_digest(m, res.policy).c_str());
    std::printf("success        %.6f%s\n", res.eval.success,
                res.eval.success_exact ? (" = " + res.eval.success_exact->str()).c_str() : "");
    std::printf("residual bits  %.6f\n", res.eval.residual_bits);
  }
  return 0;
}

int cmd_bench(const bench::TableParams& params, const std::string& emit_dir,
              const BudgetFlags& budgets, bool as_json) {
  apply_budgets(budgets, nullptr);
  std::vector<bench::TableRow> rows = bench::run_table(params);
  if (as_json)
    std::cout << bench::table_json(rows).dump(2) << "\n";
  else
    std::cout << bench::format_table(rows);

  if (!emit_dir.empty()) {
    std::vector<bench::BenchmarkInstance> instances;
    instances.push_back(bench::make_settable_distractor(params.n, params.m));
    instances.push_back(bench::make_delayed_sensor(params.n));
    instances.push_back(bench::make_inspect_overwrite(params.n));
    instances.push_back(bench::make_quotient_transfer(params.n_coarse, params.n_fine));
    instances.push_back(bench::make_lossy_display());
    for (const auto& inst : instances)
      spec_io::save_json(emit_dir + "/" + inst.name + ".json", bench::emit_spec(inst));
    if (!as_json) std::printf("specs written to %s/\n", emit_dir.c_str());
  }
  return 0;
}

int cmd_verify(const verify::VerifyConfig& cfg, const BudgetFlags& budgets, bool as_json) {
  apply_budgets(budgets, nullptr);
  verify::VerifySummary summary = verify::run_verify(cfg);
  if (as_json) {
    json out;
    out["all_passed"] = summary.all_passed;
    json checks = json::array();
    for (const auto& o : summary.outcomes) {
      json c;
      c["check"] = o.check;
      c["trials"] = o.trials;
      c["failures"] = o.failures;
      c["worst_margin"] = o.worst_margin;
      if (!o.counterexample_path.empty()) c["counterexample"] = o.counterexample_path;
      checks.push_back(std::move(c));
    }
    out["checks"] = std::move(checks);
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << summary.text;
    for (const auto& o : summary.outcomes)
      if (!o.counterexample_path.empty())
        std::cout << "counterexample: " << o.counterexample_path << "\n";
  }
  return summary.all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact diagnostics, planning and benchmarks for finite latent-drift models"};
  app.require_subcommand(1);
  app.fallthrough();

  bool as_json = false;
  app.add_flag("--format-json,--json", as_json, "structured JSON output")->configurable(false);
  std::string format;
  app.add_option("--format", format, "output format: human or json")
      ->check(CLI::IsMember({"human", "json"}));

  BudgetFlags budgets;
  long long enum_budget = 0, reach_budget = 0;
  app.add_option("--enum-budget", enum_budget, "closed-loop enumeration budget");
  app.add_option("--reach-budget", reach_budget, "reachability work budget");

  auto* diagnose = app.add_subcommand("diagnose", "analyze a model file against a policy");
  std::string spec_path, policy_path, context_text, out_dir = ".";
  diagnose->add_option("spec", spec_path, "model file")->required();
  diagnose->add_option("--policy", policy_path, "policy file overriding the declared one");
  diagnose->add_option("--context", context_text, "context as z,x,t");
  diagnose->add_option("--out", out_dir, "directory for report files");

  auto* plan = app.add_subcommand("plan", "plan a policy and evaluate it");
  std::string plan_spec, objective, mode, policy_out;
  long long tree_budget = 0;
  double lc = -1, lv = -1, lo = -1, ld = -1, beta = -1, tau = -1;
  plan->add_option("spec", plan_spec, "model file")->required();
  plan->add_option("--objective", objective, "objective name");
  plan->add_option("--lambda-c", lc, "channel term weight");
  plan->add_option("--lambda-v", lv, "control term weight");
  plan->add_option("--lambda-o", lo, "observation term weight");
  plan->add_option("--lambda-d", ld, "distractor term weight");
  plan->add_option("--beta", beta, "shaping weight");
  plan->add_option("--tau", tau, "relevance gate threshold");
  plan->add_option("--mode", mode, "dp or greedy")->check(CLI::IsMember({"dp", "greedy"}));
  plan->add_option("--tree-budget", tree_budget, "search node budget");
  plan->add_option("--policy-out", policy_out, "write the planned policy here");

  auto* bench_cmd = app.add_subcommand("bench", "run the comparison table");
  bench::TableParams params;
  std::string emit_dir;
  bench_cmd->add_option("--n", params.n, "hidden value bits");
  bench_cmd->add_option("--m", params.m, "writable register bits");
  bench_cmd->add_option("--ncoarse", params.n_coarse, "rewarded value bits");
  bench_cmd->add_option("--nfine", params.n_fine, "unrewarded value bits");
  bench_cmd->add_option("--emit-spec", emit_dir, "write instance files to this directory");

  auto* verify_cmd = app.add_subcommand("verify", "run the randomized property suite");
  verify::VerifyConfig vcfg;
  std::vector<std::string> caps;
  verify_cmd->add_option("--seed", vcfg.seed, "base seed");
  verify_cmd->add_option("--trials", vcfg.trials, "trials per check");
  verify_cmd->add_option("--max-latents", vcfg.max_latents, "latent alphabet cap");
  verify_cmd->add_option("--max-states", vcfg.max_states, "state alphabet cap");
  verify_cmd->add_option("--max-actions", vcfg.max_actions, "action alphabet cap");
  verify_cmd->add_option("--max-horizon", vcfg.max_horizon, "horizon cap");
  verify_cmd->add_option("--caps", caps, "all four caps as L,S,A,T")->delimiter(',');
  verify_cmd->add_option("--theorems,--checks", vcfg.checks, "subset of checks to run")
      ->delimiter(',');
  verify_cmd->add_option("--dump-dir", vcfg.dump_dir, "where counterexamples are written");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (enum_budget > 0) budgets.enum_budget = enum_budget;
  if (reach_budget > 0) budgets.reach_budget = reach_budget;
  if (format == "json") as_json = true;

  try {
    if (*diagnose)
      return cmd_diagnose(spec_path, policy_path, context_text, out_dir, budgets, as_json);
    if (*plan) {
      std::vector<std::pair<std::string, double>> overrides;
      if (lc >= 0) overrides.emplace_back("lambda_c", lc);
      if (lv >= 0) overrides.emplace_back("lambda_v", lv);
      if (lo >= 0) overrides.emplace_back("lambda_o", lo);
      if (ld >= 0) overrides.emplace_back("lambda_d", ld);
      if (beta >= 0) overrides.emplace_back("beta", beta);
      if (tau >= 0) overrides.emplace_back("tau", tau);
      return cmd_plan(plan_spec, objective, overrides, mode, tree_budget, policy_out, budgets,
                      as_json);
    }
    if (*bench_cmd) return cmd_bench(params, emit_dir, budgets, as_json);
    if (*verify_cmd) {
      if (!caps.empty()) {
        if (caps.size() != 4) throw std::invalid_argument("--caps needs L,S,A,T");
        vcfg.max_latents = std::stoi(caps[0]);
        vcfg.max_states = std::stoi(caps[1]);
        vcfg.max_actions = std::stoi(caps[2]);
        vcfg.max_horizon = std::stoi(caps[3]);
      }
      return cmd_verify(vcfg, budgets, as_json);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
