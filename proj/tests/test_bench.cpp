#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bpomdp/bench.hpp"
#include "bpomdp/planner.hpp"
#include "bpomdp/spec_io.hpp"

#include <cmath>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

using namespace bpomdp;

namespace {

constexpr double kTol = 1e-9;

// Index of a row by family name and objective name; throws if absent.
const bench::TableRow& row_of(const std::vector<bench::TableRow>& rows, const std::string& family,
                              const std::string& objective) {
  for (const auto& r : rows)
    if (r.family == family && r.objective == objective) return r;
  throw std::logic_error("missing row " + family + "/" + objective);
}

}  // namespace

TEST_CASE("family constructors build valid instances with the declared shapes") {
  auto dist = bench::make_settable_distractor(2, 3);
  CHECK(dist.model.horizon == 2);
  CHECK(dist.model.latent.size == 4);
  CHECK(dist.model.state_count[1] == 8);
  CHECK(dist.model.action_count[0] == 9);
  CHECK(dist.params.at("n") == 2);
  CHECK(dist.params.at("m") == 3);
  CHECK(dist.bgp.objective == planner::Objective::Bgp);
  CHECK(dist.baseline.objective == planner::Objective::EmpowermentUngated);
  CHECK(dist.baseline.v_obs.has_value());

  auto sensor = bench::make_delayed_sensor(3);
  CHECK(sensor.model.latent.size == 8);
  CHECK(sensor.model.obs_count[2] == 9);
  CHECK(sensor.bgp.c_star == std::vector<int>{sensor.model.label_id("cstar")});
  CHECK(sensor.baseline.objective == planner::Objective::IgOneStep);

  auto swapped = bench::make_delayed_sensor(3, true);
  // The entering action moves to the low index; the dynamics must agree up to
  // that relabeling.
  CHECK(swapped.model.step(0, 0, 0, 0).x == 1);
  CHECK(sensor.model.step(0, 0, 0, 0).x == 0);

  auto overwrite = bench::make_inspect_overwrite(2);
  CHECK(overwrite.model.horizon == 1);
  CHECK(overwrite.model.latent.size == 4);
  CHECK(overwrite.baseline.objective == planner::Objective::PredictionLoss);
  CHECK(overwrite.baseline.pred_target.has_value());

  auto transfer = bench::make_quotient_transfer(2, 3);
  CHECK(transfer.model.latent.size == 32);
  CHECK(transfer.model.obs_count[1] == 4 + 32);
  CHECK(transfer.baseline.objective == planner::Objective::CoarseReturn);
  CHECK(static_cast<bool>(transfer.baseline.task_reward));

  auto lossy = bench::make_lossy_display();
  CHECK(lossy.model.latent.size == 2);
  CHECK(lossy.model.obs_count[1] == 3);
  CHECK(lossy.bgp.q.class_count == 1);  // prediction pressure, not latent ambiguity

  CHECK_THROWS_AS(bench::make_settable_distractor(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(bench::make_delayed_sensor(25), std::invalid_argument);
}

TEST_CASE("an unknown family name fails the structural check") {
  auto inst = bench::make_inspect_overwrite(1);
  inst.name = "no_such_family";
  CHECK_THROWS_AS(bench::check_family(inst), std::logic_error);
}

TEST_CASE("default table reproduces the expected eight cells exactly") {
  auto rows = bench::run_table({});
  REQUIRE(rows.size() == 8);

  // Fixed row order: family blocks with the misaligned objective first.
  CHECK(rows[0].family == "settable_distractor");
  CHECK(rows[0].objective == "empowerment_ungated");
  CHECK(rows[1].objective == "bgp");
  CHECK(rows[2].family == "delayed_sensor");
  CHECK(rows[4].family == "inspect_overwrite");
  CHECK(rows[6].family == "quotient_transfer");

  struct Cell {
    const char* family;
    const char* objective;
    const char* success;
    double residual;
  };
  const Cell expected[] = {
      {"settable_distractor", "empowerment_ungated", "1/16", 4.0},
      {"settable_distractor", "bgp", "1/1", 0.0},
      {"delayed_sensor", "ig_one_step", "1/16", 4.0},
      {"delayed_sensor", "bgp", "1/1", 0.0},
      {"inspect_overwrite", "prediction_loss", "1/16", 4.0},
      {"inspect_overwrite", "bgp", "1/1", 0.0},
      {"quotient_transfer", "coarse_return", "1/4", 2.0},
      {"quotient_transfer", "bgp", "1/1", 0.0},
  };
  for (const auto& cell : expected) {
    const auto& r = row_of(rows, cell.family, cell.objective);
    REQUIRE(r.success_exact.has_value());
    CHECK(r.success_exact->str() == cell.success);
    CHECK(r.residual_bits == doctest::Approx(cell.residual).epsilon(kTol));
    CHECK(r.seconds >= 0.0);
  }
  // Raw empowerment of the register equals its width in bits.
  CHECK(row_of(rows, "settable_distractor", "empowerment_ungated").value ==
        doctest::Approx(8.0).epsilon(kTol));
  // The coarse reward is earned by both actions, so its return is full.
  CHECK(row_of(rows, "quotient_transfer", "coarse_return").value ==
        doctest::Approx(1.0).epsilon(kTol));
}

TEST_CASE("misalignment scales with the hidden width while the gap objective stays exact") {
  for (int n = 1; n <= 3; ++n) {
    const double expect = std::ldexp(1.0, -n);
    for (int fam = 0; fam < 3; ++fam) {
      bench::BenchmarkInstance inst = fam == 0   ? bench::make_settable_distractor(n, 2)
                                      : fam == 1 ? bench::make_delayed_sensor(n)
                                                 : bench::make_inspect_overwrite(n);
      auto rows = bench::run_rows(inst);
      REQUIRE(rows.size() == 2);
      CHECK(rows[0].success == doctest::Approx(expect).epsilon(kTol));
      CHECK(rows[0].residual_bits == doctest::Approx(double(n)).epsilon(kTol));
      CHECK(rows[1].success == doctest::Approx(1.0).epsilon(kTol));
      CHECK(rows[1].residual_bits == doctest::Approx(0.0).epsilon(kTol));
      REQUIRE(rows[1].success_exact.has_value());
      CHECK(rows[1].success_exact->str() == "1/1");
    }
  }
}

TEST_CASE("register empowerment grows linearly in the register width") {
  for (int m = 1; m <= 4; ++m) {
    auto inst = bench::make_settable_distractor(1, m);
    planner::PlanResult res = planner::plan_exact(inst.model, inst.baseline);
    CHECK(res.value == doctest::Approx(double(m)).epsilon(kTol));
  }
}

TEST_CASE("display percentages truncate rather than round") {
  CHECK(bench::truncated_percent(0.0625) == doctest::Approx(6.2));
  CHECK(bench::truncated_percent(0.25) == doctest::Approx(25.0));
  CHECK(bench::truncated_percent(1.0) == doctest::Approx(100.0));
  CHECK(bench::truncated_percent(1.0 / 3.0) == doctest::Approx(33.3));
  CHECK(bench::truncated_percent(0.0) == doctest::Approx(0.0));
}

TEST_CASE("table renderers carry every row and the exact fractions") {
  auto rows = bench::run_rows(bench::make_inspect_overwrite(1));
  std::string text = bench::format_table(rows);
  CHECK(text.find("family") != std::string::npos);
  CHECK(text.find("inspect_overwrite") != std::string::npos);
  CHECK(text.find("prediction_loss") != std::string::npos);
  CHECK(text.find("100.0%") != std::string::npos);
  CHECK(text.find("50.0%") != std::string::npos);

  nlohmann::json j = bench::table_json(rows);
  REQUIRE(j.size() == 2);
  CHECK(j[0]["family"] == "inspect_overwrite");
  CHECK(j[0]["success_exact"] == "1/2");
  CHECK(j[1]["success_exact"] == "1/1");
  CHECK(j[0]["success_percent_display"] == doctest::Approx(50.0));
}

TEST_CASE("relabeling actions leaves exhaustive planning invariant but flips greedy ties") {
  auto inst = bench::make_delayed_sensor(2);
  BridgePomdp permuted =
      bench::permute_actions(inst.model, {{1, 0}, {0, 1}});
  CHECK(permuted.name == "delayed_sensor_permuted");

  // The full-horizon objective optimizes over all policies, so its value and
  // outcome cannot depend on how actions are numbered.
  planner::PlanResult base = planner::plan_exact(inst.model, inst.bgp);
  planner::PlanResult perm = planner::plan_exact(permuted, inst.bgp);
  CHECK(perm.value == doctest::Approx(base.value).epsilon(kTol));
  planner::EvalResult eb = planner::evaluate_policy(inst.model, base.policy, inst.eval_target);
  planner::EvalResult ep = planner::evaluate_policy(permuted, perm.policy, inst.eval_target);
  CHECK(ep.success == doctest::Approx(eb.success).epsilon(kTol));
  CHECK(ep.residual_bits == doctest::Approx(eb.residual_bits).epsilon(kTol));

  // The myopic baseline sees two equally mute first actions and breaks the
  // tie by index, so a pure relabeling swings it between never sensing and
  // sensing by accident.
  planner::EvalResult mb = planner::evaluate_policy(
      inst.model, planner::plan_exact(inst.model, inst.baseline).policy, inst.eval_target);
  planner::EvalResult mp = planner::evaluate_policy(
      permuted, planner::plan_exact(permuted, inst.baseline).policy, inst.eval_target);
  CHECK(mb.success == doctest::Approx(0.25).epsilon(kTol));
  CHECK(mp.success == doctest::Approx(1.0).epsilon(kTol));

  CHECK_THROWS_AS(bench::permute_actions(inst.model, {{1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(bench::permute_actions(inst.model, {{1, 1}, {0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(bench::permute_actions(inst.model, {{1, 0}, {0, 2}}), std::invalid_argument);
}

TEST_CASE("emitted instance files parse back and plan to the same values") {
  for (int which = 0; which < 3; ++which) {
    bench::BenchmarkInstance inst = which == 0   ? bench::make_inspect_overwrite(1)
                                    : which == 1 ? bench::make_quotient_transfer(1, 1)
                                                 : bench::make_delayed_sensor(1);
    nlohmann::json j = bench::emit_spec(inst);
    spec_io::ParsedSpec parsed = spec_io::parse_spec(j);
    CHECK(parsed.model.horizon == inst.model.horizon);
    CHECK(parsed.model.latent.size == inst.model.latent.size);
    CHECK(parsed.quotients.size() == inst.quotients.size());
    REQUIRE(parsed.planner_config.has_value());
    REQUIRE(parsed.baseline_config.has_value());

    planner::PlanResult bgp0 = planner::plan_exact(inst.model, inst.bgp);
    planner::PlanResult bgp1 = planner::plan_exact(parsed.model, *parsed.planner_config);
    CHECK(bgp1.value == doctest::Approx(bgp0.value).epsilon(kTol));
    planner::PlanResult base0 = planner::plan_exact(inst.model, inst.baseline);
    planner::PlanResult base1 = planner::plan_exact(parsed.model, *parsed.baseline_config);
    CHECK(base1.value == doctest::Approx(base0.value).epsilon(kTol));
    CHECK(planner::policy_digest(parsed.model, bgp1.policy) ==
          planner::policy_digest(inst.model, bgp0.policy));
  }
}

TEST_CASE("the display instance is steered by the observation-loss weight alone") {
  auto inst = bench::make_lossy_display();

  planner::PlanResult lit = planner::plan_exact(inst.model, inst.bgp);
  CHECK(planner::policy_digest(inst.model, lit.policy) == "[1]");
  planner::EvalResult el = planner::evaluate_policy(inst.model, lit.policy, inst.eval_target);
  CHECK(el.success == doctest::Approx(1.0).epsilon(kTol));
  CHECK(el.residual_bits == doctest::Approx(0.0).epsilon(kTol));

  planner::PlannerConfig muted = inst.bgp;
  muted.weights.lambda_o = 0.0;
  planner::PlanResult dark = planner::plan_exact(inst.model, muted);
  CHECK(planner::policy_digest(inst.model, dark.policy) == "[0]");
  planner::EvalResult ed = planner::evaluate_policy(inst.model, dark.policy, inst.eval_target);
  CHECK(ed.success == doctest::Approx(0.5).epsilon(kTol));
  CHECK(ed.residual_bits == doctest::Approx(1.0).epsilon(kTol));
}

TEST_CASE("oversized instances are refused up front by the enumeration budget") {
  REQUIRE(setenv("BPOMDP_ENUM_BUDGET", "100", 1) == 0);
  CHECK_THROWS_AS(bench::make_settable_distractor(4, 8), std::runtime_error);
  REQUIRE(unsetenv("BPOMDP_ENUM_BUDGET") == 0);
  CHECK_NOTHROW(bench::make_settable_distractor(1, 1));
}
