#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bpomdp/verify.hpp"

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

using namespace bpomdp;

namespace {

verify::VerifyConfig small_config() {
  verify::VerifyConfig cfg;
  cfg.seed = 7;
  cfg.trials = 3;
  cfg.max_latents = 8;
  cfg.max_states = 6;
  cfg.max_actions = 3;
  cfg.max_horizon = 2;
  cfg.dump_dir = std::filesystem::temp_directory_path().string();
  return cfg;
}

}  // namespace

TEST_CASE("the check list is fixed, ordered, and duplicate-free") {
  auto names = verify::check_names();
  CHECK(names.size() == 13);
  CHECK(names.front() == "sandwich");
  std::set<std::string> uniq(names.begin(), names.end());
  CHECK(uniq.size() == names.size());
  for (const char* expected : {"regret_transfer", "fibers", "massey", "authority", "steering"})
    CHECK(uniq.count(expected) == 1);
}

TEST_CASE("configuration validation rejects unknown checks and bad caps") {
  verify::VerifyConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.checks = {"sandwich", "no_such_check"};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.checks.clear();
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.trials = 10;
  cfg.max_latents = 1;  // degenerate but legal: instances shrink with the cap
  CHECK_NOTHROW(cfg.validate());
  cfg.max_latents = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.max_latents = 4;
  cfg.max_horizon = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("a small full run passes every check") {
  auto cfg = small_config();
  verify::VerifySummary s = verify::run_verify(cfg);
  CHECK(s.all_passed);
  REQUIRE(s.outcomes.size() == verify::check_names().size());
  for (const auto& out : s.outcomes) {
    CHECK(out.trials == cfg.trials);
    CHECK(out.failures == 0);
    CHECK(out.worst_margin >= -1e-9);
    CHECK(out.counterexample_path.empty());
  }
  CHECK(s.text.find("result: PASS") != std::string::npos);
  CHECK(s.text.find("sandwich") != std::string::npos);
}

TEST_CASE("degenerate size caps collapse every quantity to zero and still pass") {
  auto cfg = small_config();
  cfg.max_latents = 1;
  cfg.max_states = 1;
  cfg.max_actions = 1;
  cfg.max_horizon = 1;
  verify::VerifySummary s = verify::run_verify(cfg);
  CHECK(s.all_passed);
  for (const auto& out : s.outcomes) CHECK(out.failures == 0);
}

TEST_CASE("identical configurations produce byte-identical summaries") {
  auto cfg = small_config();
  verify::VerifySummary a = verify::run_verify(cfg);
  verify::VerifySummary b = verify::run_verify(cfg);
  CHECK(a.text == b.text);
  // A different seed changes at least one reported margin.
  cfg.seed = 8;
  verify::VerifySummary c = verify::run_verify(cfg);
  CHECK(a.text != c.text);
}

TEST_CASE("a check subset runs only the requested outcomes in list order") {
  auto cfg = small_config();
  cfg.checks = {"fibers", "sandwich"};
  verify::VerifySummary s = verify::run_verify(cfg);
  REQUIRE(s.outcomes.size() == 2);
  // Execution order follows the canonical list, not the request order.
  CHECK(s.outcomes[0].check == "sandwich");
  CHECK(s.outcomes[1].check == "fibers");
  CHECK(s.all_passed);
}

TEST_CASE("negated margins fail, dump a counterexample, and replay to the same value") {
  auto cfg = small_config();
  cfg.trials = 1;
  cfg.negate = true;
  for (const std::string& name : {std::string("sandwich"), std::string("counting")}) {
    cfg.checks = {name};
    verify::VerifySummary s = verify::run_verify(cfg);
    CHECK_FALSE(s.all_passed);
    REQUIRE(s.outcomes.size() == 1);
    const auto& out = s.outcomes[0];
    CHECK(out.failures == 1);
    CHECK(out.worst_margin < -1e-9);
    REQUIRE_FALSE(out.counterexample_path.empty());
    CHECK(std::filesystem::exists(out.counterexample_path));
    // The replay reruns the original, un-negated margin.
    double replayed = verify::replay_counterexample(out.counterexample_path);
    CHECK(replayed == doctest::Approx(-out.worst_margin - 1e-6).epsilon(1e-12));
    std::remove(out.counterexample_path.c_str());
  }
}
