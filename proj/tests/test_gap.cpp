#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bpomdp/bench.hpp"
#include "bpomdp/gap.hpp"

#include <cmath>
#include <stdexcept>

using namespace bpomdp;

namespace {

// One step, full transparency: the action selects the terminal state and the
// observation announces both the hidden bit and the chosen state.
BridgePomdp transparent_toy() {
  BridgePomdp m;
  m.name = "transparent_toy";
  m.horizon = 1;
  m.latent.size = 2;
  m.latent.prior = Dist::uniform(2);
  m.state_count = {1, 2};
  m.obs_count = {1, 4};
  m.action_count = {2};
  m.init_state = [](int) { return 0; };
  m.init_obs = [](int) { return 0; };
  m.step = [](int, int z, int, int a) { return StepOut{a, 2 * z + a}; };
  m.kappa_x = [](int, int, int) { return 0; };
  m.phi_x = [](int, int, int) { return 0; };
  return m;
}

// One step, two hidden bits of start state: action 0 parks both latents at
// state 0, action 1 flips the start.  Terminal states never separate latents
// under a shared sequence.
BridgePomdp flip_toy() {
  BridgePomdp m;
  m.name = "flip_toy";
  m.horizon = 1;
  m.latent.size = 2;
  m.latent.prior = Dist::uniform(2);
  m.state_count = {2, 2};
  m.obs_count = {1, 2};
  m.action_count = {2};
  m.init_state = [](int z) { return z; };
  m.init_obs = [](int) { return 0; };
  m.step = [](int, int, int x, int a) { return a == 0 ? StepOut{x, x} : StepOut{1 - x, 1 - x}; };
  m.kappa_x = [](int, int, int) { return 0; };
  m.phi_x = [](int, int, int) { return 0; };
  return m;
}

}  // namespace

TEST_CASE("target families induce their coarsest determining partition") {
  BridgePomdp m;
  m.latent.size = 4;
  m.latent.prior = Dist::uniform(4);

  Quotient pairwise = gap::quotient_from_targets(m, {{0, 0, 1, 1}, {0, 1, 0, 1}});
  CHECK(pairwise.class_count == 4);
  CHECK(pairwise.class_of == std::vector<int>{0, 1, 2, 3});

  Quotient halves = gap::quotient_from_targets(m, {{5, 5, 9, 9}});
  CHECK(halves.class_count == 2);
  CHECK(halves.class_of == std::vector<int>{0, 0, 1, 1});

  Quotient first_appearance = gap::quotient_from_targets(m, {{7, 3, 7, 3}});
  CHECK(first_appearance.class_of == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("fully transparent control and sensing has no gap") {
  BridgePomdp m = transparent_toy();
  Policy policy = Policy::open_loop({0});
  Quotient q = Quotient::latent_identity(m, "q");
  Quotient v = Quotient::state_identity(m, 1, "v");
  Quotient vt = Quotient::transcript_last_obs(m, {0, 1, 2, 3}, 4, "vt");
  // This summary of the record keeps exactly the hidden bit, so it matches
  // the target class by class.
  Quotient w = Quotient::transcript_last_obs(m, {0, 0, 1, 1}, 2, "w");
  info::Context ctx{0, 0, 0};

  gap::BridgeGapReport r = gap::bridge_gap_report(m, policy, q, w, v, vt, ctx);
  r.validate();
  CHECK(r.delta_qw == doctest::Approx(0.0));
  CHECK(r.delta_sense == doctest::Approx(0.0));
  CHECK(r.delta_v_vtilde == doctest::Approx(0.0));
  CHECK(r.delta_act == doctest::Approx(0.0));
  CHECK(r.h_q == doctest::Approx(1.0));
  CHECK(r.i_q_transcript == doctest::Approx(1.0));
  CHECK(r.c_v == doctest::Approx(1.0));
  CHECK(r.support_v_bits == doctest::Approx(1.0));
  CHECK(r.normalized_sense_deficit == doctest::Approx(0.0));

  gap::SandwichCheck chk = gap::theorem1_check(m, policy, q, w, v, vt, ctx);
  CHECK(chk.pass);
}

TEST_CASE("coarse proxies open a quotient mismatch but keep the sandwich") {
  BridgePomdp m = transparent_toy();
  Policy policy = Policy::open_loop({0});
  Quotient q = Quotient::latent_identity(m, "q");
  // A summary that ignores the readout entirely.
  Quotient w = Quotient::transcript_last_obs(m, {0, 0, 0, 0}, 1, "w");
  Quotient v = Quotient::state_identity(m, 1, "v");
  Quotient vt = Quotient::transcript_last_obs(m, {0, 1, 2, 3}, 4, "vt");
  info::Context ctx{0, 0, 0};

  gap::BridgeGapReport r = gap::bridge_gap_report(m, policy, q, w, v, vt, ctx);
  CHECK(r.delta_qw == doctest::Approx(1.0));
  CHECK(r.h_q_given_w == doctest::Approx(1.0));
  CHECK(r.h_w_given_q == doctest::Approx(0.0));
  CHECK(r.i_w_transcript == doctest::Approx(0.0));

  gap::SandwichCheck chk = gap::theorem1_check(m, policy, q, w, v, vt, ctx);
  CHECK(chk.pass);
  CHECK(chk.compression_diff == doctest::Approx(1.0));
  CHECK(chk.compression_upper == doctest::Approx(1.0));
  CHECK(chk.compression_upper_slack == doctest::Approx(0.0));
}

TEST_CASE("register writes leave the full hidden value ambiguous") {
  bench::BenchmarkInstance inst = bench::make_settable_distractor(4, 8);
  const BridgePomdp& m = inst.model;
  Policy writes = Policy::open_loop({0, 0});
  Quotient q = inst.eval_target;
  Quotient v = Quotient::state_identity(m, m.horizon, "v");
  std::vector<int> cls(static_cast<size_t>(m.obs_count[2]));
  for (size_t i = 0; i < cls.size(); ++i) cls[i] = static_cast<int>(i);
  Quotient vt = Quotient::transcript_last_obs(m, cls, static_cast<int>(cls.size()), "vt");
  info::Context ctx{0, m.init_state(0), 0};

  gap::BridgeGapReport r = gap::bridge_gap_report(m, writes, q, vt, v, vt, ctx);
  r.validate();
  CHECK(r.delta_sense == doctest::Approx(4.0));
  CHECK(r.normalized_sense_deficit == doctest::Approx(1.0));
  CHECK(gap::theorem1_check(m, writes, q, vt, v, vt, ctx).pass);
}

TEST_CASE("objective oscillation bounds the transferred regret") {
  gap::ObjectiveTable t;
  t.options = {"u0", "u1"};
  t.objectives = {"Ji", "Jj"};
  t.values = {{1.0, 0.9}, {0.2, 1.0}};
  t.validate();

  CHECK(gap::oscillation(t, "Ji", "Jj") == doctest::Approx(0.9));

  gap::RegretTransfer r = gap::regret_transfer_check(t, "Ji", "Jj", 0.1);
  CHECK(r.worst_regret == doctest::Approx(0.8));
  CHECK(r.worst_option == "u0");
  CHECK(r.bound == doctest::Approx(1.0));
  CHECK(r.within_bound);
  CHECK_FALSE(r.tight);

  // Zero tolerance keeps only the exact optimum u1, whose regret under the
  // other objective is the 0.1 it leaves on the table.
  gap::RegretTransfer strict = gap::regret_transfer_check(t, "Jj", "Ji", 0.0);
  CHECK(strict.worst_regret == doctest::Approx(0.1));
}

TEST_CASE("the two-option construction attains its bound exactly") {
  gap::ObjectiveTable t = gap::tightness_construction(0.25, 0.5);
  gap::RegretTransfer r = gap::regret_transfer_check(t, "Ji", "Jj", 0.25);
  CHECK(r.worst_regret == doctest::Approx(0.75));
  CHECK(r.tight);
  CHECK(r.within_bound);

  gap::ObjectiveTable zero = gap::tightness_construction(0.0, 0.0);
  CHECK(gap::regret_transfer_check(zero, "Ji", "Jj", 0.0).worst_regret ==
        doctest::Approx(0.0));

  CHECK_THROWS_AS(gap::tightness_construction(0.7, 0.7), std::invalid_argument);
}

TEST_CASE("missing bits count exactly what one extra readout would close") {
  bench::BenchmarkInstance inst = bench::make_settable_distractor(2, 2);
  const BridgePomdp& m = inst.model;
  Quotient q = inst.eval_target;

  Policy writes = Policy::open_loop({0, 0});
  gap::MissingBits blind = gap::missing_sensing_bits(m, writes, q, rollout(m, writes, 0).prefix(1));
  CHECK(blind.bits == doctest::Approx(2.0));
  CHECK(blind.witness_ok);
  CHECK(blind.witness_entropy == doctest::Approx(2.0));
  CHECK(blind.witness_cond_entropy == doctest::Approx(0.0));

  int inspect = m.action_count[0] - 1;
  Policy probing = Policy::open_loop({inspect, 0});
  gap::MissingBits solved =
      gap::missing_sensing_bits(m, probing, q, rollout(m, probing, 0).prefix(1));
  CHECK(solved.bits == doctest::Approx(0.0));
  CHECK(solved.witness_ok);
}

TEST_CASE("refining a readout never loses information about the latent") {
  CHECK(gap::blackwell_refines({0, 1, 2, 3}, {0, 0, 1, 1}, {0, 1, 2, 3}));
  CHECK_FALSE(gap::blackwell_refines({0, 0, 1, 1}, {0, 1, 0, 1}, {0, 1, 2, 3}));
  // Only the support matters.
  CHECK(gap::blackwell_refines({0, 0, 9, 9}, {1, 1, 5, 5}, {0, 2}));

  gap::RefinementCheck fine = gap::refinement_check(Dist::uniform(4), {0, 1, 2, 3}, {0, 0, 1, 1});
  CHECK(fine.refines);
  CHECK(fine.monotone_ok);
  CHECK(fine.i_fine == doctest::Approx(2.0));
  CHECK(fine.i_coarse == doctest::Approx(1.0));

  Dist skew(std::vector<double>{0.5, 0.25, 0.125, 0.125});
  gap::RefinementCheck skewed = gap::refinement_check(skew, {0, 1, 2, 3}, {0, 1, 1, 1});
  CHECK(skewed.refines);
  CHECK(skewed.i_fine == doctest::Approx(1.75));
  CHECK(skewed.i_coarse == doctest::Approx(1.0));

  gap::RefinementCheck not_ref = gap::refinement_check(Dist::uniform(4), {0, 0, 1, 1}, {0, 1, 0, 1});
  CHECK_FALSE(not_ref.refines);
}

TEST_CASE("copying the value identifies it, overwriting collapses it") {
  bench::BenchmarkInstance inst = bench::make_inspect_overwrite(1);
  const BridgePomdp& m = inst.model;
  Quotient q = inst.eval_target;
  Quotient v = Quotient::state_identity(m, 1, "v");

  auto memory_of = [&](const Policy& p) {
    auto rows = enumerate_closed_loop(m, p);
    info::TranscriptIndex idx = info::index_transcripts(rows);
    Quotient mq;
    mq.domain = Quotient::Domain::Transcript;
    mq.name = "memory";
    mq.class_count = static_cast<int>(idx.encodings.size());
    mq.transcript_class = idx.ids;
    return mq;
  };

  Policy copy = Policy::open_loop({1});
  gap::AbsorptionReport kept = gap::absorption_report(m, copy, q, v, memory_of(copy));
  CHECK(kept.identification);
  CHECK_FALSE(kept.overwrite_collapse);
  CHECK(kept.h_q_given_v == doctest::Approx(0.0));
  CHECK(kept.h_q_given_m == doctest::Approx(0.0));
  CHECK(kept.bound_applicable);
  CHECK(kept.bound_ok);
  CHECK(kept.memory_count_ok);
  CHECK(kept.memory_class_count == 2);
  CHECK(kept.memory_lower_bound == doctest::Approx(1.0));

  Policy erase = Policy::open_loop({0});
  gap::AbsorptionReport lost = gap::absorption_report(m, erase, q, v, memory_of(erase));
  CHECK_FALSE(lost.identification);
  CHECK(lost.overwrite_collapse);
  CHECK(lost.h_q_given_v == doctest::Approx(1.0));
  CHECK(lost.h_q_given_m == doctest::Approx(1.0));
  CHECK(lost.h_v_given_m == doctest::Approx(0.0));
  CHECK(lost.bound_applicable);
  CHECK(lost.bound_ok);
  CHECK(lost.memory_class_count == 1);

  gap::AbsorptionReport declared = gap::absorption_report(m, erase, q, v, memory_of(erase), true);
  CHECK(declared.omission);
}

TEST_CASE("influence is conserved and capped when a mediator carries it") {
  info::JointTable good;
  good.axes = {{"A1", 2}, {"O1", 2}, {"B", 2}};
  good.add({0, 0, 0}, 0.5);
  good.add({1, 1, 1}, 0.5);
  gap::DiBudgetCheck chk = gap::di_budget_check(good, 1.0);
  CHECK(chk.pass);
  CHECK(chk.conservation_ok);
  CHECK(chk.budget_ok);
  CHECK(chk.outward + chk.inward == doctest::Approx(chk.mutual));
  CHECK(chk.h_b == doctest::Approx(1.0));
  CHECK(chk.mutual == doctest::Approx(1.0));

  info::JointTable leaky;
  leaky.axes = {{"A1", 2}, {"O1", 2}, {"B", 1}};
  leaky.add({0, 0, 0}, 0.5);
  leaky.add({1, 1, 0}, 0.5);
  CHECK_THROWS_AS(gap::di_budget_check(leaky, 1.0), std::invalid_argument);

  info::JointTable tight_budget;
  tight_budget.axes = {{"A1", 2}, {"O1", 2}, {"B", 2}};
  tight_budget.add({0, 0, 0}, 0.5);
  tight_budget.add({1, 1, 1}, 0.5);
  CHECK_FALSE(gap::di_budget_check(tight_budget, 0.5).budget_ok);
}

TEST_CASE("steering authority distinguishes reach from forcing") {
  bench::BenchmarkInstance inst = bench::make_inspect_overwrite(1);
  gap::AuthorityReport keepable = gap::authority_report(inst.model, 1);
  CHECK_FALSE(keepable.state_conditioned);
  CHECK_FALSE(keepable.strong_overwrite);
  REQUIRE(keepable.targets.size() == 2);
  REQUIRE(keepable.targets[0].strong_sequence.has_value());
  CHECK(*keepable.targets[0].strong_sequence == std::vector<int>{0});
  CHECK_FALSE(keepable.targets[1].strong_sequence.has_value());
  CHECK_FALSE(keepable.targets[1].per_latent_sequence[0].has_value());
  REQUIRE(keepable.targets[1].per_latent_sequence[1].has_value());
  CHECK(*keepable.targets[1].per_latent_sequence[1] == std::vector<int>{1});
  CHECK(keepable.ambiguous_pairs.empty());

  gap::AuthorityReport flipping = gap::authority_report(flip_toy(), 1);
  CHECK(flipping.state_conditioned);
  CHECK_FALSE(flipping.strong_overwrite);
  REQUIRE(flipping.ambiguous_pairs.size() == 1);
  CHECK(flipping.ambiguous_pairs[0] == std::pair<int, int>{0, 1});

  CHECK_THROWS_AS(gap::authority_report(flip_toy(), 5), std::invalid_argument);
}
