#include "bpomdp/bench.hpp"

#include "bpomdp/spec_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <stdexcept>

namespace bpomdp {
namespace bench {

namespace {

Quotient obs_identity(const BridgePomdp& m, const std::string& name) {
  std::vector<int> cls(static_cast<size_t>(m.obs_count[static_cast<size_t>(m.horizon)]));
  std::iota(cls.begin(), cls.end(), 0);
  return Quotient::transcript_last_obs(m, cls, static_cast<int>(cls.size()), name);
}

void require_bits(int n, const char* what) {
  if (n < 1 || n > 24) throw std::invalid_argument(std::string(what) + " must be in 1..24");
}

}  // namespace

BenchmarkInstance make_settable_distractor(int n, int m) {
  require_bits(n, "n");
  require_bits(m, "m");
  int zs = 1 << n, ds = 1 << m;
  long long budget = env_budget("BPOMDP_ENUM_BUDGET", 1LL << 20);
  if (static_cast<long long>(zs) * (ds + 1) > budget)
    throw std::runtime_error("settable_distractor: 2^n*(2^m+1) exceeds budget " +
                             std::to_string(budget));

  BenchmarkInstance inst;
  inst.name = "settable_distractor";
  inst.params = {{"n", n}, {"m", m}};
  BridgePomdp& md = inst.model;
  md.name = "settable_distractor";
  md.horizon = 2;
  md.latent.size = zs;
  md.latent.prior = Dist::uniform(zs);
  md.state_count = {1, ds, ds};
  md.obs_count = {1, 1 + zs, ds};
  md.action_count = {ds + 1, ds + 1};
  md.init_state = [](int) { return 0; };
  md.init_obs = [](int) { return 0; };
  // Actions 0..2^m-1 write that value into the register; the last action
  // inspects: at the first step it reveals the hidden value, afterwards it
  // just echoes the register.
  md.step = [ds](int t, int z, int x, int a) -> StepOut {
    if (t == 0) return a < ds ? StepOut{a, 0} : StepOut{0, 1 + z};
    return a < ds ? StepOut{a, a} : StepOut{x, x};
  };
  md.kappa_x = [](int, int, int) { return 0; };
  md.phi_x = [](int, int, int) { return 0; };
  md.validate(false);

  Quotient q = Quotient::latent_identity(md, "Q");
  Quotient d = Quotient::state_identity(md, 2, "D");
  Quotient observed = obs_identity(md, "observed");
  inst.eval_target = q;
  inst.quotients = {q, d, observed};

  inst.bgp.objective = planner::Objective::Bgp;
  inst.bgp.q = q;
  inst.bgp.factors = {d};

  inst.baseline.objective = planner::Objective::EmpowermentUngated;
  inst.baseline.q = q;
  inst.baseline.v_obs = observed;

  check_family(inst);
  return inst;
}

BenchmarkInstance make_delayed_sensor(int n, bool enter_first) {
  require_bits(n, "n");
  int zs = 1 << n;

  BenchmarkInstance inst;
  inst.name = "delayed_sensor";
  inst.params = {{"n", n}, {"enter_first", enter_first ? 1 : 0}};
  BridgePomdp& md = inst.model;
  md.name = "delayed_sensor";
  md.horizon = 2;
  md.latent.size = zs;
  md.latent.prior = Dist::uniform(zs);
  md.state_count = {2, 2, 2};
  md.obs_count = {1, 1, 1 + zs};
  md.action_count = {2, 2};
  md.init_state = [](int) { return 0; };
  md.init_obs = [](int) { return 0; };
  int enter = enter_first ? 0 : 1;
  // The first action either enters the sensing state or stays out; both are
  // silent.  Second-step actions are all reads: the sensor fires only from
  // the sensing state.
  md.step = [enter](int t, int z, int x, int a) -> StepOut {
    if (t == 0) return a == enter ? StepOut{1, 0} : StepOut{0, 0};
    return StepOut{x, x == 1 ? 1 + z : 0};
  };
  md.channel_labels = {"base", "cstar"};
  md.kappa_x = [](int, int, int) { return 0; };
  md.phi_x = [](int, int, int x) { return x == 1 ? 1 : 0; };
  md.validate(true);

  Quotient q = Quotient::latent_identity(md, "Q");
  Quotient channel = Quotient::state_identity(md, 2, "channel");
  inst.eval_target = q;
  inst.quotients = {q, channel};

  inst.bgp.objective = planner::Objective::Bgp;
  inst.bgp.q = q;
  inst.bgp.c_star = {md.label_id("cstar")};
  inst.bgp.factors = {channel};

  inst.baseline.objective = planner::Objective::IgOneStep;
  inst.baseline.q = q;

  check_family(inst);
  return inst;
}

BenchmarkInstance make_inspect_overwrite(int n) {
  require_bits(n, "n");
  int zs = 1 << n;

  BenchmarkInstance inst;
  inst.name = "inspect_overwrite";
  inst.params = {{"n", n}};
  BridgePomdp& md = inst.model;
  md.name = "inspect_overwrite";
  md.horizon = 1;
  md.latent.size = zs;
  md.latent.prior = Dist::uniform(zs);
  md.state_count = {zs, zs};
  md.obs_count = {1, zs};
  md.action_count = {2};
  md.init_state = [](int z) { return z; };
  md.init_obs = [](int) { return 0; };
  // Action 0 overwrites the variable with 0 and echoes the new value; action
  // 1 keeps it and echoes it.  Both terminal observations are perfectly
  // predictable given the action.
  md.step = [](int, int, int x, int a) -> StepOut {
    return a == 0 ? StepOut{0, 0} : StepOut{x, x};
  };
  md.kappa_x = [](int, int, int) { return 0; };
  md.phi_x = [](int, int, int) { return 0; };
  md.validate(true);

  Quotient q = Quotient::latent_identity(md, "Q");
  Quotient v = Quotient::state_identity(md, 1, "V");
  Quotient observed = obs_identity(md, "observed");
  inst.eval_target = q;
  inst.quotients = {q, v, observed};

  inst.bgp.objective = planner::Objective::Bgp;
  inst.bgp.q = q;
  inst.bgp.v_q = v;
  inst.bgp.v_tilde = observed;

  inst.baseline.objective = planner::Objective::PredictionLoss;
  inst.baseline.q = q;
  inst.baseline.pred_target = v;

  check_family(inst);
  return inst;
}

BenchmarkInstance make_quotient_transfer(int n_coarse, int n_fine) {
  require_bits(n_coarse, "n_coarse");
  require_bits(n_fine, "n_fine");
  int zcs = 1 << n_coarse, zfs = 1 << n_fine, zs = zcs * zfs;

  BenchmarkInstance inst;
  inst.name = "quotient_transfer";
  inst.params = {{"n_coarse", n_coarse}, {"n_fine", n_fine}};
  BridgePomdp& md = inst.model;
  md.name = "quotient_transfer";
  md.horizon = 1;
  md.latent.size = zs;
  md.latent.prior = Dist::uniform(zs);
  md.state_count = {1, 1};
  md.obs_count = {1, zcs + zs};
  md.action_count = {2};
  md.init_state = [](int) { return 0; };
  md.init_obs = [](int) { return 0; };
  // Action 0 reads the coarse part only; action 1 reads the full value (its
  // observations are offset past the coarse ones).
  md.step = [n_fine, zcs](int, int z, int, int a) -> StepOut {
    return a == 0 ? StepOut{0, z >> n_fine} : StepOut{0, zcs + z};
  };
  md.kappa_x = [](int, int, int) { return 0; };
  md.phi_x = [](int, int, int) { return 0; };
  md.validate(true);

  Quotient q = Quotient::latent_identity(md, "Q");
  Quotient qc;
  qc.domain = Quotient::Domain::Latent;
  qc.class_count = zcs;
  qc.name = "Q_coarse";
  Quotient qf;
  qf.domain = Quotient::Domain::Latent;
  qf.class_count = zfs;
  qf.name = "Q_fine";
  for (int z = 0; z < zs; ++z) {
    qc.class_of.push_back(z >> n_fine);
    qf.class_of.push_back(z & (zfs - 1));
  }
  inst.eval_target = q;
  inst.quotients = {q, qc, qf};

  // Both actions identify the coarse part, so the coarse reward pays either
  // way.
  auto reward = [](int, int, int, int) { return 1.0; };
  inst.reward_json = nlohmann::json{{"constant", 1.0}};

  inst.bgp.objective = planner::Objective::Bgp;
  inst.bgp.q = q;
  inst.bgp.task_reward = reward;

  inst.baseline.objective = planner::Objective::CoarseReturn;
  inst.baseline.q = q;
  inst.baseline.task_reward = reward;

  check_family(inst);
  return inst;
}

BenchmarkInstance make_lossy_display() {
  BenchmarkInstance inst;
  inst.name = "lossy_display";
  BridgePomdp& md = inst.model;
  md.name = "lossy_display";
  md.horizon = 1;
  md.latent.size = 2;
  md.latent.prior = Dist::uniform(2);
  md.state_count = {2, 2};
  md.obs_count = {1, 3};
  md.action_count = {2};
  md.init_state = [](int z) { return z; };
  md.init_obs = [](int) { return 0; };
  // The bit persists either way; action 1 additionally displays it.
  md.step = [](int, int, int x, int a) -> StepOut {
    return a == 0 ? StepOut{x, 0} : StepOut{x, 1 + x};
  };
  md.kappa_x = [](int, int, int) { return 0; };
  md.phi_x = [](int, int, int) { return 0; };
  md.validate(true);

  Quotient q = Quotient::latent_identity(md, "Q");
  Quotient latched = Quotient::latent_trivial(md, "latched");
  Quotient v = Quotient::state_identity(md, 1, "V");
  Quotient observed = obs_identity(md, "observed");
  inst.eval_target = q;
  inst.quotients = {q, latched, v, observed};

  inst.bgp.objective = planner::Objective::Bgp;
  inst.bgp.q = latched;
  inst.bgp.v_q = v;
  inst.bgp.v_tilde = observed;

  inst.baseline.objective = planner::Objective::PredictionLoss;
  inst.baseline.q = q;
  inst.baseline.pred_target = v;

  check_family(inst);
  return inst;
}

void check_family(const BenchmarkInstance& inst) {
  const BridgePomdp& md = inst.model;
  auto fail = [&](const std::string& what) {
    throw std::logic_error(inst.name + ": " + what);
  };
  if (inst.name == "settable_distractor") {
    int ds = md.state_count[1];
    // Register writes reveal nothing and move z-independently.
    for (int a = 0; a < ds; ++a) {
      StepOut ref = md.step(0, 0, 0, a);
      if (ref.o != 0) fail("register write must be silent");
      for (int z = 1; z < md.latent.size; ++z) {
        StepOut s = md.step(0, z, 0, a);
        if (s.x != ref.x || s.o != ref.o) fail("register write depends on the hidden value");
      }
    }
    // First-step inspect separates every hidden value.
    std::set<int> seen;
    for (int z = 0; z < md.latent.size; ++z)
      if (!seen.insert(md.step(0, z, 0, ds).o).second) fail("inspect does not separate values");
    // Second-step dynamics are z-independent on a spanning sample of (x, a).
    auto check_xa = [&](int x, int a) {
      StepOut ref = md.step(1, 0, x, a);
      for (int z = 1; z < md.latent.size; ++z) {
        StepOut s = md.step(1, z, x, a);
        if (s.x != ref.x || s.o != ref.o) fail("register dynamics depend on the hidden value");
      }
    };
    for (int a = 0; a <= ds; ++a) {
      check_xa(0, a);
      check_xa(ds - 1, a);
    }
    for (int x = 0; x < ds; ++x) {
      check_xa(x, 0);
      check_xa(x, ds);
    }
  } else if (inst.name == "delayed_sensor") {
    for (int a = 0; a < 2; ++a) {
      int ref = md.step(0, 0, 0, a).o;
      for (int z = 1; z < md.latent.size; ++z)
        if (md.step(0, z, 0, a).o != ref) fail("a first action is immediately informative");
    }
    std::set<int> fired, silent;
    for (int z = 0; z < md.latent.size; ++z) {
      fired.insert(md.step(1, z, 1, 0).o);
      silent.insert(md.step(1, z, 0, 0).o);
    }
    if (static_cast<int>(fired.size()) != md.latent.size) fail("sensor does not separate values");
    if (silent.size() != 1) fail("sensor fires outside the sensing state");
  } else if (inst.name == "inspect_overwrite") {
    // Terminal value is a function of (action, observation): zero log-loss
    // for every action.
    for (int a = 0; a < md.action_count[0]; ++a) {
      std::map<int, int> value_of_obs;
      for (int z = 0; z < md.latent.size; ++z) {
        StepOut s = md.step(0, z, md.init_state(z), a);
        auto [it, fresh] = value_of_obs.emplace(s.o, s.x);
        if (!fresh && it->second != s.x) fail("terminal value not predictable from the outcome");
      }
    }
  } else if (inst.name == "lossy_display") {
    // The value persists under every action; only the display action makes
    // it visible, the other stays silent.
    std::set<int> lit, dark;
    for (int z = 0; z < md.latent.size; ++z) {
      for (int a = 0; a < md.action_count[0]; ++a)
        if (md.step(0, z, md.init_state(z), a).x != md.init_state(z))
          fail("the stored value must persist");
      lit.insert(md.step(0, z, md.init_state(z), 1).o);
      dark.insert(md.step(0, z, md.init_state(z), 0).o);
    }
    if (static_cast<int>(lit.size()) != md.latent.size) fail("display does not separate values");
    if (dark.size() != 1) fail("the silent action leaks the value");
  } else if (inst.name == "quotient_transfer") {
    const Quotient& qc = spec_io::find_quotient(inst.quotients, "Q_coarse");
    const Quotient& qf = spec_io::find_quotient(inst.quotients, "Q_fine");
    if (qc.class_count * qf.class_count != md.latent.size)
      fail("coarse and fine parts must factor the hidden value");
    for (int z = 0; z < md.latent.size; ++z)
      if (md.latent.prior.p[static_cast<size_t>(z)] != md.latent.prior.p[0])
        fail("parts are only independent under the uniform prior");
    for (int z = 0; z < md.latent.size; ++z)
      if (md.step(0, z, 0, 0).o != qc.of_latent(z)) fail("coarse read must report the coarse class");
  } else {
    fail("unknown family");
  }
}

std::vector<TableRow> run_rows(const BenchmarkInstance& inst) {
  std::vector<TableRow> rows;
  for (const planner::PlannerConfig* cfg : {&inst.baseline, &inst.bgp}) {
    auto start = std::chrono::steady_clock::now();
    planner::PlanResult res = planner::plan_exact(inst.model, *cfg);
    planner::EvalResult eval = planner::evaluate_policy(inst.model, res.policy, inst.eval_target);
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    TableRow row;
    row.family = inst.name;
    row.objective = planner::objective_name(cfg->objective);
    row.value = res.value;
    row.success = eval.success;
    row.success_exact = eval.success_exact;
    row.residual_bits = eval.residual_bits;
    row.policy = planner::policy_digest(inst.model, res.policy);
    row.seconds = seconds;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TableRow> run_table(const TableParams& params) {
  auto dist = std::async(std::launch::async, [&] {
    return run_rows(make_settable_distractor(params.n, params.m));
  });
  auto sensor = std::async(std::launch::async, [&] {
    return run_rows(make_delayed_sensor(params.n));
  });
  auto overwrite = std::async(std::launch::async, [&] {
    return run_rows(make_inspect_overwrite(params.n));
  });
  auto transfer = std::async(std::launch::async, [&] {
    return run_rows(make_quotient_transfer(params.n_coarse, params.n_fine));
  });
  std::vector<TableRow> rows;
  for (auto* fut : {&dist, &sensor, &overwrite, &transfer})
    for (auto& row : fut->get()) rows.push_back(std::move(row));
  return rows;
}

double truncated_percent(double success) {
  return std::floor(success * 1000.0 + 1e-9) / 10.0;
}

std::string format_table(const std::vector<TableRow>& rows) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-20s %-20s %9s %9s %10s %-12s %8s\n", "family", "objective",
                "success", "residual", "value", "policy", "seconds");
  out += buf;
  out += std::string(92, '-') + "\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-20s %-20s %8.1f%% %9.3f %10.4f %-12s %8.3f\n",
                  r.family.c_str(), r.objective.c_str(), truncated_percent(r.success),
                  r.residual_bits, r.value, r.policy.c_str(), r.seconds);
    out += buf;
  }
  return out;
}

nlohmann::json table_json(const std::vector<TableRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"family", r.family},
                        {"objective", r.objective},
                        {"value", r.value},
                        {"success", r.success},
                        {"success_percent_display", truncated_percent(r.success)},
                        {"residual_bits", r.residual_bits},
                        {"policy", r.policy},
                        {"seconds", r.seconds}};
    if (r.success_exact) j["success_exact"] = r.success_exact->str();
    out.push_back(std::move(j));
  }
  return out;
}

BridgePomdp permute_actions(const BridgePomdp& m, const std::vector<std::vector<int>>& perms) {
  if (static_cast<int>(perms.size()) != m.horizon)
    throw std::invalid_argument("need one action permutation per decision step");
  auto table = std::make_shared<std::vector<std::vector<int>>>(perms);
  for (int t = 0; t < m.horizon; ++t) {
    std::vector<bool> hit(static_cast<size_t>(m.action_count[static_cast<size_t>(t)]), false);
    if (static_cast<int>((*table)[static_cast<size_t>(t)].size()) !=
        m.action_count[static_cast<size_t>(t)])
      throw std::invalid_argument("permutation size mismatch at step " + std::to_string(t));
    for (int a : (*table)[static_cast<size_t>(t)]) {
      if (a < 0 || a >= m.action_count[static_cast<size_t>(t)] || hit[static_cast<size_t>(a)])
        throw std::invalid_argument("not a permutation at step " + std::to_string(t));
      hit[static_cast<size_t>(a)] = true;
    }
  }
  BridgePomdp out = m;
  out.name = m.name.empty() ? "permuted" : m.name + "_permuted";
  auto step = m.step;
  out.step = [step, table](int t, int z, int x, int a) {
    return step(t, z, x, (*table)[static_cast<size_t>(t)][static_cast<size_t>(a)]);
  };
  return out;
}

nlohmann::json emit_spec(const BenchmarkInstance& inst) {
  nlohmann::json j = spec_io::model_json(inst.model);
  j["params"] = inst.params;
  nlohmann::json qs = nlohmann::json::array();
  for (const auto& q : inst.quotients) qs.push_back(spec_io::quotient_json(q));
  j["quotients"] = std::move(qs);
  j["planner"] = spec_io::planner_json(
      inst.bgp, inst.model, inst.bgp.task_reward ? inst.reward_json : nlohmann::json());
  j["baseline"] = spec_io::planner_json(
      inst.baseline, inst.model, inst.baseline.task_reward ? inst.reward_json : nlohmann::json());
  return j;
}

}  // namespace bench
}  // namespace bpomdp
