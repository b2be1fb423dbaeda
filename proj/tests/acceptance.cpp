// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rldx/cli.hpp"
#include "rldx/engine.hpp"
#include "rldx/error.hpp"
#include "rldx/rl_checks.hpp"
#include "rldx/stats.hpp"
#include "rldx/testbed.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace rldx;
using namespace rldx::test;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream line;
  line << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << std::fixed;
  line.precision(1);
  line << secs << "s]";
  std::cout << line.str() << std::endl;
  failures += o.pass ? 0 : 1;
}

// Streams a testbed run straight into a session.
Report diagnose(const testbed::FaultSet& faults, std::uint64_t seed) {
  testbed::TrainingOptions o;
  o.faults = faults;
  o.seed = seed;
  Session s;
  testbed::run_training(o, [&s](const TraceEvent& e) { s.ingest(e); });
  return s.finalize();
}

std::set<std::string> ids_of(const Report& r) {
  std::set<std::string> out;
  for (const auto& d : r.diagnoses) out.insert(d.diagnostic_id);
  return out;
}

constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};

Outcome fault_matrix() {
  const auto t0 = std::chrono::steady_clock::now();
  int detected = 0;
  std::ostringstream detail;
  for (auto f : testbed::kAllFaults) {
    const auto expected = testbed::expected_diagnoses({f});
    int hits = 0;
    for (auto seed : kSeeds) {
      const auto got = ids_of(diagnose({f}, seed));
      hits += std::includes(got.begin(), got.end(), expected.begin(), expected.end()) ? 1 : 0;
    }
    detected += hits >= 4 ? 1 : 0;
    detail << testbed::fault_name(f) << "=" << hits << "/5 ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail << "classes " << detected << "/9, " << static_cast<int>(secs) << "s";
  return {detected >= 8 && secs < 120.0, detail.str()};
}

Outcome false_positive_budget() {
  const std::set<std::string> fault_ids{"NN.W3", "NN.B1", "AGT.d1", "AGT.d3",
                                        "EXP.d1", "EXP.d2", "QTR.d1"};
  int critical_seeds = 0;
  int fault_id_seeds = 0;
  std::set<std::string> other;
  for (auto seed : kSeeds) {
    const Report r = diagnose({}, seed);
    bool critical = false, fault_id = false;
    for (const auto& d : r.diagnoses) {
      critical |= d.severity == Severity::Critical;
      fault_id |= fault_ids.count(d.diagnostic_id) > 0;
      other.insert(d.diagnostic_id);
    }
    critical_seeds += critical ? 1 : 0;
    fault_id_seeds += fault_id ? 1 : 0;
  }
  std::ostringstream detail;
  detail << "critical in " << critical_seeds << "/5 seeds, fault-specific ids in " << fault_id_seeds
         << "/5 seeds; ids seen:";
  for (const auto& id : other) detail << ' ' << id;
  if (other.empty()) detail << " none";
  return {critical_seeds == 0 && fault_id_seeds == 0, detail.str()};
}

Outcome overhead() {
  cli::BenchOptions o;
  const auto r = cli::run_bench(o);
  std::ostringstream detail;
  detail.precision(2);
  detail << std::fixed << "mean overhead " << r.mean_overhead << "% (limit 25%), disabled "
         << r.mean_disabled << "% within noise band +/-" << r.noise_band << "%, " << r.overhead_pct.size()
         << " repeats";
  const bool disabled_ok = std::fabs(r.mean_disabled) <= r.noise_band;
  return {r.mean_overhead <= 25.0 && disabled_ok, detail.str()};
}

Outcome statistics_oracles() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double fit_err = 0, ent_err = 0, kl_err = 0, rmse_err = 0, curv_err = 0;
  bool kl_nonneg = true;
  for (int t = 0; t < 1000; ++t) {
    Series s;
    const int n = 2 + t % 500;
    const double k = 0.01 * u(rng);
    for (int i = 0; i < n; ++i) s.push_back(i * 2 + t % 3, k * i + u(rng));
    const auto got = linear_fit(s);
    const auto want = normal_equations(s);
    fit_err = std::max({fit_err, std::fabs(got.slope - want.slope),
                        std::fabs(got.intercept - want.intercept),
                        std::fabs(got.rmse_residual - want.rmse_residual)});

    const auto p = random_simplex(rng, 2 + t % 9);
    const auto q = random_simplex(rng, p.size());
    ent_err = std::max(ent_err, std::fabs(normalized_entropy(p) - entropy_oracle(p)));
    const double kl = kl_divergence(p, q);
    kl_err = std::max(kl_err, std::fabs(kl - kl_oracle(p, q)));
    kl_nonneg &= kl >= 0.0;

    std::vector<double> a(1 + t % 40), b(a.size()), c(3 + t % 40);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    for (auto& x : c) x = u(rng);
    rmse_err = std::max(rmse_err, std::fabs(rmse(a, b) - rmse_oracle(a, b)));
    curv_err = std::max(curv_err, std::fabs(max_abs_second_derivative(Series::from_values(c), false) -
                                            curvature_oracle(c)));
  }
  std::ostringstream detail;
  detail << "max error linear_fit " << fit_err << ", entropy " << ent_err << ", KL " << kl_err
         << ", RMSE " << rmse_err << ", second derivative " << curv_err
         << (kl_nonneg ? ", KL >= 0 on 1000 pairs" : ", negative KL seen");
  const bool ok = fit_err <= 1e-9 && ent_err <= 1e-12 && kl_err <= 1e-12 && rmse_err <= 1e-12 &&
                  curv_err <= 1e-12 && kl_nonneg;
  return {ok, detail.str()};
}

Outcome threshold_boundaries() {
  // Each entry: (fires just past the threshold, stays quiet just inside it).
  std::map<std::string, std::pair<bool, bool>> cases;
  const double d = 1e-6;

  const std::vector<AgentSnapshot> snaps{snap(1, 1, 2), snap(2, 3, 2)};
  auto kl = [&](double v) {
    Series k;
    k.push_back(2, v);
    return has(check_agent(snaps, {}, k, make_meta(), {}), "AGT.d4");
  };
  cases["KL 0.1 (AGT.d4, >=)"] = {kl(0.1 + d) && kl(0.1), !kl(0.1 - d)};

  auto curv = [](double c) { return has(check_exploration(curvature_series(c), {}), "EXP.d2"); };
  cases["curvature 0.22 (EXP.d2, >)"] = {curv(0.22 + d), !curv(0.22 - d)};

  const Series good = linear(10, 0.8, 0.0);
  auto slope = [&](double s) {
    return has(check_reward_std_late(linear(10, 0.1, s), good, {}), "RWD.d2");
  };
  cases["slope 0.25 (RWD.d2, |s| >)"] = {slope(0.25 + d) && slope(-0.25 - d),
                                         !slope(0.25 - d) && !slope(-0.25 + d)};

  auto rmse_low = [](double r) { return has(check_reward_std_early(spike_with_rmse(r), {}), "RWD.d1"); };
  auto rmse_high = [](double r) {
    return has(check_entropy_fluctuation(spike_with_rmse(r), 7, {}), "ACN.d4");
  };
  cases["RMSE 0.1 (RWD.d1, <)"] = {rmse_low(0.1 - d), !rmse_low(0.1 + d)};
  cases["RMSE 0.1 (ACN.d4, >)"] = {rmse_high(0.1 + d), !rmse_high(0.1 - d)};

  auto stagnant = [](double s) { return has(check_entropy_early(linear(10, 0.5, s), {}), "ACN.d2"); };
  cases["stagnation 1e-3 (ACN.d2, |s| <)"] = {stagnant(1e-3 - d) && stagnant(-1e-3 + d),
                                              !stagnant(1e-3 + d) && !stagnant(-1e-3 - d)};

  auto repeats = [](std::size_t n) {
    return has(check_action_repeats(
                   std::vector{episode(3, Stage::Early, std::vector<std::int64_t>(n, 1))}, nullptr, {}),
               "ACN.d5");
  };
  auto cycle = [](int n) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i) s.push_back(i % 2);
    return has(check_states(std::vector{episode(95, Stage::Late, {}, cells(s))}, nullptr, {}), "STT.d2");
  };
  cases["repeats 10 (ACN.d5, >)"] = {repeats(11), !repeats(10)};
  cases["repeats 10 (STT.d2, >)"] = {cycle(11), !cycle(10)};

  auto eu = [](double v) {
    Series s;
    s.push_back(400, 0.1);
    s.push_back(410, v);
    return has(check_uncertainty(s, {}), "ACN.d7");
  };
  cases["EU 0.5 (ACN.d7, >)"] = {eu(0.5 + d), !eu(0.5) && !eu(0.5 - d)};

  auto bound = [](double x) {
    return has(check_states(std::vector{episode(0, Stage::Mid, {}, {{x}})}, nullptr, {}), "STT.d1");
  };
  cases["bounds [-10,10] (STT.d1, closed)"] = {bound(10 + d) && bound(-10 - d),
                                               !bound(10) && !bound(-10) && !bound(10 - d) &&
                                                   !bound(-10 + d)};

  std::ostringstream detail;
  int ok = 0;
  for (const auto& [name, r] : cases) {
    const bool pass = r.first && r.second;
    ok += pass ? 1 : 0;
    if (!pass) detail << "broken: " << name << "; ";
  }
  detail << ok << "/" << cases.size() << " threshold pairs flip at the documented side";
  return {ok == static_cast<int>(cases.size()), detail.str()};
}

Outcome q_targets() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-100, 100);
  double worst = 0;
  for (double gamma : {0.0, 0.99, 1.0}) {
    for (int i = 0; i < 1000; ++i) {
      const Transition t{u(rng), i % 2 == 1, u(rng)};
      const long double want = static_cast<long double>(t.reward) +
                               (t.done ? 0.0L : static_cast<long double>(gamma) * t.max_next_q);
      worst = std::max(worst, std::fabs(q_target_reference(t, gamma) - static_cast<double>(want)));
    }
  }
  auto meta = make_meta();
  meta.discount = 0.99;
  event::QTargetBatch right, wrong;
  std::uniform_real_distribution<double> small(-1, 1);
  for (int i = 0; i < 32; ++i) {
    const Transition t{small(rng), i % 5 == 0, small(rng)};
    right.transitions.push_back(t);
    wrong.transitions.push_back(t);
    right.predicted_targets.push_back(q_target_reference(t, 0.99));
    wrong.predicted_targets.push_back(q_target_reference(t, 1.0));
  }
  const bool quiet = check_qtargets(right, meta, {}).diagnoses.empty();
  const bool fires = has(check_qtargets(wrong, meta, {}), "QTR.d1");
  std::ostringstream detail;
  detail << "reference max error " << worst << " over 3000 transitions; gamma 0.99 "
         << (quiet ? "clean" : "FIRES") << ", gamma 1.0 " << (fires ? "fires QTR.d1" : "silent");
  return {worst <= 1e-9 && quiet && fires, detail.str()};
}

int run_cli(const std::string& args) {
  const std::string cmd = "'" + std::string(RLDX_CLI_PATH) + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("rldx_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto p = [&](const char* name) { return "'" + (dir / name).string() + "'"; };
  std::ostringstream detail;
  bool ok = true;
  for (const char* fault : {"", "F4", "F5"}) {
    const std::string args = std::string(*fault ? " --fault " : "") + fault;
    if (run_cli("inject --seed 3 --out " + p("t.jsonl") + args) != 0) {
      fs::remove_all(dir);
      return {false, "inject failed"};
    }
    const int c1 = run_cli("check --report " + p("c1.json") + " " + p("t.jsonl"));
    const int c2 = run_cli("check --report " + p("c2.json") + " " + p("t.jsonl"));
    const int w = run_cli("watch --report " + p("w.json") + " - < " + p("t.jsonl"));
    const std::string a = read_file((dir / "c1.json").string());
    const bool same = !a.empty() && a == read_file((dir / "c2.json").string()) &&
                      a == read_file((dir / "w.json").string()) && c1 == c2 && c1 == w;
    ok &= same;
    detail << (*fault ? fault : "clean") << (same ? " identical" : " DIFFERS") << " (exit " << c1
           << "); ";
  }
  fs::remove_all(dir);
  detail << "check x2 and watch on stdin";
  return {ok, detail.str()};
}

Outcome staging() {
  int checked = 0;
  std::ostringstream bad;
  for (std::int64_t n : {5, 10, 99, 100, 1000}) {
    const std::int64_t e = (n + 4) / 5;
    for (std::int64_t probes : {std::int64_t{0}, std::min<std::int64_t>(20, n - 2 * e)}) {
      const auto w = compute_stage_windows(make_meta(n, probes));
      std::vector<std::pair<std::int64_t, Stage>> want;
      if (probes > 0) want.push_back({probes - 1, Stage::Probe});
      want.push_back({probes, Stage::Early});
      want.push_back({probes + e - 1, Stage::Early});
      if (probes + e < n - e) want.push_back({probes + e, Stage::Mid});
      if (probes + e < n - e) want.push_back({n - e - 1, Stage::Mid});
      want.push_back({n - e, Stage::Late});
      want.push_back({n - 1, Stage::Late});
      for (const auto& [ep, stage] : want) {
        ++checked;
        if (stage_of(w, n, ep).stage != stage) {
          bad << "N=" << n << " probes=" << probes << " ep=" << ep << "; ";
        }
      }
      bool threw = false;
      try {
        stage_of(w, n, n);
      } catch (const Error&) {
        threw = true;
      }
      ++checked;
      if (!threw) bad << "N=" << n << " ep=N accepted; ";
    }
  }
  const std::string b = bad.str();
  return {b.empty(), b + std::to_string(checked) + " boundary episodes over N in {5,10,99,100,1000}"};
}

}  // namespace

int main() {
  report("fault-detection matrix", fault_matrix);
  report("false-positive budget", false_positive_budget);
  report("overhead", overhead);
  report("statistics oracles", statistics_oracles);
  report("threshold boundaries", threshold_boundaries);
  report("q-target check", q_targets);
  report("determinism/replay", determinism);
  report("staging", staging);
  return failures == 0 ? 0 : 1;
}
