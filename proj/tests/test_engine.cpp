#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"
#include "rldx/catalog.hpp"
#include "rldx/engine.hpp"
#include "rldx/error.hpp"
#include "rldx/testbed.hpp"
#include "support.hpp"

using namespace rldx;
using rldx::test::make_meta;
using rldx::test::make_step;

namespace {

using Strings = std::vector<std::string>;

// A tiny hand-built run: varied states and actions, decaying exploration, one
// model update per training episode with distinct main/target digests.
std::vector<TraceEvent> synthetic_run(std::int64_t total = 20, std::int64_t probes = 2) {
  RunMeta m = make_meta(total, probes);
  m.target_sync_period = 1000;
  std::vector<TraceEvent> ev{event::RunStart{m}};
  std::int64_t gs = 0;
  std::int64_t upd = 0;
  for (std::int64_t ep = 0; ep < total; ++ep) {
    ev.emplace_back(event::EpisodeStart{ep, ep < probes});
    double ret = 0.0;
    const std::int64_t steps = 3 + ep % 4;
    for (std::int64_t t = 0; t < steps; ++t) {
      const double r = (t == steps - 1) ? 0.1 * static_cast<double>(ep % 7) : -0.01;
      ret += r;
      auto s = make_step(ep, t, {0.1 * static_cast<double>(t), 0.05 * static_cast<double>(ep % 5)},
                         (t + ep) % 2, r, t == steps - 1);
      const double p = 0.5 + 0.02 * static_cast<double>((ep + t) % 9);
      s.action_probs_main = {p, 1.0 - p};
      s.action_probs_used = s.action_probs_main;
      ev.emplace_back(s);
      ev.emplace_back(event::ExplorationValue{gs, std::exp(-0.01 * static_cast<double>(gs))});
      ++gs;
    }
    ev.emplace_back(event::EpisodeEnd{ep, ret, steps});
    if (ep >= probes) {
      event::ModelUpdate u;
      u.update_idx = ++upd;
      u.loss = 1.0 + 0.1 * static_cast<double>(upd % 3);
      TensorStats w;
      w.name = "fc.weight";
      w.std = 0.3;
      w.l2_norm = 2.0;
      w.digest = 100 + static_cast<std::uint64_t>(upd);
      TensorStats b = w;
      b.name = "fc.bias";
      b.std = 0.01;
      u.main_params = {w, b};
      w.digest = 7;
      b.digest = 8;
      u.target_params = {w, b};
      u.grad_norms = {{"fc.weight", 0.5}};
      const double q = 0.5 + 0.01 * static_cast<double>(upd % 2);
      u.probe_outputs = {{q, 1.0 - q}};
      ev.emplace_back(u);
    }
  }
  ev.emplace_back(event::RunEnd{m.run_id});
  return ev;
}

Report run_session(const std::vector<TraceEvent>& ev, CheckConfig c = {}) {
  Session s(std::move(c));
  for (const auto& e : ev) s.ingest(e);
  return s.finalize();
}

std::vector<TraceEvent> testbed_trace(testbed::FaultSet faults, std::uint64_t seed = 7) {
  testbed::TrainingOptions o;
  o.faults = std::move(faults);
  o.seed = seed;
  return testbed::generate_trace(o);
}

Strings ids(const std::vector<Diagnosis>& ds) {
  Strings out;
  for (const auto& d : ds) out.push_back(d.diagnostic_id);
  return out;
}

std::string key(const Diagnosis& d) {
  return d.diagnostic_id + "|" + std::string(to_string(d.stage)) + "|" +
         std::to_string(d.scope.begin) + "-" + std::to_string(d.scope.end) + "|" +
         format_real(d.observed) + "|" + d.message;
}

}  // namespace

// --- ordering ----------------------------------------------------------------------

TEST(Ordering, EventsBeforeRunStart) {
  Session s;
  EXPECT_THROW(s.ingest(event::EpisodeStart{0, false}), OrderingError);
  EXPECT_THROW(s.stage_of(0), Error);
}

TEST(Ordering, AfterRunEnd) {
  Session s;
  const auto ev = synthetic_run();
  for (const auto& e : ev) s.ingest(e);
  EXPECT_TRUE(s.ended());
  EXPECT_THROW(s.ingest(ev.back()), OrderingError);
  EXPECT_THROW(s.ingest(event::EpisodeStart{3, false}), OrderingError);
}

TEST(Ordering, MessagesNameBothIndices) {
  Session s;
  s.ingest(event::RunStart{make_meta()});
  s.ingest(event::EpisodeStart{0, false});
  s.ingest(make_step(0, 5, {0.0}));
  try {
    s.ingest(make_step(0, 3, {0.0}));
    FAIL() << "no ordering error";
  } catch (const OrderingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('3'), std::string::npos);
    EXPECT_NE(msg.find('5'), std::string::npos);
  }
  s.ingest(event::EpisodeEnd{0, 0.0, 1});
  try {
    s.ingest(event::EpisodeStart{0, false});
    FAIL() << "no ordering error";
  } catch (const OrderingError& e) {
    EXPECT_NE(std::string(e.what()).find("episode 0 after episode 0"), std::string::npos);
  }
  event::ModelUpdate u;
  u.update_idx = 4;
  s.ingest(u);
  u.update_idx = 2;
  try {
    s.ingest(u);
    FAIL() << "no ordering error";
  } catch (const OrderingError& e) {
    EXPECT_NE(std::string(e.what()).find("update 2 after update 4"), std::string::npos);
  }
  EXPECT_THROW(s.ingest(event::TargetSync{9}), OrderingError);
}

TEST(Ordering, MismatchedQTargetBatch) {
  Session s;
  s.ingest(event::RunStart{make_meta()});
  event::ModelUpdate u;
  u.update_idx = 1;
  s.ingest(u);
  event::QTargetBatch q;
  q.update_idx = 1;
  q.transitions = {{0.0, false, 0.0}};
  EXPECT_THROW(s.ingest(q), Error);
}

// --- staging through the session ---------------------------------------------------

TEST(SessionStaging, Examples) {
  Session a;
  a.ingest(event::RunStart{make_meta(100, 0)});
  EXPECT_EQ(a.stage_of(0), Stage::Early);
  EXPECT_EQ(a.stage_of(19), Stage::Early);
  EXPECT_EQ(a.stage_of(20), Stage::Mid);
  EXPECT_EQ(a.stage_of(80), Stage::Late);
  EXPECT_THROW(a.stage_of(100), Error);
  Session b;
  b.ingest(event::RunStart{make_meta(100, 20)});
  EXPECT_EQ(b.stage_of(5), Stage::Probe);
  EXPECT_EQ(b.stage_of(20), Stage::Early);
}

TEST(SessionStaging, ConfiguredFractions) {
  CheckConfig c;
  c.early_fraction = 0.1;
  c.late_fraction = 0.3;
  Session s(c);
  s.ingest(event::RunStart{make_meta(100, 0)});
  EXPECT_EQ(s.stage_of(9), Stage::Early);
  EXPECT_EQ(s.stage_of(10), Stage::Mid);
  EXPECT_EQ(s.stage_of(70), Stage::Late);
}

// --- custom checks ------------------------------------------------------------------

TEST(CustomChecks, RegistrationErrors) {
  Session s;
  auto never = [](const SeriesStore&, const RunMeta&) { return std::vector<Diagnosis>{}; };
  EXPECT_THROW(s.register_custom_check("EXP.d1", kAllStages, Trigger::Episode, never),
               RegistrationError);
  EXPECT_THROW(s.register_custom_check("", kAllStages, Trigger::Episode, never), RegistrationError);
  EXPECT_THROW(s.register_custom_check("MY.d1", kAllStages, Trigger::Episode, nullptr),
               RegistrationError);
  const auto h = s.register_custom_check("MY.d1", kAllStages, Trigger::Episode, never);
  EXPECT_EQ(h.id, "MY.d1");
  EXPECT_THROW(s.register_custom_check("MY.d1", kAllStages, Trigger::Update, never),
               RegistrationError);
}

TEST(CustomChecks, SilentRuleLeavesReportUnchanged) {
  const auto ev = synthetic_run();
  Session s;
  s.register_custom_check("MY.d1", kAllStages, Trigger::Episode,
                          [](const SeriesStore&, const RunMeta&) { return std::vector<Diagnosis>{}; });
  for (const auto& e : ev) s.ingest(e);
  Report with = s.finalize();
  Report without = run_session(ev);
  with.summary.checks_executed = without.summary.checks_executed;
  EXPECT_EQ(with.to_json(), without.to_json());
}

TEST(CustomChecks, ExplorationRuleFires) {
  const auto ev = synthetic_run();
  Session s;
  s.register_custom_check("USER.ef_low", kAllStages, Trigger::Episode,
                          [](const SeriesStore& st, const RunMeta&) {
                            std::vector<Diagnosis> out;
                            const auto& ef = st.exploration();
                            if (!ef.empty() && ef.values.back() < 0.5) {
                              Diagnosis d;
                              d.observed = ef.values.back();
                              d.threshold = 0.5;
                              d.message = "exploration factor below 0.5";
                              out.push_back(d);
                            }
                            return out;
                          });
  for (const auto& e : ev) s.ingest(e);
  const Report r = s.finalize();
  const auto it = std::find_if(r.diagnoses.begin(), r.diagnoses.end(),
                               [](const Diagnosis& d) { return d.diagnostic_id == "USER.ef_low"; });
  ASSERT_NE(it, r.diagnoses.end());
  EXPECT_LT(it->observed, 0.5);
  EXPECT_EQ(it->message, "exploration factor below 0.5");
}

TEST(CustomChecks, StageMaskAndTrigger) {
  const auto ev = synthetic_run();
  Session s;
  int calls = 0;
  s.register_custom_check("USER.late", stage_bit(Stage::Late), Trigger::Episode,
                          [&](const SeriesStore&, const RunMeta&) {
                            ++calls;
                            Diagnosis d;
                            d.message = "late";
                            return std::vector<Diagnosis>{d};
                          });
  for (const auto& e : ev) s.ingest(e);
  const Report r = s.finalize();
  EXPECT_GT(calls, 0);
  for (const auto& d : r.diagnoses) {
    if (d.diagnostic_id == "USER.late") EXPECT_EQ(d.stage, Stage::Late);
  }
  const Strings got = ids(r.diagnoses);
  EXPECT_EQ(std::count(got.begin(), got.end(), "USER.late"), 1);
}

// --- dedup ----------------------------------------------------------------------------

TEST(FireOnce, OncePerStage) {
  const auto ev = synthetic_run(40, 0);
  auto always = [](const SeriesStore&, const RunMeta&) {
    Diagnosis d;
    d.message = "always";
    return std::vector<Diagnosis>{d};
  };
  Session once;
  once.register_custom_check("USER.always", kAllStages, Trigger::Episode, always);
  for (const auto& e : ev) once.ingest(e);
  const Report r = once.finalize();
  std::map<Stage, int> per_stage;
  for (const auto& d : r.diagnoses) {
    if (d.diagnostic_id == "USER.always") ++per_stage[d.stage];
  }
  EXPECT_EQ(per_stage.size(), 3u);
  for (const auto& [stage, n] : per_stage) EXPECT_EQ(n, 1) << to_string(stage);

  CheckConfig c;
  c.fire_once = false;
  Session many(c);
  many.register_custom_check("USER.always", kAllStages, Trigger::Episode, always);
  for (const auto& e : ev) many.ingest(e);
  const Strings all = ids(many.finalize().diagnoses);
  EXPECT_GT(std::count(all.begin(), all.end(), "USER.always"), 3);
}

TEST(FireOnce, NoDuplicatePairsInTestbedReports) {
  for (auto f : {testbed::Fault::F5, testbed::Fault::F7, testbed::Fault::F8}) {
    const Report r = run_session(testbed_trace({f}));
    std::set<std::pair<std::string, Stage>> seen;
    for (const auto& d : r.diagnoses) {
      EXPECT_TRUE(seen.insert({d.diagnostic_id, d.stage}).second) << d.diagnostic_id;
    }
  }
}

// --- finalize & report -----------------------------------------------------------------

TEST(Finalize, Idempotent) {
  Session s;
  for (const auto& e : synthetic_run()) s.ingest(e);
  const std::string a = s.finalize().to_json();
  EXPECT_EQ(s.finalize().to_json(), a);
}

TEST(Finalize, WithoutRunEnd) {
  auto ev = synthetic_run();
  ev.pop_back();
  Session s;
  for (const auto& e : ev) s.ingest(e);
  const Report r = s.finalize();
  EXPECT_FALSE(r.summary.complete);
  EXPECT_EQ(r.summary.episodes_seen, 18);
  EXPECT_EQ(s.finalize().to_json(), r.to_json());
  EXPECT_THROW(s.ingest(ev.back()), OrderingError);
}

TEST(Finalize, EmptySession) {
  Session s;
  const Report r = s.finalize();
  EXPECT_TRUE(r.diagnoses.empty());
  EXPECT_EQ(r.summary.events, 0);
}

TEST(ReportFormat, JsonShapeAndSentinels) {
  Report r;
  r.run_id = "x";
  r.meta = make_meta();
  Diagnosis d;
  d.diagnostic_id = "NN.L1";
  d.severity = Severity::Critical;
  d.stage = Stage::Mid;
  d.scope = {Scope::Kind::Updates, 7, 7};
  d.observed = std::numeric_limits<double>::quiet_NaN();
  d.message = "m";
  d.recommendations = {"a", "b"};
  r.diagnoses.push_back(d);
  r.eu.push_back(10, 0.25);
  r.kl.push_back(2, std::numeric_limits<double>::infinity());
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["run_id"], "x");
  EXPECT_EQ(j["diagnoses"][0]["id"], "NN.L1");
  EXPECT_EQ(j["diagnoses"][0]["severity"], "critical");
  EXPECT_EQ(j["diagnoses"][0]["stage"], "mid");
  EXPECT_EQ(j["diagnoses"][0]["scope"]["kind"], "updates");
  EXPECT_EQ(j["diagnoses"][0]["observed"], "NaN");
  EXPECT_EQ(j["monitor_series"]["eu"][0][0], 10);
  EXPECT_EQ(j["monitor_series"]["eu"][0][1], 0.25);
  EXPECT_EQ(j["monitor_series"]["kl"][0][1], "Inf");
  EXPECT_TRUE(j["monitor_series"]["reward_std"].empty());
  for (const char* k : {"meta", "notes", "summary"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(series_to_csv(r.eu), "index,value\n10,0.25\n");
  EXPECT_EQ(series_to_csv(r.kl), "index,value\n2,\"Inf\"\n");
}

// --- end to end over testbed traces ------------------------------------------------------

TEST(EndToEnd, CleanRunIsQuiet) {
  const auto ev = testbed_trace({});
  Session s;
  for (const auto& e : ev) EXPECT_TRUE(s.ingest(e).empty()) << event_tag(e);
  const Report r = s.finalize();
  EXPECT_TRUE(r.diagnoses.empty()) << (r.diagnoses.empty() ? "" : r.diagnoses[0].message);
  EXPECT_FALSE(r.eu.empty());
  EXPECT_FALSE(r.reward_std.empty());
  EXPECT_FALSE(r.kl.empty());
  EXPECT_TRUE(r.summary.complete);
  EXPECT_EQ(r.summary.episodes_seen, 300);
  EXPECT_EQ(r.summary.probe_episodes_seen, 20);
}

TEST(EndToEnd, FastDecayFiresCurvatureFirst) {
  Session s;
  for (const auto& e : testbed_trace({testbed::Fault::F5})) {
    const Strings fired = ids(s.ingest(e));
    if (!fired.empty()) {
      EXPECT_NE(std::find(fired.begin(), fired.end(), "EXP.d2"), fired.end());
      return;
    }
  }
  FAIL() << "nothing fired";
}

TEST(EndToEnd, NeverSyncedTarget) {
  const Strings got = ids(run_session(testbed_trace({testbed::Fault::F4})).diagnoses);
  EXPECT_NE(std::find(got.begin(), got.end(), "AGT.d1"), got.end());
}

TEST(EndToEnd, InfoFindingsStayOutOfDiagnoses) {
  for (auto f : testbed::kAllFaults) {
    const Report r = run_session(testbed_trace({f}));
    for (const auto& d : r.diagnoses) EXPECT_NE(d.severity, Severity::Info) << d.diagnostic_id;
  }
}

TEST(EndToEnd, ReplayThroughWireIsByteIdentical) {
  const auto ev = testbed_trace({testbed::Fault::F3, testbed::Fault::F9}, 3);
  std::vector<TraceEvent> replayed;
  for (const auto& e : ev) replayed.push_back(parse_event(serialize_event(e)));
  const std::string a = run_session(ev).to_json();
  EXPECT_EQ(run_session(replayed).to_json(), a);
  EXPECT_EQ(run_session(ev).to_json(), a);
}

// Switching one family off removes exactly that family's ids.
TEST(EndToEnd, FamilyIndependence) {
  const auto ev = testbed_trace({testbed::Fault::F1, testbed::Fault::F3, testbed::Fault::F5,
                                 testbed::Fault::F7},
                                2);
  const Report full = run_session(ev);
  std::set<std::string> families;
  for (const auto& d : full.diagnoses) families.insert(std::string(family_of(d.diagnostic_id)));
  EXPECT_GE(families.size(), 3u);
  for (const char* family : kFamilies) {
    CheckConfig c;
    c.enabled[family] = false;
    const Report part = run_session(ev, c);
    Strings expected, got;
    for (const auto& d : full.diagnoses) {
      if (family_of(d.diagnostic_id) != family) expected.push_back(key(d));
    }
    for (const auto& d : part.diagnoses) got.push_back(key(d));
    EXPECT_EQ(got, expected) << family;
  }
  const Report none = run_session(ev, CheckConfig::all_disabled());
  EXPECT_TRUE(none.diagnoses.empty());
}

TEST(SeriesStoreRetention, BoundedToTwoWindows) {
  Session s;
  for (const auto& e : synthetic_run(200, 0)) s.ingest(e);
  EXPECT_EQ(s.store().recent_episodes().size(), 80u);
  EXPECT_EQ(s.store().recent_episodes().back().ep, 199);
}

// --- config --------------------------------------------------------------------------------

TEST(Config, DefaultsAndOverrides) {
  const CheckConfig d = parse_config("{}");
  EXPECT_EQ(d.period_episodes, 5);
  EXPECT_EQ(d.period_updates, 10);
  EXPECT_EQ(d.rl.kl_max, 0.1);
  EXPECT_EQ(d.nn.loss_window, 20);
  EXPECT_TRUE(d.fire_once);
  const CheckConfig c = parse_config(
      R"({"period_episodes": 3, "rl": {"kl_max": 0.2}, "nn": {"frozen_updates": 7},)"
      R"( "enabled": {"NN": false}, "fire_once": false})");
  EXPECT_EQ(c.period_episodes, 3);
  EXPECT_EQ(c.rl.kl_max, 0.2);
  EXPECT_EQ(c.rl.curvature_max, 0.22);
  EXPECT_EQ(c.nn.frozen_updates, 7);
  EXPECT_FALSE(c.family_enabled("NN"));
  EXPECT_TRUE(c.family_enabled("EXP"));
  EXPECT_FALSE(c.fire_once);
}

TEST(Config, RoundTrip) {
  CheckConfig c;
  c.rl.curvature_max = 0.3;
  c.enabled["ACN"] = false;
  const CheckConfig back = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("{\"bogus\": 1}"), ConfigError);
  EXPECT_THROW(parse_config("{\"rl\": {\"kl_maxx\": 1}}"), ConfigError);
  EXPECT_THROW(parse_config("{\"period_episodes\": 0}"), ConfigError);
  EXPECT_THROW(parse_config("{\"period_episodes\": 2.5}"), ConfigError);
  EXPECT_THROW(parse_config("{\"early_fraction\": 0.6, \"late_fraction\": 0.6}"), ConfigError);
  EXPECT_THROW(parse_config("{\"rl\": {\"obs_low\": 20}}"), ConfigError);
  EXPECT_THROW(parse_config("{\"rl\": {\"kl_max\": -1}}"), ConfigError);
  EXPECT_THROW(parse_config("{\"fire_once\": 1}"), ConfigError);
  EXPECT_THROW(parse_config("[1]"), ConfigError);
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/rldx.json"), ConfigError);
  EXPECT_THROW(Session(parse_config("{}")).register_custom_check("", 0, Trigger::Episode, nullptr),
               RegistrationError);
}

TEST(Config, AllDisabled) {
  const CheckConfig c = CheckConfig::all_disabled();
  for (const char* f : kFamilies) EXPECT_FALSE(c.family_enabled(f)) << f;
}

// --- catalog ----------------------------------------------------------------------------------

TEST(CatalogData, CoversEveryBuiltinId) {
  const Catalog& c = Catalog::builtin();
  const Strings expected{"ENV.d1", "ENV.d2", "ENV.d3", "STT.d1", "STT.d2", "STT.d3", "STP.d1",
                         "EXP.d1", "EXP.d2", "RWD.d1", "RWD.d2", "RWD.d3", "ACN.d1", "ACN.d2",
                         "ACN.d3", "ACN.d4", "ACN.d5", "ACN.d6", "ACN.d7", "AGT.d1", "AGT.d2",
                         "AGT.d3", "AGT.d4", "QTR.d1", "NN.W1",  "NN.W2",  "NN.W3",  "NN.B1",
                         "NN.G1",  "NN.G2",  "NN.A1",  "NN.A2",  "NN.L1",  "NN.L2",  "NN.L3"};
  EXPECT_EQ(c.ids().size(), expected.size());
  for (const auto& id : expected) {
    const auto* e = c.find(id);
    ASSERT_NE(e, nullptr) << id;
    EXPECT_FALSE(e->title.empty()) << id;
    EXPECT_FALSE(e->recommendations.empty()) << id;
  }
}

TEST(CatalogData, ParseErrors) {
  EXPECT_THROW(Catalog::parse("[]"), ConfigError);
  EXPECT_THROW(Catalog::parse("{\"X.d1\": {\"title\": 3}}"), ConfigError);
  EXPECT_THROW(Catalog::load("/nonexistent/catalog.json"), ConfigError);
  const Catalog c = Catalog::parse(
      R"({"X.d1": {"title": "T", "explanation": "E", "recommendations": ["r"]}})");
  EXPECT_TRUE(c.contains("X.d1"));
}

TEST(CatalogData, MessagesCarryTitles) {
  const Report r = run_session(testbed_trace({testbed::Fault::F4}));
  ASSERT_FALSE(r.diagnoses.empty());
  for (const auto& d : r.diagnoses) {
    const auto* e = Catalog::builtin().find(d.diagnostic_id);
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(d.message.rfind(e->title + ": ", 0), 0u) << d.message;
    EXPECT_EQ(d.recommendations, e->recommendations);
  }
}
