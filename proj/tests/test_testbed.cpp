#include <gtest/gtest.h>

#include <numeric>

#include "rldx/error.hpp"
#include "rldx/testbed.hpp"
#include "rldx/trace.hpp"

using namespace rldx;
using namespace rldx::testbed;

namespace {

TrainingOptions options(FaultSet faults, std::uint64_t seed = 7) {
  TrainingOptions o;
  o.faults = std::move(faults);
  o.seed = seed;
  return o;
}

template <class T>
std::vector<T> events_of(const std::vector<TraceEvent>& ev) {
  std::vector<T> out;
  for (const auto& e : ev) {
    if (const auto* p = std::get_if<T>(&e)) out.push_back(*p);
  }
  return out;
}

std::string wire(const std::vector<TraceEvent>& ev) {
  std::string out;
  for (const auto& e : ev) out += serialize_event(e) + "\n";
  return out;
}

}  // namespace

// --- gridworld --------------------------------------------------------------------

TEST(GridWorldEnv, MoveIntoGoal) {
  GridWorld g;
  const auto s = env_reset(g, Cell{6, 7});
  const auto r = env_step(g, s, kRight);
  EXPECT_EQ(r.next.cell, (Cell{7, 7}));
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.next.steps, 1);
}

TEST(GridWorldEnv, WallsKeepTheCell) {
  GridWorld g;
  const auto s = env_reset(g);
  EXPECT_EQ(s.cell, (Cell{0, 0}));
  for (int a : {kUp, kLeft}) {
    const auto r = env_step(g, s, a);
    EXPECT_EQ(r.next.cell, (Cell{0, 0}));
    EXPECT_EQ(r.reward, -0.01);
    EXPECT_FALSE(r.done);
  }
  EXPECT_EQ(env_step(g, s, kDown).next.cell, (Cell{0, 1}));
  EXPECT_EQ(env_step(g, s, kRight).next.cell, (Cell{1, 0}));
}

TEST(GridWorldEnv, StepLimitEndsEpisode) {
  GridWorld g;
  g.max_steps = 3;
  auto s = env_reset(g);
  for (int i = 0; i < 2; ++i) {
    const auto r = env_step(g, s, kUp);
    EXPECT_FALSE(r.done);
    s = r.next;
  }
  EXPECT_TRUE(env_step(g, s, kUp).done);
}

TEST(GridWorldEnv, InvalidAction) {
  GridWorld g;
  EXPECT_THROW(env_step(g, env_reset(g), 4), std::invalid_argument);
  EXPECT_THROW(env_step(g, env_reset(g), -1), std::invalid_argument);
}

TEST(GridWorldEnv, Encoding) {
  GridWorld g;
  EXPECT_EQ(encode_state(g, Cell{0, 0}), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(encode_state(g, Cell{7, 7}), (std::vector<double>{1.0, 1.0}));
}

// --- network -----------------------------------------------------------------------

TEST(Mlp, ParameterBudget) {
  std::mt19937_64 rng(1);
  const auto m = TinyMlp::he_init(rng);
  EXPECT_EQ(m.parameter_count(), 2u * 32 + 32 + 32 * 32 + 32 + 32 * 4 + 4);
  EXPECT_LT(m.parameter_count(), 2500u);
  EXPECT_EQ(TinyMlp::zeros().parameter_count(), m.parameter_count());
}

TEST(Mlp, GradientStepReducesLoss) {
  std::mt19937_64 rng(3);
  auto m = TinyMlp::he_init(rng);
  const std::vector<std::vector<double>> xs{{0.1, 0.2}, {0.7, 0.4}, {0.9, 0.9}};
  const std::vector<int> acts{0, 2, 3};
  const std::vector<double> ys{0.5, -0.2, 1.0};
  const double first = m.sgd_step(xs, acts, ys, 0.01);
  double last = first;
  for (int i = 0; i < 200; ++i) last = m.sgd_step(xs, acts, ys, 0.01);
  EXPECT_LT(last, first);
}

TEST(Mlp, DropoutIsStochasticForwardIsNot) {
  std::mt19937_64 rng(5);
  const auto m = TinyMlp::he_init(rng);
  const std::vector<double> x{0.3, 0.6};
  EXPECT_EQ(m.forward(x), m.forward(x));
  std::mt19937_64 d(9);
  EXPECT_NE(m.forward_dropout(x, 0.5, d), m.forward_dropout(x, 0.5, d));
}

// --- faults -------------------------------------------------------------------------

TEST(Faults, ExpectedDiagnosesMapping) {
  const std::map<Fault, std::string> expected{
      {Fault::F1, "NN.W3"},  {Fault::F2, "NN.B1"},  {Fault::F3, "AGT.d3"},
      {Fault::F4, "AGT.d1"}, {Fault::F5, "EXP.d2"}, {Fault::F6, "EXP.d1"},
      {Fault::F7, "QTR.d1"}, {Fault::F8, "AGT.d4"}, {Fault::F9, "QTR.d1"}};
  for (const auto& [f, id] : expected) {
    EXPECT_EQ(expected_diagnoses({f}), std::set<std::string>{id}) << fault_name(f);
  }
  EXPECT_TRUE(expected_diagnoses({}).empty());
  EXPECT_EQ(expected_diagnoses({Fault::F4, Fault::F5}),
            (std::set<std::string>{"AGT.d1", "EXP.d2"}));
  EXPECT_EQ(expected_diagnoses({Fault::F7, Fault::F9}), std::set<std::string>{"QTR.d1"});
}

TEST(Faults, NamesRoundTrip) {
  for (Fault f : kAllFaults) {
    EXPECT_EQ(parse_fault(fault_name(f)), f);
    EXPECT_FALSE(fault_description(f).empty());
  }
  EXPECT_EQ(parse_fault("f3"), Fault::F3);
  EXPECT_THROW(parse_fault("F99"), ConfigError);
  EXPECT_THROW(parse_fault(""), ConfigError);
  try {
    parse_fault("F0");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("F1"), std::string::npos);
  }
}

TEST(Faults, RunIds) {
  EXPECT_EQ(run_id_for(options({}, 7)), "testbed-s7-clean");
  EXPECT_EQ(run_id_for(options({Fault::F4}, 3)), "testbed-s3-F4");
  EXPECT_EQ(run_id_for(options({Fault::F5, Fault::F1}, 3)), "testbed-s3-F1-F5");
}

// --- traces ---------------------------------------------------------------------------

TEST(Traces, ByteIdenticalForSameSeed) {
  const auto o = options({Fault::F8}, 11);
  EXPECT_EQ(wire(generate_trace(o)), wire(generate_trace(o)));
  EXPECT_NE(wire(generate_trace(o)), wire(generate_trace(options({Fault::F8}, 12))));
}

TEST(Traces, StreamsAreWellFormed) {
  std::vector<FaultSet> sets{{}};
  for (Fault f : kAllFaults) sets.push_back({f});
  for (const auto& fs : sets) {
    const auto ev = generate_trace(options(fs, 2));
    const auto issues = validate_stream(ev);
    EXPECT_TRUE(issues.empty()) << run_id_for(options(fs, 2)) << ": "
                                << (issues.empty() ? "" : issues.front().message);
    const auto& meta = std::get<event::RunStart>(ev.front()).meta;
    EXPECT_EQ(meta.total_episodes, 320);
    EXPECT_EQ(meta.probe_episodes, 20);
    EXPECT_EQ(meta.discount, 0.9);
    EXPECT_EQ(events_of<event::EpisodeEnd>(ev).size(), 320u);
    EXPECT_TRUE(std::holds_alternative<event::RunEnd>(ev.back()));
  }
}

TEST(Traces, SinkMatchesCollectedStream) {
  const auto o = options({Fault::F2}, 4);
  std::vector<TraceEvent> via_sink;
  const auto res = run_training(o, [&](const TraceEvent& e) { via_sink.push_back(e); });
  EXPECT_EQ(wire(via_sink), wire(generate_trace(o)));
  EXPECT_EQ(res.returns.size(), 300u);
  EXPECT_EQ(static_cast<std::size_t>(res.updates), events_of<event::ModelUpdate>(via_sink).size());
}

TEST(Traces, TooFewEpisodes) {
  auto o = options({});
  o.episodes = 4;
  EXPECT_THROW(generate_trace(o), std::invalid_argument);
}

TEST(Traces, ProbeEpisodesHaveNoUpdates) {
  const auto ev = generate_trace(options({}, 5));
  bool in_probe = true;
  for (const auto& e : ev) {
    if (const auto* s = std::get_if<event::EpisodeStart>(&e)) in_probe = s->probe;
    if (std::holds_alternative<event::ModelUpdate>(e)) EXPECT_FALSE(in_probe);
  }
}

TEST(Traces, CleanTargetFollowsSyncs) {
  const auto ev = generate_trace(options({}, 5));
  const auto syncs = events_of<event::TargetSync>(ev);
  ASSERT_FALSE(syncs.empty());
  for (const auto& s : syncs) EXPECT_EQ(s.update_idx % 50, 0);
  // Snapshots precede the gradient step, so a sync after update m shows up in
  // the snapshot of update m + 1.
  for (const auto& u : events_of<event::ModelUpdate>(ev)) {
    if (u.update_idx > 1 && (u.update_idx - 1) % 50 == 0) {
      for (std::size_t i = 0; i < u.main_params.size(); ++i) {
        EXPECT_EQ(u.main_params[i].digest, u.target_params[i].digest);
      }
    }
  }
}

TEST(Traces, NeverSyncedTargetIsFrozen) {
  const auto ev = generate_trace(options({Fault::F4}, 5));
  EXPECT_TRUE(events_of<event::TargetSync>(ev).empty());
  const auto ups = events_of<event::ModelUpdate>(ev);
  ASSERT_GT(ups.size(), 100u);
  for (const auto& u : ups) {
    ASSERT_EQ(u.target_params.size(), ups.front().target_params.size());
    for (std::size_t i = 0; i < u.target_params.size(); ++i) {
      EXPECT_EQ(u.target_params[i].digest, ups.front().target_params[i].digest);
    }
  }
}

TEST(Traces, ActsWithTargetNetwork) {
  const auto ev = generate_trace(options({Fault::F3}, 5));
  std::size_t differing = 0;
  for (const auto& st : events_of<event::Step>(ev)) {
    if (st.action_probs_target.empty()) continue;
    EXPECT_EQ(st.action_probs_used, st.action_probs_target);
    differing += st.action_probs_used != st.action_probs_main ? 1 : 0;
  }
  EXPECT_GT(differing, 0u);
}

// The declared discount stays 0.9 while targets are built with 1.0.
TEST(Traces, UndiscountedTargets) {
  const auto ev = generate_trace(options({Fault::F7}, 5));
  EXPECT_EQ(std::get<event::RunStart>(ev.front()).meta.discount, 0.9);
  const auto batches = events_of<event::QTargetBatch>(ev);
  ASSERT_FALSE(batches.empty());
  for (const auto& b : batches) {
    for (std::size_t i = 0; i < b.transitions.size(); ++i) {
      const auto& t = b.transitions[i];
      const double y = t.done ? t.reward : t.reward + 1.0 * t.max_next_q;
      EXPECT_EQ(b.predicted_targets[i], y);
    }
  }
}

TEST(Traces, UnmaskedTerminals) {
  const auto ev = generate_trace(options({Fault::F9}, 5));
  std::size_t terminal = 0;
  for (const auto& b : events_of<event::QTargetBatch>(ev)) {
    for (std::size_t i = 0; i < b.transitions.size(); ++i) {
      const auto& t = b.transitions[i];
      EXPECT_EQ(b.predicted_targets[i], t.reward + 0.9 * t.max_next_q);
      terminal += t.done ? 1 : 0;
    }
  }
  EXPECT_GT(terminal, 0u);
}

TEST(Traces, NoExplorationAndFastDecay) {
  const auto none = events_of<event::ExplorationValue>(generate_trace(options({Fault::F6}, 5)));
  ASSERT_FALSE(none.empty());
  for (const auto& e : none) EXPECT_EQ(e.value, 0.0);
  const auto fast = events_of<event::ExplorationValue>(generate_trace(options({Fault::F5}, 5)));
  ASSERT_GT(fast.size(), 20u);
  EXPECT_EQ(fast.back().value, 0.01);
  EXPECT_LE(fast[10].value, 0.01);
}

// Late window (last 64 of 320 episodes) on the clean configuration.
TEST(Learnability, LateReturnsOnMostSeeds) {
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto res = run_training(options({}, seed), [](const TraceEvent&) {});
    const auto tail = res.returns.end() - 64;
    const double mean = std::accumulate(tail, res.returns.end(), 0.0) / 64.0;
    good += mean > 0.5 ? 1 : 0;
  }
  EXPECT_GE(good, 4);
}

TEST(Learnability, CleanSeedSevenLateWindow) {
  const auto res = run_training(options({}, 7), [](const TraceEvent&) {});
  // Late window of 320 episodes is the last 64, all of them training episodes.
  const auto tail = res.returns.end() - 64;
  EXPECT_GT(std::accumulate(tail, res.returns.end(), 0.0) / 64.0, 0.5);
}
