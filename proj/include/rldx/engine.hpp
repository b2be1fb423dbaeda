#pragma once

// Diagnosis session: buffers trace events into series, schedules the checks
// at episode and update triggers, deduplicates what fires and assembles the
// report.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rldx/catalog.hpp"
#include "rldx/config.hpp"
#include "rldx/nn_checks.hpp"
#include "rldx/rl_checks.hpp"
#include "rldx/stats.hpp"
#include "rldx/trace.hpp"

namespace rldx {

/// Everything the checks read, derived from the event stream. Append-only
/// within a run; per-episode state and action sequences are kept for the
/// last two stage windows only.
class SeriesStore {
 public:
  const Series& returns() const { return returns_; }
  /// Returns divided by max_reward.
  const Series& normalized_returns() const { return normalized_returns_; }
  /// Sliding std of normalized returns, window reward_std_window(N).
  const Series& reward_std() const { return reward_std_; }
  /// Per-episode mean normalized entropy of action_probs_used.
  const Series& entropy() const { return entropy_; }
  /// Exploration factor by global step.
  const Series& exploration() const { return exploration_; }
  const Series& loss() const { return loss_; }
  /// Mean probe-batch KL between consecutive model updates.
  const Series& kl() const { return kl_; }
  /// MC-dropout dispersion (epistemic uncertainty) by update.
  const Series& eu() const { return eu_; }
  const Series& episode_lengths() const { return episode_lengths_; }

  const std::deque<EpisodeTrace>& recent_episodes() const { return episodes_; }
  const std::vector<AgentSnapshot>& snapshots() const { return snapshots_; }
  const std::vector<std::int64_t>& sync_updates() const { return syncs_; }
  const ActionSourceTally& action_source() const { return action_source_; }
  const ProbeSummary& probe() const { return probe_; }

 private:
  friend class Session;

  Series returns_, normalized_returns_, reward_std_, entropy_, exploration_, loss_, kl_, eu_,
      episode_lengths_;
  std::deque<EpisodeTrace> episodes_;
  std::size_t episode_retention_ = 2;
  std::vector<AgentSnapshot> snapshots_;
  std::vector<std::int64_t> syncs_;
  ActionSourceTally action_source_;
  ProbeSummary probe_;
};

enum class Trigger { Episode, Update };

using StageMask = unsigned;
constexpr StageMask stage_bit(Stage s) { return 1u << static_cast<unsigned>(s); }
inline constexpr StageMask kAllStages = 0xFu;

using CustomRule = std::function<std::vector<Diagnosis>(const SeriesStore&, const RunMeta&)>;

struct CustomCheckHandle {
  std::string id;
  std::size_t index = 0;
};

struct ReportSummary {
  std::int64_t events = 0;
  std::int64_t episodes_seen = 0;
  std::int64_t probe_episodes_seen = 0;
  std::int64_t updates_seen = 0;
  std::int64_t triggers_fired = 0;
  std::int64_t checks_executed = 0;
  bool complete = false;  // RunEnd was ingested
};

struct Report {
  std::string run_id;
  RunMeta meta;
  std::vector<Diagnosis> diagnoses;
  std::vector<Diagnosis> notes;
  Series eu;
  Series reward_std;
  Series kl;
  ReportSummary summary;

  /// Deterministic JSON document (same input => same bytes).
  std::string to_json() const;
};

/// Writes `index,value` CSV.
std::string series_to_csv(const Series& s);

class Session {
 public:
  explicit Session(CheckConfig config = {}, const Catalog& catalog = Catalog::builtin());

  /// Feeds one event; returns the diagnoses that fired because of it. Throws
  /// OrderingError for out-of-order events (naming both indices) and anything
  /// after RunEnd.
  std::vector<Diagnosis> ingest(const TraceEvent& e);

  /// Throws Error before RunStart or when ep is out of range.
  Stage stage_of(std::int64_t ep) const;
  StageWindows windows() const;

  /// Throws RegistrationError for an empty, duplicate or built-in id.
  CustomCheckHandle register_custom_check(std::string id, StageMask stages, Trigger trigger,
                                          CustomRule rule);

  /// Runs any pending end-of-run evaluation once and returns the report.
  /// Calling it again returns the same report.
  Report finalize();

  const SeriesStore& store() const { return store_; }
  const CheckConfig& config() const { return config_; }
  bool started() const { return meta_.has_value(); }
  bool ended() const { return ended_; }

 private:
  struct Custom {
    std::string id;
    StageMask stages;
    Trigger trigger;
    CustomRule rule;
  };

  void on(const event::RunStart& e);
  void on(const event::EpisodeStart& e);
  void on(const event::Step& e);
  void on(const event::EpisodeEnd& e);
  void on(const event::ExplorationValue& e);
  void on(const event::ModelUpdate& e);
  void on(const event::TargetSync& e);
  void on(const event::McDropoutSamples& e);
  void on(const event::QTargetBatch& e);
  void on(const event::RunEnd& e);

  void episode_trigger(std::int64_t ep, bool final);
  void update_trigger(bool final);
  void run_environment_checks();
  void run_custom(Trigger trigger, Stage stage);
  void emit(Findings&& f, Stage stage);
  void emit_one(Diagnosis d, Stage stage, bool note);
  Stage current_stage() const;
  bool enabled(const char* family) const { return config_.family_enabled(family); }
  const RunMeta& meta() const;

  CheckConfig config_;
  const Catalog* catalog_;
  std::optional<RunMeta> meta_;
  StageWindows windows_;
  SeriesStore store_;
  std::vector<Custom> custom_;

  // stream position
  std::optional<std::int64_t> open_ep_;
  std::optional<std::int64_t> last_ep_;
  std::optional<std::int64_t> last_t_;
  std::optional<std::int64_t> last_update_;
  std::optional<std::int64_t> last_global_step_;
  bool ended_ = false;
  bool finalized_ = false;

  // current episode accumulators
  EpisodeTrace current_;
  bool current_probe_ = false;
  double entropy_sum_ = 0.0;
  std::int64_t entropy_steps_ = 0;

  // pending work between triggers
  std::size_t unchecked_episodes_ = 0;
  std::vector<event::ModelUpdate> nn_window_;
  std::size_t nn_fresh_ = 0;
  bool first_update_checked_ = false;
  std::vector<event::QTargetBatch> pending_qtargets_;
  std::vector<std::vector<double>> last_probe_outputs_;
  bool env_done_ = false;
  bool early_done_ = false;
  bool late_done_ = false;

  // output
  std::set<std::pair<std::string, Stage>> fired_;
  std::set<std::string> noted_;
  std::vector<Diagnosis> report_;
  std::vector<Diagnosis> notes_;
  std::vector<Diagnosis> fresh_;
  ReportSummary summary_;
};

}  // namespace rldx
