#pragma once

// RL-specific diagnostics. Every function is pure: it reads buffered trace
// data and returns findings without touching its inputs.

#include <cstdint>
#include <span>
#include <vector>

#include "rldx/config.hpp"
#include "rldx/stats.hpp"
#include "rldx/trace.hpp"

namespace rldx {

/// Diagnoses plus informational notes. Notes (ids like "AGT.n1") record that a
/// rule could not decide, e.g. for lack of data; they are not warnings.
struct Findings {
  std::vector<Diagnosis> diagnoses;
  std::vector<Diagnosis> notes;

  void append(Findings&& other);
  bool empty() const { return diagnoses.empty() && notes.empty(); }
};

/// Severity a built-in diagnostic id is reported with.
Severity builtin_severity(const std::string& id);

// --- agent -------------------------------------------------------------------

struct AgentSnapshot {
  std::int64_t update_idx = 0;
  std::vector<std::uint64_t> main_digests;
  std::vector<std::uint64_t> target_digests;

  bool target_matches_main() const { return main_digests == target_digests; }
};

AgentSnapshot snapshot_of(const event::ModelUpdate& u);

/// Mean over probe rows of KL(prev_row || curr_row).
double probe_kl(const std::vector<std::vector<double>>& prev,
                const std::vector<std::vector<double>>& curr);

/// AGT.d1 (missed synchronization), AGT.d2 (shared or frozen target model),
/// AGT.d4 (KL between consecutive probe outputs, series indexed by update).
/// A sync point k*P is honoured when main == target in the snapshot logged at
/// k*P or in the first snapshot after it.
Findings check_agent(std::span<const AgentSnapshot> snapshots,
                     std::span<const std::int64_t> sync_updates, const Series& kl,
                     const RunMeta& meta, const RlThresholds& th);

/// Running tally of which model produced the acted-on action probabilities.
struct ActionSourceTally {
  std::int64_t steps = 0;             // steps carrying main and used
  std::int64_t steps_with_target = 0;
  std::int64_t informative = 0;       // target present and differs from main
  std::int64_t used_is_target = 0;    // informative, used == target != main
  std::int64_t used_not_main = 0;     // used differs from main
  std::int64_t first_ep = -1;
  std::int64_t last_ep = -1;

  void add(const event::Step& s, double tol);
};

/// AGT.d3.
Findings check_actions_source(const ActionSourceTally& tally, const RlThresholds& th);
Findings check_actions_source(std::span<const event::Step> steps, const RlThresholds& th);

// --- environment ---------------------------------------------------------------

struct ProbeSummary {
  std::int64_t episodes = 0;
  std::int64_t nonfinite_values = 0;
  std::int64_t first_nonfinite_ep = -1;
  double max_abs_reward = 0.0;
  std::int64_t episodes_at_max_reward = 0;

  void add_step(const event::Step& s);
  void add_episode(double total_reward, double max_reward);
};

/// ENV.d1 (non-finite values), ENV.d2 (reward scale), ENV.d3 (too easy).
Findings check_environment(const ProbeSummary& probe, const RunMeta& meta,
                           const RlThresholds& th);

// --- states, actions, steps -------------------------------------------------------

struct EpisodeTrace {
  std::int64_t ep = 0;
  Stage stage = Stage::Mid;
  std::vector<std::vector<double>> states;
  std::vector<std::int64_t> actions;
};

/// Total length of the longest stretch in which a block of one or more items
/// repeats back to back (at least two copies). 0 when nothing repeats.
template <class T>
std::size_t longest_cycle_run(const std::vector<T>& seq);
/// Longest run of consecutive equal items.
template <class T>
std::size_t longest_identical_run(const std::vector<T>& seq);
/// Length of the common prefix.
template <class T>
std::size_t common_prefix(const std::vector<T>& a, const std::vector<T>& b);

/// STT.d1 on every episode; STT.d2 and STT.d3 on Late episodes. `previous` is
/// the episode before episodes.front(), or nullptr.
Findings check_states(std::span<const EpisodeTrace> episodes, const EpisodeTrace* previous,
                      const RlThresholds& th);

/// STP.d1 over the Late window.
Findings check_steps(const Series& episode_lengths, const Series& normalized_returns,
                     const RunMeta& meta, const RlThresholds& th);

/// EXP.d1 and EXP.d2.
Findings check_exploration(const Series& ef, const RlThresholds& th);

/// max(5, ceil(0.05 * total_episodes)).
std::size_t reward_std_window(std::int64_t total_episodes);

/// RWD.d1 on the Early window of normalized returns.
Findings check_reward_early(const Series& normalized_returns, std::int64_t total_episodes,
                            const RlThresholds& th);
/// RWD.d2 and RWD.d3 on the Late window of normalized returns.
Findings check_reward_late(const Series& normalized_returns, std::int64_t total_episodes,
                           const RlThresholds& th);
/// The same rules given an already computed R_std series.
Findings check_reward_std_early(const Series& reward_std, const RlThresholds& th);
Findings check_reward_std_late(const Series& reward_std, const Series& normalized_returns,
                               const RlThresholds& th);

/// ACN.d1 and ACN.d2 on the Early window of per-episode entropy.
Findings check_entropy_early(const Series& entropy, const RlThresholds& th);
/// ACN.d3 on the Late window.
Findings check_entropy_late(const Series& entropy, const RlThresholds& th);
/// ACN.d4 on the latest `window` entropy points.
Findings check_entropy_fluctuation(const Series& entropy, std::size_t window,
                                   const RlThresholds& th);
/// ACN.d5 and ACN.d6 (any stage except Probe).
Findings check_action_repeats(std::span<const EpisodeTrace> episodes,
                              const EpisodeTrace* previous, const RlThresholds& th);
/// ACN.d7 on the latest dispersion value.
Findings check_uncertainty(const Series& eu, const RlThresholds& th);

// --- q targets -----------------------------------------------------------------

/// r + discount * max_next_q * (1 - done).
double q_target_reference(const Transition& t, double discount);

/// QTR.d1. Throws std::invalid_argument on length mismatch.
Findings check_qtargets(const event::QTargetBatch& batch, const RunMeta& meta,
                        const RlThresholds& th);

}  // namespace rldx

#include "rldx/detail/sequences_impl.hpp"
