#include "rldx/rl_checks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rldx/error.hpp"

namespace rldx {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Diagnosis make(const std::string& id, Scope scope, double observed, double threshold,
               std::string message) {
  Diagnosis d;
  d.diagnostic_id = id;
  d.severity = builtin_severity(id);
  d.scope = scope;
  d.observed = observed;
  d.threshold = threshold;
  d.message = std::move(message);
  return d;
}

Scope episodes(std::int64_t a, std::int64_t b) { return {Scope::Kind::Episodes, a, b}; }
Scope updates(std::int64_t a, std::int64_t b) { return {Scope::Kind::Updates, a, b}; }

Scope episodes_of(const Series& s) {
  return s.empty() ? episodes(0, 0) : episodes(s.index.front(), s.index.back());
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return kInfinity;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = std::abs(a[i] - b[i]);
    if (std::isnan(x)) return kInfinity;
    d = std::max(d, x);
  }
  return d;
}

}  // namespace

void Findings::append(Findings&& other) {
  for (auto& d : other.diagnoses) diagnoses.push_back(std::move(d));
  for (auto& d : other.notes) notes.push_back(std::move(d));
}

Severity builtin_severity(const std::string& id) {
  if (id == "ENV.d1" || id == "NN.W1" || id == "NN.G2" || id == "NN.L1") return Severity::Critical;
  if (id == "NN.L2") return Severity::Info;
  const auto dot = id.find('.');
  if (dot != std::string::npos && dot + 1 < id.size() && id[dot + 1] == 'n') return Severity::Info;
  return Severity::Warning;
}

// --- agent -------------------------------------------------------------------

AgentSnapshot snapshot_of(const event::ModelUpdate& u) {
  AgentSnapshot s;
  s.update_idx = u.update_idx;
  s.main_digests.reserve(u.main_params.size());
  for (const auto& t : u.main_params) s.main_digests.push_back(t.digest);
  s.target_digests.reserve(u.target_params.size());
  for (const auto& t : u.target_params) s.target_digests.push_back(t.digest);
  return s;
}

double probe_kl(const std::vector<std::vector<double>>& prev,
                const std::vector<std::vector<double>>& curr) {
  if (prev.size() != curr.size() || prev.empty()) {
    throw std::invalid_argument("probe_kl: probe batches differ in size or are empty");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < prev.size(); ++b) total += kl_divergence(prev[b], curr[b]);
  return total / static_cast<double>(prev.size());
}

Findings check_agent(std::span<const AgentSnapshot> snapshots,
                     std::span<const std::int64_t> sync_updates, const Series& kl,
                     const RunMeta& meta, const RlThresholds& th) {
  Findings f;
  if (snapshots.empty()) {
    f.notes.push_back(make("AGT.n3", updates(0, 0), 0.0, 0.0,
                           "no model updates yet; agent checks skipped"));
    return f;
  }
  const std::int64_t period = meta.target_sync_period;
  const std::int64_t first_idx = snapshots.front().update_idx;
  const std::int64_t last_idx = snapshots.back().update_idx;
  auto after = [&](std::int64_t idx) {
    return std::lower_bound(snapshots.begin(), snapshots.end(), idx,
                            [](const AgentSnapshot& s, std::int64_t v) { return s.update_idx < v; });
  };

  // AGT.d1
  std::vector<std::int64_t> missed;
  const std::int64_t first_multiple = ((first_idx + period - 1) / period) * period;
  for (std::int64_t m = std::max(first_multiple, period); m <= last_idx; m += period) {
    auto it = after(m);
    if (it->update_idx == m) {
      if (it->target_matches_main()) continue;
      ++it;
    }
    if (it == snapshots.end()) continue;  // undecided until the next snapshot
    if (!it->target_matches_main()) missed.push_back(m);
  }
  std::vector<std::int64_t> off_period;
  for (std::int64_t s : sync_updates) {
    if (s % period != 0) off_period.push_back(s);
  }
  const bool d1 = !missed.empty() || !off_period.empty();
  if (d1) {
    std::vector<std::int64_t> all = missed;
    all.insert(all.end(), off_period.begin(), off_period.end());
    std::sort(all.begin(), all.end());
    std::string msg;
    if (!missed.empty()) {
      msg = "target model differs from the main model after " + std::to_string(missed.size()) +
            " scheduled synchronization(s) (period " + std::to_string(period) +
            " updates, first at update " + std::to_string(missed.front()) + ")";
    }
    if (!off_period.empty()) {
      if (!msg.empty()) msg += "; ";
      msg += std::to_string(off_period.size()) +
             " synchronization(s) off the declared period, first at update " +
             std::to_string(off_period.front());
    }
    f.diagnoses.push_back(make("AGT.d1", updates(all.front(), all.back()),
                               static_cast<double>(all.size()), 0.0, msg));
  }

  // AGT.d2: snapshots away from sync points should show distinct models.
  if (period >= 3) {
    std::int64_t considered = 0;
    std::int64_t equal = 0;
    for (const auto& s : snapshots) {
      const std::int64_t r = s.update_idx % period;
      if (r == 0 || r == 1) continue;
      ++considered;
      if (s.target_matches_main()) ++equal;
    }
    if (considered >= th.shared_model_min_updates) {
      const double frac = static_cast<double>(equal) / static_cast<double>(considered);
      if (frac >= th.shared_model_quorum) {
        f.diagnoses.push_back(make("AGT.d2", updates(first_idx, last_idx), frac,
                                   th.shared_model_quorum,
                                   "target and main model parameters are identical on " +
                                       num(100.0 * frac) +
                                       "% of updates away from synchronization points; the "
                                       "two models appear to share parameters"));
      }
    }
  }
  if (!d1) {
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= snapshots.size(); ++i) {
      if (i < snapshots.size() && snapshots[i].target_digests == snapshots[begin].target_digests) {
        continue;
      }
      const std::size_t len = i - begin;
      bool main_moved = false;
      for (std::size_t j = begin + 1; j < i && !main_moved; ++j) {
        main_moved = snapshots[j].main_digests != snapshots[begin].main_digests;
      }
      if (main_moved && static_cast<std::int64_t>(len) >= 2 * period + 2) {
        f.diagnoses.push_back(make(
            "AGT.d2", updates(snapshots[begin].update_idx, snapshots[i - 1].update_idx),
            static_cast<double>(len), static_cast<double>(2 * period + 2),
            "target model parameters stayed frozen for " + std::to_string(len) +
                " updates while the main model changed"));
        break;
      }
      begin = i;
    }
  }

  // AGT.d4
  double worst = -1.0;
  std::int64_t worst_idx = 0;
  std::int64_t first_bad = -1;
  for (std::size_t i = 0; i < kl.size(); ++i) {
    const double v = kl.values[i];
    if (v >= th.kl_max) {
      if (first_bad < 0) first_bad = kl.index[i];
      if (v > worst) {
        worst = v;
        worst_idx = kl.index[i];
      }
    }
  }
  if (first_bad >= 0) {
    f.diagnoses.push_back(make("AGT.d4", updates(first_bad, worst_idx), worst, th.kl_max,
                               "mean KL divergence between consecutive probe-batch outputs "
                               "reached " + num(worst) + " at update " +
                                   std::to_string(worst_idx) + " (limit " + num(th.kl_max) +
                                   ")"));
  }
  return f;
}

void ActionSourceTally::add(const event::Step& s, double tol) {
  if (s.action_probs_main.empty() || s.action_probs_used.empty()) return;
  ++steps;
  if (first_ep < 0) first_ep = s.ep;
  last_ep = s.ep;
  const bool not_main = linf(s.action_probs_used, s.action_probs_main) > tol;
  if (not_main) ++used_not_main;
  if (s.action_probs_target.empty()) return;
  ++steps_with_target;
  if (linf(s.action_probs_main, s.action_probs_target) > tol) {
    ++informative;
    if (not_main && linf(s.action_probs_used, s.action_probs_target) <= tol) ++used_is_target;
  }
}

Findings check_actions_source(const ActionSourceTally& t, const RlThresholds& th) {
  Findings f;
  const Scope scope = episodes(std::max<std::int64_t>(t.first_ep, 0),
                               std::max<std::int64_t>(t.last_ep, 0));
  if (t.steps == 0) {
    f.notes.push_back(make("AGT.n1", scope, 0.0, 0.0,
                           "no steps carry both main and used action probabilities"));
    return f;
  }
  bool fired = false;
  if (t.informative >= th.action_source_min_steps) {
    const double frac = static_cast<double>(t.used_is_target) / static_cast<double>(t.informative);
    if (frac >= th.action_source_quorum) {
      fired = true;
      f.diagnoses.push_back(make("AGT.d3", scope, frac, th.action_source_quorum,
                                 "actions follow the target model's probabilities instead of "
                                 "the main model's on " + num(100.0 * frac) + "% of " +
                                     std::to_string(t.informative) +
                                     " steps where the two models disagree"));
    }
  }
  if (!fired && t.steps >= th.action_source_min_steps) {
    const double frac = static_cast<double>(t.used_not_main) / static_cast<double>(t.steps);
    if (frac >= th.action_source_quorum) {
      f.notes.push_back(make("AGT.n2", scope, frac, th.action_source_quorum,
                             "used action probabilities match neither the main nor the target "
                             "model on " + num(100.0 * frac) + "% of steps; source unknown"));
    }
  }
  return f;
}

Findings check_actions_source(std::span<const event::Step> steps, const RlThresholds& th) {
  ActionSourceTally t;
  for (const auto& s : steps) t.add(s, th.prob_match_tol);
  return check_actions_source(t, th);
}

// --- environment ---------------------------------------------------------------

void ProbeSummary::add_step(const event::Step& s) {
  bool bad = !std::isfinite(s.reward);
  for (double x : s.state) bad = bad || !std::isfinite(x);
  if (bad) {
    ++nonfinite_values;
    if (first_nonfinite_ep < 0) first_nonfinite_ep = s.ep;
  }
  if (std::isfinite(s.reward)) max_abs_reward = std::max(max_abs_reward, std::abs(s.reward));
}

void ProbeSummary::add_episode(double total_reward, double max_reward) {
  ++episodes;
  if (total_reward >= max_reward) ++episodes_at_max_reward;
}

Findings check_environment(const ProbeSummary& p, const RunMeta& meta, const RlThresholds& th) {
  Findings f;
  const Scope scope = episodes(0, std::max<std::int64_t>(meta.probe_episodes - 1, 0));
  if (p.episodes == 0) {
    f.notes.push_back(make("ENV.n1", scope, 0.0, 0.0,
                           "no probe episodes; environment checks skipped"));
    return f;
  }
  if (p.nonfinite_values > 0) {
    f.diagnoses.push_back(make("ENV.d1", scope, static_cast<double>(p.nonfinite_values), 0.0,
                               std::to_string(p.nonfinite_values) +
                                   " probe step(s) carry NaN or infinite states or rewards, "
                                   "first in episode " +
                                   std::to_string(p.first_nonfinite_ep)));
  }
  if (p.max_abs_reward > th.reward_abs_max) {
    f.diagnoses.push_back(make("ENV.d2", scope, p.max_abs_reward, th.reward_abs_max,
                               "probe rewards reach magnitude " + num(p.max_abs_reward) +
                                   ", above " + num(th.reward_abs_max) +
                                   "; rewards look unnormalized"));
  }
  const double frac =
      static_cast<double>(p.episodes_at_max_reward) / static_cast<double>(p.episodes);
  if (frac > th.easy_env_fraction) {
    f.diagnoses.push_back(make("ENV.d3", scope, frac, th.easy_env_fraction,
                               std::to_string(p.episodes_at_max_reward) + " of " +
                                   std::to_string(p.episodes) +
                                   " random-policy episodes reach the maximum reward"));
  }
  return f;
}

// --- states, actions, steps -------------------------------------------------------

Findings check_states(std::span<const EpisodeTrace> eps, const EpisodeTrace* previous,
                      const RlThresholds& th) {
  Findings f;
  bool d1 = false;
  bool d2 = false;
  bool d3 = false;
  const std::size_t limit = static_cast<std::size_t>(th.repeat_run_length);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const EpisodeTrace& e = eps[i];
    if (e.stage == Stage::Probe) continue;
    if (!d1) {
      double worst = 0.0;
      double bound = 0.0;
      double excess = -1.0;
      for (const auto& s : e.states) {
        for (double x : s) {
          if (x >= th.obs_low && x <= th.obs_high) continue;
          const double over = std::isnan(x) ? kInfinity
                                            : std::max(x - th.obs_high, th.obs_low - x);
          if (over > excess) {
            excess = over;
            worst = x;
            bound = (std::isnan(x) || x > th.obs_high) ? th.obs_high : th.obs_low;
          }
        }
      }
      if (excess >= 0.0) {
        d1 = true;
        f.diagnoses.push_back(make("STT.d1", episodes(e.ep, e.ep), worst, bound,
                                   "observation component " + num(worst) + " in episode " +
                                       std::to_string(e.ep) + " lies outside [" +
                                       num(th.obs_low) + ", " + num(th.obs_high) + "]"));
      }
    }
    if (e.stage != Stage::Late) continue;
    if (!d2) {
      const std::size_t run = longest_cycle_run(e.states);
      if (run > limit) {
        d2 = true;
        f.diagnoses.push_back(make("STT.d2", episodes(e.ep, e.ep), static_cast<double>(run),
                                   static_cast<double>(limit),
                                   "episode " + std::to_string(e.ep) + " repeats a cycle of states for " +
                                       std::to_string(run) + " steps"));
      }
    }
    const EpisodeTrace* prev = i > 0 ? &eps[i - 1] : previous;
    if (!d3 && prev && prev->stage != Stage::Probe) {
      const std::size_t shared = common_prefix(prev->states, e.states);
      if (shared > limit) {
        d3 = true;
        f.diagnoses.push_back(make("STT.d3", episodes(prev->ep, e.ep),
                                   static_cast<double>(shared), static_cast<double>(limit),
                                   "episodes " + std::to_string(prev->ep) + " and " +
                                       std::to_string(e.ep) + " share their first " +
                                       std::to_string(shared) + " states"));
      }
    }
  }
  return f;
}

Findings check_action_repeats(std::span<const EpisodeTrace> eps, const EpisodeTrace* previous,
                              const RlThresholds& th) {
  Findings f;
  bool d5 = false;
  bool d6 = false;
  const std::size_t limit = static_cast<std::size_t>(th.repeat_run_length);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const EpisodeTrace& e = eps[i];
    if (e.stage == Stage::Probe) continue;
    if (!d5) {
      const std::size_t run = longest_identical_run(e.actions);
      if (run > limit) {
        d5 = true;
        f.diagnoses.push_back(make("ACN.d5", episodes(e.ep, e.ep), static_cast<double>(run),
                                   static_cast<double>(limit),
                                   "episode " + std::to_string(e.ep) + " repeats the same action " +
                                       std::to_string(run) + " times in a row"));
      }
    }
    const EpisodeTrace* prev = i > 0 ? &eps[i - 1] : previous;
    if (!d6 && prev && prev->stage != Stage::Probe) {
      const std::size_t shared = common_prefix(prev->actions, e.actions);
      if (shared > limit) {
        d6 = true;
        f.diagnoses.push_back(make("ACN.d6", episodes(prev->ep, e.ep),
                                   static_cast<double>(shared), static_cast<double>(limit),
                                   "episodes " + std::to_string(prev->ep) + " and " +
                                       std::to_string(e.ep) + " open with the same " +
                                       std::to_string(shared) + " actions"));
      }
    }
  }
  return f;
}

Findings check_steps(const Series& lengths, const Series& returns, const RunMeta& meta,
                     const RlThresholds& th) {
  Findings f;
  if (lengths.empty() || returns.empty()) {
    f.notes.push_back(make("STP.n1", episodes_of(lengths), 0.0, 0.0,
                           "no Late-stage episodes; step checks skipped"));
    return f;
  }
  std::size_t capped = 0;
  for (double v : lengths.values) {
    if (v == static_cast<double>(meta.max_steps_per_episode)) ++capped;
  }
  const double frac = static_cast<double>(capped) / static_cast<double>(lengths.size());
  const double avg = mean(returns.values);
  if (frac >= th.step_cap_fraction && avg < th.low_reward_fraction) {
    f.diagnoses.push_back(make("STP.d1", episodes_of(lengths), avg, th.low_reward_fraction,
                               num(100.0 * frac) + "% of Late episodes stop at the step cap of " +
                                   std::to_string(meta.max_steps_per_episode) +
                                   " with mean normalized return " + num(avg)));
  }
  return f;
}

Findings check_exploration(const Series& ef, const RlThresholds& th) {
  Findings f;
  const Scope scope{Scope::Kind::Steps, ef.empty() ? 0 : ef.index.front(),
                    ef.empty() ? 0 : ef.index.back()};
  if (ef.size() < 3) {
    f.notes.push_back(make("EXP.n1", scope, static_cast<double>(ef.size()), 3.0,
                           "fewer than 3 exploration values; exploration checks skipped"));
    return f;
  }
  if (!strictly_monotone_decreasing(ef, th.monotone_tol)) {
    double rise = -kInfinity;
    for (std::size_t i = 1; i < ef.size(); ++i) rise = std::max(rise, ef.values[i] - ef.values[i - 1]);
    const LinearFit fit = linear_fit(ef);
    if (rise > th.monotone_tol) {
      f.diagnoses.push_back(make("EXP.d1", scope, rise, th.monotone_tol,
                                 "exploration factor increases by up to " + num(rise) +
                                     " between consecutive values; it should decay monotonically"));
    } else {
      f.diagnoses.push_back(make("EXP.d1", scope, fit.slope, 0.0,
                                 "exploration factor does not decay (fitted slope " +
                                     num(fit.slope) + ")"));
    }
  }
  const double curv = max_abs_second_derivative(ef, true, th.curvature_min_range);
  if (curv > th.curvature_max) {
    f.diagnoses.push_back(make("EXP.d2", scope, curv, th.curvature_max,
                               "exploration factor changes abruptly: normalized second "
                               "derivative " + num(curv) + " exceeds " + num(th.curvature_max)));
  }
  return f;
}

std::size_t reward_std_window(std::int64_t total_episodes) {
  const std::int64_t five_percent = (5 * total_episodes + 99) / 100;
  return static_cast<std::size_t>(std::max<std::int64_t>(5, five_percent));
}

Findings check_reward_std_early(const Series& rstd, const RlThresholds& th) {
  Findings f;
  if (rstd.size() < 2) {
    f.notes.push_back(make("RWD.n1", episodes_of(rstd), static_cast<double>(rstd.size()), 2.0,
                           "Early window too short for the reward-std fit"));
    return f;
  }
  const LinearFit fit = linear_fit(rstd);
  const double avg = mean(rstd.values);
  if (fit.rmse_residual < th.stagnation_rmse && avg < th.reward_std_mean_max) {
    f.diagnoses.push_back(make("RWD.d1", episodes_of(rstd), fit.rmse_residual,
                               th.stagnation_rmse,
                               "episode rewards barely vary during early exploration (R_std mean " +
                                   num(avg) + ", fit RMSE " + num(fit.rmse_residual) + ")"));
  }
  return f;
}

Findings check_reward_std_late(const Series& rstd, const Series& returns, const RlThresholds& th) {
  Findings f;
  if (rstd.size() >= 2) {
    const LinearFit fit = linear_fit(rstd);
    if (std::abs(fit.slope) > th.slope_fluctuation) {
      f.diagnoses.push_back(make("RWD.d2", episodes_of(rstd), fit.slope, th.slope_fluctuation,
                                 "reward standard deviation trends with slope " + num(fit.slope) +
                                     " in the Late window; rewards fluctuate instead of settling"));
    }
  } else {
    f.notes.push_back(make("RWD.n1", episodes_of(rstd), static_cast<double>(rstd.size()), 2.0,
                           "Late window too short for the reward-std fit"));
  }
  if (returns.size() >= 2) {
    const double avg = mean(returns.values);
    const LinearFit fit = linear_fit(returns);
    if (avg < th.low_reward_fraction && std::abs(fit.slope) < th.flat_return_slope) {
      f.diagnoses.push_back(make("RWD.d3", episodes_of(returns), avg, th.low_reward_fraction,
                                 "Late-window normalized return stays at " + num(avg) +
                                     " with no upward trend"));
    }
  }
  return f;
}

namespace {
Findings reward_window(const Series& returns, std::int64_t total, const RlThresholds& th,
                       bool early) {
  const std::size_t w = reward_std_window(total);
  if (returns.size() < w) {
    Findings f;
    f.notes.push_back(make("RWD.n1", episodes_of(returns), static_cast<double>(returns.size()),
                           static_cast<double>(w),
                           "stage window holds fewer episodes than the R_std window"));
    return f;
  }
  const Series rstd = windowed_std(returns, w);
  return early ? check_reward_std_early(rstd, th) : check_reward_std_late(rstd, returns, th);
}
}  // namespace

Findings check_reward_early(const Series& returns, std::int64_t total, const RlThresholds& th) {
  return reward_window(returns, total, th, true);
}

Findings check_reward_late(const Series& returns, std::int64_t total, const RlThresholds& th) {
  return reward_window(returns, total, th, false);
}

Findings check_entropy_early(const Series& se, const RlThresholds& th) {
  Findings f;
  if (se.size() < 2) {
    f.notes.push_back(make("ACN.n1", episodes_of(se), static_cast<double>(se.size()), 2.0,
                           "too few episodes for the Early entropy fit"));
    return f;
  }
  const LinearFit fit = linear_fit(se);
  if (fit.slope > th.entropy_rise_slope) {
    f.diagnoses.push_back(make("ACN.d1", episodes_of(se), fit.slope, th.entropy_rise_slope,
                               "action entropy rises with slope " + num(fit.slope) +
                                   " during early training"));
  }
  if (std::abs(fit.slope) < th.entropy_stagnation && fit.rmse_residual < th.stagnation_rmse) {
    f.diagnoses.push_back(make("ACN.d2", episodes_of(se), fit.slope, th.entropy_stagnation,
                               "action entropy stagnates during early training (slope " +
                                   num(fit.slope) + ", fit RMSE " + num(fit.rmse_residual) + ")"));
  }
  return f;
}

Findings check_entropy_late(const Series& se, const RlThresholds& th) {
  Findings f;
  if (se.size() < 3) {
    f.notes.push_back(make("ACN.n1", episodes_of(se), static_cast<double>(se.size()), 3.0,
                           "too few Late episodes for the entropy curvature check"));
    return f;
  }
  const double curv = max_abs_second_derivative(se, true, th.curvature_min_range);
  if (curv > th.curvature_max) {
    f.diagnoses.push_back(make("ACN.d3", episodes_of(se), curv, th.curvature_max,
                               "action entropy changes abruptly in the Late window "
                               "(normalized second derivative " + num(curv) + ")"));
  }
  return f;
}

Findings check_entropy_fluctuation(const Series& se, std::size_t window, const RlThresholds& th) {
  Findings f;
  const Series tail = se.tail(window);
  if (tail.size() < 3) return f;
  const LinearFit fit = linear_fit(tail);
  if (fit.rmse_residual > th.stagnation_rmse) {
    f.diagnoses.push_back(make("ACN.d4", episodes_of(tail), fit.rmse_residual, th.stagnation_rmse,
                               "action entropy fluctuates strongly around its trend (fit RMSE " +
                                   num(fit.rmse_residual) + ")"));
  }
  return f;
}

Findings check_uncertainty(const Series& eu, const RlThresholds& th) {
  Findings f;
  if (eu.empty()) return f;
  const double latest = eu.values.back();
  if (latest > th.eu_std_max || std::isnan(latest)) {
    f.diagnoses.push_back(make("ACN.d7", updates(eu.index.back(), eu.index.back()), latest,
                               th.eu_std_max,
                               "MC-dropout output std " + num(latest) +
                                   " is high late in training; the model lacks knowledge of "
                                   "the states it visits"));
  }
  return f;
}

// --- q targets -----------------------------------------------------------------

double q_target_reference(const Transition& t, double discount) {
  return t.done ? t.reward : t.reward + discount * t.max_next_q;
}

Findings check_qtargets(const event::QTargetBatch& b, const RunMeta& meta, const RlThresholds& th) {
  if (b.transitions.size() != b.predicted_targets.size()) {
    throw std::invalid_argument("QTargetBatch: " + std::to_string(b.transitions.size()) +
                                " transitions but " + std::to_string(b.predicted_targets.size()) +
                                " predicted targets");
  }
  Findings f;
  double worst = 0.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < b.transitions.size(); ++i) {
    double dev = std::abs(q_target_reference(b.transitions[i], meta.discount) - b.predicted_targets[i]);
    if (std::isnan(dev)) dev = kInfinity;
    if (dev > worst) {
      worst = dev;
      at = i;
    }
  }
  if (worst > th.qtarget_tol) {
    f.diagnoses.push_back(make("QTR.d1", updates(b.update_idx, b.update_idx), worst, th.qtarget_tol,
                               "predicted Q-target deviates from r + gamma * max Q'(s') * (1 - done) "
                               "by " + num(worst) + " (transition " + std::to_string(at) +
                                   " of update " + std::to_string(b.update_idx) +
                                   ", gamma " + num(meta.discount) + ")"));
  }
  return f;
}

}  // namespace rldx
