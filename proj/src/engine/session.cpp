#include <algorithm>
#include <cmath>

#include "rldx/engine.hpp"
#include "rldx/error.hpp"

namespace rldx {
namespace {

std::string s(std::int64_t v) { return std::to_string(v); }

}  // namespace

Session::Session(CheckConfig config, const Catalog& catalog)
    : config_(std::move(config)), catalog_(&catalog) {
  config_.validate();
}

const RunMeta& Session::meta() const {
  if (!meta_) throw Error("no RunStart ingested yet");
  return *meta_;
}

StageWindows Session::windows() const {
  meta();
  return windows_;
}

Stage Session::stage_of(std::int64_t ep) const {
  return rldx::stage_of(windows_, meta().total_episodes, ep).stage;
}

Stage Session::current_stage() const {
  if (open_ep_) return stage_of(*open_ep_);
  if (last_ep_) return stage_of(*last_ep_);
  return meta_ && meta_->probe_episodes > 0 ? Stage::Probe : Stage::Early;
}

CustomCheckHandle Session::register_custom_check(std::string id, StageMask stages, Trigger trigger,
                                                 CustomRule rule) {
  if (id.empty()) throw RegistrationError("custom check id must not be empty");
  if (!rule) throw RegistrationError("custom check '" + id + "' has no rule");
  if (catalog_->contains(id) || Catalog::builtin().contains(id)) {
    throw RegistrationError("custom check id '" + id + "' collides with a built-in diagnostic");
  }
  for (const auto& c : custom_) {
    if (c.id == id) throw RegistrationError("custom check id '" + id + "' is already registered");
  }
  custom_.push_back({id, stages, trigger, std::move(rule)});
  return {custom_.back().id, custom_.size() - 1};
}

std::vector<Diagnosis> Session::ingest(const TraceEvent& e) {
  if (finalized_ && !ended_) throw OrderingError("session already finalized");
  if (ended_) {
    throw OrderingError(std::string(event_tag(e)) + " (event " + s(summary_.events) +
                        ") after RunEnd (event " + s(summary_.events - 1) + ")");
  }
  if (!meta_ && !std::holds_alternative<event::RunStart>(e)) {
    throw OrderingError(std::string(event_tag(e)) + " before RunStart");
  }
  fresh_.clear();
  std::visit([this](const auto& ev) { on(ev); }, e);
  ++summary_.events;
  return std::move(fresh_);
}

// --- event handlers ------------------------------------------------------------

void Session::on(const event::RunStart& e) {
  if (meta_) throw OrderingError("second RunStart after run '" + meta_->run_id + "' started");
  e.meta.validate();
  windows_ = compute_stage_windows(e.meta, config_.early_fraction, config_.late_fraction);
  meta_ = e.meta;
  const std::size_t window = static_cast<std::size_t>(windows_.early_end - windows_.early_begin);
  store_.episode_retention_ =
      std::max<std::size_t>({2 * window, static_cast<std::size_t>(config_.period_episodes) + 1, 2});
}

void Session::on(const event::EpisodeStart& e) {
  if (open_ep_) {
    throw OrderingError("EpisodeStart " + s(e.ep) + " while episode " + s(*open_ep_) +
                        " is still open");
  }
  if (last_ep_ && e.ep <= *last_ep_) {
    throw OrderingError("episode " + s(e.ep) + " after episode " + s(*last_ep_));
  }
  const Stage stage = stage_of(e.ep);
  open_ep_ = e.ep;
  last_ep_ = e.ep;
  last_t_.reset();
  current_ = EpisodeTrace{};
  current_.ep = e.ep;
  current_.stage = stage;
  current_probe_ = stage == Stage::Probe;
  entropy_sum_ = 0.0;
  entropy_steps_ = 0;
}

void Session::on(const event::Step& e) {
  if (!open_ep_) throw OrderingError("step for episode " + s(e.ep) + " outside any episode");
  if (e.ep != *open_ep_) {
    throw OrderingError("step for episode " + s(e.ep) + " inside episode " + s(*open_ep_));
  }
  if (last_t_ && e.t <= *last_t_) {
    throw OrderingError("step " + s(e.t) + " after step " + s(*last_t_) + " in episode " + s(e.ep));
  }
  last_t_ = e.t;
  current_.states.push_back(e.state);
  current_.actions.push_back(e.action);
  if (current_probe_) {
    store_.probe_.add_step(e);
    return;
  }
  store_.action_source_.add(e, config_.rl.prob_match_tol);
  if (e.action_probs_used.size() >= 2 && is_simplex(e.action_probs_used)) {
    entropy_sum_ += normalized_entropy(e.action_probs_used);
    ++entropy_steps_;
  }
}

void Session::on(const event::EpisodeEnd& e) {
  if (!open_ep_ || *open_ep_ != e.ep) {
    throw OrderingError("EpisodeEnd " + s(e.ep) + " does not close the open episode " +
                        (open_ep_ ? s(*open_ep_) : std::string("(none)")));
  }
  open_ep_.reset();
  if (current_probe_) {
    ++summary_.probe_episodes_seen;
    store_.probe_.add_episode(e.total_reward, meta_->max_reward);
    if (e.ep + 1 >= windows_.probe_end && !env_done_) run_environment_checks();
    return;
  }
  ++summary_.episodes_seen;
  SeriesStore& st = store_;
  st.returns_.push_back(e.ep, e.total_reward);
  const double norm = meta_->max_reward != 0.0 ? e.total_reward / std::abs(meta_->max_reward)
                                               : e.total_reward;
  st.normalized_returns_.push_back(e.ep, norm);
  st.episode_lengths_.push_back(e.ep, static_cast<double>(e.steps));
  if (entropy_steps_ > 0) {
    st.entropy_.push_back(e.ep, entropy_sum_ / static_cast<double>(entropy_steps_));
  }
  const std::size_t w = reward_std_window(meta_->total_episodes);
  if (st.normalized_returns_.size() >= w) {
    const std::span<const double> all(st.normalized_returns_.values);
    st.reward_std_.push_back(e.ep, population_std(all.last(w)));
  }
  st.episodes_.push_back(std::move(current_));
  while (st.episodes_.size() > st.episode_retention_) st.episodes_.pop_front();
  ++unchecked_episodes_;

  const std::int64_t done = e.ep + 1;
  const bool due = done % config_.period_episodes == 0 ||
                   (!early_done_ && done >= windows_.early_end) || done >= windows_.late_end;
  if (due) episode_trigger(e.ep, done >= windows_.late_end);
}

void Session::on(const event::ExplorationValue& e) {
  if (last_global_step_ && e.global_step <= *last_global_step_) {
    throw OrderingError("exploration value at step " + s(e.global_step) + " after step " +
                        s(*last_global_step_));
  }
  last_global_step_ = e.global_step;
  store_.exploration_.push_back(e.global_step, e.value);
}

void Session::on(const event::ModelUpdate& e) {
  if (last_update_ && e.update_idx <= *last_update_) {
    throw OrderingError("update " + s(e.update_idx) + " after update " + s(*last_update_));
  }
  last_update_ = e.update_idx;
  ++summary_.updates_seen;
  store_.snapshots_.push_back(snapshot_of(e));
  store_.loss_.push_back(e.update_idx, e.loss);
  if (!e.probe_outputs.empty()) {
    if (last_probe_outputs_.size() == e.probe_outputs.size()) {
      bool valid = true;
      for (std::size_t b = 0; b < e.probe_outputs.size() && valid; ++b) {
        valid = is_simplex(e.probe_outputs[b]) && is_simplex(last_probe_outputs_[b]) &&
                e.probe_outputs[b].size() == last_probe_outputs_[b].size();
      }
      if (valid) store_.kl_.push_back(e.update_idx, probe_kl(last_probe_outputs_, e.probe_outputs));
    }
    last_probe_outputs_ = e.probe_outputs;
  }
  nn_window_.push_back(e);
  ++nn_fresh_;
  if (e.update_idx % config_.period_updates == 0) update_trigger(false);
}

void Session::on(const event::TargetSync& e) {
  if (!last_update_ || e.update_idx > *last_update_) {
    throw OrderingError("TargetSync for update " + s(e.update_idx) + " before that update (last " +
                        (last_update_ ? s(*last_update_) : std::string("none")) + ")");
  }
  store_.syncs_.push_back(e.update_idx);
}

void Session::on(const event::McDropoutSamples& e) {
  if (e.samples.size() < 2) return;
  const double eu = mc_dropout_dispersion(e.samples);
  if (!store_.eu_.empty() && e.update_idx <= store_.eu_.index.back()) {
    throw OrderingError("MC-dropout samples for update " + s(e.update_idx) + " after update " +
                        s(store_.eu_.index.back()));
  }
  store_.eu_.push_back(e.update_idx, eu);
}

void Session::on(const event::QTargetBatch& e) {
  if (e.transitions.size() != e.predicted_targets.size()) {
    throw Error("QTargetBatch for update " + s(e.update_idx) + " has " +
                s(static_cast<std::int64_t>(e.transitions.size())) + " transitions but " +
                s(static_cast<std::int64_t>(e.predicted_targets.size())) + " predicted targets");
  }
  pending_qtargets_.push_back(e);
}

void Session::on(const event::RunEnd& e) {
  if (e.run_id != meta_->run_id) {
    throw OrderingError("RunEnd for run '" + e.run_id + "' inside run '" + meta_->run_id + "'");
  }
  if (open_ep_) {
    throw OrderingError("RunEnd while episode " + s(*open_ep_) + " is still open");
  }
  ended_ = true;
  summary_.complete = true;
  if (!env_done_) run_environment_checks();
  episode_trigger(last_ep_.value_or(0), true);
  update_trigger(true);
}

// --- scheduling ----------------------------------------------------------------

void Session::run_environment_checks() {
  env_done_ = true;
  if (!enabled("ENV")) return;
  ++summary_.checks_executed;
  emit(check_environment(store_.probe_, *meta_, config_.rl), Stage::Probe);
}

void Session::episode_trigger(std::int64_t ep, bool final) {
  ++summary_.triggers_fired;
  const RlThresholds& th = config_.rl;
  const Stage stage = last_ep_ ? stage_of(ep) : Stage::Early;
  if (!env_done_ && ep + 1 >= windows_.probe_end) run_environment_checks();

  if (unchecked_episodes_ > 0) {
    const auto& eps = store_.episodes_;
    const std::size_t n = std::min(unchecked_episodes_, eps.size());
    const std::vector<EpisodeTrace> batch(eps.end() - static_cast<std::ptrdiff_t>(n), eps.end());
    const EpisodeTrace* prev = eps.size() > n ? &eps[eps.size() - n - 1] : nullptr;
    unchecked_episodes_ = 0;
    if (enabled("STT")) {
      ++summary_.checks_executed;
      emit(check_states(batch, prev, th), batch.back().stage);
    }
    if (enabled("ACN")) {
      ++summary_.checks_executed;
      emit(check_action_repeats(batch, prev, th), batch.back().stage);
    }
  }

  if (enabled("EXP") && !store_.exploration_.empty()) {
    ++summary_.checks_executed;
    emit(check_exploration(store_.exploration_, th), stage);
  }

  const std::int64_t done = ep + 1;
  if (!early_done_ && (done >= windows_.early_end || final)) {
    early_done_ = true;
    if (enabled("RWD")) {
      ++summary_.checks_executed;
      emit(check_reward_early(
               store_.normalized_returns_.slice(windows_.early_begin, windows_.early_end),
               meta_->total_episodes, th),
           Stage::Early);
    }
    if (enabled("ACN")) {
      ++summary_.checks_executed;
      emit(check_entropy_early(store_.entropy_.slice(windows_.early_begin, windows_.early_end), th),
           Stage::Early);
    }
  }

  if (enabled("ACN")) {
    const std::size_t window =
        th.entropy_fluctuation_window > 0
            ? static_cast<std::size_t>(th.entropy_fluctuation_window)
            : static_cast<std::size_t>(windows_.early_end - windows_.early_begin);
    if (store_.entropy_.size() >= window) {
      ++summary_.checks_executed;
      emit(check_entropy_fluctuation(store_.entropy_, window, th), stage);
    }
  }

  if (!late_done_ && final) {
    late_done_ = true;
    const Series lengths = store_.episode_lengths_.slice(windows_.late_begin, windows_.late_end);
    const Series returns = store_.normalized_returns_.slice(windows_.late_begin, windows_.late_end);
    if (enabled("STP")) {
      ++summary_.checks_executed;
      emit(check_steps(lengths, returns, *meta_, th), Stage::Late);
    }
    if (enabled("RWD")) {
      ++summary_.checks_executed;
      emit(check_reward_late(returns, meta_->total_episodes, th), Stage::Late);
    }
    if (enabled("ACN")) {
      ++summary_.checks_executed;
      emit(check_entropy_late(store_.entropy_.slice(windows_.late_begin, windows_.late_end), th),
           Stage::Late);
    }
  }
  run_custom(Trigger::Episode, stage);
}

void Session::update_trigger(bool final) {
  if (final && nn_fresh_ == 0 && pending_qtargets_.empty() && store_.snapshots_.empty()) return;
  ++summary_.triggers_fired;
  const Stage stage = current_stage();
  const RlThresholds& th = config_.rl;

  if (enabled("AGT")) {
    if (!store_.snapshots_.empty()) {
      ++summary_.checks_executed;
      emit(check_agent(store_.snapshots_, store_.syncs_, store_.kl_, *meta_, th), stage);
    }
    ++summary_.checks_executed;
    emit(check_actions_source(store_.action_source_, th), stage);
  }

  if (enabled("QTR")) {
    for (const auto& b : pending_qtargets_) {
      ++summary_.checks_executed;
      emit(check_qtargets(b, *meta_, th), stage);
    }
  }
  pending_qtargets_.clear();

  if (enabled("NN") && nn_fresh_ > 0) {
    const NnThresholds& nn = config_.nn;
    const std::span<const event::ModelUpdate> window(nn_window_);
    summary_.checks_executed += 4;
    emit(check_parameters(window, !first_update_checked_, nn), stage);
    emit(check_gradients(window, nn), stage);
    emit(check_activations(window, nn), stage);
    emit(check_loss(store_.loss_, nn), stage);
  }
  if (nn_fresh_ > 0) {
    first_update_checked_ = true;
    const auto keep = static_cast<std::size_t>(std::max<long long>(config_.nn.frozen_updates - 1, 0));
    if (nn_window_.size() > keep) {
      nn_window_.erase(nn_window_.begin(),
                       nn_window_.end() - static_cast<std::ptrdiff_t>(keep));
    }
    nn_fresh_ = 0;
  }

  if (enabled("ACN") && stage == Stage::Late) {
    ++summary_.checks_executed;
    emit(check_uncertainty(store_.eu_, th), stage);
  }
  run_custom(Trigger::Update, stage);
}

void Session::run_custom(Trigger trigger, Stage stage) {
  for (const auto& c : custom_) {
    if (c.trigger != trigger || (c.stages & stage_bit(stage)) == 0) continue;
    if (!config_.family_enabled(std::string(family_of(c.id)))) continue;
    ++summary_.checks_executed;
    std::vector<Diagnosis> out = c.rule(store_, *meta_);
    for (auto& d : out) {
      d.diagnostic_id = c.id;
      if (d.message.empty()) d.message = c.id + " fired";
      emit_one(std::move(d), stage, false);
    }
  }
}

// --- output --------------------------------------------------------------------

void Session::emit(Findings&& f, Stage stage) {
  for (auto& d : f.diagnoses) emit_one(std::move(d), stage, false);
  for (auto& n : f.notes) emit_one(std::move(n), stage, true);
}

void Session::emit_one(Diagnosis d, Stage stage, bool note) {
  d.stage = stage;
  if (!note && d.severity == Severity::Info) {
    if (config_.fire_once && !fired_.insert({d.diagnostic_id, stage}).second) return;
    if (const Catalog::Entry* entry = catalog_->find(d.diagnostic_id)) {
      d.message = entry->title + ": " + d.message;
    }
    notes_.push_back(std::move(d));
    return;
  }
  if (note) {
    if (!noted_.insert(d.diagnostic_id).second) return;
    notes_.push_back(std::move(d));
    return;
  }
  if (config_.fire_once && !fired_.insert({d.diagnostic_id, stage}).second) return;
  if (const Catalog::Entry* entry = catalog_->find(d.diagnostic_id)) {
    d.message = entry->title + ": " + d.message;
    if (d.recommendations.empty()) d.recommendations = entry->recommendations;
  }
  report_.push_back(d);
  fresh_.push_back(std::move(d));
}

Report Session::finalize() {
  if (!finalized_) {
    finalized_ = true;
    if (meta_ && !ended_) {
      if (!env_done_) run_environment_checks();
      if (unchecked_episodes_ > 0 || !early_done_) episode_trigger(last_ep_.value_or(0), true);
      update_trigger(true);
    }
  }
  Report r;
  if (meta_) {
    r.run_id = meta_->run_id;
    r.meta = *meta_;
  }
  r.diagnoses = report_;
  r.notes = notes_;
  r.eu = store_.eu_;
  r.reward_std = store_.reward_std_;
  r.kl = store_.kl_;
  r.summary = summary_;
  return r;
}

}  // namespace rldx
