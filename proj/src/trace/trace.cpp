#include "rldx/trace.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>

#include "rldx/error.hpp"

namespace rldx {
namespace {

// NaN compares equal to NaN so that decoded sentinels round-trip.
bool same_real(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return a == b && std::signbit(a) == std::signbit(b);
}

bool same_reals(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_real(a[i], b[i])) return false;
  }
  return true;
}

template <class T>
bool same_matrix(const std::vector<std::vector<T>>& a, const std::vector<std::vector<T>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if constexpr (std::is_same_v<T, double>) {
      if (!same_reals(a[i], b[i])) return false;
    } else {
      if (!same_matrix(a[i], b[i])) return false;
    }
  }
  return true;
}

}  // namespace

void RunMeta::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid run metadata: " + what); };
  if (total_episodes < 5) fail("total_episodes must be >= 5");
  if (max_steps_per_episode < 1) fail("max_steps_per_episode must be positive");
  if (!std::isfinite(max_reward)) fail("max_reward must be finite");
  if (!(discount >= 0.0 && discount <= 1.0)) fail("discount must lie in [0, 1]");
  if (action_space_size < 2) fail("action_space_size must be >= 2");
  if (target_sync_period < 1) fail("target_sync_period must be positive");
  if (probe_episodes < 0 || probe_episodes >= total_episodes) {
    fail("probe_episodes must lie in [0, total_episodes)");
  }
}

bool TensorStats::operator==(const TensorStats& o) const {
  return name == o.name && same_real(mean, o.mean) && same_real(std, o.std) &&
         same_real(min, o.min) && same_real(max, o.max) && same_real(l2_norm, o.l2_norm) &&
         same_real(frac_zero, o.frac_zero) && same_real(frac_nonfinite, o.frac_nonfinite) &&
         digest == o.digest;
}

bool NamedValue::operator==(const NamedValue& o) const {
  return name == o.name && same_real(value, o.value);
}

bool Transition::operator==(const Transition& o) const {
  return same_real(reward, o.reward) && done == o.done && same_real(max_next_q, o.max_next_q);
}

namespace event {

bool Step::operator==(const Step& o) const {
  return ep == o.ep && t == o.t && same_reals(state, o.state) && action == o.action &&
         same_real(reward, o.reward) && done == o.done &&
         same_reals(action_probs_main, o.action_probs_main) &&
         same_reals(action_probs_used, o.action_probs_used) &&
         same_reals(action_probs_target, o.action_probs_target);
}

bool EpisodeEnd::operator==(const EpisodeEnd& o) const {
  return ep == o.ep && same_real(total_reward, o.total_reward) && steps == o.steps;
}

bool ExplorationValue::operator==(const ExplorationValue& o) const {
  return global_step == o.global_step && same_real(value, o.value);
}

bool ModelUpdate::operator==(const ModelUpdate& o) const {
  return update_idx == o.update_idx && same_real(loss, o.loss) && main_params == o.main_params &&
         target_params == o.target_params && grad_norms == o.grad_norms &&
         activations == o.activations && same_matrix(probe_outputs, o.probe_outputs);
}

bool McDropoutSamples::operator==(const McDropoutSamples& o) const {
  return update_idx == o.update_idx && same_matrix(samples, o.samples);
}

bool QTargetBatch::operator==(const QTargetBatch& o) const {
  return update_idx == o.update_idx && transitions == o.transitions &&
         same_reals(predicted_targets, o.predicted_targets);
}

}  // namespace event

std::string_view event_tag(const TraceEvent& e) {
  static constexpr std::string_view kTags[] = {
      "RunStart",   "EpisodeStart", "Step",         "EpisodeEnd",       "ExplorationValue",
      "ModelUpdate", "TargetSync",  "McDropoutSamples", "QTargetBatch", "RunEnd"};
  return kTags[e.index()];
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Info:
      return "info";
    case Severity::Warning:
      return "warning";
    case Severity::Critical:
      return "critical";
  }
  return "warning";
}

Severity severity_from_string(std::string_view s) {
  if (s == "info") return Severity::Info;
  if (s == "warning") return Severity::Warning;
  if (s == "critical") return Severity::Critical;
  throw ParseError("severity", "unknown severity '" + std::string(s) + "'");
}

std::string_view family_of(std::string_view id) {
  const auto dot = id.find('.');
  return dot == std::string_view::npos ? id : id.substr(0, dot);
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Probe:
      return "probe";
    case Stage::Early:
      return "early";
    case Stage::Mid:
      return "mid";
    case Stage::Late:
      return "late";
  }
  return "mid";
}

StageWindows compute_stage_windows(const RunMeta& meta, double early_fraction,
                                   double late_fraction) {
  if (!(early_fraction > 0.0) || !(late_fraction > 0.0) || early_fraction + late_fraction > 1.0) {
    throw ConfigError("early_fraction and late_fraction must be positive and sum to at most 1");
  }
  const std::int64_t n = meta.total_episodes;
  // The small offset keeps exact products such as 0.2 * 100 from rounding up.
  auto window = [n](double f) {
    return static_cast<std::int64_t>(std::ceil(f * static_cast<double>(n) - 1e-9));
  };
  StageWindows w;
  w.probe_end = meta.probe_episodes;
  w.early_begin = meta.probe_episodes;
  w.early_end = w.early_begin + window(early_fraction);
  w.late_end = n;
  w.late_begin = n - window(late_fraction);
  if (w.early_end > w.late_begin) {
    throw ConfigError("probe, early and late windows overlap: probe " +
                      std::to_string(meta.probe_episodes) + ", early ends at " +
                      std::to_string(w.early_end) + ", late begins at " +
                      std::to_string(w.late_begin));
  }
  return w;
}

StageInfo stage_of(const StageWindows& w, std::int64_t total_episodes, std::int64_t ep) {
  if (ep < 0 || ep >= total_episodes) {
    throw Error("episode " + std::to_string(ep) + " outside [0, " +
                std::to_string(total_episodes) + ")");
  }
  if (ep < w.probe_end) return {Stage::Probe, 0, w.probe_end};
  if (w.in_early(ep)) return {Stage::Early, w.early_begin, w.early_end};
  if (w.in_late(ep)) return {Stage::Late, w.late_begin, w.late_end};
  return {Stage::Mid, w.early_end, w.late_begin};
}

std::string format_real(double v) {
  if (std::isnan(v)) return "\"NaN\"";
  if (std::isinf(v)) return v > 0 ? "\"Inf\"" : "\"-Inf\"";
  if (v == 0.0) return std::signbit(v) ? "-0.0" : "0";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace rldx
