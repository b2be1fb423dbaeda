#include <cmath>

#include "json.hpp"
#include "rldx/engine.hpp"

namespace rldx {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json real(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  return v;
}

std::string_view to_string(Scope::Kind k) {
  switch (k) {
    case Scope::Kind::Episodes: return "episodes";
    case Scope::Kind::Updates: return "updates";
    case Scope::Kind::Steps: return "steps";
  }
  return "episodes";
}

ordered_json diagnosis_json(const Diagnosis& d) {
  ordered_json j;
  j["id"] = d.diagnostic_id;
  j["severity"] = std::string(to_string(d.severity));
  j["stage"] = std::string(to_string(d.stage));
  j["scope"] = {{"kind", std::string(to_string(d.scope.kind))},
                {"begin", d.scope.begin},
                {"end", d.scope.end}};
  j["observed"] = real(d.observed);
  j["threshold"] = real(d.threshold);
  j["message"] = d.message;
  j["recommendations"] = d.recommendations;
  return j;
}

ordered_json series_json(const Series& s) {
  ordered_json a = ordered_json::array();
  for (std::size_t i = 0; i < s.size(); ++i) a.push_back({s.index[i], real(s.values[i])});
  return a;
}

}  // namespace

std::string Report::to_json() const {
  ordered_json j;
  j["run_id"] = run_id;
  j["meta"] = {{"run_id", meta.run_id},
               {"total_episodes", meta.total_episodes},
               {"max_steps_per_episode", meta.max_steps_per_episode},
               {"max_reward", real(meta.max_reward)},
               {"discount", real(meta.discount)},
               {"action_space_size", meta.action_space_size},
               {"target_sync_period", meta.target_sync_period},
               {"probe_episodes", meta.probe_episodes}};
  ordered_json ds = ordered_json::array();
  for (const auto& d : diagnoses) ds.push_back(diagnosis_json(d));
  j["diagnoses"] = std::move(ds);
  ordered_json ns = ordered_json::array();
  for (const auto& n : notes) ns.push_back(diagnosis_json(n));
  j["notes"] = std::move(ns);
  j["monitor_series"] = {{"eu", series_json(eu)},
                         {"reward_std", series_json(reward_std)},
                         {"kl", series_json(kl)}};
  j["summary"] = {{"events", summary.events},
                  {"episodes_seen", summary.episodes_seen},
                  {"probe_episodes_seen", summary.probe_episodes_seen},
                  {"updates_seen", summary.updates_seen},
                  {"triggers_fired", summary.triggers_fired},
                  {"checks_executed", summary.checks_executed},
                  {"complete", summary.complete}};
  return j.dump(2) + "\n";
}

std::string series_to_csv(const Series& s) {
  std::string out = "index,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += std::to_string(s.index[i]);
    out += ',';
    out += format_real(s.values[i]);
    out += '\n';
  }
  return out;
}

}  // namespace rldx
