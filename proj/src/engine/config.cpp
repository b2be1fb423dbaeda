#include "rldx/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "rldx/error.hpp"

namespace rldx {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid configuration: " + what);
}

// Binds config field names to members so that parsing, validation messages and
// serialization share one table.
struct Binder {
  std::vector<std::pair<std::string, double*>> reals;
  std::vector<std::pair<std::string, long long*>> ints;

  void real(const char* name, double& v) { reals.emplace_back(name, &v); }
  void integer(const char* name, long long& v) { ints.emplace_back(name, &v); }

  void read(const json& obj, const std::string& section) {
    if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
      const std::string path = section.empty() ? key : section + "." + key;
      bool known = false;
      for (auto& [name, ptr] : reals) {
        if (name != key) continue;
        if (!value.is_number()) throw ConfigError("config field '" + path + "' must be a number");
        *ptr = value.get<double>();
        known = true;
      }
      for (auto& [name, ptr] : ints) {
        if (name != key) continue;
        if (!value.is_number_integer()) {
          throw ConfigError("config field '" + path + "' must be an integer");
        }
        *ptr = value.get<long long>();
        known = true;
      }
      if (!known) throw ConfigError("unknown config field '" + path + "'");
    }
  }

  void write(ordered_json& out) const {
    for (const auto& [name, ptr] : reals) out[name] = *ptr;
    for (const auto& [name, ptr] : ints) out[name] = *ptr;
  }
};

Binder bind(RlThresholds& t) {
  Binder b;
  b.real("kl_max", t.kl_max);
  b.real("obs_low", t.obs_low);
  b.real("obs_high", t.obs_high);
  b.real("reward_abs_max", t.reward_abs_max);
  b.real("easy_env_fraction", t.easy_env_fraction);
  b.real("low_reward_fraction", t.low_reward_fraction);
  b.real("stagnation_rmse", t.stagnation_rmse);
  b.real("slope_fluctuation", t.slope_fluctuation);
  b.real("entropy_rise_slope", t.entropy_rise_slope);
  b.real("entropy_stagnation", t.entropy_stagnation);
  b.real("curvature_max", t.curvature_max);
  b.integer("repeat_run_length", t.repeat_run_length);
  b.real("eu_std_max", t.eu_std_max);
  b.real("qtarget_tol", t.qtarget_tol);
  b.real("monotone_tol", t.monotone_tol);
  b.real("curvature_min_range", t.curvature_min_range);
  b.real("reward_std_mean_max", t.reward_std_mean_max);
  b.real("flat_return_slope", t.flat_return_slope);
  b.real("step_cap_fraction", t.step_cap_fraction);
  b.real("shared_model_quorum", t.shared_model_quorum);
  b.integer("shared_model_min_updates", t.shared_model_min_updates);
  b.real("action_source_quorum", t.action_source_quorum);
  b.integer("action_source_min_steps", t.action_source_min_steps);
  b.real("prob_match_tol", t.prob_match_tol);
  b.integer("entropy_fluctuation_window", t.entropy_fluctuation_window);
  return b;
}

Binder bind(NnThresholds& t) {
  Binder b;
  b.real("weight_norm_max", t.weight_norm_max);
  b.real("dead_fraction", t.dead_fraction);
  b.integer("frozen_updates", t.frozen_updates);
  b.real("grad_norm_min", t.grad_norm_min);
  b.real("grad_norm_max", t.grad_norm_max);
  b.real("activation_saturation_fraction", t.activation_saturation_fraction);
  b.integer("loss_window", t.loss_window);
  b.real("loss_rise_factor", t.loss_rise_factor);
  b.real("bias_init_max", t.bias_init_max);
  b.real("saturation_band", t.saturation_band);
  b.real("saturation_std", t.saturation_std);
  return b;
}

Binder bind_top(CheckConfig& c) {
  Binder b;
  b.integer("period_episodes", c.period_episodes);
  b.integer("period_updates", c.period_updates);
  b.real("early_fraction", c.early_fraction);
  b.real("late_fraction", c.late_fraction);
  return b;
}

}  // namespace

void RlThresholds::validate() const {
  RlThresholds copy = *this;
  const Binder b = bind(copy);
  for (const auto& [name, ptr] : b.reals) {
    if (name == "obs_low") continue;
    require(std::isfinite(*ptr) && *ptr > 0.0, "rl." + name + " must be positive");
  }
  for (const auto& [name, ptr] : b.ints) {
    if (name == "entropy_fluctuation_window") {
      require(*ptr >= 0, "rl." + name + " must be non-negative");
    } else {
      require(*ptr > 0, "rl." + name + " must be positive");
    }
  }
  require(std::isfinite(obs_low) && obs_low < obs_high, "rl.obs_low must be below rl.obs_high");
}

void NnThresholds::validate() const {
  NnThresholds copy = *this;
  const Binder b = bind(copy);
  for (const auto& [name, ptr] : b.reals) {
    require(std::isfinite(*ptr) && *ptr > 0.0, "nn." + name + " must be positive");
  }
  for (const auto& [name, ptr] : b.ints) require(*ptr > 0, "nn." + name + " must be positive");
}

bool CheckConfig::family_enabled(const std::string& family) const {
  const auto it = enabled.find(family);
  return it == enabled.end() || it->second;
}

CheckConfig CheckConfig::all_disabled() {
  CheckConfig c;
  for (const char* f : kFamilies) c.enabled[f] = false;
  return c;
}

void CheckConfig::validate() const {
  require(period_episodes >= 1, "period_episodes must be >= 1");
  require(period_updates >= 1, "period_updates must be >= 1");
  require(early_fraction > 0.0 && late_fraction > 0.0 && early_fraction + late_fraction <= 1.0,
          "early_fraction and late_fraction must be positive with a sum of at most 1");
  rl.validate();
  nn.validate();
}

CheckConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  CheckConfig c;
  json top = json::object();
  for (const auto& [key, value] : doc.items()) {
    if (key == "rl") {
      bind(c.rl).read(value, "rl");
    } else if (key == "nn") {
      bind(c.nn).read(value, "nn");
    } else if (key == "fire_once") {
      if (!value.is_boolean()) throw ConfigError("config field 'fire_once' must be a boolean");
      c.fire_once = value.get<bool>();
    } else if (key == "enabled") {
      if (!value.is_object()) throw ConfigError("config field 'enabled' must be an object");
      for (const auto& [family, flag] : value.items()) {
        if (!flag.is_boolean()) {
          throw ConfigError("config field 'enabled." + family + "' must be a boolean");
        }
        c.enabled[family] = flag.get<bool>();
      }
    } else {
      top[key] = value;
    }
  }
  bind_top(c).read(top, "");
  c.validate();
  return c;
}

CheckConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const CheckConfig& c) {
  CheckConfig copy = c;
  ordered_json out;
  out["enabled"] = ordered_json::object();
  for (const auto& [family, flag] : copy.enabled) out["enabled"][family] = flag;
  bind_top(copy).write(out);
  out["fire_once"] = copy.fire_once;
  ordered_json rl;
  bind(copy.rl).write(rl);
  out["rl"] = rl;
  ordered_json nn;
  bind(copy.nn).write(nn);
  out["nn"] = nn;
  return out.dump(2);
}

}  // namespace rldx
