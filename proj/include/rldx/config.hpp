#pragma once

#include <map>
#include <string>

namespace rldx {

/// Thresholds of the RL-specific diagnostics. Reward-based thresholds apply to
/// returns divided by RunMeta::max_reward.
struct RlThresholds {
  double kl_max = 0.1;                // AGT.d4, fires at >=
  double obs_low = -10.0;             // STT.d1
  double obs_high = 10.0;
  double reward_abs_max = 10.0;       // ENV.d2, fires at >
  double easy_env_fraction = 0.5;     // ENV.d3, fires at >
  double low_reward_fraction = 0.1;   // STP.d1, RWD.d3, fire at <
  double stagnation_rmse = 0.1;       // RWD.d1 / ACN.d2 fire at <, ACN.d4 at >
  double slope_fluctuation = 0.25;    // RWD.d2, fires at |slope| >
  double entropy_rise_slope = 0.1;    // ACN.d1, fires at >
  double entropy_stagnation = 1e-3;   // ACN.d2, fires at |slope| <
  double curvature_max = 0.22;        // EXP.d2 / ACN.d3, fire at >
  long long repeat_run_length = 10;   // STT.d2/d3, ACN.d5/d6, fire at >
  double eu_std_max = 0.5;            // ACN.d7, fires at >

  double qtarget_tol = 1e-5;          // QTR.d1, fires at >
  double monotone_tol = 1e-9;         // EXP.d1 step tolerance
  // Curvature is normalized by max(range, curvature_min_range).
  double curvature_min_range = 0.05;
  double reward_std_mean_max = 0.05;  // RWD.d1 second clause, fires at <
  double flat_return_slope = 1e-3;    // RWD.d3 second clause, fires at |slope| <
  double step_cap_fraction = 0.8;     // STP.d1, fires at >=
  double shared_model_quorum = 0.9;   // AGT.d2, fires at >=
  long long shared_model_min_updates = 10;
  double action_source_quorum = 0.95; // AGT.d3, fires at >=
  long long action_source_min_steps = 20;
  double prob_match_tol = 1e-6;
  long long entropy_fluctuation_window = 0;  // ACN.d4; 0 = one stage window

  /// Throws ConfigError.
  void validate() const;
};

struct NnThresholds {
  double weight_norm_max = 1e3;                 // NN.W1, fires at >
  double dead_fraction = 0.5;                   // accepted, not consulted by any rule
  long long frozen_updates = 5;                 // NN.W2, NN.G1, NN.A1 run length
  double grad_norm_min = 1e-8;                  // NN.G1, fires at <
  double grad_norm_max = 1e3;                   // NN.G2, fires at >
  double activation_saturation_fraction = 0.95; // NN.A1, fires at >
  long long loss_window = 20;                   // NN.L2, NN.L3
  double loss_rise_factor = 2.0;                // NN.L2, fires at >
  double bias_init_max = 1.0;                   // NN.B1, fires at >=
  double saturation_band = 0.02;                // NN.A2
  double saturation_std = 1e-3;                 // NN.A2, fires at <

  void validate() const;
};

struct CheckConfig {
  /// Family prefix ("EXP", "NN", ...) -> enabled. Absent families are enabled.
  std::map<std::string, bool> enabled;
  long long period_episodes = 5;
  long long period_updates = 10;
  double early_fraction = 0.2;
  double late_fraction = 0.2;
  RlThresholds rl;
  NnThresholds nn;
  bool fire_once = true;

  bool family_enabled(const std::string& family) const;
  /// Same config with every built-in family switched off.
  static CheckConfig all_disabled();

  void validate() const;
};

/// Built-in diagnostic families.
inline constexpr const char* kFamilies[] = {"ENV", "STT", "STP", "EXP", "RWD",
                                            "ACN", "AGT", "QTR", "NN"};

/// Parses a config document (JSON object mirroring CheckConfig field names).
/// Absent fields keep their defaults; unknown fields are rejected. Throws
/// ConfigError.
CheckConfig parse_config(const std::string& text);
CheckConfig load_config(const std::string& path);
std::string config_to_json(const CheckConfig& c);

}  // namespace rldx
