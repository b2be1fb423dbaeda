#pragma once

// Miniature DQN stack used to generate traces: a deterministic gridworld, a
// 2-32-32-4 rectifier MLP trained by plain gradient descent, replay buffer,
// target network, epsilon-greedy exploration and MC-dropout, with switchable
// fault injection.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rldx/trace.hpp"

namespace rldx::testbed {

// --- gridworld -------------------------------------------------------------------

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumActions = 4;

struct GridWorld {
  int width = 8;
  int height = 8;
  Cell start{0, 0};
  Cell goal{7, 7};
  double step_reward = -0.01;
  double goal_reward = 1.0;
  int max_steps = 100;
};

struct EnvState {
  Cell cell;
  int steps = 0;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool done = false;
};

EnvState env_reset(const GridWorld& g);
EnvState env_reset(const GridWorld& g, Cell start);
/// Up decreases y, down increases it; moves into a wall leave the cell
/// unchanged. Throws std::invalid_argument for an action outside 0..3.
StepResult env_step(const GridWorld& g, const EnvState& s, int action);
/// (x / (width-1), y / (height-1)).
std::vector<double> encode_state(const GridWorld& g, Cell c);

// --- network ---------------------------------------------------------------------

/// 2-32-32-4 MLP with rectifier hidden layers. Parameters are stored row-major,
/// one tensor per entry of kTensorNames.
class TinyMlp {
 public:
  static constexpr int kIn = 2;
  static constexpr int kHidden = 32;
  static constexpr int kOut = 4;
  static constexpr std::array<const char*, 6> kTensorNames = {
      "fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias", "fc3.weight", "fc3.bias"};

  /// He-normal weights, biases set to `bias_init`.
  static TinyMlp he_init(std::mt19937_64& rng, double bias_init = 0.0);
  static TinyMlp zeros();

  struct Cache {
    std::vector<double> x, z1, h1, z2, h2, out;
  };

  /// Deterministic forward pass.
  std::vector<double> forward(const std::vector<double>& x) const;
  /// Forward pass with inverted dropout on both hidden layers.
  std::vector<double> forward_dropout(const std::vector<double>& x, double rate,
                                      std::mt19937_64& rng) const;
  void forward_cached(const std::vector<double>& x, Cache& c) const;

  /// One gradient step on mean squared error between out[action] and target.
  /// Returns the loss before the step; `grads` receives the gradient tensors.
  double sgd_step(const std::vector<std::vector<double>>& xs, const std::vector<int>& actions,
                  const std::vector<double>& targets, double lr,
                  std::array<std::vector<double>, 6>* grads = nullptr);

  std::size_t parameter_count() const;
  const std::array<std::vector<double>, 6>& tensors() const { return p_; }
  std::array<std::vector<double>, 6>& tensors() { return p_; }

 private:
  std::array<std::vector<double>, 6> p_;
};

// --- faults ----------------------------------------------------------------------

enum class Fault { F1, F2, F3, F4, F5, F6, F7, F8, F9 };
using FaultSet = std::set<Fault>;

inline constexpr Fault kAllFaults[] = {Fault::F1, Fault::F2, Fault::F3, Fault::F4, Fault::F5,
                                       Fault::F6, Fault::F7, Fault::F8, Fault::F9};

std::string fault_name(Fault f);
std::string fault_description(Fault f);
/// Accepts "F1".."F9" (case-insensitive). Throws ConfigError listing the valid
/// names otherwise.
Fault parse_fault(const std::string& name);

/// Diagnostic ids each fault is expected to trigger; union over the set.
std::set<std::string> expected_diagnoses(const FaultSet& faults);

// --- training --------------------------------------------------------------------

struct DqnParams {
  std::int64_t probe_episodes = 20;
  double lr = 0.01;
  double gamma = 0.9;
  std::size_t replay_capacity = 2000;
  std::size_t batch_size = 32;
  std::int64_t target_sync_period = 50;
  double eps_start = 1.0;
  double eps_end = 0.05;
  /// Environment steps over which epsilon decays linearly.
  std::int64_t eps_decay_steps = 4500;
  double fast_decay_factor = 0.5;  // F5: multiplied in every step
  double fast_decay_floor = 0.01;
  /// Probe outputs are softmax(Q / temperature).
  double temperature = 0.1;
  std::size_t probe_batch = 16;
  std::int64_t mc_period = 10;
  std::size_t mc_samples = 20;
  double dropout = 0.1;
  /// Scales the He-initialized output layer.
  double output_init_scale = 0.1;
};

struct TrainingOptions {
  FaultSet faults;
  std::uint64_t seed = 7;
  std::int64_t episodes = 300;  // training episodes, after the probe episodes
  GridWorld world;
  DqnParams params;
};

struct TrainingResult {
  std::vector<double> returns;  // training episodes only
  std::int64_t updates = 0;
  std::int64_t env_steps = 0;
};

using EventSink = std::function<void(const TraceEvent&)>;

/// Runs probe episodes under a random policy, then DQN training, emitting every
/// trace event to `sink` in stream order. Throws std::invalid_argument when
/// episodes < 5.
TrainingResult run_training(const TrainingOptions& opts, const EventSink& sink);

/// Convenience: collects the whole stream.
std::vector<TraceEvent> generate_trace(const TrainingOptions& opts);

/// Run id used in RunStart, e.g. "testbed-s7-F4".
std::string run_id_for(const TrainingOptions& opts);

}  // namespace rldx::testbed
