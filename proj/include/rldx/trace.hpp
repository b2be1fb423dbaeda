#pragma once

// Trace event vocabulary, run metadata and diagnosis records, plus the
// newline-delimited wire format that connects producers to the engine.
//
// Wire format (version 1): one JSON object per line, {"v":1,"type":<tag>,...}.
// Reals are written with 17 significant digits; non-finite reals travel as the
// strings "NaN", "Inf" and "-Inf". Tensor digests are 16 lower-case hex digits.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rldx {

inline constexpr int kWireVersion = 1;

struct RunMeta {
  std::string run_id;
  std::int64_t total_episodes = 0;
  std::int64_t max_steps_per_episode = 0;
  double max_reward = 0.0;
  double discount = 0.99;
  std::int64_t action_space_size = 0;
  std::int64_t target_sync_period = 1;
  std::int64_t probe_episodes = 0;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  bool operator==(const RunMeta&) const = default;
};

/// Summary of one tensor (parameters, gradients or activations). Raw values
/// never cross the trace boundary; `digest` identifies the exact contents.
struct TensorStats {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  double l2_norm = 0.0;
  double frac_zero = 0.0;
  double frac_nonfinite = 0.0;
  std::uint64_t digest = 0;

  bool operator==(const TensorStats&) const;
};

struct NamedValue {
  std::string name;
  double value = 0.0;
  bool operator==(const NamedValue&) const;
};

struct Transition {
  double reward = 0.0;
  bool done = false;
  double max_next_q = 0.0;
  bool operator==(const Transition&) const;
};

namespace event {

struct RunStart {
  RunMeta meta;
  bool operator==(const RunStart&) const = default;
};

struct EpisodeStart {
  std::int64_t ep = 0;
  bool probe = false;
  bool operator==(const EpisodeStart&) const = default;
};

struct Step {
  std::int64_t ep = 0;
  std::int64_t t = 0;
  std::vector<double> state;
  std::int64_t action = 0;
  double reward = 0.0;
  bool done = false;
  std::vector<double> action_probs_main;
  std::vector<double> action_probs_used;
  /// Optional: the target model's distribution for the same state. Empty when
  /// the producer does not log it; serialized only when present.
  std::vector<double> action_probs_target;
  bool operator==(const Step&) const;
};

struct EpisodeEnd {
  std::int64_t ep = 0;
  double total_reward = 0.0;
  std::int64_t steps = 0;
  bool operator==(const EpisodeEnd&) const;
};

struct ExplorationValue {
  std::int64_t global_step = 0;
  double value = 0.0;
  bool operator==(const ExplorationValue&) const;
};

struct ModelUpdate {
  std::int64_t update_idx = 0;
  double loss = 0.0;
  std::vector<TensorStats> main_params;
  std::vector<TensorStats> target_params;
  std::vector<NamedValue> grad_norms;
  std::vector<TensorStats> activations;
  /// B x K action probabilities on a fixed probe batch.
  std::vector<std::vector<double>> probe_outputs;
  bool operator==(const ModelUpdate&) const;
};

struct TargetSync {
  std::int64_t update_idx = 0;
  bool operator==(const TargetSync&) const = default;
};

struct McDropoutSamples {
  std::int64_t update_idx = 0;
  /// S x B x K stochastic outputs.
  std::vector<std::vector<std::vector<double>>> samples;
  bool operator==(const McDropoutSamples&) const;
};

struct QTargetBatch {
  std::int64_t update_idx = 0;
  std::vector<Transition> transitions;
  std::vector<double> predicted_targets;
  bool operator==(const QTargetBatch&) const;
};

struct RunEnd {
  std::string run_id;
  bool operator==(const RunEnd&) const = default;
};

}  // namespace event

using TraceEvent =
    std::variant<event::RunStart, event::EpisodeStart, event::Step, event::EpisodeEnd,
                 event::ExplorationValue, event::ModelUpdate, event::TargetSync,
                 event::McDropoutSamples, event::QTargetBatch, event::RunEnd>;

/// Wire tag of an event ("RunStart", "Step", ...).
std::string_view event_tag(const TraceEvent& e);

enum class Severity { Info, Warning, Critical };
std::string_view to_string(Severity s);
Severity severity_from_string(std::string_view s);

struct Scope {
  enum class Kind { Episodes, Updates, Steps };
  Kind kind = Kind::Episodes;
  std::int64_t begin = 0;
  std::int64_t end = 0;  // inclusive
  bool operator==(const Scope&) const = default;
};

enum class Stage { Probe, Early, Mid, Late };
std::string_view to_string(Stage s);

struct Diagnosis {
  std::string diagnostic_id;
  Severity severity = Severity::Warning;
  Scope scope;
  double observed = 0.0;
  double threshold = 0.0;
  std::string message;
  std::vector<std::string> recommendations;
  /// Stage the diagnosis fired in; set by the engine.
  Stage stage = Stage::Mid;
};

/// Family prefix of a diagnostic id: "EXP.d2" -> "EXP".
std::string_view family_of(std::string_view diagnostic_id);

/// Episode-index boundaries of the stages, as half-open ranges.
struct StageWindows {
  std::int64_t probe_end = 0;    // [0, probe_end)
  std::int64_t early_begin = 0;  // [early_begin, early_end)
  std::int64_t early_end = 0;
  std::int64_t late_begin = 0;  // [late_begin, late_end)
  std::int64_t late_end = 0;

  bool in_early(std::int64_t ep) const { return ep >= early_begin && ep < early_end; }
  bool in_late(std::int64_t ep) const { return ep >= late_begin && ep < late_end; }
};

/// Early = first ceil(early_fraction * N) non-probe episodes, Late = last
/// ceil(late_fraction * N). Throws ConfigError when the windows would overlap
/// or the probe prefix leaves no room.
StageWindows compute_stage_windows(const RunMeta& meta, double early_fraction = 0.2,
                                   double late_fraction = 0.2);

struct StageInfo {
  Stage stage = Stage::Mid;
  std::int64_t window_begin = 0;
  std::int64_t window_end = 0;  // half-open
};

/// Throws Error when ep is outside [0, total_episodes).
StageInfo stage_of(const StageWindows& windows, std::int64_t total_episodes, std::int64_t ep);

// --- wire format ---------------------------------------------------------------

/// Decodes one record. Throws ParseError, UnsupportedEventError or VersionError.
TraceEvent parse_event(std::string_view line);

/// Encodes one record, newline-terminated.
std::string serialize_event(const TraceEvent& e);

/// Formats a real the way the wire format does (17 significant digits or a
/// non-finite sentinel, unquoted).
std::string format_real(double v);

struct Violation {
  std::size_t position = 0;  // index of the offending event in the stream
  std::string kind;          // "ordering", "range", "structure", "probability"
  std::string message;
};

/// Structural check of a stream: must begin with RunStart, respect ordering and
/// range invariants, and may end with RunEnd.
std::vector<Violation> validate_stream(const std::vector<TraceEvent>& events);

/// Human-readable description of the wire format (used by `rldx schema`).
std::string wire_schema();

}  // namespace rldx
