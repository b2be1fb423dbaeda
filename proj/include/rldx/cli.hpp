#pragma once

// Subcommand implementations behind the `rldx` binary. Each returns the
// process exit status: 0 clean, 2 diagnoses fired, 1 operational error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rldx/config.hpp"

namespace rldx::cli {

inline constexpr int kExitClean = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDiagnoses = 2;

/// Explicit path, else $RLDX_CONFIG, else defaults. Throws ConfigError.
CheckConfig resolve_config(const std::string& config_path);

struct CheckOptions {
  std::string trace_path;
  std::string config_path;
  std::string report_path;  // empty: report JSON goes to `out`
  std::string series_dir;   // empty: no CSV files
  bool quiet = false;
};

/// Replays a trace file through a Session. Warnings go to `err`.
int cmd_check(const CheckOptions& o, std::ostream& out, std::ostream& err);

/// Reads records from a file or pipe as they arrive, printing each diagnosis
/// to `out` the moment it fires. At end of stream writes the same report
/// cmd_check would.
int cmd_watch(const CheckOptions& o, std::ostream& out, std::ostream& err);

struct InjectOptions {
  std::vector<std::string> faults;
  std::uint64_t seed = 7;
  std::int64_t episodes = 300;
  std::string out_path;  // empty: trace goes to `out`
};

int cmd_inject(const InjectOptions& o, std::ostream& out, std::ostream& err);

struct BenchOptions {
  std::uint64_t seed = 7;
  std::int64_t episodes = 300;
  int repeats = 5;
  std::string config_path;
};

struct BenchResult {
  std::vector<double> overhead_pct;           // full session, per repeat
  std::vector<double> disabled_overhead_pct;  // every family switched off
  std::vector<double> noise_pct;              // baseline against itself
  double mean_overhead = 0.0;
  double mean_disabled = 0.0;
  double mean_noise = 0.0;
  /// Half-width of the noise band: max(|noise|) over repeats, at least 2
  /// standard deviations of the noise samples.
  double noise_band = 0.0;
  bool low_confidence = false;  // repeats == 1
};

/// Times the testbed clean run with events discarded (T_n) and ingested by a
/// Session (T_d); overhead = 100 (T_d - T_n) / T_n.
BenchResult run_bench(const BenchOptions& o);
int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err);

int cmd_schema(std::ostream& out);

}  // namespace rldx::cli
