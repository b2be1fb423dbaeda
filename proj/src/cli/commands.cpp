#include "rldx/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rldx/engine.hpp"
#include "rldx/error.hpp"
#include "rldx/testbed.hpp"

namespace rldx::cli {
namespace {

std::string describe(const Diagnosis& d) {
  std::ostringstream os;
  os << '[' << to_string(d.severity) << "] " << d.diagnostic_id << " (" << to_string(d.stage)
     << ", " << (d.scope.kind == Scope::Kind::Updates ? "updates " : d.scope.kind == Scope::Kind::Steps ? "steps " : "episodes ")
     << d.scope.begin << ".." << d.scope.end << "): " << d.message;
  return os.str();
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
  if (!f) throw Error("write failed for " + p.string());
}

void write_outputs(const Report& r, const CheckOptions& o, std::ostream& out, bool live) {
  const std::string json = r.to_json();
  if (!o.report_path.empty()) {
    write_file(o.report_path, json);
  } else if (!live) {
    out << json;
  }
  if (!o.series_dir.empty()) {
    std::filesystem::create_directories(o.series_dir);
    const std::filesystem::path dir(o.series_dir);
    write_file(dir / "eu.csv", series_to_csv(r.eu));
    write_file(dir / "reward_std.csv", series_to_csv(r.reward_std));
    write_file(dir / "kl.csv", series_to_csv(r.kl));
  }
}

int replay(std::istream& in, const CheckOptions& o, std::ostream& out, std::ostream& err,
           bool live) {
  CheckConfig config;
  try {
    config = resolve_config(o.config_path);
  } catch (const Error& e) {
    err << "rldx: " << e.what() << '\n';
    return kExitError;
  }
  Session session(config);
  std::string line;
  std::size_t line_no = 0;
  std::size_t records = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (blank(line)) continue;
      const TraceEvent e = parse_event(line);
      ++records;
      const std::vector<Diagnosis> fired = session.ingest(e);
      if (live) {
        for (const auto& d : fired) out << describe(d) << '\n';
        if (!fired.empty()) out.flush();
      }
    }
  } catch (const std::exception& e) {
    if (live) out.flush();
    err << "rldx: line " << line_no << ": " << e.what() << '\n';
    return kExitError;
  }
  if (records == 0) {
    err << "rldx: empty trace\n";
    return kExitError;
  }
  const Report report = session.finalize();
  try {
    write_outputs(report, o, out, live);
  } catch (const std::exception& e) {
    err << "rldx: " << e.what() << '\n';
    return kExitError;
  }
  if (live) {
    out << "summary: " << report.run_id << ": " << report.diagnoses.size() << " diagnoses, "
        << report.notes.size() << " notes, " << report.summary.events << " events"
        << (report.summary.complete ? "" : " (no RunEnd)") << '\n';
    out.flush();
  } else if (!o.quiet) {
    for (const auto& d : report.diagnoses) err << describe(d) << '\n';
  }
  return report.diagnoses.empty() ? kExitClean : kExitDiagnoses;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

CheckConfig resolve_config(const std::string& config_path) {
  if (!config_path.empty()) return load_config(config_path);
  if (const char* env = std::getenv("RLDX_CONFIG"); env && *env) return load_config(env);
  return CheckConfig{};
}

int cmd_check(const CheckOptions& o, std::ostream& out, std::ostream& err) {
  std::ifstream in(o.trace_path, std::ios::binary);
  if (!in) {
    err << "rldx: cannot open trace " << o.trace_path << '\n';
    return kExitError;
  }
  return replay(in, o, out, err, false);
}

int cmd_watch(const CheckOptions& o, std::ostream& out, std::ostream& err) {
  if (o.trace_path == "-") return replay(std::cin, o, out, err, true);
  std::ifstream in(o.trace_path, std::ios::binary);
  if (!in) {
    err << "rldx: cannot open stream " << o.trace_path << '\n';
    return kExitError;
  }
  return replay(in, o, out, err, true);
}

int cmd_inject(const InjectOptions& o, std::ostream& out, std::ostream& err) {
  testbed::TrainingOptions t;
  try {
    for (const auto& name : o.faults) t.faults.insert(testbed::parse_fault(name));
  } catch (const ConfigError& e) {
    err << "rldx: " << e.what() << '\n';
    return kExitError;
  }
  if (o.episodes < 5) {
    err << "rldx: --episodes must be at least 5\n";
    return kExitError;
  }
  t.seed = o.seed;
  t.episodes = o.episodes;

  std::ofstream file;
  if (!o.out_path.empty()) {
    file.open(o.out_path, std::ios::binary);
    if (!file) {
      err << "rldx: cannot write " << o.out_path << '\n';
      return kExitError;
    }
  }
  std::ostream& sink = o.out_path.empty() ? out : file;
  testbed::run_training(t, [&sink](const TraceEvent& e) { sink << serialize_event(e); });
  sink.flush();

  std::string expected;
  for (const auto& id : testbed::expected_diagnoses(t.faults)) {
    expected += expected.empty() ? id : ", " + id;
  }
  std::ostream& msg = o.out_path.empty() ? err : out;
  msg << "expected: " << (expected.empty() ? "(none)" : expected) << '\n';
  return kExitClean;
}

BenchResult run_bench(const BenchOptions& o) {
  const CheckConfig full = resolve_config(o.config_path);
  const CheckConfig off = CheckConfig::all_disabled();
  testbed::TrainingOptions t;
  t.seed = o.seed;
  t.episodes = o.episodes;

  auto baseline = [&] {
    const auto t0 = std::chrono::steady_clock::now();
    testbed::run_training(t, [](const TraceEvent&) {});
    return seconds_since(t0);
  };
  auto with_session = [&](const CheckConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Session s(c);
    testbed::run_training(t, [&s](const TraceEvent& e) { s.ingest(e); });
    s.finalize();
    return seconds_since(t0);
  };

  baseline();  // warm-up
  BenchResult r;
  const int repeats = std::max(o.repeats, 1);
  for (int i = 0; i < repeats; ++i) {
    const double tn1 = baseline();
    const double td = with_session(full);
    const double toff = with_session(off);
    const double tn2 = baseline();
    const double tn = 0.5 * (tn1 + tn2);
    r.overhead_pct.push_back(100.0 * (td - tn) / tn);
    r.disabled_overhead_pct.push_back(100.0 * (toff - tn) / tn);
    r.noise_pct.push_back(100.0 * (tn2 - tn1) / tn);
  }
  r.mean_overhead = mean_of(r.overhead_pct);
  r.mean_disabled = mean_of(r.disabled_overhead_pct);
  r.mean_noise = mean_of(r.noise_pct);
  double var = 0.0;
  double worst = 0.0;
  for (double v : r.noise_pct) {
    var += (v - r.mean_noise) * (v - r.mean_noise);
    worst = std::max(worst, std::abs(v));
  }
  const double sd = r.noise_pct.size() > 1 ? std::sqrt(var / (r.noise_pct.size() - 1)) : 0.0;
  r.noise_band = std::max(worst, 2.0 * sd);
  r.low_confidence = repeats == 1;
  return r;
}

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  BenchResult r;
  try {
    r = run_bench(o);
  } catch (const std::exception& e) {
    err << "rldx: " << e.what() << '\n';
    return kExitError;
  }
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", v);
    return std::string(buf);
  };
  out << "repeats: " << r.overhead_pct.size() << '\n';
  out << "overhead: " << pct(r.mean_overhead) << '\n';
  out << "overhead (checks disabled): " << pct(r.mean_disabled) << '\n';
  out << "noise band: +/-" << pct(r.noise_band) << '\n';
  if (r.low_confidence) out << "low confidence: single repeat\n";
  return kExitClean;
}

int cmd_schema(std::ostream& out) {
  out << wire_schema();
  return kExitClean;
}

}  // namespace rldx::cli
