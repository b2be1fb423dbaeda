#include <iostream>

#include "CLI11.hpp"
#include "rldx/cli.hpp"

int main(int argc, char** argv) {
  using namespace rldx::cli;
  CLI::App app{"rldx: fault diagnosis for deep reinforcement learning training traces"};
  app.require_subcommand(1);

  CheckOptions check;
  auto* c = app.add_subcommand("check", "Replay a trace file and report diagnoses");
  c->add_option("trace", check.trace_path, "Trace file (JSONL)")->required();
  c->add_option("--config", check.config_path, "Check configuration (JSON)");
  c->add_option("--report", check.report_path, "Write the report here instead of stdout");
  c->add_option("--series-dir", check.series_dir, "Write eu.csv, reward_std.csv and kl.csv here");
  c->add_flag("--quiet", check.quiet, "Do not print warnings to stderr");

  CheckOptions watch;
  auto* w = app.add_subcommand("watch", "Diagnose a live stream from a pipe or file ('-' for stdin)");
  w->add_option("stream", watch.trace_path, "Pipe or file")->required();
  w->add_option("--config", watch.config_path, "Check configuration (JSON)");
  w->add_option("--report", watch.report_path, "Write the final report here");
  w->add_option("--series-dir", watch.series_dir, "Write monitor series CSVs here");
  w->add_flag("--quiet", watch.quiet, "Accepted for symmetry with check");

  InjectOptions inject;
  auto* i = app.add_subcommand("inject", "Generate a testbed trace with injected faults");
  i->add_option("--fault", inject.faults, "Fault name F1..F9 (repeatable)");
  i->add_option("--seed", inject.seed, "Random seed");
  i->add_option("--episodes", inject.episodes, "Training episodes");
  i->add_option("--out", inject.out_path, "Output trace file (default stdout)");

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "Measure the time overhead of in-loop diagnosis");
  b->add_option("--seed", bench.seed, "Random seed");
  b->add_option("--episodes", bench.episodes, "Training episodes");
  b->add_option("--repeats", bench.repeats, "Repeats")->check(CLI::PositiveNumber);
  b->add_option("--config", bench.config_path, "Check configuration (JSON)");

  auto* s = app.add_subcommand("schema", "Print the trace wire format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  if (c->parsed()) return cmd_check(check, std::cout, std::cerr);
  if (w->parsed()) return cmd_watch(watch, std::cout, std::cerr);
  if (i->parsed()) return cmd_inject(inject, std::cout, std::cerr);
  if (b->parsed()) return cmd_bench(bench, std::cout, std::cerr);
  if (s->parsed()) return cmd_schema(std::cout);
  return kExitError;
}
