#pragma once

// Small builders shared by the test suites.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rldx/trace.hpp"

namespace rldx::test {

inline RunMeta make_meta(std::int64_t total = 100, std::int64_t probes = 0) {
  RunMeta m;
  m.run_id = "unit";
  m.total_episodes = total;
  m.max_steps_per_episode = 50;
  m.max_reward = 1.0;
  m.discount = 0.99;
  m.action_space_size = 2;
  m.target_sync_period = 10;
  m.probe_episodes = probes;
  return m;
}

inline event::Step make_step(std::int64_t ep, std::int64_t t, std::vector<double> state,
                             std::int64_t action = 0, double reward = 0.0, bool done = false) {
  event::Step s;
  s.ep = ep;
  s.t = t;
  s.state = std::move(state);
  s.action = action;
  s.reward = reward;
  s.done = done;
  s.action_probs_main = {0.5, 0.5};
  s.action_probs_used = {0.5, 0.5};
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::vector<std::string> out;
  for (std::string line; std::getline(f, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace rldx::test
