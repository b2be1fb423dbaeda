#include <algorithm>
#include <stdexcept>

#include "rldx/testbed.hpp"

namespace rldx::testbed {

EnvState env_reset(const GridWorld& g) { return env_reset(g, g.start); }

EnvState env_reset(const GridWorld&, Cell start) { return EnvState{start, 0}; }

StepResult env_step(const GridWorld& g, const EnvState& s, int action) {
  if (action < 0 || action >= kNumActions) {
    throw std::invalid_argument("invalid action " + std::to_string(action) + " (expected 0..3)");
  }
  Cell c = s.cell;
  switch (action) {
    case kUp: c.y = std::max(c.y - 1, 0); break;
    case kDown: c.y = std::min(c.y + 1, g.height - 1); break;
    case kLeft: c.x = std::max(c.x - 1, 0); break;
    case kRight: c.x = std::min(c.x + 1, g.width - 1); break;
  }
  StepResult r;
  r.next = EnvState{c, s.steps + 1};
  if (c == g.goal) {
    r.reward = g.goal_reward;
    r.done = true;
  } else {
    r.reward = g.step_reward;
    r.done = r.next.steps >= g.max_steps;
  }
  return r;
}

std::vector<double> encode_state(const GridWorld& g, Cell c) {
  return {static_cast<double>(c.x) / (g.width - 1), static_cast<double>(c.y) / (g.height - 1)};
}

}  // namespace rldx::testbed
