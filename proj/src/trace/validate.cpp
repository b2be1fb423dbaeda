#include <cmath>
#include <limits>
#include <optional>

#include "rldx/stats.hpp"
#include "rldx/trace.hpp"

namespace rldx {
namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

class StreamValidator {
 public:
  std::vector<Violation> run(const std::vector<TraceEvent>& events) {
    for (pos_ = 0; pos_ < events.size(); ++pos_) {
      const TraceEvent& e = events[pos_];
      if (ended_) {
        add("ordering", std::string(event_tag(e)) + " after RunEnd");
        continue;
      }
      if (pos_ == 0 && !std::holds_alternative<event::RunStart>(e)) {
        add("structure", "stream does not begin with RunStart");
      }
      std::visit([this](const auto& ev) { on(ev); }, e);
    }
    return std::move(out_);
  }

 private:
  void add(std::string kind, std::string message) {
    out_.push_back({pos_, std::move(kind), std::move(message)});
  }

  void check_probs(const std::vector<double>& p, const std::string& what) {
    if (!meta_) return;
    if (static_cast<std::int64_t>(p.size()) != meta_->action_space_size) {
      add("probability", what + " has length " + std::to_string(p.size()) + ", expected " +
                             std::to_string(meta_->action_space_size));
      return;
    }
    if (all_finite(p) && !is_simplex(p)) add("probability", what + " does not sum to 1");
  }

  void check_update_ref(std::int64_t idx, std::int64_t& last, const char* tag) {
    if (!last_update_ || idx > *last_update_) {
      add("ordering", std::string(tag) + " for update " + std::to_string(idx) +
                          " precedes its ModelUpdate");
    }
    if (idx < last) {
      add("ordering", std::string(tag) + " update " + std::to_string(idx) + " after update " +
                          std::to_string(last));
    }
    last = idx;
  }

  void on(const event::RunStart& e) {
    if (meta_) {
      add("structure", "duplicate RunStart");
      return;
    }
    meta_ = e.meta;
  }

  void on(const event::EpisodeStart& e) {
    if (open_) {
      add("ordering", "EpisodeStart " + std::to_string(e.ep) + " while episode " +
                          std::to_string(*open_) + " is open");
    }
    if (last_ep_ && e.ep <= *last_ep_) {
      add("ordering", "episode " + std::to_string(e.ep) + " after episode " +
                          std::to_string(*last_ep_));
    }
    if (meta_) {
      if (e.ep < 0 || e.ep >= meta_->total_episodes) {
        add("range", "episode " + std::to_string(e.ep) + " outside [0, " +
                         std::to_string(meta_->total_episodes) + ")");
      } else if (e.probe != (e.ep < meta_->probe_episodes)) {
        add("structure", "episode " + std::to_string(e.ep) + " has probe flag " +
                             (e.probe ? "true" : "false") + " but probe_episodes is " +
                             std::to_string(meta_->probe_episodes));
      }
    }
    open_ = e.ep;
    last_ep_ = e.ep;
    last_t_.reset();
  }

  void on(const event::Step& e) {
    if (!open_) {
      add("ordering", "Step for episode " + std::to_string(e.ep) + " outside any episode");
      return;
    }
    if (e.ep != *open_) {
      add("ordering", "Step for episode " + std::to_string(e.ep) + " inside episode " +
                          std::to_string(*open_));
    }
    if (last_t_ && e.t <= *last_t_) {
      add("ordering", "step " + std::to_string(e.t) + " after step " + std::to_string(*last_t_));
    }
    last_t_ = e.t;
    if (meta_ && (e.action < 0 || e.action >= meta_->action_space_size)) {
      add("range", "action " + std::to_string(e.action) + " outside [0, " +
                       std::to_string(meta_->action_space_size) + ")");
    }
    check_probs(e.action_probs_main, "action_probs_main");
    check_probs(e.action_probs_used, "action_probs_used");
    if (!e.action_probs_target.empty()) check_probs(e.action_probs_target, "action_probs_target");
  }

  void on(const event::EpisodeEnd& e) {
    if (!open_ || *open_ != e.ep) {
      add("ordering", "EpisodeEnd " + std::to_string(e.ep) + " without a matching EpisodeStart");
    }
    open_.reset();
  }

  void on(const event::ExplorationValue& e) {
    if (last_global_step_ && e.global_step <= *last_global_step_) {
      add("ordering", "exploration value at step " + std::to_string(e.global_step) +
                          " after step " + std::to_string(*last_global_step_));
    }
    last_global_step_ = e.global_step;
  }

  void on(const event::ModelUpdate& e) {
    if (last_update_ && e.update_idx <= *last_update_) {
      add("ordering", "update " + std::to_string(e.update_idx) + " after update " +
                          std::to_string(*last_update_));
    }
    last_update_ = e.update_idx;
    for (std::size_t i = 0; i < e.probe_outputs.size(); ++i) {
      check_probs(e.probe_outputs[i], "probe_outputs[" + std::to_string(i) + "]");
    }
  }

  void on(const event::TargetSync& e) { check_update_ref(e.update_idx, last_sync_, "TargetSync"); }

  void on(const event::McDropoutSamples& e) {
    check_update_ref(e.update_idx, last_mc_, "McDropoutSamples");
    if (e.samples.size() < 2) {
      add("structure", "McDropoutSamples needs at least 2 samples");
      return;
    }
    const auto& first = e.samples.front();
    for (const auto& s : e.samples) {
      bool ragged = s.size() != first.size();
      for (std::size_t b = 0; !ragged && b < s.size(); ++b) ragged = s[b].size() != first[b].size();
      if (ragged) {
        add("structure", "McDropoutSamples is ragged");
        return;
      }
    }
  }

  void on(const event::QTargetBatch& e) {
    check_update_ref(e.update_idx, last_qt_, "QTargetBatch");
    if (e.transitions.size() != e.predicted_targets.size()) {
      add("structure", "QTargetBatch has " + std::to_string(e.transitions.size()) +
                           " transitions but " + std::to_string(e.predicted_targets.size()) +
                           " predicted targets");
    }
  }

  void on(const event::RunEnd& e) {
    if (open_) add("structure", "RunEnd while episode " + std::to_string(*open_) + " is open");
    if (meta_ && e.run_id != meta_->run_id) {
      add("structure", "RunEnd run_id '" + e.run_id + "' does not match '" + meta_->run_id + "'");
    }
    ended_ = true;
  }

  std::size_t pos_ = 0;
  std::vector<Violation> out_;
  std::optional<RunMeta> meta_;
  std::optional<std::int64_t> open_;
  std::optional<std::int64_t> last_ep_;
  std::optional<std::int64_t> last_t_;
  std::optional<std::int64_t> last_global_step_;
  std::optional<std::int64_t> last_update_;
  std::int64_t last_sync_ = std::numeric_limits<std::int64_t>::min();
  std::int64_t last_mc_ = std::numeric_limits<std::int64_t>::min();
  std::int64_t last_qt_ = std::numeric_limits<std::int64_t>::min();
  bool ended_ = false;
};

}  // namespace

std::vector<Violation> validate_stream(const std::vector<TraceEvent>& events) {
  return StreamValidator{}.run(events);
}

}  // namespace rldx
