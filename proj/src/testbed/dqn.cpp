#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "rldx/error.hpp"
#include "rldx/kernels.hpp"
#include "rldx/stats.hpp"
#include "rldx/testbed.hpp"

namespace rldx::testbed {

std::string fault_name(Fault f) { return "F" + std::to_string(static_cast<int>(f) + 1); }

std::string fault_description(Fault f) {
  switch (f) {
    case Fault::F1: return "zero weight initialization";
    case Fault::F2: return "bias initialization 1.0";
    case Fault::F3: return "act with the target network";
    case Fault::F4: return "never synchronize the target network";
    case Fault::F5: return "epsilon decays by half every step";
    case Fault::F6: return "no exploration (epsilon 0)";
    case Fault::F7: return "discount factor 1.0 in the Q-targets";
    case Fault::F8: return "no replay buffer (train on the latest transition)";
    case Fault::F9: return "terminal states not masked in the Q-targets";
  }
  return "";
}

Fault parse_fault(const std::string& name) {
  std::string n = name;
  for (char& c : n) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Fault f : kAllFaults) {
    if (fault_name(f) == n) return f;
  }
  throw ConfigError("unknown fault '" + name + "'; valid names are F1, F2, F3, F4, F5, F6, F7, F8, F9");
}

std::set<std::string> expected_diagnoses(const FaultSet& faults) {
  std::set<std::string> out;
  for (Fault f : faults) {
    switch (f) {
      case Fault::F1: out.insert("NN.W3"); break;
      case Fault::F2: out.insert("NN.B1"); break;
      case Fault::F3: out.insert("AGT.d3"); break;
      case Fault::F4: out.insert("AGT.d1"); break;
      case Fault::F5: out.insert("EXP.d2"); break;
      case Fault::F6: out.insert("EXP.d1"); break;
      case Fault::F7: out.insert("QTR.d1"); break;
      case Fault::F8: out.insert("AGT.d4"); break;
      case Fault::F9: out.insert("QTR.d1"); break;
    }
  }
  return out;
}

std::string run_id_for(const TrainingOptions& opts) {
  std::string id = "testbed-s" + std::to_string(opts.seed);
  if (opts.faults.empty()) return id + "-clean";
  for (Fault f : opts.faults) id += "-" + fault_name(f);
  return id;
}

namespace {

struct Replay {
  std::vector<double> s;
  int a = 0;
  double r = 0.0;
  std::vector<double> s2;
  bool done = false;
};

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<double> eps_greedy(const std::vector<double>& q, double eps) {
  std::vector<double> p(q.size(), eps / static_cast<double>(q.size()));
  p[static_cast<std::size_t>(argmax(q))] += 1.0 - eps;
  return p;
}

std::vector<double> softmax(const std::vector<double>& q, double temperature) {
  const double m = *std::max_element(q.begin(), q.end());
  std::vector<double> p(q.size());
  double z = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    p[i] = std::exp((q[i] - m) / temperature);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<TensorStats> param_stats(const TinyMlp& m) {
  std::vector<TensorStats> out;
  out.reserve(6);
  for (std::size_t t = 0; t < 6; ++t) {
    out.push_back(summarize_tensor(TinyMlp::kTensorNames[t], m.tensors()[t]));
  }
  return out;
}

class Trainer {
 public:
  Trainer(const TrainingOptions& o, const EventSink& sink)
      : o_(o), p_(o.params), sink_(sink), rng_(o.seed) {
    if (o.episodes < 5) throw std::invalid_argument("episodes must be >= 5");
    if (has(Fault::F1)) {
      main_ = TinyMlp::zeros();
    } else {
      main_ = TinyMlp::he_init(rng_, has(Fault::F2) ? 1.0 : 0.0);
      for (double& w : main_.tensors()[4]) w *= p_.output_init_scale;
    }
    target_ = main_;
    target_stats_ = param_stats(target_);
    std::uniform_int_distribution<int> cx(0, o.world.width - 1), cy(0, o.world.height - 1);
    for (std::size_t i = 0; i < p_.probe_batch; ++i) {
      probe_.push_back(encode_state(o.world, Cell{cx(rng_), cy(rng_)}));
    }
    gamma_ = has(Fault::F7) ? 1.0 : p_.gamma;
    eps_ = has(Fault::F6) ? 0.0 : p_.eps_start;
  }

  TrainingResult run() {
    RunMeta meta;
    meta.run_id = run_id_for(o_);
    meta.total_episodes = p_.probe_episodes + o_.episodes;
    meta.max_steps_per_episode = o_.world.max_steps;
    meta.max_reward = o_.world.goal_reward;
    meta.discount = p_.gamma;
    meta.action_space_size = kNumActions;
    meta.target_sync_period = p_.target_sync_period;
    meta.probe_episodes = p_.probe_episodes;
    sink_(event::RunStart{meta});
    for (std::int64_t ep = 0; ep < p_.probe_episodes; ++ep) probe_episode(ep);
    for (std::int64_t i = 0; i < o_.episodes; ++i) training_episode(p_.probe_episodes + i);
    sink_(event::RunEnd{meta.run_id});
    return result_;
  }

 private:
  bool has(Fault f) const { return o_.faults.count(f) != 0; }

  Cell random_start() {
    std::uniform_int_distribution<int> cx(0, o_.world.width - 1), cy(0, o_.world.height - 1);
    Cell c;
    do {
      c = Cell{cx(rng_), cy(rng_)};
    } while (c == o_.world.goal);
    return c;
  }

  void probe_episode(std::int64_t ep) {
    sink_(event::EpisodeStart{ep, true});
    EnvState s = env_reset(o_.world, random_start());
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    const std::vector<double> uniform(kNumActions, 1.0 / kNumActions);
    double total = 0.0;
    std::int64_t t = 0;
    for (bool done = false; !done; ++t) {
      const int a = pick(rng_);
      const StepResult r = env_step(o_.world, s, a);
      event::Step st;
      st.ep = ep;
      st.t = t;
      st.state = encode_state(o_.world, s.cell);
      st.action = a;
      st.reward = r.reward;
      st.done = r.done;
      st.action_probs_main = uniform;
      st.action_probs_used = uniform;
      sink_(st);
      total += r.reward;
      done = r.done;
      s = r.next;
    }
    sink_(event::EpisodeEnd{ep, total, t});
  }

  void training_episode(std::int64_t ep) {
    sink_(event::EpisodeStart{ep, false});
    EnvState s = env_reset(o_.world, random_start());
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    double total = 0.0;
    std::int64_t t = 0;
    for (bool done = false; !done; ++t) {
      if (!has(Fault::F6) && !has(Fault::F5)) {
        const double frac = std::min(1.0, static_cast<double>(global_step_) /
                                              static_cast<double>(p_.eps_decay_steps));
        eps_ = p_.eps_start - (p_.eps_start - p_.eps_end) * frac;
      }
      sink_(event::ExplorationValue{global_step_, eps_});
      const std::vector<double> x = encode_state(o_.world, s.cell);
      const std::vector<double> q_main = main_.forward(x);
      const std::vector<double> q_target = target_.forward(x);
      const std::vector<double>& q_act = has(Fault::F3) ? q_target : q_main;
      const int a = u01(rng_) < eps_ ? pick(rng_) : argmax(q_act);
      const StepResult r = env_step(o_.world, s, a);

      event::Step st;
      st.ep = ep;
      st.t = t;
      st.state = x;
      st.action = a;
      st.reward = r.reward;
      st.done = r.done;
      st.action_probs_main = eps_greedy(q_main, eps_);
      st.action_probs_target = eps_greedy(q_target, eps_);
      st.action_probs_used = has(Fault::F3) ? st.action_probs_target : st.action_probs_main;
      sink_(st);

      remember(Replay{x, a, r.reward, encode_state(o_.world, r.next.cell), r.done});
      learn();

      ++global_step_;
      ++result_.env_steps;
      if (has(Fault::F5)) eps_ = std::max(p_.fast_decay_floor, eps_ * p_.fast_decay_factor);
      total += r.reward;
      done = r.done;
      s = r.next;
    }
    sink_(event::EpisodeEnd{ep, total, t});
    result_.returns.push_back(total);
  }

  void remember(Replay tr) {
    if (has(Fault::F8)) {
      replay_.clear();
      replay_.push_back(std::move(tr));
      return;
    }
    replay_.push_back(std::move(tr));
    if (replay_.size() > p_.replay_capacity) replay_.pop_front();
  }

  void learn() {
    const std::size_t need = has(Fault::F8) ? 1 : p_.batch_size;
    if (replay_.size() < need) return;
    const std::int64_t u = ++update_;
    ++result_.updates;

    std::vector<const Replay*> batch;
    if (has(Fault::F8)) {
      batch.push_back(&replay_.back());
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, replay_.size() - 1);
      for (std::size_t k = 0; k < p_.batch_size; ++k) batch.push_back(&replay_[pick(rng_)]);
    }

    event::QTargetBatch qb;
    qb.update_idx = u;
    std::vector<std::vector<double>> xs;
    std::vector<int> actions;
    for (const Replay* tr : batch) {
      const std::vector<double> qn = target_.forward(tr->s2);
      const double maxq = *std::max_element(qn.begin(), qn.end());
      const bool masked = tr->done && !has(Fault::F9);
      const double y = masked ? tr->r : tr->r + gamma_ * maxq;
      qb.transitions.push_back(Transition{tr->r, tr->done, maxq});
      qb.predicted_targets.push_back(y);
      xs.push_back(tr->s);
      actions.push_back(tr->a);
    }

    event::ModelUpdate mu;
    mu.update_idx = u;
    mu.main_params = param_stats(main_);
    mu.target_params = target_stats_;
    std::vector<double> h1_all, h2_all;
    TinyMlp::Cache c;
    for (const auto& x : probe_) {
      main_.forward_cached(x, c);
      h1_all.insert(h1_all.end(), c.h1.begin(), c.h1.end());
      h2_all.insert(h2_all.end(), c.h2.begin(), c.h2.end());
      mu.probe_outputs.push_back(softmax(c.out, p_.temperature));
    }
    mu.activations.push_back(summarize_tensor("fc1.relu", h1_all));
    mu.activations.push_back(summarize_tensor("fc2.relu", h2_all));

    std::array<std::vector<double>, 6> grads;
    mu.loss = main_.sgd_step(xs, actions, qb.predicted_targets, p_.lr, &grads);
    for (std::size_t t = 0; t < 6; ++t) {
      const double sq = kernels::dot(grads[t], grads[t]);
      mu.grad_norms.push_back(NamedValue{TinyMlp::kTensorNames[t], std::sqrt(sq)});
    }
    sink_(mu);
    sink_(qb);

    if (u % p_.mc_period == 0) {
      event::McDropoutSamples mc;
      mc.update_idx = u;
      for (std::size_t k = 0; k < p_.mc_samples; ++k) {
        std::vector<std::vector<double>> rows;
        for (const auto& x : probe_) {
          rows.push_back(softmax(main_.forward_dropout(x, p_.dropout, rng_), p_.temperature));
        }
        mc.samples.push_back(std::move(rows));
      }
      sink_(mc);
    }
    if (u % p_.target_sync_period == 0 && !has(Fault::F4)) {
      target_ = main_;
      target_stats_ = param_stats(target_);
      sink_(event::TargetSync{u});
    }
  }

  const TrainingOptions& o_;
  const DqnParams& p_;
  const EventSink& sink_;
  std::mt19937_64 rng_;
  TinyMlp main_, target_;
  std::vector<TensorStats> target_stats_;
  std::vector<std::vector<double>> probe_;
  std::deque<Replay> replay_;
  double gamma_ = 0.99;
  double eps_ = 1.0;
  std::int64_t global_step_ = 0;
  std::int64_t update_ = 0;
  TrainingResult result_;
};

}  // namespace

TrainingResult run_training(const TrainingOptions& opts, const EventSink& sink) {
  return Trainer(opts, sink).run();
}

std::vector<TraceEvent> generate_trace(const TrainingOptions& opts) {
  std::vector<TraceEvent> out;
  run_training(opts, [&out](const TraceEvent& e) { out.push_back(e); });
  return out;
}

}  // namespace rldx::testbed
