#include "rldx/nn_checks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace rldx {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Diagnosis make(const std::string& id, std::int64_t a, std::int64_t b, double observed,
               double threshold, std::string message) {
  Diagnosis d;
  d.diagnostic_id = id;
  d.severity = builtin_severity(id);
  d.scope = {Scope::Kind::Updates, a, b};
  d.observed = observed;
  d.threshold = threshold;
  d.message = std::move(message);
  return d;
}

const TensorStats* find_tensor(const std::vector<TensorStats>& list, const std::string& name) {
  for (const auto& t : list) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

// Longest run of consecutive updates whose tensor `name` satisfies `pred`;
// returns (length, first index, last index) of the first run reaching `need`,
// or of the longest run otherwise.
struct Run {
  std::int64_t length = 0;
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

template <class Pred>
Run longest_run(std::span<const event::ModelUpdate> ups, std::int64_t need, Pred pred) {
  Run best;
  Run cur;
  for (const auto& u : ups) {
    if (pred(u)) {
      if (cur.length == 0) cur.begin = u.update_idx;
      ++cur.length;
      cur.end = u.update_idx;
      if (cur.length > best.length) best = cur;
      if (best.length >= need) return best;
    } else {
      cur = Run{};
    }
  }
  return best;
}

}  // namespace

bool is_bias_tensor(const std::string& name) { return lower(name).find("bias") != std::string::npos; }

ActivationKind activation_kind(const std::string& name) {
  const std::string n = lower(name);
  if (n.find("relu") != std::string::npos || n.find("elu") != std::string::npos ||
      n.find("leaky") != std::string::npos) {
    return ActivationKind::Rectifier;
  }
  if (n.find("tanh") != std::string::npos) return ActivationKind::Tanh;
  if (n.find("sigmoid") != std::string::npos || n.find("logistic") != std::string::npos) {
    return ActivationKind::Sigmoid;
  }
  return ActivationKind::Other;
}

Findings check_parameters(std::span<const event::ModelUpdate> ups, bool includes_first,
                          const NnThresholds& th) {
  Findings f;
  if (ups.empty()) return f;

  // NN.W1
  for (const auto& u : ups) {
    const TensorStats* bad = nullptr;
    for (const auto& t : u.main_params) {
      if (is_bias_tensor(t.name)) continue;
      if (t.frac_nonfinite > 0.0 || !(t.l2_norm <= th.weight_norm_max)) {
        bad = &t;
        break;
      }
    }
    if (bad) {
      const double obs = bad->frac_nonfinite > 0.0 ? bad->frac_nonfinite : bad->l2_norm;
      const double thr = bad->frac_nonfinite > 0.0 ? 0.0 : th.weight_norm_max;
      f.diagnoses.push_back(make("NN.W1", u.update_idx, u.update_idx, obs, thr,
                                 "weight tensor '" + bad->name + "' " +
                                     (bad->frac_nonfinite > 0.0
                                          ? "contains non-finite values"
                                          : "has L2 norm " + num(bad->l2_norm) + " above " +
                                                num(th.weight_norm_max)) +
                                     " at update " + std::to_string(u.update_idx)));
      break;
    }
  }

  // NN.W2: a weight tensor keeps its exact contents while the loss moves.
  for (const auto& first : ups.front().main_params) {
    if (is_bias_tensor(first.name)) continue;
    std::size_t begin = 0;
    bool fired = false;
    for (std::size_t i = 1; i <= ups.size() && !fired; ++i) {
      const TensorStats* t = i < ups.size() ? find_tensor(ups[i].main_params, first.name) : nullptr;
      const TensorStats* b = find_tensor(ups[begin].main_params, first.name);
      if (t && b && t->digest == b->digest) continue;
      const std::size_t len = i - begin;
      if (static_cast<std::int64_t>(len) >= th.frozen_updates && b) {
        bool loss_moved = false;
        for (std::size_t j = begin + 1; j < i && !loss_moved; ++j) {
          loss_moved = ups[j].loss != ups[begin].loss;
        }
        if (loss_moved) {
          fired = true;
          f.diagnoses.push_back(make("NN.W2", ups[begin].update_idx, ups[i - 1].update_idx,
                                     static_cast<double>(len),
                                     static_cast<double>(th.frozen_updates),
                                     "weight tensor '" + first.name + "' is unchanged over " +
                                         std::to_string(len) +
                                         " consecutive updates while the loss changes"));
        }
      }
      begin = i;
    }
    if (fired) break;
  }

  if (includes_first) {
    const auto& u = ups.front();
    for (const auto& t : u.main_params) {
      if (!is_bias_tensor(t.name) && t.std == 0.0) {
        f.diagnoses.push_back(make("NN.W3", u.update_idx, u.update_idx, t.std, 0.0,
                                   "weight tensor '" + t.name + "' starts with all values equal (" +
                                       num(t.mean) + "); units cannot break symmetry"));
        break;
      }
    }
    for (const auto& t : u.main_params) {
      if (!is_bias_tensor(t.name)) continue;
      const double m = std::abs(t.mean);
      if (m >= th.bias_init_max || t.std >= th.bias_init_max) {
        const double obs = std::max(m, t.std);
        f.diagnoses.push_back(make("NN.B1", u.update_idx, u.update_idx, obs, th.bias_init_max,
                                   "bias tensor '" + t.name + "' is initialized with mean " +
                                       num(t.mean) + " and std " + num(t.std)));
        break;
      }
    }
  }
  return f;
}

double total_grad_norm(const event::ModelUpdate& u) {
  double s = 0.0;
  for (const auto& g : u.grad_norms) s += g.value * g.value;
  return std::sqrt(s);
}

Findings check_gradients(std::span<const event::ModelUpdate> ups, const NnThresholds& th) {
  Findings f;
  const Run small = longest_run(ups, th.frozen_updates, [&](const event::ModelUpdate& u) {
    return !u.grad_norms.empty() && total_grad_norm(u) < th.grad_norm_min;
  });
  if (small.length >= th.frozen_updates) {
    f.diagnoses.push_back(make("NN.G1", small.begin, small.end, static_cast<double>(small.length),
                               static_cast<double>(th.frozen_updates),
                               "total gradient norm stays below " + num(th.grad_norm_min) +
                                   " for " + std::to_string(small.length) +
                                   " consecutive updates (vanishing gradients)"));
  }
  for (const auto& u : ups) {
    for (const auto& g : u.grad_norms) {
      if (!(g.value <= th.grad_norm_max)) {
        f.diagnoses.push_back(make("NN.G2", u.update_idx, u.update_idx, g.value, th.grad_norm_max,
                                   "gradient norm of '" + g.name + "' is " + num(g.value) +
                                       " at update " + std::to_string(u.update_idx) +
                                       " (exploding gradients)"));
        return f;
      }
    }
  }
  return f;
}

Findings check_activations(std::span<const event::ModelUpdate> ups, const NnThresholds& th) {
  Findings f;
  if (ups.empty() || ups.back().activations.empty()) return f;
  for (const auto& a : ups.back().activations) {
    if (activation_kind(a.name) != ActivationKind::Rectifier) continue;
    const Run r = longest_run(ups, th.frozen_updates, [&](const event::ModelUpdate& u) {
      const TensorStats* t = find_tensor(u.activations, a.name);
      return t && t->frac_zero > th.activation_saturation_fraction;
    });
    if (r.length >= th.frozen_updates) {
      f.diagnoses.push_back(make("NN.A1", r.begin, r.end, static_cast<double>(r.length),
                                 static_cast<double>(th.frozen_updates),
                                 "more than " + num(100.0 * th.activation_saturation_fraction) +
                                     "% of '" + a.name + "' outputs are zero for " +
                                     std::to_string(r.length) + " consecutive updates (dying units)"));
      break;
    }
  }
  for (const auto& u : ups) {
    for (const auto& a : u.activations) {
      const ActivationKind kind = activation_kind(a.name);
      if (kind != ActivationKind::Tanh && kind != ActivationKind::Sigmoid) continue;
      bool pinned = false;
      if (kind == ActivationKind::Tanh) {
        pinned = std::abs(a.mean) >= 1.0 - th.saturation_band;
      } else {
        pinned = a.mean >= 1.0 - th.saturation_band || a.mean <= th.saturation_band;
      }
      if (pinned && a.std < th.saturation_std) {
        f.diagnoses.push_back(make("NN.A2", u.update_idx, u.update_idx, a.mean,
                                   kind == ActivationKind::Tanh ? 1.0 - th.saturation_band
                                                                : th.saturation_band,
                                   "bounded activation '" + a.name + "' is saturated (mean " +
                                       num(a.mean) + ", std " + num(a.std) + ")"));
        return f;
      }
    }
  }
  return f;
}

Findings check_loss(const Series& loss, const NnThresholds& th) {
  Findings f;
  for (std::size_t i = 0; i < loss.size(); ++i) {
    if (!std::isfinite(loss.values[i])) {
      f.diagnoses.push_back(make("NN.L1", loss.index[i], loss.index[i], loss.values[i], 0.0,
                                 "loss is non-finite at update " + std::to_string(loss.index[i])));
      break;
    }
  }
  const auto w = static_cast<std::size_t>(th.loss_window);
  if (loss.size() >= 2 * w) {
    const std::span<const double> all(loss.values);
    const double head = mean(all.first(w));
    const double tail = mean(all.last(w));
    if (std::isfinite(head) && std::isfinite(tail) && tail > th.loss_rise_factor * head) {
      const double ratio = head > 0.0 ? tail / head : kInfinity;
      f.diagnoses.push_back(make("NN.L2", loss.index[loss.size() - w], loss.index.back(), ratio,
                                 th.loss_rise_factor,
                                 "mean loss over the latest " + std::to_string(w) +
                                     " updates is " + num(ratio) +
                                     "x the mean over the first " + std::to_string(w)));
    }
  }
  if (loss.size() >= w && w > 0) {
    const std::size_t b = loss.size() - w;
    bool constant = std::isfinite(loss.values[b]);
    for (std::size_t i = b + 1; i < loss.size() && constant; ++i) {
      constant = loss.values[i] == loss.values[b];
    }
    if (constant) {
      f.diagnoses.push_back(make("NN.L3", loss.index[b], loss.index.back(),
                                 static_cast<double>(w), static_cast<double>(th.loss_window),
                                 "loss is exactly " + num(loss.values[b]) + " for " +
                                     std::to_string(w) + " consecutive updates; no learning signal"));
    }
  }
  return f;
}

}  // namespace rldx
