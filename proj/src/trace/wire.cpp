// Wire encoding of trace events. Decoding goes through nlohmann::json; encoding
// is hand-rolled so field order and the 17-digit real format are fixed.

#include <cmath>
#include <limits>

#include "json.hpp"
#include "rldx/digest.hpp"
#include "rldx/error.hpp"
#include "rldx/trace.hpp"

namespace rldx {
namespace {

using nlohmann::json;

// --- encoding ------------------------------------------------------------------

void append_escaped(std::string& out, std::string_view s) {
  out.push_back('"');
  for (const char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          static constexpr char kHex[] = "0123456789abcdef";
          out += "\\u00";
          out.push_back(kHex[(c >> 4) & 0xf]);
          out.push_back(kHex[c & 0xf]);
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

class RecordWriter {
 public:
  explicit RecordWriter(std::string_view tag) {
    out_ = "{\"v\":1,\"type\":";
    append_escaped(out_, tag);
  }

  RecordWriter& key(std::string_view k) {
    out_.push_back(',');
    append_escaped(out_, k);
    out_.push_back(':');
    return *this;
  }
  RecordWriter& integer(std::int64_t v) {
    out_ += std::to_string(v);
    return *this;
  }
  RecordWriter& real(double v) {
    out_ += format_real(v);
    return *this;
  }
  RecordWriter& boolean(bool v) {
    out_ += v ? "true" : "false";
    return *this;
  }
  RecordWriter& string(std::string_view s) {
    append_escaped(out_, s);
    return *this;
  }
  RecordWriter& reals(const std::vector<double>& v) {
    out_.push_back('[');
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out_.push_back(',');
      out_ += format_real(v[i]);
    }
    out_.push_back(']');
    return *this;
  }
  RecordWriter& matrix(const std::vector<std::vector<double>>& m) {
    out_.push_back('[');
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (i) out_.push_back(',');
      reals(m[i]);
    }
    out_.push_back(']');
    return *this;
  }
  RecordWriter& tensor3(const std::vector<std::vector<std::vector<double>>>& t) {
    out_.push_back('[');
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out_.push_back(',');
      matrix(t[i]);
    }
    out_.push_back(']');
    return *this;
  }
  RecordWriter& stats_list(const std::vector<TensorStats>& list) {
    out_.push_back('[');
    for (std::size_t i = 0; i < list.size(); ++i) {
      const TensorStats& s = list[i];
      if (i) out_.push_back(',');
      out_ += "{\"name\":";
      append_escaped(out_, s.name);
      out_ += ",\"mean\":" + format_real(s.mean);
      out_ += ",\"std\":" + format_real(s.std);
      out_ += ",\"min\":" + format_real(s.min);
      out_ += ",\"max\":" + format_real(s.max);
      out_ += ",\"l2_norm\":" + format_real(s.l2_norm);
      out_ += ",\"frac_zero\":" + format_real(s.frac_zero);
      out_ += ",\"frac_nonfinite\":" + format_real(s.frac_nonfinite);
      out_ += ",\"digest\":\"" + digest_to_hex(s.digest) + "\"}";
    }
    out_.push_back(']');
    return *this;
  }
  RecordWriter& meta(const RunMeta& m) {
    out_ += "{\"run_id\":";
    append_escaped(out_, m.run_id);
    out_ += ",\"total_episodes\":" + std::to_string(m.total_episodes);
    out_ += ",\"max_steps_per_episode\":" + std::to_string(m.max_steps_per_episode);
    out_ += ",\"max_reward\":" + format_real(m.max_reward);
    out_ += ",\"discount\":" + format_real(m.discount);
    out_ += ",\"action_space_size\":" + std::to_string(m.action_space_size);
    out_ += ",\"target_sync_period\":" + std::to_string(m.target_sync_period);
    out_ += ",\"probe_episodes\":" + std::to_string(m.probe_episodes);
    out_.push_back('}');
    return *this;
  }
  RecordWriter& raw(std::string_view s) {
    out_ += s;
    return *this;
  }

  std::string finish() && {
    out_ += "}\n";
    return std::move(out_);
  }

 private:
  std::string out_;
};

struct Encoder {
  std::string operator()(const event::RunStart& e) const {
    RecordWriter w("RunStart");
    w.key("meta").meta(e.meta);
    return std::move(w).finish();
  }
  std::string operator()(const event::EpisodeStart& e) const {
    RecordWriter w("EpisodeStart");
    w.key("ep").integer(e.ep).key("probe").boolean(e.probe);
    return std::move(w).finish();
  }
  std::string operator()(const event::Step& e) const {
    RecordWriter w("Step");
    w.key("ep").integer(e.ep).key("t").integer(e.t).key("state").reals(e.state);
    w.key("action").integer(e.action).key("reward").real(e.reward).key("done").boolean(e.done);
    w.key("action_probs_main").reals(e.action_probs_main);
    w.key("action_probs_used").reals(e.action_probs_used);
    if (!e.action_probs_target.empty()) w.key("action_probs_target").reals(e.action_probs_target);
    return std::move(w).finish();
  }
  std::string operator()(const event::EpisodeEnd& e) const {
    RecordWriter w("EpisodeEnd");
    w.key("ep").integer(e.ep).key("total_reward").real(e.total_reward).key("steps").integer(e.steps);
    return std::move(w).finish();
  }
  std::string operator()(const event::ExplorationValue& e) const {
    RecordWriter w("ExplorationValue");
    w.key("global_step").integer(e.global_step).key("value").real(e.value);
    return std::move(w).finish();
  }
  std::string operator()(const event::ModelUpdate& e) const {
    RecordWriter w("ModelUpdate");
    w.key("update_idx").integer(e.update_idx).key("loss").real(e.loss);
    w.key("main_params").stats_list(e.main_params);
    w.key("target_params").stats_list(e.target_params);
    w.key("grad_norms").raw("[");
    for (std::size_t i = 0; i < e.grad_norms.size(); ++i) {
      if (i) w.raw(",");
      w.raw("{\"name\":").string(e.grad_norms[i].name).raw(",\"value\":").real(e.grad_norms[i].value).raw("}");
    }
    w.raw("]");
    w.key("activations").stats_list(e.activations);
    w.key("probe_outputs").matrix(e.probe_outputs);
    return std::move(w).finish();
  }
  std::string operator()(const event::TargetSync& e) const {
    RecordWriter w("TargetSync");
    w.key("update_idx").integer(e.update_idx);
    return std::move(w).finish();
  }
  std::string operator()(const event::McDropoutSamples& e) const {
    RecordWriter w("McDropoutSamples");
    w.key("update_idx").integer(e.update_idx).key("samples").tensor3(e.samples);
    return std::move(w).finish();
  }
  std::string operator()(const event::QTargetBatch& e) const {
    RecordWriter w("QTargetBatch");
    w.key("update_idx").integer(e.update_idx).key("transitions").raw("[");
    for (std::size_t i = 0; i < e.transitions.size(); ++i) {
      const Transition& tr = e.transitions[i];
      if (i) w.raw(",");
      w.raw("{\"reward\":").real(tr.reward).raw(",\"done\":").boolean(tr.done);
      w.raw(",\"max_next_q\":").real(tr.max_next_q).raw("}");
    }
    w.raw("]");
    w.key("predicted_targets").reals(e.predicted_targets);
    return std::move(w).finish();
  }
  std::string operator()(const event::RunEnd& e) const {
    RecordWriter w("RunEnd");
    w.key("run_id").string(e.run_id);
    return std::move(w).finish();
  }
};

// --- decoding ------------------------------------------------------------------

const json& field(const json& obj, const char* name, const std::string& path) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(path + name, "missing field");
  return *it;
}

std::int64_t as_int(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw ParseError(path, "integer out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  throw ParseError(path, "expected an integer");
}

double as_real(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Inf") return std::numeric_limits<double>::infinity();
    if (s == "-Inf") return -std::numeric_limits<double>::infinity();
  }
  throw ParseError(path, "expected a real number or one of \"NaN\", \"Inf\", \"-Inf\"");
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ParseError(path, "expected a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path, "expected a string");
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError(path, "expected an array");
  return v;
}

const json& as_object(const json& v, const std::string& path) {
  if (!v.is_object()) throw ParseError(path, "expected an object");
  return v;
}

std::vector<double> as_reals(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(as_real(arr[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::vector<double>> as_matrix(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  std::vector<std::vector<double>> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(as_reals(arr[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::int64_t int_field(const json& o, const char* name) { return as_int(field(o, name, ""), name); }
double real_field(const json& o, const char* name) { return as_real(field(o, name, ""), name); }
bool bool_field(const json& o, const char* name) { return as_bool(field(o, name, ""), name); }

std::vector<TensorStats> as_stats_list(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  std::vector<TensorStats> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "].";
    const json& o = as_object(arr[i], path + "[" + std::to_string(i) + "]");
    TensorStats s;
    s.name = as_string(field(o, "name", p), p + "name");
    s.mean = as_real(field(o, "mean", p), p + "mean");
    s.std = as_real(field(o, "std", p), p + "std");
    s.min = as_real(field(o, "min", p), p + "min");
    s.max = as_real(field(o, "max", p), p + "max");
    s.l2_norm = as_real(field(o, "l2_norm", p), p + "l2_norm");
    s.frac_zero = as_real(field(o, "frac_zero", p), p + "frac_zero");
    s.frac_nonfinite = as_real(field(o, "frac_nonfinite", p), p + "frac_nonfinite");
    try {
      s.digest = digest_from_hex(as_string(field(o, "digest", p), p + "digest"));
    } catch (const ParseError& e) {
      if (e.field() != "digest") throw;
      throw ParseError(p + "digest", "expected 16 hex digits");
    }
    out.push_back(std::move(s));
  }
  return out;
}

RunMeta as_meta(const json& v) {
  const json& o = as_object(v, "meta");
  RunMeta m;
  m.run_id = as_string(field(o, "run_id", "meta."), "meta.run_id");
  m.total_episodes = as_int(field(o, "total_episodes", "meta."), "meta.total_episodes");
  m.max_steps_per_episode =
      as_int(field(o, "max_steps_per_episode", "meta."), "meta.max_steps_per_episode");
  m.max_reward = as_real(field(o, "max_reward", "meta."), "meta.max_reward");
  m.discount = as_real(field(o, "discount", "meta."), "meta.discount");
  m.action_space_size = as_int(field(o, "action_space_size", "meta."), "meta.action_space_size");
  m.target_sync_period =
      as_int(field(o, "target_sync_period", "meta."), "meta.target_sync_period");
  m.probe_episodes = as_int(field(o, "probe_episodes", "meta."), "meta.probe_episodes");
  return m;
}

TraceEvent decode(const json& o) {
  const std::string tag = as_string(field(o, "type", ""), "type");
  if (tag == "RunStart") return event::RunStart{as_meta(field(o, "meta", ""))};
  if (tag == "EpisodeStart") return event::EpisodeStart{int_field(o, "ep"), bool_field(o, "probe")};
  if (tag == "Step") {
    event::Step s;
    s.ep = int_field(o, "ep");
    s.t = int_field(o, "t");
    s.state = as_reals(field(o, "state", ""), "state");
    s.action = int_field(o, "action");
    s.reward = real_field(o, "reward");
    s.done = bool_field(o, "done");
    s.action_probs_main = as_reals(field(o, "action_probs_main", ""), "action_probs_main");
    s.action_probs_used = as_reals(field(o, "action_probs_used", ""), "action_probs_used");
    if (const auto it = o.find("action_probs_target"); it != o.end()) {
      s.action_probs_target = as_reals(*it, "action_probs_target");
    }
    return s;
  }
  if (tag == "EpisodeEnd") {
    return event::EpisodeEnd{int_field(o, "ep"), real_field(o, "total_reward"),
                             int_field(o, "steps")};
  }
  if (tag == "ExplorationValue") {
    return event::ExplorationValue{int_field(o, "global_step"), real_field(o, "value")};
  }
  if (tag == "ModelUpdate") {
    event::ModelUpdate u;
    u.update_idx = int_field(o, "update_idx");
    u.loss = real_field(o, "loss");
    u.main_params = as_stats_list(field(o, "main_params", ""), "main_params");
    u.target_params = as_stats_list(field(o, "target_params", ""), "target_params");
    const json& grads = as_array(field(o, "grad_norms", ""), "grad_norms");
    for (std::size_t i = 0; i < grads.size(); ++i) {
      const std::string p = "grad_norms[" + std::to_string(i) + "].";
      const json& g = as_object(grads[i], p.substr(0, p.size() - 1));
      u.grad_norms.push_back(
          {as_string(field(g, "name", p), p + "name"), as_real(field(g, "value", p), p + "value")});
    }
    u.activations = as_stats_list(field(o, "activations", ""), "activations");
    u.probe_outputs = as_matrix(field(o, "probe_outputs", ""), "probe_outputs");
    return u;
  }
  if (tag == "TargetSync") return event::TargetSync{int_field(o, "update_idx")};
  if (tag == "McDropoutSamples") {
    event::McDropoutSamples m;
    m.update_idx = int_field(o, "update_idx");
    const json& arr = as_array(field(o, "samples", ""), "samples");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      m.samples.push_back(as_matrix(arr[i], "samples[" + std::to_string(i) + "]"));
    }
    return m;
  }
  if (tag == "QTargetBatch") {
    event::QTargetBatch q;
    q.update_idx = int_field(o, "update_idx");
    const json& arr = as_array(field(o, "transitions", ""), "transitions");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "transitions[" + std::to_string(i) + "].";
      const json& t = as_object(arr[i], p.substr(0, p.size() - 1));
      q.transitions.push_back({as_real(field(t, "reward", p), p + "reward"),
                               as_bool(field(t, "done", p), p + "done"),
                               as_real(field(t, "max_next_q", p), p + "max_next_q")});
    }
    q.predicted_targets = as_reals(field(o, "predicted_targets", ""), "predicted_targets");
    return q;
  }
  if (tag == "RunEnd") return event::RunEnd{as_string(field(o, "run_id", ""), "run_id")};
  throw UnsupportedEventError(tag);
}

}  // namespace

std::string serialize_event(const TraceEvent& e) { return std::visit(Encoder{}, e); }

TraceEvent parse_event(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw ParseError("<record>", e.what());
  }
  if (!doc.is_object()) throw ParseError("<record>", "expected a JSON object");
  const auto v = doc.find("v");
  if (v == doc.end()) throw ParseError("v", "missing field");
  const std::int64_t version = as_int(*v, "v");
  if (version != kWireVersion) throw VersionError(version);
  return decode(doc);
}

std::string wire_schema() {
  return R"(rldx trace wire format, version 1

Encoding
  One record per line (newline-delimited), UTF-8. Each record is a single JSON
  object {"v": 1, "type": <tag>, ...payload}. Fields appear in the order listed
  below; decoders accept any order. Reals carry 17 significant digits.
  Non-finite reals are the strings "NaN", "Inf", "-Inf". Integers are plain
  JSON integers. A `digest` is 16 lower-case hex digits of FNV-1a 64 computed
  over the little-endian IEEE-754 binary64 bytes of the raw tensor values, in
  order (offset basis 0xcbf29ce484222325, prime 0x100000001b3).

Shared objects
  TensorStats  {name: string, mean, std, min, max, l2_norm: real,
                frac_zero, frac_nonfinite: real in [0,1], digest: hex string}
  RunMeta      {run_id: string, total_episodes: int >= 5,
                max_steps_per_episode: int >= 1, max_reward: real,
                discount: real in [0,1], action_space_size: int >= 2,
                target_sync_period: int >= 1, probe_episodes: int >= 0}

Records
  RunStart          meta: RunMeta
  EpisodeStart      ep: int, probe: bool
  Step              ep: int, t: int, state: [real], action: int, reward: real,
                    done: bool, action_probs_main: [real; K],
                    action_probs_used: [real; K],
                    action_probs_target: [real; K]  (optional)
  EpisodeEnd        ep: int, total_reward: real, steps: int
  ExplorationValue  global_step: int, value: real
  ModelUpdate       update_idx: int, loss: real,
                    main_params: [TensorStats], target_params: [TensorStats],
                    grad_norms: [{name: string, value: real}],
                    activations: [TensorStats],
                    probe_outputs: [[real; K]; B]
  TargetSync        update_idx: int
  McDropoutSamples  update_idx: int, samples: [[[real; K]; B]; S], S >= 2
  QTargetBatch      update_idx: int,
                    transitions: [{reward: real, done: bool, max_next_q: real}],
                    predicted_targets: [real]  (same length as transitions)
  RunEnd            run_id: string

Ordering
  A stream starts with RunStart and, when complete, ends with RunEnd.
  Episode indices increase and lie in [0, total_episodes); the first
  probe_episodes episodes carry probe = true. Steps belong to the open episode
  with increasing t. ModelUpdate indices increase; TargetSync, McDropoutSamples
  and QTargetBatch never precede the ModelUpdate they refer to.
  Probability vectors sum to 1 within 1e-6.
)";
}

}  // namespace rldx
