// Copyright 2026 The plrnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "plrnn/io.hpp"

#include <bit>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace plrnn {

namespace {

// ---------------------------------------------------------------------------
// Scalar codecs

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string encode_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double decode_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(key, "expected a number, got '" + s + "'");
  return v;
}

template <typename T>
T decode_int(const std::string& key, const std::string& s) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(key, "expected an integer, got '" + s + "'");
  return v;
}

bool decode_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + s + "'");
}

template <typename F>
auto decode_enum(const std::string& key, const std::string& s, F parse) {
  try {
    return parse(s);
  } catch (const std::exception&) {
    throw ConfigError(key, "unrecognised value '" + s + "'");
  }
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define PLRNN_INT_FIELD(KEY, MEMBER)                                                     \
  Field {                                                                                \
    KEY, [](const RunConfig& c) { return std::to_string(c.MEMBER); },                     \
        [](RunConfig& c, const std::string& v) {                                          \
          c.MEMBER = decode_int<std::remove_cvref_t<decltype(c.MEMBER)>>(KEY, v);        \
        }                                                                                 \
  }
#define PLRNN_DOUBLE_FIELD(KEY, MEMBER)                                                                      \
  Field {                                                                                                    \
    KEY, [](const RunConfig& c) { return encode_double(c.MEMBER); },                                          \
        [](RunConfig& c, const std::string& v) { c.MEMBER = decode_double(KEY, v); }                          \
  }
#define PLRNN_BOOL_FIELD(KEY, MEMBER)                                                                        \
  Field {                                                                                                    \
    KEY, [](const RunConfig& c) { return std::string(c.MEMBER ? "true" : "false"); },                        \
        [](RunConfig& c, const std::string& v) { c.MEMBER = decode_bool(KEY, v); }                            \
  }
#define PLRNN_ENUM_FIELD(KEY, MEMBER, PARSE)                                                                 \
  Field {                                                                                                    \
    KEY, [](const RunConfig& c) { return std::string(to_string(c.MEMBER)); },                                \
        [](RunConfig& c, const std::string& v) {                                                              \
          c.MEMBER = decode_enum(KEY, v, [](const std::string& s) { return PARSE(s); });                     \
        }                                                                                                     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      PLRNN_ENUM_FIELD("task", task.kind, parse_task),
      PLRNN_INT_FIELD("copying.n", task.copying.n),
      PLRNN_INT_FIELD("copying.m", task.copying.m),
      PLRNN_INT_FIELD("cue_reward.n", task.cue_reward.n),
      PLRNN_INT_FIELD("cue_reward.length", task.cue_reward.length),
      PLRNN_INT_FIELD("cue_reward.d", task.cue_reward.d),
      PLRNN_DOUBLE_FIELD("cue_reward.noise", task.cue_reward.noise),
      PLRNN_ENUM_FIELD("regression.kind", task.regression.kind, parse_regression_kind),
      PLRNN_INT_FIELD("regression.k", task.regression.k),
      PLRNN_INT_FIELD("regression.d", task.regression.d),
      PLRNN_DOUBLE_FIELD("regression.noise", task.regression.noise),
      PLRNN_INT_FIELD("regression.query_steps", task.regression.query_steps),
      PLRNN_INT_FIELD("regression.normalization_samples", task.regression.normalization_samples),
      PLRNN_INT_FIELD("oneshot.classes", task.oneshot.classes),
      PLRNN_INT_FIELD("oneshot.embed_dim", task.oneshot.embed_dim),
      PLRNN_DOUBLE_FIELD("oneshot.noise", task.oneshot.noise),
      PLRNN_ENUM_FIELD("backbone", network.backbone, parse_backbone),
      PLRNN_ENUM_FIELD("rule", network.rule, parse_rule),
      PLRNN_INT_FIELD("hidden", network.hidden),
      PLRNN_INT_FIELD("aux_dim", network.aux_dim),
      PLRNN_ENUM_FIELD("alpha_init", network.alpha_init, parse_alpha_init),
      PLRNN_DOUBLE_FIELD("eta0", network.neuromod.eta0),
      PLRNN_DOUBLE_FIELD("max_norm", network.neuromod.max_norm),
      PLRNN_BOOL_FIELD("modulated", network.neuromod.modulated),
      PLRNN_BOOL_FIELD("clip_gradient_flow", network.neuromod.clip_gradient_flow),
      PLRNN_DOUBLE_FIELD("outer_lr", trainer.outer_lr),
      PLRNN_DOUBLE_FIELD("beta1", trainer.beta1),
      PLRNN_DOUBLE_FIELD("beta2", trainer.beta2),
      PLRNN_DOUBLE_FIELD("eps", trainer.eps),
      PLRNN_DOUBLE_FIELD("weight_decay", trainer.weight_decay),
      PLRNN_DOUBLE_FIELD("clip_norm", trainer.clip_norm),
      PLRNN_INT_FIELD("batch", trainer.batch),
      PLRNN_INT_FIELD("steps", trainer.steps),
      PLRNN_INT_FIELD("val_interval", trainer.val_interval),
      PLRNN_INT_FIELD("eval_batches", trainer.eval_batches),
      PLRNN_INT_FIELD("test_batches", trainer.test_batches),
      PLRNN_INT_FIELD("threads", trainer.threads),
      PLRNN_BOOL_FIELD("deterministic", trainer.deterministic),
      Field{"out_dir", [](const RunConfig& c) { return c.out_dir; },
            [](RunConfig& c, const std::string& v) {
              if (v.empty()) throw ConfigError("out_dir", "must not be empty");
              c.out_dir = v;
            }},
      PLRNN_INT_FIELD("seed", seed),
  };
  return table;
}

#undef PLRNN_INT_FIELD
#undef PLRNN_DOUBLE_FIELD
#undef PLRNN_BOOL_FIELD
#undef PLRNN_ENUM_FIELD

const Field* find_field(const std::string& key) {
  for (const Field& f : fields())
    if (key == f.key) return &f;
  return nullptr;
}

// Rethrows a module validation error ("field: message") as a ConfigError.
template <typename F>
void validating(F fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    if (colon == std::string::npos) throw ConfigError("config", what);
    throw ConfigError(what.substr(0, colon), what.substr(colon + 2));
  }
}

// ---------------------------------------------------------------------------
// Little-endian binary codec

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, const char* what) : data_(data), what_(what) {}
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw std::runtime_error(std::string(what_) + ": truncated file");
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() { return raw(u32()); }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  const char* what_;
  std::size_t pos_ = 0;
};

constexpr char kCheckpointMagic[] = "PLRNN1";
constexpr char kTrialDumpMagic[] = "PLRNNTD1";
constexpr std::uint32_t kTrialDumpVersion = 1;

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

NetworkConfig RunConfig::resolved_network() const {
  NetworkConfig n = network;
  n.input_dim = task.input_dim();
  n.pred_dim = task.pred_dim();
  n.seed = seed;
  return n;
}

void RunConfig::validate() const {
  validating([&] {
    task.validate();
    resolved_network().validate();
    trainer.validate();
  });
  if (out_dir.empty()) throw ConfigError("out_dir", "must not be empty");
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_text(a) == to_text(b); }

int default_steps(TaskKind kind) { return kind == TaskKind::kCueReward ? 5000 : 3000; }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field& f : fields()) k.emplace_back(f.key);
    return k;
  }();
  return keys;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key: value'");
    const std::string key = trim(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 1));
    if (!find_field(key)) throw ConfigError(key, "unknown key");
    if (!kv.emplace(key, value).second) throw ConfigError(key, "repeated key");
  }
  return kv;
}

RunConfig build_config(const KeyValues& kv) {
  RunConfig cfg;
  for (const auto& [key, value] : kv)
    if (!find_field(key)) throw ConfigError(key, "unknown key");
  // Fields apply in table order so `task` is known before anything else.
  for (const Field& f : fields()) {
    const auto it = kv.find(f.key);
    if (it != kv.end()) f.set(cfg, it->second);
  }
  if (!kv.count("steps")) cfg.trainer.steps = default_steps(cfg.task.kind);
  if (!kv.count("seed")) {
    if (const char* env = std::getenv("PLRNN_SEED"); env && *env)
      cfg.seed = decode_int<std::uint64_t>("PLRNN_SEED", trim(env));
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config_text(const std::string& text, const KeyValues& overrides) {
  KeyValues kv = parse_key_values(text);
  for (const auto& [key, value] : overrides) kv[key] = value;
  return build_config(kv);
}

RunConfig parse_config(const std::string& path, const KeyValues& overrides) {
  return parse_config_text(read_file(path), overrides);
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += ": ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

std::string task_text(const TaskConfig& task) {
  RunConfig tmp;
  tmp.task = task;
  std::string out;
  for (const Field& f : fields()) {
    const std::string key = f.key;
    if (key != "task" && key.find('.') == std::string::npos) continue;
    out += key + ": " + f.get(tmp) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

const char* const kMetricsHeader =
    "step,train_loss,val_loss,val_accuracy,grad_norm,skipped_steps,mean_eta_train,mean_eta_query";

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_metrics_header(std::ostream& os) { os << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& os, const MetricsRow& row) {
  auto opt = [](const std::optional<double>& v) { return v ? format_float(*v) : std::string(); };
  os << row.step << ',' << opt(row.train_loss) << ',' << format_float(row.val_loss) << ',' << opt(row.val_accuracy)
     << ',' << opt(row.grad_norm) << ',' << row.skipped_steps << ',' << opt(row.mean_eta_train) << ','
     << opt(row.mean_eta_query) << '\n';
}

void write_eta_trace(std::ostream& os, const EvalResult& ev) {
  os << "t,mean,sem\n";
  for (std::size_t t = 0; t < ev.eta_mean.size(); ++t)
    os << (t + 1) << ',' << format_float(ev.eta_mean[t]) << ',' << format_float(ev.eta_sem[t]) << '\n';
}

// ---------------------------------------------------------------------------
// Checkpoints

bool bit_identical(const Checkpoint& a, const Checkpoint& b) {
  if (a.tensors.size() != b.tensors.size()) return false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    const NamedTensor& x = a.tensors[i];
    const NamedTensor& y = b.tensors[i];
    if (x.name != y.name || x.dims != y.dims || x.data.size() != y.data.size()) return false;
    if (!x.data.empty() && std::memcmp(x.data.data(), y.data.data(), x.data.size() * sizeof(double)) != 0) return false;
  }
  return a.config == b.config && a.best_step == b.best_step &&
         std::bit_cast<std::uint64_t>(a.best_val) == std::bit_cast<std::uint64_t>(b.best_val);
}

Checkpoint make_checkpoint(const RunConfig& cfg, const PlasticNetwork& net, long best_step, double best_val) {
  Checkpoint ck;
  ck.config = cfg;
  ck.best_step = best_step;
  ck.best_val = best_val;
  const ParameterSet& ps = net.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& e = ps.entry(i);
    NamedTensor t;
    t.name = e.name;
    for (int d = 0; d < e.shape.rank; ++d) t.dims.push_back(static_cast<std::uint64_t>(e.shape.dims[d]));
    const auto view = ps.view(i);
    t.data.assign(view.data(), view.data() + view.size());
    ck.tensors.push_back(std::move(t));
  }
  return ck;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.bytes(kCheckpointMagic, 6);
  w.u32(Checkpoint::kVersion);
  w.u32(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const NamedTensor& t : ck.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint64_t d : t.dims) w.u64(d);
    for (double v : t.data) w.f64(v);
  }
  w.str(to_text(ck.config));
  w.i64(ck.best_step);
  w.f64(ck.best_val);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes, "checkpoint");
  if (r.raw(6) != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    NamedTensor t;
    t.name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 3) throw std::runtime_error("checkpoint: tensor '" + t.name + "' has rank " + std::to_string(rank));
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u64());
      count *= t.dims.back();
    }
    r.need(count * 8);
    t.data.resize(count);
    for (auto& v : t.data) v = r.f64();
    ck.tensors.push_back(std::move(t));
  }
  // The echo carries every key, so the environment seed fallback never fires.
  ck.config = build_config(parse_key_values(r.str()));
  ck.best_step = r.i64();
  ck.best_val = r.f64();
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) { write_file(path, serialize_checkpoint(ck)); }

Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path)); }

PlasticNetwork network_from_checkpoint(const Checkpoint& ck) {
  PlasticNetwork net = build_architecture(ck.config.resolved_network());
  ParameterSet& ps = net.params();
  std::set<std::string> seen;
  for (const NamedTensor& t : ck.tensors) {
    const auto slot = ps.find(t.name);
    if (!slot) throw std::runtime_error("checkpoint: tensor '" + t.name + "' is not part of the architecture");
    if (!seen.insert(t.name).second) throw std::runtime_error("checkpoint: tensor '" + t.name + "' repeated");
    const Shape& s = ps.entry(*slot).shape;
    bool ok = t.dims.size() == static_cast<std::size_t>(s.rank);
    for (int d = 0; ok && d < s.rank; ++d) ok = t.dims[static_cast<std::size_t>(d)] == static_cast<std::uint64_t>(s.dims[d]);
    if (!ok) throw std::runtime_error("checkpoint: tensor '" + t.name + "' has shape mismatching " + s.str());
    auto view = ps.view(*slot);
    std::copy(t.data.begin(), t.data.end(), view.data());
  }
  if (seen.size() != ps.size()) {
    for (const auto& e : ps.entries())
      if (!seen.count(e.name)) throw std::runtime_error("checkpoint: tensor '" + e.name + "' missing");
  }
  return net;
}

// ---------------------------------------------------------------------------
// Trial dumps

std::string serialize_trial_dump(const TaskConfig& task, std::uint64_t seed, const TrialBatch& batch) {
  Writer w;
  w.bytes(kTrialDumpMagic, 8);
  w.u32(kTrialDumpVersion);
  w.str(to_string(task.kind));
  w.str(task_text(task));
  w.u64(seed);
  w.u64(static_cast<std::uint64_t>(batch.steps));
  w.u64(static_cast<std::uint64_t>(batch.batch));
  w.u64(static_cast<std::uint64_t>(batch.input_dim));
  w.u64(static_cast<std::uint64_t>(batch.target_dim));
  for (double v : batch.inputs) w.f64(v);
  for (double v : batch.targets) w.f64(v);
  for (double v : batch.loss_mask) w.f64(v);
  return w.take();
}

TrialDump deserialize_trial_dump(const std::string& bytes) {
  Reader r(bytes, "trial dump");
  if (r.raw(8) != kTrialDumpMagic) throw std::runtime_error("trial dump: bad magic");
  if (r.u32() != kTrialDumpVersion) throw std::runtime_error("trial dump: unsupported version");
  TrialDump d;
  d.task_tag = r.str();
  d.config_text = r.str();
  d.seed = r.u64();
  const TaskConfig task = build_config(parse_key_values(d.config_text + "seed: 0\n")).task;
  const auto t = static_cast<Index>(r.u64());
  const auto b = static_cast<Index>(r.u64());
  const auto din = static_cast<Index>(r.u64());
  const auto dt = static_cast<Index>(r.u64());
  d.batch = TrialBatch(task.kind, t, b, din, dt);
  for (auto& v : d.batch.inputs) v = r.f64();
  for (auto& v : d.batch.targets) v = r.f64();
  for (auto& v : d.batch.loss_mask) v = r.f64();
  if (!r.done()) throw std::runtime_error("trial dump: trailing bytes");
  // The query flags are not stored; regenerate them from the task layout.
  d.batch.query = generate(task, 1, d.seed).query;
  return d;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

struct PresetDef {
  const char* name;
  std::function<void(RunConfig&)> apply;
};

void desk(RunConfig& c, TaskKind kind, PlasticityRule rule) {
  c.task.kind = kind;
  c.network.rule = rule;
  c.network.hidden = rule == PlasticityRule::kNone ? 96 : 64;
  c.trainer.batch = 32;
  c.trainer.steps = default_steps(kind);
  c.trainer.val_interval = 100;
  c.trainer.eval_batches = 10;
  c.trainer.test_batches = 100;
}

void copying(RunConfig& c, PlasticityRule rule, int m = 20) {
  desk(c, TaskKind::kCopying, rule);
  c.task.copying.n = 5;
  c.task.copying.m = m;
}

const std::vector<PresetDef>& preset_table() {
  using R = PlasticityRule;
  static const std::vector<PresetDef> table = {
      {"copying-hebbian", [](RunConfig& c) { copying(c, R::kHebbian); }},
      {"copying-gradient", [](RunConfig& c) { copying(c, R::kGradient); }},
      {"copying-none", [](RunConfig& c) { copying(c, R::kNone); }},
      {"copying-fixed-hebbian",
       [](RunConfig& c) {
         copying(c, R::kHebbian);
         c.network.neuromod.modulated = false;
       }},
      {"copying-fixed-gradient",
       [](RunConfig& c) {
         copying(c, R::kGradient);
         c.network.neuromod.modulated = false;
       }},
      {"copying-m10-hebbian", [](RunConfig& c) { copying(c, R::kHebbian, 10); }},
      {"copying-maxnorm1",
       [](RunConfig& c) {
         copying(c, R::kHebbian, 40);
         c.trainer.steps = 2000;
       }},
      {"copying-maxnorm100",
       [](RunConfig& c) {
         copying(c, R::kHebbian, 40);
         c.trainer.steps = 2000;
         c.network.neuromod.max_norm = 100.0;
       }},
      {"cue-reward-hebbian", [](RunConfig& c) { desk(c, TaskKind::kCueReward, R::kHebbian); }},
      {"cue-reward-gradient", [](RunConfig& c) { desk(c, TaskKind::kCueReward, R::kGradient); }},
      {"cue-reward-none", [](RunConfig& c) { desk(c, TaskKind::kCueReward, R::kNone); }},
      {"regression-hebbian", [](RunConfig& c) { desk(c, TaskKind::kRegression, R::kHebbian); }},
      {"regression-gradient", [](RunConfig& c) { desk(c, TaskKind::kRegression, R::kGradient); }},
      {"regression-none", [](RunConfig& c) { desk(c, TaskKind::kRegression, R::kNone); }},
      {"oneshot-hebbian", [](RunConfig& c) { desk(c, TaskKind::kOneShot, R::kHebbian); }},
      {"oneshot-gradient", [](RunConfig& c) { desk(c, TaskKind::kOneShot, R::kGradient); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& p : preset_table()) n.emplace_back(p.name);
    return n;
  }();
  return names;
}

RunConfig preset(const std::string& name) {
  for (const auto& p : preset_table()) {
    if (name != p.name) continue;
    RunConfig c;
    p.apply(c);
    c.out_dir = "runs/" + name;
    c.validate();
    return c;
  }
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace plrnn
