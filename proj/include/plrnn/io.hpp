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

#ifndef PLRNN_IO_HPP_
#define PLRNN_IO_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "plrnn/models.hpp"
#include "plrnn/tasks.hpp"
#include "plrnn/training.hpp"

namespace plrnn {

/// Raised for unknown keys, malformed values and constraint violations.
/// `field()` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& msg)
      : std::invalid_argument(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  TaskConfig task;
  NetworkConfig network;  // input_dim, pred_dim and seed follow task and run seed
  TrainerConfig trainer;
  std::string out_dir = "runs/default";
  std::uint64_t seed = 0;

  /// Network config with dimensions derived from the task.
  NetworkConfig resolved_network() const;
  void validate() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Desk-scale default step count for a task.
int default_steps(TaskKind kind);

/// Ordered list of every recognised config key.
const std::vector<std::string>& config_keys();

using KeyValues = std::map<std::string, std::string>;

/// Parses flat `key: value` text. Blank lines and `#` comments are ignored;
/// unknown or repeated keys are rejected.
KeyValues parse_key_values(const std::string& text);

/// Builds a validated config from key-values. `steps` defaults per task; a
/// missing `seed` falls back to $PLRNN_SEED, then 0.
RunConfig build_config(const KeyValues& kv);

/// File values overlaid by `overrides` (flags win).
RunConfig parse_config(const std::string& path, const KeyValues& overrides = {});
RunConfig parse_config_text(const std::string& text, const KeyValues& overrides = {});

/// Canonical text form; parse_config_text(to_text(c)) == c.
std::string to_text(const RunConfig& cfg);

// Metrics CSV.
extern const char* const kMetricsHeader;
std::string format_float(double v);
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const MetricsRow& row);

// Eta trace CSV: t (1-based), mean, sem.
void write_eta_trace(std::ostream& os, const EvalResult& ev);

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::vector<NamedTensor> tensors;
  RunConfig config;
  long best_step = -1;
  double best_val = 0.0;
};

bool bit_identical(const Checkpoint& a, const Checkpoint& b);

Checkpoint make_checkpoint(const RunConfig& cfg, const PlasticNetwork& net, long best_step, double best_val);
std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds the network described by the echoed config and fills its
/// parameters; the tensor names and shapes must match the architecture.
PlasticNetwork network_from_checkpoint(const Checkpoint& ck);

/// Binary trial dump: magic, header {task tag, task config text, seed},
/// then inputs, targets and loss mask as time-major little-endian f64.
std::string serialize_trial_dump(const TaskConfig& task, std::uint64_t seed, const TrialBatch& batch);
struct TrialDump {
  std::string task_tag;
  std::string config_text;
  std::uint64_t seed = 0;
  TrialBatch batch;
};
TrialDump deserialize_trial_dump(const std::string& bytes);

/// Task-only keys of a config, in text form.
std::string task_text(const TaskConfig& task);

/// Named experiment presets (acceptance and ablation configurations).
const std::vector<std::string>& preset_names();
RunConfig preset(const std::string& name);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace plrnn

#endif  // PLRNN_IO_HPP_
