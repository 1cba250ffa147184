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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "plrnn/io.hpp"

using namespace plrnn;

namespace {

const char* const kTinyRun =
    "task: copying\n"
    "copying.n: 2\n"
    "copying.m: 1\n"
    "rule: gradient\n"
    "hidden: 6\n"
    "aux_dim: 2\n"
    "batch: 4\n"
    "steps: 6\n"
    "val_interval: 2\n"
    "eval_batches: 2\n"
    "test_batches: 1\n"
    "outer_lr: 0.01\n"
    "deterministic: true\n"
    "seed: 11\n";

struct Run {
  std::string csv;
  FitResult fit;
  PlasticNetwork net;
};

Run train(const RunConfig& cfg) {
  Run r{"", {}, build_network(cfg.resolved_network())};
  Trainer trainer(cfg.trainer, cfg.task, r.net, cfg.seed);
  std::ostringstream os;
  write_metrics_header(os);
  r.fit = trainer.fit([&](const MetricsRow& row) { write_metrics_row(os, row); });
  r.csv = os.str();
  return r;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

template <typename F>
std::string config_error_field(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  unsetenv("PLRNN_SEED");
  const RunConfig c = parse_config_text("");
  CHECK(c.network.neuromod.eta0 == 0.2);
  CHECK(c.network.neuromod.max_norm == 1.0);
  CHECK(c.trainer.clip_norm == 5.0);
  CHECK(c.trainer.batch == 64);
  CHECK(c.trainer.outer_lr == 1e-3);
  CHECK(c.trainer.beta1 == 0.9);
  CHECK(c.trainer.beta2 == 0.999);
  CHECK(c.trainer.weight_decay == 0.0);
  CHECK(c.network.aux_dim == 4);
  CHECK(c.trainer.steps == default_steps(TaskKind::kCopying));
  CHECK(c.seed == 0);
  const RunConfig comments = parse_config_text("# nothing here\n\n   \n");
  CHECK(comments == c);
}

TEST_CASE("desk-scale step defaults follow the task") {
  CHECK(parse_config_text("task: cue_reward\n").trainer.steps == 5000);
  CHECK(parse_config_text("task: regression\n").trainer.steps == 3000);
  CHECK(parse_config_text("task: cue_reward\nsteps: 7\n").trainer.steps == 7);
}

TEST_CASE("constraint violations name the field") {
  CHECK(config_error_field([] { parse_config_text("eta0: -1\n"); }) == "eta0");
  CHECK(config_error_field([] { parse_config_text("max_norm: 0\n"); }) == "max_norm");
  CHECK(config_error_field([] { parse_config_text("batch: 0\n"); }) == "batch");
  CHECK(config_error_field([] { parse_config_text("batch: many\n"); }) == "batch");
  CHECK(config_error_field([] { parse_config_text("hidden: 3.5\n"); }) == "hidden");
  CHECK(config_error_field([] { parse_config_text("rule: oja\n"); }) == "rule");
  CHECK(config_error_field([] { parse_config_text("deterministic: maybe\n"); }) == "deterministic");
  CHECK(config_error_field([] { parse_config_text("learning_rate: 0.1\n"); }) == "learning_rate");
  CHECK(config_error_field([] { parse_config_text("seed: 1\nseed: 2\n"); }) == "seed");
  CHECK(config_error_field([] { parse_config_text("task: cue_reward\ncue_reward.length: 7\n"); }) ==
        "cue_reward.length");
  CHECK(config_error_field([] { preset("copying-sgd"); }) == "preset");
}

TEST_CASE("flags override file values") {
  const std::string path = (std::filesystem::temp_directory_path() / "plrnn_test_config.txt").string();
  write_file(path, "hidden: 32\nrule: hebbian\nseed: 3\n");
  const RunConfig file_only = parse_config(path);
  CHECK(file_only.network.hidden == 32);
  const RunConfig flagged = parse_config(path, {{"hidden", "48"}, {"rule", "gradient"}});
  CHECK(flagged.network.hidden == 48);
  CHECK(flagged.network.rule == PlasticityRule::kGradient);
  CHECK(flagged.seed == 3);
  std::filesystem::remove(path);
  CHECK_THROWS(parse_config(path));
}

TEST_CASE("seed falls back to the environment") {
  setenv("PLRNN_SEED", "1234", 1);
  CHECK(parse_config_text("").seed == 1234);
  CHECK(parse_config_text("seed: 5\n").seed == 5);
  unsetenv("PLRNN_SEED");
  CHECK(parse_config_text("").seed == 0);
}

TEST_CASE("config text round trips") {
  for (const std::string& name : preset_names()) {
    const RunConfig c = preset(name);
    const RunConfig back = parse_config_text(to_text(c));
    INFO(name);
    CHECK(back == c);
    CHECK(to_text(back) == to_text(c));
  }
  RunConfig odd = parse_config_text(kTinyRun);
  odd.network.neuromod.eta0 = 0.1 + 0.2;  // not exactly representable as a short decimal
  odd.trainer.outer_lr = 3.3e-4;
  odd.out_dir = "some/dir";
  const RunConfig back = parse_config_text(to_text(odd));
  CHECK(back.network.neuromod.eta0 == odd.network.neuromod.eta0);
  CHECK(back == odd);
}

TEST_CASE("every preset builds") {
  const char* const required[] = {"copying-hebbian",       "copying-gradient",       "copying-none",
                                  "copying-fixed-hebbian", "copying-fixed-gradient", "copying-maxnorm1",
                                  "copying-maxnorm100",    "cue-reward-hebbian",     "cue-reward-gradient",
                                  "cue-reward-none",       "regression-hebbian",     "regression-gradient",
                                  "regression-none"};
  for (const char* name : required) {
    const auto& names = preset_names();
    CHECK(std::find(names.begin(), names.end(), name) != names.end());
  }
  for (const std::string& name : preset_names()) {
    const RunConfig c = preset(name);
    INFO(name);
    CHECK(c.trainer.batch == 32);
    const PlasticNetwork net = build_network(c.resolved_network());
    CHECK(net.config().input_dim == c.task.input_dim());
    CHECK(net.config().hidden == (c.network.rule == PlasticityRule::kNone ? 96 : 64));
  }
  CHECK(preset("copying-hebbian").task.copying.m == 20);
  CHECK(preset("copying-maxnorm100").network.neuromod.max_norm == 100.0);
  CHECK(preset("copying-maxnorm100").task.copying.m == 40);
  CHECK_FALSE(preset("copying-fixed-gradient").network.neuromod.modulated);
}

TEST_CASE("metrics csv") {
  CHECK(std::string(kMetricsHeader) ==
        "step,train_loss,val_loss,val_accuracy,grad_norm,skipped_steps,mean_eta_train,mean_eta_query");
  CHECK(format_float(1.0 / 3.0) == "0.333333333");
  CHECK(format_float(0.0) == "0");

  const RunConfig cfg = parse_config_text(kTinyRun);
  const Run a = train(cfg);
  const Run b = train(cfg);
  CHECK(a.csv == b.csv);
  CHECK(count_lines(a.csv) == 1 + cfg.trainer.steps / cfg.trainer.val_interval + 1);

  std::istringstream lines(a.csv);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line.rfind("0,,", 0) == 0);  // no train loss before the first step
  while (std::getline(lines, line)) {
    // Regression-type task: val_accuracy is always empty.
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (line.back() == ',') fields.push_back("");
    REQUIRE(fields.size() == 8);
    CHECK(fields[3].empty());
    CHECK_FALSE(fields[1].empty());
  }
}

TEST_CASE("classification rows carry accuracy") {
  RunConfig cfg = parse_config_text(
      "task: oneshot\nhidden: 6\nbatch: 4\nsteps: 2\nval_interval: 1\neval_batches: 1\ntest_batches: 1\n"
      "deterministic: true\n");
  const Run r = train(cfg);
  std::istringstream lines(r.csv);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    std::stringstream ss(line);
    std::string f;
    for (int i = 0; i < 4; ++i) std::getline(ss, f, ',');
    CHECK_FALSE(f.empty());
  }
}

TEST_CASE("checkpoints round trip bit-identically and reproduce best_val") {
  const RunConfig cfg = parse_config_text(kTinyRun);
  const Run run = train(cfg);
  const Checkpoint ck = make_checkpoint(cfg, run.net, run.fit.best_step, run.fit.best_val);
  const std::string bytes = serialize_checkpoint(ck);
  CHECK(bytes.compare(0, 6, "PLRNN1") == 0);
  const Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(bit_identical(ck, back));
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(back.config == cfg);
  CHECK(back.best_step == run.fit.best_step);

  const std::string path = (std::filesystem::temp_directory_path() / "plrnn_test_checkpoint.bin").string();
  save_checkpoint(path, ck);
  const Checkpoint loaded = load_checkpoint(path);
  std::filesystem::remove(path);
  CHECK(bit_identical(ck, loaded));

  PlasticNetwork net = network_from_checkpoint(loaded);
  CHECK(std::memcmp(net.params().flat().data(), run.net.params().flat().data(),
                    sizeof(double) * static_cast<std::size_t>(net.params().flat().size())) == 0);
  Trainer again(cfg.trainer, cfg.task, net, cfg.seed);
  CHECK(again.evaluate(SeedStream::kValidation, cfg.trainer.eval_batches).loss == loaded.best_val);

  // Tensor names cover every outer parameter, including alpha, beta and w_out.
  bool has_alpha = false, has_beta = false, has_head = false;
  for (const NamedTensor& t : ck.tensors) {
    has_alpha = has_alpha || t.name.find(".alpha") != std::string::npos;
    has_beta = has_beta || t.name.find(".beta") != std::string::npos;
    has_head = has_head || t.name == "loss_head.w_out";
  }
  CHECK(has_alpha);
  CHECK(has_beta);
  CHECK(has_head);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const RunConfig cfg = parse_config_text(kTinyRun);
  const PlasticNetwork net = build_network(cfg.resolved_network());
  const std::string bytes = serialize_checkpoint(make_checkpoint(cfg, net, 0, 0.5));
  CHECK_THROWS(deserialize_checkpoint("PLRNN2" + bytes.substr(6)));
  CHECK_THROWS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)));
  CHECK_THROWS(deserialize_checkpoint(bytes + "x"));

  Checkpoint ck = make_checkpoint(cfg, net, 0, 0.5);
  ck.tensors.pop_back();
  CHECK_THROWS(network_from_checkpoint(ck));
  ck = make_checkpoint(cfg, net, 0, 0.5);
  ck.tensors[0].name = "encoder.wieght";
  CHECK_THROWS(network_from_checkpoint(ck));
  ck = make_checkpoint(cfg, net, 0, 0.5);
  ck.tensors[0].dims[0] += 1;
  ck.tensors[0].data.resize(ck.tensors[0].data.size() + ck.tensors[0].dims[1]);
  CHECK_THROWS(network_from_checkpoint(ck));
}

TEST_CASE("eta trace csv") {
  const RunConfig cfg = parse_config_text("task: copying\nrule: hebbian\nhidden: 64\n");
  const PlasticNetwork net = build_network(cfg.resolved_network());
  const EvalResult ev = evaluate(net, cfg.task, 4, 64, 3, 1);
  std::ostringstream os;
  write_eta_trace(os, ev);
  const std::string csv = os.str();
  CHECK(count_lines(csv) == cfg.task.length() + 1);
  CHECK(csv.rfind("t,mean,sem\n1,", 0) == 0);
  for (double e : ev.eta_mean) CHECK(std::abs(e - 0.1) < 0.01);
}

TEST_CASE("trial dump round trip") {
  for (const char* text : {"task: copying\n", "task: cue_reward\n", "task: regression\nregression.kind: linear\n",
                           "task: oneshot\n"}) {
    const RunConfig cfg = parse_config_text(text);
    const TrialBatch batch = generate(cfg.task, 3, 99);
    const std::string bytes = serialize_trial_dump(cfg.task, 99, batch);
    const TrialDump d = deserialize_trial_dump(bytes);
    INFO(text);
    CHECK(d.task_tag == to_string(cfg.task.kind));
    CHECK(d.seed == 99);
    CHECK(d.config_text == task_text(cfg.task));
    CHECK(d.batch.inputs == batch.inputs);
    CHECK(d.batch.targets == batch.targets);
    CHECK(d.batch.loss_mask == batch.loss_mask);
    CHECK(d.batch.query == batch.query);
    CHECK(serialize_trial_dump(cfg.task, 99, d.batch) == bytes);
  }
}
