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

// Command-line front end: train, eval, trace, dump-trials, gradcheck, ablate.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "plrnn/gradcheck.hpp"
#include "plrnn/io.hpp"
#include "plrnn/training.hpp"

namespace fs = std::filesystem;
using namespace plrnn;

namespace {

// Errors leave the process as exactly one line on stderr:
//   error kind=<usage|config|runtime> [field=<key>] message=<text>
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigFlags {
  std::string config_path;
  std::string preset_name;
  std::vector<std::string> sets;
  std::optional<std::string> task, rule, backbone, out, alpha_init;
  std::optional<int> n, m, k, hidden, steps, batch, threads, val_interval, eval_batches, test_batches, aux_dim;
  std::optional<double> eta0, max_norm;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  bool fixed_eta = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Flat key: value config file");
    app->add_option("--preset", preset_name, "Named preset")->check(CLI::IsMember(preset_names()));
    app->add_option("--set", sets, "Override any config key (key=value); repeatable");
    app->add_option("--task", task, "copying | cue_reward | regression | oneshot");
    app->add_option("--n", n, "Sequence length (copying) or number of cues (cue_reward)");
    app->add_option("--m", m, "Copying delay");
    app->add_option("--k", k, "Regression shots");
    app->add_option("--rule", rule, "hebbian | gradient | none");
    app->add_option("--backbone", backbone, "rnn | lstm");
    app->add_option("--hidden", hidden);
    app->add_option("--aux-dim", aux_dim);
    app->add_option("--alpha-init", alpha_init, "none | uniform | neg_uniform | random");
    app->add_option("--eta0", eta0);
    app->add_option("--max-norm", max_norm);
    app->add_flag("--fixed-eta", fixed_eta, "Disable neuromodulation of the internal learning rate");
    app->add_option("--steps", steps);
    app->add_option("--batch", batch);
    app->add_option("--val-interval", val_interval);
    app->add_option("--eval-batches", eval_batches);
    app->add_option("--test-batches", test_batches);
    app->add_option("--threads", threads);
    app->add_option("--seed", seed);
    app->add_option("--out", out, "Output directory");
    app->add_flag("--deterministic", deterministic, "Sequential trials, fixed reduction order");
  }

  RunConfig resolve() const {
    KeyValues kv;
    if (!preset_name.empty()) kv = parse_key_values(to_text(preset(preset_name)));
    if (!config_path.empty())
      for (const auto& [key, value] : parse_key_values(read_file(config_path))) kv[key] = value;
    auto put = [&](const char* key, const auto& v) {
      if (!v) return;
      std::ostringstream ss;
      ss.precision(17);
      ss << *v;
      kv[key] = ss.str();
    };
    put("task", task);
    const std::string kind = kv.count("task") ? kv["task"] : "copying";
    if (n) {
      if (kind == "copying") put("copying.n", n);
      else if (kind == "cue_reward") put("cue_reward.n", n);
      else throw UsageError("--n applies to copying and cue_reward only");
    }
    put("copying.m", m);
    put("regression.k", k);
    put("rule", rule);
    put("backbone", backbone);
    put("hidden", hidden);
    put("aux_dim", aux_dim);
    put("alpha_init", alpha_init);
    put("eta0", eta0);
    put("max_norm", max_norm);
    put("steps", steps);
    put("batch", batch);
    put("val_interval", val_interval);
    put("eval_batches", eval_batches);
    put("test_batches", test_batches);
    put("threads", threads);
    put("seed", seed);
    put("out_dir", out);
    if (fixed_eta) kv["modulated"] = "false";
    if (deterministic) kv["deterministic"] = "true";
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
      kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return build_config(kv);
  }
};

int worker_threads(const TrainerConfig& t) {
  if (t.deterministic) return 1;
  if (t.threads > 0) return t.threads;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string summary(const EvalResult& ev) {
  std::string s = "loss=" + format_float(ev.loss);
  if (ev.accuracy) s += " accuracy=" + format_float(*ev.accuracy);
  return s;
}

// Full training run into cfg.out_dir: config.txt, metrics.csv, checkpoint.bin.
FitResult run_training(const RunConfig& cfg, bool verbose) {
  fs::create_directories(cfg.out_dir);
  write_file(cfg.out_dir + "/config.txt", to_text(cfg));
  PlasticNetwork net = build_network(cfg.resolved_network());
  Trainer trainer(cfg.trainer, cfg.task, net, cfg.seed);
  std::ofstream metrics(cfg.out_dir + "/metrics.csv", std::ios::binary | std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write " + cfg.out_dir + "/metrics.csv");
  write_metrics_header(metrics);
  metrics.flush();
  FitResult res = trainer.fit([&](const MetricsRow& row) {
    write_metrics_row(metrics, row);
    metrics.flush();
    if (verbose) {
      std::ostringstream line;
      write_metrics_row(line, row);
      std::cerr << line.str();
    }
  });
  save_checkpoint(cfg.out_dir + "/checkpoint.bin", make_checkpoint(cfg, net, res.best_step, res.best_val));
  return res;
}

int cmd_train(const ConfigFlags& flags, bool verbose) {
  const RunConfig cfg = flags.resolve();
  const FitResult res = run_training(cfg, verbose);
  std::cout << "best_step=" << res.best_step << " best_val=" << format_float(res.best_val)
            << " skipped_steps=" << res.skipped_steps << " test_loss=" << format_float(res.test.loss);
  if (res.test.accuracy) std::cout << " test_accuracy=" << format_float(*res.test.accuracy);
  std::cout << " out_dir=" << cfg.out_dir << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& stream, std::optional<int> batches) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const PlasticNetwork net = network_from_checkpoint(ck);
  const RunConfig& cfg = ck.config;
  SeedStream s;
  int n;
  if (stream == "val") {
    s = SeedStream::kValidation;
    n = batches.value_or(cfg.trainer.eval_batches);
  } else {
    s = SeedStream::kTest;
    n = batches.value_or(cfg.trainer.test_batches);
  }
  const EvalResult ev = evaluate(net, cfg.task, n, cfg.trainer.batch, stream_seed(cfg.seed, s), worker_threads(cfg.trainer));
  std::cout << "stream=" << stream << " batches=" << n << ' ' << summary(ev) << '\n';
  return 0;
}

int cmd_trace(const std::string& checkpoint, const ConfigFlags& flags, int trials, const std::string& out) {
  RunConfig cfg;
  PlasticNetwork net;
  if (!checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    cfg = ck.config;
    net = network_from_checkpoint(ck);
  } else {
    cfg = flags.resolve();
    net = build_network(cfg.resolved_network());
  }
  if (cfg.network.rule == PlasticityRule::kNone) throw UsageError("trace needs a plastic network");
  const int batches = (trials + cfg.trainer.batch - 1) / cfg.trainer.batch;
  const EvalResult ev = evaluate(net, cfg.task, batches, cfg.trainer.batch, stream_seed(cfg.seed, SeedStream::kTest),
                                 worker_threads(cfg.trainer));
  if (out.empty() || out == "-") {
    write_eta_trace(std::cout, ev);
  } else {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + out);
    write_eta_trace(f, ev);
  }
  return 0;
}

int cmd_dump(const ConfigFlags& flags, int batch, std::uint64_t seed, const std::string& out) {
  const RunConfig cfg = flags.resolve();
  const TrialBatch b = generate(cfg.task, batch, seed);
  write_file(out, serialize_trial_dump(cfg.task, seed, b));
  std::cout << "task=" << to_string(cfg.task.kind) << " steps=" << b.steps << " batch=" << b.batch
            << " bytes=" << fs::file_size(out) << " out=" << out << '\n';
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  std::vector<OracleReport> reports = {first_order_oracle(100, seed), second_order_oracle(50, seed),
                                       readout_hebbian_oracle(100, seed)};
  for (PlasticityRule r : {PlasticityRule::kHebbian, PlasticityRule::kGradient})
    for (Backbone b : {Backbone::kRnn, Backbone::kLstm}) reports.push_back(meta_gradient_oracle(r, b, 20, seed));
  bool ok = true;
  for (const OracleReport& r : reports) {
    std::printf("%-36s cases=%-4d max_error=%.3e tolerance=%.0e %s\n", r.name.c_str(), r.cases, r.max_error,
                r.tolerance, r.pass() ? "PASS" : "FAIL");
    ok = ok && r.pass();
  }
  return ok ? 0 : 1;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_ablate(const std::string& kind, const std::string& values, int seeds, ConfigFlags flags,
               const std::string& csv_path, bool verbose) {
  static const std::map<std::string, std::pair<std::string, std::string>> kinds = {
      {"eta0", {"eta0", "cue-reward-hebbian"}},
      {"alpha_init", {"alpha_init", "cue-reward-hebbian"}},
      {"aux_dim", {"aux_dim", "cue-reward-gradient"}},
      {"max_norm", {"max_norm", "copying-maxnorm1"}},
      {"modulation", {"modulated", "copying-hebbian"}},
  };
  const auto it = kinds.find(kind);
  if (it == kinds.end()) throw UsageError("unknown ablation '" + kind + "'");
  const auto& [key, base] = it->second;
  std::vector<std::string> list = split_list(values);
  if (list.empty()) {
    if (kind == "eta0") list = {"0", "0.05", "0.2", "0.8"};
    else if (kind == "alpha_init") list = {"none", "uniform", "neg_uniform", "random"};
    else if (kind == "aux_dim") list = {"0", "1", "4", "16"};
    else if (kind == "max_norm") list = {"1", "100"};
    else list = {"true", "false"};
  }
  if (flags.preset_name.empty()) flags.preset_name = base;
  const RunConfig base_cfg = flags.resolve();
  const std::string root = base_cfg.out_dir + "/ablate-" + kind;
  fs::create_directories(root);
  const std::string path = csv_path.empty() ? root + "/" + kind + ".csv" : csv_path;
  std::ofstream csv(path, std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + path);
  csv << "kind,value,seed,best_step,best_val,test_loss,test_accuracy,skipped_steps\n";
  for (const std::string& value : list) {
    for (int s = 0; s < seeds; ++s) {
      KeyValues kv = parse_key_values(to_text(base_cfg));
      kv[key] = value;
      kv["seed"] = std::to_string(base_cfg.seed + static_cast<std::uint64_t>(s));
      kv["out_dir"] = root + "/" + key + "=" + value + "/seed" + std::to_string(s);
      const RunConfig cfg = build_config(kv);
      const FitResult res = run_training(cfg, verbose);
      csv << kind << ',' << value << ',' << cfg.seed << ',' << res.best_step << ',' << format_float(res.best_val) << ','
          << format_float(res.test.loss) << ',' << (res.test.accuracy ? format_float(*res.test.accuracy) : "") << ','
          << res.skipped_steps << '\n';
      csv.flush();
    }
  }
  std::cout << "ablation=" << kind << " runs=" << list.size() * static_cast<std::size_t>(seeds) << " csv=" << path
            << '\n';
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-trained plastic recurrent networks"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Echo metrics rows to stderr");

  ConfigFlags train_flags, trace_flags, dump_flags, ablate_flags;
  auto* train = app.add_subcommand("train", "Meta-train a network and write metrics and a checkpoint");
  train_flags.attach(train);

  std::string eval_ckpt, eval_stream = "test";
  std::optional<int> eval_batches;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the validation or test stream");
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--stream", eval_stream)->check(CLI::IsMember({"val", "test"}));
  eval->add_option("--batches", eval_batches);

  std::string trace_ckpt, trace_out;
  int trace_trials = 6400;
  auto* trace = app.add_subcommand("trace", "Export the trial-averaged internal learning rate per step");
  trace->add_option("--checkpoint", trace_ckpt, "Trained checkpoint (omit for an untrained network)");
  trace->add_option("--trials", trace_trials);
  trace->add_option("--csv", trace_out, "Output CSV (default stdout)");
  trace_flags.attach(trace);

  int dump_batch = 64;
  std::uint64_t dump_seed = 0;
  std::string dump_out;
  auto* dump = app.add_subcommand("dump-trials", "Write one generated batch as a binary trial dump");
  dump_flags.attach(dump);
  dump->add_option("--batch-size", dump_batch);
  dump->add_option("--dump-seed", dump_seed);
  dump->add_option("--file", dump_out)->required();

  std::uint64_t gc_seed = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "Run the differentiation oracles and print max errors");
  gradcheck->add_option("--seed", gc_seed);

  std::string ablate_kind, ablate_values, ablate_csv;
  int ablate_seeds = 1;
  auto* ablate = app.add_subcommand("ablate", "Sweep one setting and emit one CSV");
  ablate->add_option("kind", ablate_kind, "eta0 | alpha_init | aux_dim | max_norm | modulation")->required();
  ablate->add_option("--values", ablate_values, "Comma-separated values");
  ablate->add_option("--seeds", ablate_seeds);
  ablate->add_option("--csv", ablate_csv);
  ablate_flags.attach(ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error kind=usage message=" << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*train) return cmd_train(train_flags, verbose);
    if (*eval) return cmd_eval(eval_ckpt, eval_stream, eval_batches);
    if (*trace) return cmd_trace(trace_ckpt, trace_flags, trace_trials, trace_out);
    if (*dump) return cmd_dump(dump_flags, dump_batch, dump_seed, dump_out);
    if (*gradcheck) return cmd_gradcheck(gc_seed);
    if (*ablate) return cmd_ablate(ablate_kind, ablate_values, ablate_seeds, ablate_flags, ablate_csv, verbose);
  } catch (const ConfigError& e) {
    std::cerr << "error kind=config field=" << e.field() << " message=" << one_line(e.what()) << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error kind=usage message=" << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error kind=runtime message=" << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}
