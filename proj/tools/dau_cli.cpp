/*
 * Copyright 2026 The DAU-Net Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Talks to the library only through dau.h.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dau/dau.h"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kInternal = 3 };

// Library failure carried to main() as a status plus message.
struct Failure {
  std::string code;
  std::string message;
  int exit_code;
};

int exit_for(dau_status st) {
  switch (st) {
    case DAU_OK: return kOk;
    case DAU_E_CHECK_FAILED: return kCheckFailed;
    case DAU_E_NUMERIC:
    case DAU_E_INTERNAL: return kInternal;
    default: return kUsage;
  }
}

void check(dau_status st) {
  if (st != DAU_OK) throw Failure{dau_status_name(st), dau_last_error(), exit_for(st)};
}

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{"E_USAGE", msg, kUsage}; }

[[noreturn]] void io_error(const std::string& msg) { throw Failure{"E_IO", msg, kUsage}; }

struct FreeString {
  void operator()(char* s) const { dau_string_free(s); }
};
using String = std::unique_ptr<char, FreeString>;

struct FreeConfig {
  void operator()(dau_config* c) const { dau_config_free(c); }
};
struct FreeModel {
  void operator()(dau_model* m) const { dau_model_free(m); }
};
struct FreeDataset {
  void operator()(dau_dataset* d) const { dau_dataset_free(d); }
};
using ConfigPtr = std::unique_ptr<dau_config, FreeConfig>;
using ModelPtr = std::unique_ptr<dau_model, FreeModel>;
using DatasetPtr = std::unique_ptr<dau_dataset, FreeDataset>;

String take(char* s) { return String(s); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_error("cannot write " + path.string());
  out << text;
  if (!out.flush()) io_error("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) io_error("cannot create output directory " + dir.string());
}

// Timestamped progress log. Timestamps only ever go here, so every other
// output file is reproducible.
class RunLog {
 public:
  void open(const fs::path& path) {
    file_.open(path, std::ios::app);
    if (!file_) io_error("cannot write " + path.string());
  }
  void line(const std::string& msg) {
    if (!file_.is_open()) return;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    file_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << msg << '\n';
    file_.flush();
  }

 private:
  std::ofstream file_;
};

std::string fmt_double(double v, int digits = 6) {
  std::ostringstream ss;
  ss << std::setprecision(digits) << v;
  return ss.str();
}

struct Common {
  std::string config;
  std::string data_dir;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c, bool data) {
  cmd->add_option("--config", c.config, "Config file (key=value lines)");
  if (data) cmd->add_option("--data-dir", c.data_dir, "CIFAR-10 binary batch directory");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--threads", c.threads, "Worker threads (default: $DAU_THREADS or 1)");
  cmd->add_option("--set", c.sets, "Override a config key: key=value")->allow_extra_args(false);
}

void apply_threads(const Common& c) {
  if (c.threads) {
    check(dau_set_threads(*c.threads));
    return;
  }
  if (const char* env = std::getenv("DAU_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0') usage_error(std::string("DAU_THREADS is not an integer: ") + env);
    check(dau_set_threads(static_cast<int>(v)));
  }
}

ConfigPtr load_config(const Common& c) {
  dau_config* raw = nullptr;
  if (c.config.empty()) {
    check(dau_config_create(&raw));
  } else {
    check(dau_config_load(c.config.c_str(), &raw));
  }
  ConfigPtr cfg(raw);
  if (c.seed) check(dau_config_set(cfg.get(), "train.seed", std::to_string(*c.seed).c_str()));
  for (const auto& s : c.sets) check(dau_config_apply(cfg.get(), s.c_str()));
  return cfg;
}

std::string resolved_text(const dau_config* cfg) {
  char* t = nullptr;
  check(dau_config_resolved_text(cfg, &t));
  return take(t).get();
}

std::string model_config(const dau_model* m) {
  char* t = nullptr;
  check(dau_model_config_text(m, &t));
  return take(t).get();
}

ModelPtr load_model(const std::string& path) {
  if (path.empty()) usage_error("--checkpoint is required");
  dau_model* raw = nullptr;
  check(dau_model_load(path.c_str(), &raw));
  return ModelPtr(raw);
}

std::pair<DatasetPtr, DatasetPtr> load_data(const std::string& dir, size_t train_limit, size_t test_limit) {
  if (dir.empty()) usage_error("--data-dir is required");
  if (!fs::is_directory(dir)) io_error("data directory not found: " + dir);
  dau_dataset* tr = nullptr;
  dau_dataset* te = nullptr;
  check(dau_dataset_load_cifar10(dir.c_str(), train_limit, test_limit, &tr, &te));
  return {DatasetPtr(tr), DatasetPtr(te)};
}

fs::path prepare_out(const std::string& out, bool required, RunLog& log, const std::string& command) {
  if (out.empty()) {
    if (required) usage_error("--out is required");
    return {};
  }
  make_dir(out);
  log.open(fs::path(out) / "run.log");
  log.line("start " + command);
  return out;
}

std::string epoch_tag(int epoch) {
  std::ostringstream ss;
  ss << "epoch_" << std::setw(4) << std::setfill('0') << epoch << ".ckpt";
  return ss.str();
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common c;
  std::string resume;
  std::optional<int> epochs;
};

struct TrainState {
  std::ofstream* metrics = nullptr;
  RunLog* log = nullptr;
  fs::path ckpt_dir;
  int checkpoint_every = 0;
  std::string error;
};

dau_status on_epoch(const dau_epoch_metrics* m, dau_model* model, void* user) {
  auto* st = static_cast<TrainState*>(user);
  char* row = nullptr;
  if (dau_status s = dau_metrics_csv_row(m, &row); s != DAU_OK) return s;
  *st->metrics << row;
  dau_string_free(row);
  st->metrics->flush();
  if (!*st->metrics) {
    st->error = "metrics write failed";
    return DAU_E_IO;
  }
  st->log->line("epoch " + std::to_string(m->epoch) + " loss " + fmt_double(m->train_loss, 9) + " eval_acc " +
                fmt_double(m->eval_acc, 9) + " lr " + fmt_double(m->lr));
  std::cout << "epoch " << m->epoch << " train_loss " << fmt_double(m->train_loss) << " eval_acc "
            << fmt_double(m->eval_acc) << std::endl;
  if (st->checkpoint_every > 0 && m->epoch % st->checkpoint_every == 0) {
    const auto path = st->ckpt_dir / epoch_tag(m->epoch);
    if (dau_status s = dau_model_save(model, path.string().c_str()); s != DAU_OK) return s;
    st->log->line("checkpoint " + path.string());
  }
  return DAU_OK;
}

int checkpoint_every_from(const std::string& config_text) {
  std::istringstream in(config_text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("train.checkpoint_every=", 0) == 0) return std::stoi(line.substr(23));
  }
  return 0;
}

int cmd_train(const TrainArgs& a) {
  apply_threads(a.c);
  RunLog log;
  const fs::path out = prepare_out(a.c.out, true, log, "train");

  ModelPtr model;
  if (!a.resume.empty()) {
    if (!a.c.config.empty()) usage_error("--config cannot be combined with --resume; use --set for train.* keys");
    model = load_model(a.resume);
    if (a.c.seed) usage_error("--seed cannot change on resume");
    for (const auto& s : a.c.sets) check(dau_model_apply(model.get(), s.c_str()));
    if (a.epochs) check(dau_model_apply(model.get(), ("train.epochs=" + std::to_string(*a.epochs)).c_str()));
  } else {
    ConfigPtr cfg = load_config(a.c);
    if (a.epochs) check(dau_config_set(cfg.get(), "train.epochs", std::to_string(*a.epochs).c_str()));
    resolved_text(cfg.get());  // validate before touching data
    dau_model* raw = nullptr;
    check(dau_model_build(cfg.get(), &raw));
    model.reset(raw);
  }
  const std::string config_text = model_config(model.get());
  auto [train_set, test_set] =
      load_data(a.c.data_dir, dau_model_train_limit(model.get()), dau_model_test_limit(model.get()));
  log.line("data train=" + std::to_string(dau_dataset_size(train_set.get())) +
           " test=" + std::to_string(dau_dataset_size(test_set.get())));
  write_file(out / "resolved_config.txt", config_text);

  const fs::path ckpt_dir = out / "checkpoints";
  make_dir(ckpt_dir);
  const int done = dau_model_epochs_done(model.get());
  if (done == 0) check(dau_model_save(model.get(), (ckpt_dir / epoch_tag(0)).string().c_str()));

  // A resumed run keeps the rows of the epochs it continues from.
  std::string previous = std::string(dau_metrics_csv_header());
  const fs::path metrics_path = out / "metrics.csv";
  if (!a.resume.empty() && fs::exists(metrics_path)) {
    std::istringstream in(read_file(metrics_path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (!line.empty() && std::stoi(line.substr(0, line.find(','))) <= done) previous += line + "\n";
    }
  }
  std::ofstream metrics(metrics_path, std::ios::binary | std::ios::trunc);
  if (!metrics) io_error("cannot write " + metrics_path.string());
  metrics << previous;
  metrics.flush();

  TrainState st;
  st.metrics = &metrics;
  st.log = &log;
  st.ckpt_dir = ckpt_dir;
  st.checkpoint_every = checkpoint_every_from(config_text);
  check(dau_train(model.get(), train_set.get(), test_set.get(), on_epoch, &st));

  const fs::path final_path = out / "final.ckpt";
  check(dau_model_save(model.get(), final_path.string().c_str()));
  double acc = NAN;
  check(dau_evaluate(model.get(), test_set.get(), &acc));
  log.line("final checkpoint " + final_path.string() + " test_acc " + fmt_double(acc, 9));
  std::cout << "trained " << dau_model_epochs_done(model.get()) << " epochs, test accuracy "
            << fmt_double(acc) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const Common& c, const std::string& checkpoint) {
  apply_threads(c);
  RunLog log;
  const fs::path out = prepare_out(c.out, false, log, "eval");
  ModelPtr model = load_model(checkpoint);
  for (const auto& s : c.sets) check(dau_model_apply(model.get(), s.c_str()));
  auto [train_set, test_set] =
      load_data(c.data_dir, dau_model_train_limit(model.get()), dau_model_test_limit(model.get()));
  double acc = NAN;
  check(dau_evaluate(model.get(), test_set.get(), &acc));
  const std::string line = "test_accuracy=" + fmt_double(acc, 9) + "\nsamples=" +
                           std::to_string(dau_dataset_size(test_set.get())) + "\n";
  std::cout << line;
  if (!out.empty()) {
    write_file(out / "resolved_config.txt", model_config(model.get()) + "# eval checkpoint=" + checkpoint + "\n");
    write_file(out / "eval.txt", line);
    log.line("done");
  }
  return kOk;
}

// ---------------------------------------------------------------- checks

std::string failed_checks(const std::string& report) {
  std::istringstream in(report);
  std::string line, names;
  while (std::getline(in, line)) {
    if (line.size() >= 4 && line.compare(line.size() - 4, 4, "FAIL") == 0) {
      names += (names.empty() ? "" : ", ") + line.substr(0, line.find(' '));
    }
  }
  return names;
}

void write_check_outputs(const Common& c, const fs::path& out, const std::string& name, const std::string& report,
                         const std::string& params) {
  if (out.empty()) return;
  std::string cfg_text;
  if (!c.config.empty() || !c.sets.empty()) cfg_text = resolved_text(load_config(c).get());
  write_file(out / "resolved_config.txt", cfg_text + params);
  write_file(out / (name + ".txt"), report);
}

int cmd_gradcheck(const Common& c, int instances, bool analytic, bool corrupt) {
  apply_threads(c);
  if (!c.config.empty() || !c.sets.empty()) resolved_text(load_config(c).get());
  RunLog log;
  const fs::path out = prepare_out(c.out, false, log, "gradcheck");
  const std::uint64_t seed = c.seed.value_or(1);
  char* rep = nullptr;
  int passed = 0;
  check(dau_gradcheck(seed, instances, analytic ? 1 : 0, corrupt ? 1 : 0, &rep, &passed));
  const std::string report = take(rep).get();
  std::cout << report;
  write_check_outputs(c, out, "gradcheck", report,
                      "# gradcheck seed=" + std::to_string(seed) + " instances=" + std::to_string(instances) +
                          " analytic=" + (analytic ? "1" : "0") + " corrupt=" + (corrupt ? "1" : "0") + "\n");
  log.line(passed ? "pass" : "fail");
  if (!passed) throw Failure{"E_CHECK_FAILED", "gradient check failed: " + failed_checks(report), kCheckFailed};
  return kOk;
}

int cmd_oraclecheck(const Common& c, int cases, bool integer_only, bool verbose) {
  apply_threads(c);
  if (!c.config.empty() || !c.sets.empty()) resolved_text(load_config(c).get());
  RunLog log;
  const fs::path out = prepare_out(c.out, false, log, "oraclecheck");
  const std::uint64_t seed = c.seed.value_or(1);
  char* rep = nullptr;
  int passed = 0;
  check(dau_oraclecheck(seed, cases, integer_only ? 1 : 0, verbose ? 1 : 0, &rep, &passed));
  const std::string report = take(rep).get();
  std::cout << report;
  write_check_outputs(c, out, "oraclecheck", report,
                      "# oraclecheck seed=" + std::to_string(seed) + " cases=" + std::to_string(cases) +
                          " integer_only=" + (integer_only ? "1" : "0") + "\n");
  log.line(passed ? "pass" : "fail");
  if (!passed) throw Failure{"E_CHECK_FAILED", "oracle equivalence exceeded tolerance", kCheckFailed};
  return kOk;
}

// ---------------------------------------------------------------- analyze / prune

std::vector<double> parse_fractions(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') usage_error("bad fraction '" + item + "' in --fractions");
    out.push_back(v);
  }
  if (out.empty()) usage_error("--fractions is empty");
  return out;
}

std::string fraction_tag(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", f);
  return buf;
}

void write_parameter_report(const dau_model* model, const fs::path& out) {
  char* text = nullptr;
  char* json = nullptr;
  check(dau_parameter_report(model, &text, &json));
  String t = take(text), j = take(json);
  write_file(out / "parameters.txt", t.get());
  write_file(out / "parameters.json", j.get());
}

int cmd_analyze(const Common& c, const std::string& checkpoint, std::vector<int> layers,
                const std::string& fractions_arg, double bin_width) {
  apply_threads(c);
  RunLog log;
  const fs::path out = prepare_out(c.out, true, log, "analyze");
  const std::vector<double> fractions = parse_fractions(fractions_arg);
  ModelPtr model = load_model(checkpoint);
  if (layers.empty()) {
    int count = 0;
    check(dau_model_dau_layers(model.get(), nullptr, 0, &count));
    layers.resize(static_cast<std::size_t>(count));
    check(dau_model_dau_layers(model.get(), layers.data(), count, &count));
  }
  std::string params = "# analyze checkpoint=" + checkpoint + " fractions=" + fractions_arg +
                       " bin_width=" + fmt_double(bin_width, 9) + " layers=";
  for (std::size_t i = 0; i < layers.size(); ++i) params += (i ? "," : "") + std::to_string(layers[i]);
  write_file(out / "resolved_config.txt", model_config(model.get()) + params + "\n");

  std::string summary = "layer,fraction,total_mass\n";
  for (int layer : layers) {
    for (double f : fractions) {
      char* h = nullptr;
      char* s = nullptr;
      char* i = nullptr;
      double mass = 0.0;
      check(dau_analyze(model.get(), layer, f, bin_width, &h, &s, &i, &mass));
      String hs = take(h), ss = take(s), is = take(i);
      const std::string stem = "layer" + std::to_string(layer) + "_";
      write_file(out / (stem + "hist_" + fraction_tag(f) + ".csv"), hs.get());
      write_file(out / (stem + "scatter_" + fraction_tag(f) + ".csv"), ss.get());
      write_file(out / (stem + "init.csv"), is.get());
      summary += std::to_string(layer) + "," + fraction_tag(f) + "," + fmt_double(mass, 12) + "\n";
    }
  }
  write_file(out / "analysis_summary.csv", summary);
  write_parameter_report(model.get(), out);
  std::cout << summary;
  log.line("done");
  return kOk;
}

int cmd_prune(const Common& c, const std::string& checkpoint, double tau, const std::string& policy) {
  apply_threads(c);
  RunLog log;
  const fs::path out = prepare_out(c.out, true, log, "prune");
  ModelPtr model = load_model(checkpoint);
  dau_model* raw = nullptr;
  char* text = nullptr;
  char* json = nullptr;
  check(dau_prune(model.get(), tau, policy.c_str(), &raw, &text, &json));
  ModelPtr pruned(raw);
  String t = take(text), j = take(json);
  std::string report = t.get();

  if (!c.data_dir.empty()) {
    auto [train_set, test_set] =
        load_data(c.data_dir, dau_model_train_limit(model.get()), dau_model_test_limit(model.get()));
    double before = NAN, after = NAN;
    check(dau_evaluate(model.get(), test_set.get(), &before));
    check(dau_evaluate(pruned.get(), test_set.get(), &after));
    const std::string acc = "test_accuracy_before=" + fmt_double(before, 9) + "\ntest_accuracy_after=" +
                            fmt_double(after, 9) + "\n";
    write_file(out / "prune_eval.txt", acc);
    report += acc;
  }
  write_file(out / "resolved_config.txt", model_config(model.get()) + "# prune checkpoint=" + checkpoint +
                                              " tau=" + fmt_double(tau, 9) + " policy=" + policy + "\n");
  write_file(out / "prune_report.txt", t.get());
  write_file(out / "prune_report.json", j.get());
  check(dau_model_save(pruned.get(), (out / "pruned.ckpt").string().c_str()));
  write_parameter_report(pruned.get(), out);
  std::cout << report;
  log.line("done");
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Displaced aggregation unit networks: train, verify, analyze, prune"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dau_version()));

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a network on CIFAR-10 binaries");
  add_common(c_train, train.c, true);
  c_train->add_option("--resume", train.resume, "Continue from a checkpoint");
  c_train->add_option("--epochs", train.epochs, "Shortcut for --set train.epochs=N");

  Common eval;
  std::string eval_ckpt;
  auto* c_eval = app.add_subcommand("eval", "Top-1 accuracy of a checkpoint on the test split");
  add_common(c_eval, eval, true);
  c_eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();

  Common grad;
  int grad_instances = 20;
  bool grad_analytic = false, grad_corrupt = false;
  auto* c_grad = app.add_subcommand("gradcheck", "Backprop vs central finite differences");
  add_common(c_grad, grad, false);
  c_grad->add_option("--instances", grad_instances, "Random instances per check");
  c_grad->add_flag("--analytic", grad_analytic, "Also check the Gaussian-derivative displacement gradient");
  c_grad->add_flag("--corrupt-gradients", grad_corrupt, "Harness self-test: perturb backprop results");

  Common oracle;
  int oracle_cases = 200;
  bool oracle_integer = false, oracle_verbose = false;
  auto* c_oracle = app.add_subcommand("oraclecheck", "Fast DAU path vs explicit-filter oracle");
  add_common(c_oracle, oracle, false);
  c_oracle->add_option("--cases", oracle_cases, "Random cases");
  c_oracle->add_flag("--integer-only", oracle_integer, "Integer displacements only");
  c_oracle->add_flag("--verbose", oracle_verbose, "Print every case");

  Common analyze;
  std::string an_ckpt, an_fractions = "1.0,0.9,0.75";
  std::vector<int> an_layers;
  double an_bin = 0.25;
  auto* c_an = app.add_subcommand("analyze", "Displacement distributions and parameter counts");
  add_common(c_an, analyze, false);
  c_an->add_option("--checkpoint", an_ckpt, "Checkpoint file")->required();
  c_an->add_option("--layer", an_layers, "DAU block id (repeatable; default: all DAU blocks)");
  c_an->add_option("--fractions", an_fractions, "Retained fractions, comma separated");
  c_an->add_option("--bin-width", an_bin, "Histogram bin width in pixels");

  Common prune;
  std::string pr_ckpt, pr_policy = "layer-max";
  double pr_tau = 0.0;
  auto* c_pr = app.add_subcommand("prune", "Remove units below a relative amplification threshold");
  add_common(c_pr, prune, true);
  c_pr->add_option("--checkpoint", pr_ckpt, "Checkpoint file")->required();
  c_pr->add_option("--tau", pr_tau, "Relative threshold")->required();
  c_pr->add_option("--policy", pr_policy, "layer-max | global-max | filter-max");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    throw Failure{"E_USAGE", msg, kUsage};
  }

  if (c_train->parsed()) return cmd_train(train);
  if (c_eval->parsed()) return cmd_eval(eval, eval_ckpt);
  if (c_grad->parsed()) return cmd_gradcheck(grad, grad_instances, grad_analytic, grad_corrupt);
  if (c_oracle->parsed()) return cmd_oraclecheck(oracle, oracle_cases, oracle_integer, oracle_verbose);
  if (c_an->parsed()) return cmd_analyze(analyze, an_ckpt, an_layers, an_fractions, an_bin);
  if (c_pr->parsed()) return cmd_prune(prune, pr_ckpt, pr_tau, pr_policy);
  usage_error("no subcommand");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    std::string msg = f.message;
    for (char& ch : msg) {
      if (ch == '\n' || ch == '\r') ch = ' ';
    }
    std::cerr << "error[" << f.code << "]: " << msg << std::endl;
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error[E_INTERNAL]: " << e.what() << std::endl;
    return kInternal;
  }
}
