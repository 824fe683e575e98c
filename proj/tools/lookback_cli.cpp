// Command-line front end. Links the C API only; everything it knows about
// the library comes through lookback.h.
#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <lookback.h>

namespace {

struct ConfigDeleter {
  void operator()(lb_config* p) const { lb_config_free(p); }
};
struct DatasetDeleter {
  void operator()(lb_dataset* p) const { lb_dataset_free(p); }
};
using ConfigPtr = std::unique_ptr<lb_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<lb_dataset, DatasetDeleter>;

// Owns a char* returned by the library.
struct OutString {
  char* ptr = nullptr;
  ~OutString() { lb_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

int report_failure(lb_status s) {
  std::cerr << "error: " << lb_last_error() << "\n";
  return static_cast<int>(s);
}

// Shared --config/--set handling: every command accepts a config file plus
// dotted-path overrides applied in order.
struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "config file (defaults apply when omitted)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override, key=value (repeatable)");
  }

  lb_status build(ConfigPtr& out) const {
    lb_config* raw = nullptr;
    lb_status s = path.empty() ? lb_config_create(&raw) : lb_config_load(path.c_str(), &raw);
    if (s != LB_OK) return s;
    out.reset(raw);
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
        return LB_ERR_CONFIG;
      }
      s = lb_config_set(out.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
      if (s != LB_OK) return s;
    }
    return LB_OK;
  }
};

std::string config_value(const lb_config* cfg, const char* key) {
  OutString v;
  if (lb_config_get(cfg, key, &v.ptr) != LB_OK) return "";
  return v.str();
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  return out.good();
}

int cmd_train(const ConfigArgs& args) {
  ConfigPtr cfg;
  lb_status s = args.build(cfg);
  if (s != LB_OK) return report_failure(s);
  DatasetPtr data;
  {
    lb_dataset* raw = nullptr;
    s = lb_dataset_open(cfg.get(), &raw);
    if (s != LB_OK) return report_failure(s);
    data.reset(raw);
  }
  s = lb_train(cfg.get(), data.get());
  if (s != LB_OK) return report_failure(s);
  std::cout << "run complete: " << config_value(cfg.get(), "output.run_dir") << "\n";
  return 0;
}

int cmd_eval(const ConfigArgs& args, const std::string& checkpoint, const std::string& baseline,
             std::string report_path, bool per_episode) {
  ConfigPtr cfg;
  lb_status s = args.build(cfg);
  if (s != LB_OK) return report_failure(s);
  DatasetPtr data;
  {
    lb_dataset* raw = nullptr;
    s = lb_dataset_open(cfg.get(), &raw);
    if (s != LB_OK) return report_failure(s);
    data.reset(raw);
  }

  OutString json;
  if (!baseline.empty()) {
    if (checkpoint.empty()) {
      std::cerr << "error: --baseline requires --checkpoint\n";
      return static_cast<int>(LB_ERR_CONFIG);
    }
    s = lb_compare(cfg.get(), data.get(), checkpoint.c_str(), baseline.c_str(), &json.ptr);
    if (s != LB_OK) return report_failure(s);
    std::cout << "paired comparison written\n";
  } else {
    OutString summary;
    s = lb_evaluate(cfg.get(), data.get(), checkpoint.empty() ? nullptr : checkpoint.c_str(),
                    per_episode ? 1 : 0, &json.ptr, &summary.ptr);
    if (s != LB_OK) return report_failure(s);
    std::cout << "checkpoint: " << (checkpoint.empty() ? "none (fresh initialization)" : checkpoint)
              << "\n"
              << summary.str();
  }

  if (report_path.empty())
    report_path = config_value(cfg.get(), "output.run_dir") + "/eval-report.json";
  if (!write_file(report_path, json.str() + "\n")) {
    std::cerr << "error: cannot write report to " << report_path << "\n";
    return static_cast<int>(LB_ERR_RUNTIME);
  }
  std::cout << "report: " << report_path << "\n";
  return 0;
}

int cmd_synth_data(const ConfigArgs& args, const std::string& out_root, bool force) {
  ConfigPtr cfg;
  lb_status s = args.build(cfg);
  if (s != LB_OK) return report_failure(s);
  s = lb_synth_export(cfg.get(), out_root.c_str(), force ? 1 : 0);
  if (s != LB_OK) return report_failure(s);
  std::cout << "dataset written: " << out_root << "\n";
  return 0;
}

int cmd_inspect(const ConfigArgs& args, const std::string& checkpoint, std::uint64_t seed,
                const std::string& out_path) {
  ConfigPtr cfg;
  lb_status s = args.build(cfg);
  if (s != LB_OK) return report_failure(s);
  DatasetPtr data;
  {
    lb_dataset* raw = nullptr;
    s = lb_dataset_open(cfg.get(), &raw);
    if (s != LB_OK) return report_failure(s);
    data.reset(raw);
  }
  OutString text;
  s = lb_inspect(cfg.get(), data.get(), checkpoint.empty() ? nullptr : checkpoint.c_str(), seed,
                 &text.ptr);
  if (s != LB_OK) return report_failure(s);
  if (out_path.empty()) {
    std::cout << text.str();
  } else if (!write_file(out_path, text.str())) {
    std::cerr << "error: cannot write dump to " << out_path << "\n";
    return static_cast<int>(LB_ERR_RUNTIME);
  }
  return 0;
}

int cmd_gradcheck(const ConfigArgs& args, std::uint64_t seed, int samples,
                  const std::string& report_path) {
  ConfigPtr cfg;
  lb_status s = args.build(cfg);
  if (s != LB_OK) return report_failure(s);
  DatasetPtr data;
  {
    lb_dataset* raw = nullptr;
    s = lb_dataset_open(cfg.get(), &raw);
    if (s != LB_OK) return report_failure(s);
    data.reset(raw);
  }
  double max_rel_err = 0.0;
  int passed = 0;
  OutString json;
  s = lb_gradcheck(cfg.get(), data.get(), seed, samples, &max_rel_err, &passed, &json.ptr);
  if (s != LB_OK) return report_failure(s);
  if (!report_path.empty() && !write_file(report_path, json.str() + "\n")) {
    std::cerr << "error: cannot write report to " << report_path << "\n";
    return static_cast<int>(LB_ERR_RUNTIME);
  }
  std::printf("gradcheck %s: max relative error %.3e over %d sampled coordinates\n",
              passed ? "passed" : "FAILED", max_rel_err, samples);
  if (!passed) {
    std::cerr << "error: analytic and finite-difference gradients disagree\n";
    return static_cast<int>(LB_ERR_RUNTIME);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"episodic few-shot training with multi-layer graph label propagation"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  auto* train = app.add_subcommand("train", "train a model into the run directory");
  train_args.attach(train);

  ConfigArgs eval_args;
  std::string eval_checkpoint, eval_baseline, eval_report;
  bool eval_per_episode = false;
  auto* eval = app.add_subcommand("eval", "evaluate on the test split");
  eval_args.attach(eval);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint to evaluate (omit for untrained)");
  eval->add_option("--baseline", eval_baseline, "second checkpoint for a paired comparison");
  eval->add_option("--report", eval_report, "report path (default <run_dir>/eval-report.json)");
  eval->add_flag("--per-episode", eval_per_episode, "include per-episode accuracies in the report");

  ConfigArgs synth_args;
  std::string synth_out;
  bool synth_force = false;
  auto* synth = app.add_subcommand("synth-data", "write the synthetic dataset as image folders");
  synth_args.attach(synth);
  synth->add_option("--out", synth_out, "target directory")->required();
  synth->add_flag("--force", synth_force, "overwrite a non-empty target");

  ConfigArgs inspect_args;
  std::string inspect_checkpoint, inspect_out;
  std::uint64_t inspect_seed = 0;
  auto* inspect = app.add_subcommand("inspect", "dump one episode's graph pipeline as text");
  inspect_args.attach(inspect);
  inspect->add_option("--checkpoint", inspect_checkpoint, "checkpoint (omit for untrained)");
  inspect->add_option("--seed", inspect_seed, "episode seed");
  inspect->add_option("--out", inspect_out, "write the dump here instead of stdout");

  ConfigArgs grad_args;
  std::uint64_t grad_seed = 0;
  int grad_samples = 50;
  std::string grad_report;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the loss gradient");
  grad_args.attach(grad);
  grad->add_option("--seed", grad_seed, "episode and sampling seed");
  grad->add_option("--samples", grad_samples, "minimum sampled coordinates");
  grad->add_option("--report", grad_report, "write the full JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message or help text
    return code == 0 ? 0 : static_cast<int>(LB_ERR_CONFIG);
  }

  if (train->parsed()) return cmd_train(train_args);
  if (eval->parsed())
    return cmd_eval(eval_args, eval_checkpoint, eval_baseline, eval_report, eval_per_episode);
  if (synth->parsed()) return cmd_synth_data(synth_args, synth_out, synth_force);
  if (inspect->parsed())
    return cmd_inspect(inspect_args, inspect_checkpoint, inspect_seed, inspect_out);
  if (grad->parsed()) return cmd_gradcheck(grad_args, grad_seed, grad_samples, grad_report);
  return static_cast<int>(LB_ERR_CONFIG);
}
