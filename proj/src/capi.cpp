#include "lookback.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lookback/checkpoint.hpp"
#include "lookback/config.hpp"
#include "lookback/datasets.hpp"
#include "lookback/evaluation.hpp"
#include "lookback/gradcheck.hpp"
#include "lookback/inspect.hpp"
#include "lookback/training.hpp"

namespace fs = std::filesystem;
using namespace lookback;

struct lb_config {
  config::RunConfig cfg;
};

struct lb_dataset {
  data::LoadedSplits splits;
};

namespace {

thread_local std::string g_last_error = "no error";

template <typename F>
lb_status guarded(F&& f) {
  try {
    f();
    return LB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<lb_status>(static_cast<int>(e.kind()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LB_ERR_RUNTIME;
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  check(p != nullptr, ErrorKind::runtime, "out of memory");
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

data::SyntheticSpec synth_spec(const config::RunConfig& cfg) {
  data::SyntheticSpec s;
  s.n_classes = cfg.synth_classes;
  s.examples_per_class = cfg.synth_examples;
  s.channels = cfg.channels;
  s.height = cfg.height;
  s.width = cfg.width;
  s.class_separation = cfg.synth_separation;
  s.noise_scale = cfg.synth_noise;
  s.seed = static_cast<std::uint64_t>(cfg.synth_seed);
  return s;
}

data::LoadedSplits open_splits(const config::RunConfig& cfg) {
  cfg.validate();
  if (cfg.data_kind == "synthetic")
    return data::synthetic_splits(synth_spec(cfg), cfg.resolved_mean(), cfg.resolved_std());
  const auto manifest = data::SplitManifest::load(cfg.resolved_manifest(cfg.manifest_train, "train"),
                                                  cfg.resolved_manifest(cfg.manifest_val, "val"),
                                                  cfg.resolved_manifest(cfg.manifest_test, "test"));
  return data::load_image_folder(cfg.data_root, manifest, cfg.channels, cfg.height, cfg.width,
                                 cfg.resolved_mean(), cfg.resolved_std());
}

// The training configuration a checkpoint was produced under; geometry,
// propagation settings and precision follow the checkpoint, not the caller.
config::RunConfig stored_config(const ckpt::Checkpoint& c) {
  const std::string text = c.meta.value("config_text", "");
  check(!text.empty(), ErrorKind::runtime, "checkpoint meta is missing config_text");
  return config::RunConfig::parse_text(text);
}

std::string stored_precision(const ckpt::Checkpoint& c) {
  const std::string p = c.meta.value("precision", "");
  check(p == "single" || p == "double", ErrorKind::runtime,
        "checkpoint meta is missing a valid precision");
  return p;
}

template <typename T>
model::Model<T> model_from_checkpoint(const config::RunConfig& run_cfg, const ckpt::Checkpoint& c) {
  model::Model<T> m(train::model_config(run_cfg), static_cast<std::uint64_t>(run_cfg.train_seed));
  train::from_checkpoint<T>(m, nullptr, c);
  return m;
}

template <typename T>
void run_train(const config::RunConfig& cfg, const data::LoadedSplits& splits) {
  std::ofstream metrics(cfg.run_dir + "/metrics.jsonl");
  check(metrics.good(), ErrorKind::runtime, "cannot write metrics under " + cfg.run_dir);
  train::Trainer<T> trainer(cfg, &splits.train, &splits.val, cfg.run_dir);
  trainer.run(&metrics);
}

eval::EvalParams eval_params(const config::RunConfig& cfg, const config::RunConfig& model_cfg) {
  eval::EvalParams p;
  p.spec = cfg.eval_spec();
  p.n_episodes = cfg.eval_n_episodes;
  p.seed = static_cast<std::uint64_t>(cfg.eval_seed);
  p.alpha = model_cfg.alpha;
  p.m = model_cfg.m;
  p.weights = model_cfg.weights;
  return p;
}

std::string summary_text(const eval::EvalReport& r) {
  std::ostringstream out;
  out << "accuracy " << r.summary() << " (" << r.n_episodes << " episodes)\n";
  for (const auto& [tap, s] : r.per_layer)
    out << "layer " << tap << ": " << eval::format_mean_ci(s.mean, s.ci95) << "\n";
  return out.str();
}

template <typename T>
void evaluate_as(const config::RunConfig& cfg, const config::RunConfig& model_cfg,
                 const ckpt::Checkpoint* c, const data::Split& test, int include_per_episode,
                 char** out_json, char** out_summary) {
  model::Model<T> m =
      c ? model_from_checkpoint<T>(model_cfg, *c)
        : model::Model<T>(train::model_config(model_cfg),
                          static_cast<std::uint64_t>(model_cfg.train_seed));
  const auto report = eval::evaluate(m, test, eval_params(cfg, model_cfg));
  if (out_json) *out_json = dup_string(report.to_json(include_per_episode != 0).dump(2));
  if (out_summary) *out_summary = dup_string(summary_text(report));
}

template <typename T>
void inspect_as(const config::RunConfig& cfg, const config::RunConfig& model_cfg,
                const ckpt::Checkpoint* c, const data::Split& test, std::uint64_t seed,
                char** out_text) {
  model::Model<T> m =
      c ? model_from_checkpoint<T>(model_cfg, *c)
        : model::Model<T>(train::model_config(model_cfg),
                          static_cast<std::uint64_t>(model_cfg.train_seed));
  inspect::InspectParams p;
  p.spec = cfg.eval_spec();
  p.alpha = model_cfg.alpha;
  p.m = model_cfg.m;
  p.weights = model_cfg.weights;
  p.seed = seed;
  std::ostringstream out;
  inspect::dump_episode(m, test, p, out);
  if (out_text) *out_text = dup_string(out.str());
}

}  // namespace

extern "C" {

const char* lb_last_error(void) { return g_last_error.c_str(); }

void lb_string_free(char* s) { std::free(s); }

lb_status lb_config_create(lb_config** out) {
  return guarded([&] { *out = new lb_config{}; });
}

lb_status lb_config_load(const char* path, lb_config** out) {
  return guarded([&] {
    check(path != nullptr, ErrorKind::config, "config path is null");
    *out = new lb_config{config::RunConfig::parse_file(path)};
  });
}

lb_status lb_config_set(lb_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    check(cfg && key && value, ErrorKind::config, "config override needs a key and a value");
    cfg->cfg.set(key, value);
  });
}

lb_status lb_config_get(const lb_config* cfg, const char* key, char** out_value) {
  return guarded([&] {
    check(cfg && key && out_value, ErrorKind::config,
          "config get needs a config, a key and an out pointer");
    *out_value = dup_string(cfg->cfg.get(key));
  });
}

lb_status lb_config_dump(const lb_config* cfg, char** out_text) {
  return guarded([&] {
    check(cfg && out_text, ErrorKind::config, "config dump needs a config and an out pointer");
    *out_text = dup_string(cfg->cfg.dump());
  });
}

void lb_config_free(lb_config* cfg) { delete cfg; }

lb_status lb_dataset_open(const lb_config* cfg, lb_dataset** out) {
  return guarded([&] {
    check(cfg && out, ErrorKind::config, "dataset open needs a config and an out pointer");
    *out = new lb_dataset{open_splits(cfg->cfg)};
  });
}

void lb_dataset_free(lb_dataset* data) { delete data; }

lb_status lb_synth_export(const lb_config* cfg, const char* out_root, int force) {
  return guarded([&] {
    check(cfg && out_root, ErrorKind::config, "synthetic export needs a config and a target");
    cfg->cfg.validate();
    if (fs::exists(out_root) && !fs::is_empty(out_root) && !force)
      fail(ErrorKind::infeasible,
           std::string("target ") + out_root + " is not empty (use force to overwrite)");
    const auto splits =
        data::synthetic_splits(synth_spec(cfg->cfg), cfg->cfg.resolved_mean(),
                               cfg->cfg.resolved_std());
    // One folder per class: the split pools are re-joined so the exported
    // tree is the full example set, loadable through class-disjoint
    // manifests or re-split downstream.
    data::Split joined = splits.train;
    for (std::size_t c = 0; c < joined.classes.size(); ++c) {
      auto& dst = joined.classes[c];
      for (const data::Split* s : {&splits.val, &splits.test}) {
        const auto& src = s->classes[c];
        dst.pixels.insert(dst.pixels.end(), src.pixels.begin(), src.pixels.end());
        dst.count += src.count;
      }
    }
    data::export_split(joined, out_root);
  });
}

lb_status lb_train(const lb_config* cfg, const lb_dataset* data) {
  return guarded([&] {
    check(cfg && data, ErrorKind::config, "train needs a config and a dataset");
    const config::RunConfig& c = cfg->cfg;
    c.validate();
    fs::create_directories(c.run_dir);
    std::ofstream snapshot(c.run_dir + "/config.cfg");
    check(snapshot.good(), ErrorKind::runtime, "cannot write config snapshot under " + c.run_dir);
    snapshot << c.dump();
    snapshot.close();
    if (c.precision == "double")
      run_train<double>(c, data->splits);
    else
      run_train<float>(c, data->splits);
  });
}

lb_status lb_evaluate(const lb_config* cfg, const lb_dataset* data,
                      const char* checkpoint_or_null, int include_per_episode, char** out_json,
                      char** out_summary) {
  return guarded([&] {
    check(cfg && data, ErrorKind::config, "evaluate needs a config and a dataset");
    cfg->cfg.validate();
    if (checkpoint_or_null) {
      const auto c = ckpt::load(checkpoint_or_null);
      const auto model_cfg = stored_config(c);
      if (stored_precision(c) == "double")
        evaluate_as<double>(cfg->cfg, model_cfg, &c, data->splits.test, include_per_episode,
                            out_json, out_summary);
      else
        evaluate_as<float>(cfg->cfg, model_cfg, &c, data->splits.test, include_per_episode,
                           out_json, out_summary);
    } else if (cfg->cfg.precision == "double") {
      evaluate_as<double>(cfg->cfg, cfg->cfg, nullptr, data->splits.test, include_per_episode,
                          out_json, out_summary);
    } else {
      evaluate_as<float>(cfg->cfg, cfg->cfg, nullptr, data->splits.test, include_per_episode,
                         out_json, out_summary);
    }
  });
}

lb_status lb_compare(const lb_config* cfg, const lb_dataset* data, const char* checkpoint_a,
                     const char* checkpoint_b, char** out_json) {
  return guarded([&] {
    check(cfg && data && checkpoint_a && checkpoint_b, ErrorKind::config,
          "compare needs a config, a dataset and two checkpoints");
    cfg->cfg.validate();
    const auto ca = ckpt::load(checkpoint_a);
    const auto cb = ckpt::load(checkpoint_b);
    const std::string prec = stored_precision(ca);
    check(prec == stored_precision(cb), ErrorKind::config,
          "checkpoints disagree on precision: " + prec + " vs " + stored_precision(cb));
    const auto cfg_a = stored_config(ca);
    const auto cfg_b = stored_config(cb);
    // Propagation settings follow checkpoint A; a paired comparison needs one
    // shared episode protocol anyway.
    const auto params = eval_params(cfg->cfg, cfg_a);
    const auto run = [&](auto tag) {
      using T = decltype(tag);
      auto ma = model_from_checkpoint<T>(cfg_a, ca);
      auto mb = model_from_checkpoint<T>(cfg_b, cb);
      const auto report = eval::compare(ma, mb, data->splits.test, params);
      if (out_json) *out_json = dup_string(report.to_json().dump(2));
    };
    if (prec == "double")
      run(double{});
    else
      run(float{});
  });
}

lb_status lb_inspect(const lb_config* cfg, const lb_dataset* data, const char* checkpoint_or_null,
                     uint64_t seed, char** out_text) {
  return guarded([&] {
    check(cfg && data, ErrorKind::config, "inspect needs a config and a dataset");
    cfg->cfg.validate();
    if (checkpoint_or_null) {
      const auto c = ckpt::load(checkpoint_or_null);
      const auto model_cfg = stored_config(c);
      if (stored_precision(c) == "double")
        inspect_as<double>(cfg->cfg, model_cfg, &c, data->splits.test, seed, out_text);
      else
        inspect_as<float>(cfg->cfg, model_cfg, &c, data->splits.test, seed, out_text);
    } else if (cfg->cfg.precision == "double") {
      inspect_as<double>(cfg->cfg, cfg->cfg, nullptr, data->splits.test, seed, out_text);
    } else {
      inspect_as<float>(cfg->cfg, cfg->cfg, nullptr, data->splits.test, seed, out_text);
    }
  });
}

lb_status lb_gradcheck(const lb_config* cfg, const lb_dataset* data, uint64_t seed,
                       int min_samples, double* out_max_rel_err, int* out_passed,
                       char** out_report_json) {
  return guarded([&] {
    check(cfg && data, ErrorKind::config, "gradcheck needs a config and a dataset");
    const config::RunConfig& c = cfg->cfg;
    c.validate();
    check(min_samples >= 1, ErrorKind::config, "gradcheck needs at least one sample");

    model::Model<double> m(train::model_config(c), static_cast<std::uint64_t>(c.train_seed));
    Rng rng = Rng::derive(seed, "gradcheck-episode");
    const auto ep = episodes::sample_episode<double>(data->splits.train, c.train_spec(), rng);
    const auto report = model::gradcheck(m, ep, c.alpha, c.m, c.weights,
                                         static_cast<std::size_t>(min_samples), 1e-5, 1e-4, seed);

    if (out_max_rel_err) *out_max_rel_err = report.max_rel_err;
    if (out_passed) *out_passed = report.passed ? 1 : 0;
    if (out_report_json) {
      nlohmann::json j{{"max_rel_err", report.max_rel_err},
                       {"tolerance", report.tolerance},
                       {"step", report.step},
                       {"passed", report.passed},
                       {"n_checked", report.checks.size()}};
      j["failures"] = nlohmann::json::array();
      for (const auto& f : report.failures)
        j["failures"].push_back({{"param", f.param},
                                 {"index", f.index},
                                 {"analytic", f.analytic},
                                 {"numeric", f.numeric},
                                 {"rel_err", f.rel_err}});
      *out_report_json = dup_string(j.dump(2));
    }
  });
}

}  // extern "C"
