#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lookback/episodes.hpp"

namespace lookback::config {

// Flat `key = value` file with dotted keys; '#' starts a comment. Unknown
// keys are rejected with a line diagnostic. dump() emits every key in schema
// order with round-trip-exact formatting, so parse(dump(c)) == c.
struct RunConfig {
  // data
  std::string data_kind = "synthetic";  // synthetic | folder
  std::string data_root;
  std::string manifest_train, manifest_val, manifest_test;  // default <root>/<split>.txt
  int channels = 3;
  int height = 32, width = 32;
  std::vector<double> normalize_mean{0.0};  // length 1 (broadcast) or channels
  std::vector<double> normalize_std{1.0};
  int synth_classes = 8;
  int synth_examples = 40;
  double synth_separation = 5.0;
  double synth_noise = 0.5;
  std::int64_t synth_seed = 1;

  // model
  int model_channels = 64;
  int relation_hidden = 8;
  std::vector<int> taps{2, 3, 4};

  // train
  int train_n_way = 5, train_k_shot = 1, train_q_per_class = 15;
  double alpha = 0.99;
  int m = 20;
  std::vector<double> weights{1.0, 1.0, 1.0};  // w2, w3, w4
  double learning_rate = 0.001;
  double decay_factor = 0.8;
  int decay_every = 5000;
  std::int64_t total_episodes = 30000;
  int eval_every = 1000;
  int val_episodes = 100;
  std::int64_t train_seed = 0;
  std::string precision = "single";  // single | double

  // eval
  int eval_n_way = 5, eval_k_shot = 1, eval_q_per_class = 15;
  int eval_n_episodes = 600;
  std::int64_t eval_seed = 7;

  // output
  std::string run_dir = "run";

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& text);
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;  // value formatted as dump() emits it
  std::string dump() const;
  void validate() const;

  episodes::EpisodeSpec train_spec() const { return {train_n_way, train_k_shot, train_q_per_class}; }
  episodes::EpisodeSpec eval_spec() const { return {eval_n_way, eval_k_shot, eval_q_per_class}; }
  double weight_for_tap(int tap) const { return weights[static_cast<std::size_t>(tap - 2)]; }
  bool tap_active(int tap) const {
    for (int t : taps)
      if (t == tap) return true;
    return false;
  }
  std::vector<double> resolved_mean() const;  // broadcast to channel count
  std::vector<double> resolved_std() const;
  std::string resolved_manifest(const std::string& explicit_path, const char* split) const;
};

}  // namespace lookback::config
