#include "lookback/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace lookback::config {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::int64_t parse_int(const std::string& v) {
  std::size_t used = 0;
  std::int64_t out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    fail_config("expected an integer, got '" + v + "'");
  }
  check(used == v.size(), ErrorKind::config, "expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    fail_config("expected a number, got '" + v + "'");
  }
  check(used == v.size(), ErrorKind::config, "expected a number, got '" + v + "'");
  return out;
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) parts.push_back(trim(cur));
  check(!parts.empty(), ErrorKind::config, "expected a comma-separated list, got '" + v + "'");
  return parts;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

class Schema {
 public:
  explicit Schema(RunConfig& c) {
    bind("data.kind", c.data_kind);
    bind("data.root", c.data_root);
    bind("data.manifest_train", c.manifest_train);
    bind("data.manifest_val", c.manifest_val);
    bind("data.manifest_test", c.manifest_test);
    bind("data.channels", c.channels);
    bind("data.height", c.height);
    bind("data.width", c.width);
    bind_reals("data.normalize_mean", c.normalize_mean);
    bind_reals("data.normalize_std", c.normalize_std);
    bind("data.synth_classes", c.synth_classes);
    bind("data.synth_examples", c.synth_examples);
    bind("data.synth_separation", c.synth_separation);
    bind("data.synth_noise", c.synth_noise);
    bind("data.synth_seed", c.synth_seed);
    bind("model.channels", c.model_channels);
    bind("model.relation_hidden", c.relation_hidden);
    bind_ints("model.taps", c.taps);
    bind("train.n_way", c.train_n_way);
    bind("train.k_shot", c.train_k_shot);
    bind("train.q_per_class", c.train_q_per_class);
    bind("train.alpha", c.alpha);
    bind("train.m", c.m);
    bind_reals("train.weights", c.weights);
    bind("train.learning_rate", c.learning_rate);
    bind("train.decay_factor", c.decay_factor);
    bind("train.decay_every", c.decay_every);
    bind("train.total_episodes", c.total_episodes);
    bind("train.eval_every", c.eval_every);
    bind("train.val_episodes", c.val_episodes);
    bind("train.seed", c.train_seed);
    bind("train.precision", c.precision);
    bind("eval.n_way", c.eval_n_way);
    bind("eval.k_shot", c.eval_k_shot);
    bind("eval.q_per_class", c.eval_q_per_class);
    bind("eval.n_episodes", c.eval_n_episodes);
    bind("eval.seed", c.eval_seed);
    bind("output.run_dir", c.run_dir);
  }

  void set(const std::string& key, const std::string& value) const {
    for (const Field& f : fields_)
      if (f.key == key) {
        f.set(value);
        return;
      }
    fail_config("unknown key '" + key + "'");
  }

  std::string get(const std::string& key) const {
    for (const Field& f : fields_)
      if (f.key == key) return f.get();
    fail_config("unknown key '" + key + "'");
  }

  std::string dump() const {
    std::ostringstream out;
    for (const Field& f : fields_) out << f.key << " = " << f.get() << "\n";
    return out.str();
  }

 private:
  void bind(const std::string& key, std::string& ref) {
    fields_.push_back({key, [&ref](const std::string& v) { ref = v; }, [&ref] { return ref; }});
  }
  void bind(const std::string& key, int& ref) {
    fields_.push_back({key,
                       [&ref](const std::string& v) {
                         const std::int64_t x = parse_int(v);
                         check(x >= INT32_MIN && x <= INT32_MAX, ErrorKind::config,
                               "integer out of range: '" + v + "'");
                         ref = static_cast<int>(x);
                       },
                       [&ref] { return std::to_string(ref); }});
  }
  void bind(const std::string& key, std::int64_t& ref) {
    fields_.push_back({key, [&ref](const std::string& v) { ref = parse_int(v); },
                       [&ref] { return std::to_string(ref); }});
  }
  void bind(const std::string& key, double& ref) {
    fields_.push_back({key, [&ref](const std::string& v) { ref = parse_real(v); },
                       [&ref] { return format_real(ref); }});
  }
  void bind_reals(const std::string& key, std::vector<double>& ref) {
    fields_.push_back({key,
                       [&ref](const std::string& v) {
                         std::vector<double> out;
                         for (const std::string& p : split_commas(v)) out.push_back(parse_real(p));
                         ref = std::move(out);
                       },
                       [&ref] {
                         std::string s;
                         for (std::size_t i = 0; i < ref.size(); ++i)
                           s += (i ? "," : "") + format_real(ref[i]);
                         return s;
                       }});
  }
  void bind_ints(const std::string& key, std::vector<int>& ref) {
    fields_.push_back({key,
                       [&ref](const std::string& v) {
                         std::vector<int> out;
                         for (const std::string& p : split_commas(v))
                           out.push_back(static_cast<int>(parse_int(p)));
                         ref = std::move(out);
                       },
                       [&ref] {
                         std::string s;
                         for (std::size_t i = 0; i < ref.size(); ++i)
                           s += (i ? "," : "") + std::to_string(ref[i]);
                         return s;
                       }});
  }

  std::vector<Field> fields_;
};

}  // namespace

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  Schema schema(cfg);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    check(eq != std::string::npos, ErrorKind::config,
          "line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      schema.set(key, value);
    } catch (const Error& e) {
      fail_config("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), ErrorKind::config, "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  Schema(*this).set(key, value);
}

std::string RunConfig::get(const std::string& key) const {
  return Schema(const_cast<RunConfig&>(*this)).get(key);
}

std::string RunConfig::dump() const {
  return Schema(const_cast<RunConfig&>(*this)).dump();
}

void RunConfig::validate() const {
  check(data_kind == "synthetic" || data_kind == "folder", ErrorKind::config,
        "data.kind must be 'synthetic' or 'folder'");
  check(channels == 1 || channels == 3, ErrorKind::config, "data.channels must be 1 or 3");
  check(height >= 1 && width >= 1, ErrorKind::config, "image size must be positive");
  for (const std::vector<double>* v : {&normalize_mean, &normalize_std})
    check(v->size() == 1 || v->size() == static_cast<std::size_t>(channels), ErrorKind::config,
          "normalization lists must have 1 entry or one per channel");
  for (double s : normalize_std)
    check(s > 0.0, ErrorKind::config, "data.normalize_std entries must be positive");
  check(synth_classes >= 1 && synth_examples >= 1, ErrorKind::config,
        "synthetic class/example counts must be positive");
  check(synth_separation > 0.0 && synth_noise > 0.0, ErrorKind::config,
        "synthetic separation and noise must be positive");

  check(model_channels >= 1, ErrorKind::config, "model.channels must be positive");
  check(relation_hidden >= 1, ErrorKind::config, "model.relation_hidden must be positive");
  check(!taps.empty(), ErrorKind::config, "model.taps must be non-empty");
  for (std::size_t i = 0; i < taps.size(); ++i) {
    check(taps[i] >= 2 && taps[i] <= 4, ErrorKind::config, "model.taps entries must be 2, 3 or 4");
    check(i == 0 || taps[i] > taps[i - 1], ErrorKind::config,
          "model.taps must be strictly increasing");
  }
  check(taps.back() == 4, ErrorKind::config, "model.taps must include 4 (inference layer)");

  train_spec().validate();
  eval_spec().validate();
  check(alpha > 0.0 && alpha < 1.0, ErrorKind::config, "train.alpha must lie in (0,1)");
  check(m >= 1, ErrorKind::config, "train.m must be at least 1");
  check(weights.size() == 3, ErrorKind::config, "train.weights must have 3 entries (w2,w3,w4)");
  for (double w : weights)
    check(w >= 0.0 && std::isfinite(w), ErrorKind::config, "train.weights must be nonnegative");
  double active = 0.0;
  for (int t : taps) active += weight_for_tap(t);
  check(active > 0.0, ErrorKind::config, "train.weights over active taps must not all be zero");
  check(learning_rate > 0.0, ErrorKind::config, "train.learning_rate must be positive");
  check(decay_factor > 0.0 && decay_factor <= 1.0, ErrorKind::config,
        "train.decay_factor must lie in (0,1]");
  check(decay_every >= 1, ErrorKind::config, "train.decay_every must be at least 1");
  check(total_episodes >= 0, ErrorKind::config, "train.total_episodes must be nonnegative");
  check(eval_every >= 1, ErrorKind::config, "train.eval_every must be at least 1");
  check(val_episodes >= 1, ErrorKind::config, "train.val_episodes must be at least 1");
  check(precision == "single" || precision == "double", ErrorKind::config,
        "train.precision must be 'single' or 'double'");
  check(eval_n_episodes >= 1, ErrorKind::config, "eval.n_episodes must be at least 1");
}

std::vector<double> RunConfig::resolved_mean() const {
  return normalize_mean.size() == 1
             ? std::vector<double>(static_cast<std::size_t>(channels), normalize_mean[0])
             : normalize_mean;
}

std::vector<double> RunConfig::resolved_std() const {
  return normalize_std.size() == 1
             ? std::vector<double>(static_cast<std::size_t>(channels), normalize_std[0])
             : normalize_std;
}

std::string RunConfig::resolved_manifest(const std::string& explicit_path, const char* split) const {
  if (!explicit_path.empty()) return explicit_path;
  return data_root + "/" + split + ".txt";
}

}  // namespace lookback::config
