#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lookback/checkpoint.hpp"
#include "lookback/config.hpp"
#include "lookback/evaluation.hpp"
#include "lookback/model.hpp"

namespace lookback::train {

// Adam over name-keyed moment tensors. Moments are created on first use, so
// the optimizer never needs the parameter set up front; state round-trips
// through checkpoints under adam.m.<name> / adam.v.<name>.
template <typename T>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::int64_t steps() const { return t_; }

  // One update over (parameter name, gradient) pairs; parameters are looked
  // up in the store. A zero gradient leaves its parameter bit-identical:
  // both moments stay +0, so the computed update is +0 and x - (+0) == x.
  void step(model::ParamStore<T>& params,
            const std::vector<std::pair<std::string, const Tensor<T>*>>& grads) {
    ++t_;
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    const T bc1 = static_cast<T>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const T bc2 = static_cast<T>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
    const T lr = static_cast<T>(lr_), eps = static_cast<T>(eps_);
    for (const auto& [name, grad] : grads) {
      Tensor<T>& p = params.at(name);
      check(grad != nullptr && grad->numel() == p.numel(),
            "gradient missing or mis-sized for parameter: " + name);
      Tensor<T>& m = moment(m_, name, p);
      Tensor<T>& v = moment(v_, name, p);
      for (std::int64_t i = 0; i < p.numel(); ++i) {
        const T g = (*grad)[i];
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
      }
    }
  }

  const std::map<std::string, Tensor<T>>& first_moments() const { return m_; }
  const std::map<std::string, Tensor<T>>& second_moments() const { return v_; }
  void load_state(std::map<std::string, Tensor<T>> m, std::map<std::string, Tensor<T>> v,
                  std::int64_t t) {
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

 private:
  Tensor<T>& moment(std::map<std::string, Tensor<T>>& store, const std::string& name,
                    const Tensor<T>& like) {
    auto it = store.find(name);
    if (it == store.end()) it = store.emplace(name, Tensor<T>(like.shape())).first;
    return it->second;
  }

  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::map<std::string, Tensor<T>> m_, v_;  // ordered, so checkpoints are canonical
};

inline model::ModelConfig model_config(const config::RunConfig& cfg) {
  model::ModelConfig mc;
  mc.channels = cfg.channels;
  mc.height = cfg.height;
  mc.width = cfg.width;
  mc.conv_channels = cfg.model_channels;
  mc.relation_hidden = cfg.relation_hidden;
  mc.taps = cfg.taps;
  return mc;
}

// Every store entry (trainable weights and running statistics alike) is
// saved under its own name; optimizer moments take the adam.m. / adam.v.
// prefixes. Callers own the meta block except adam_t, which is written here.
template <typename T>
ckpt::Checkpoint to_checkpoint(const model::Model<T>& model, const Adam<T>* opt,
                               nlohmann::json meta) {
  ckpt::Checkpoint c;
  if (opt != nullptr) meta["adam_t"] = opt->steps();
  c.meta = std::move(meta);
  for (const auto& e : model.params().entries())
    c.arrays.push_back(ckpt::make_array(e.name, e.value));
  if (opt != nullptr) {
    for (const auto& [name, t] : opt->first_moments())
      c.arrays.push_back(ckpt::make_array("adam.m." + name, t));
    for (const auto& [name, t] : opt->second_moments())
      c.arrays.push_back(ckpt::make_array("adam.v." + name, t));
  }
  return c;
}

template <typename T>
void from_checkpoint(model::Model<T>& model, Adam<T>* opt, const ckpt::Checkpoint& c) {
  for (auto& e : model.params().entries()) {
    const ckpt::Array* a = c.find(e.name);
    check(a != nullptr, "checkpoint is missing parameter: " + e.name);
    Tensor<T> t = ckpt::to_tensor<T>(*a);
    check(t.shape() == e.value.shape(), "checkpoint shape mismatch for parameter: " + e.name);
    e.value = std::move(t);
  }
  if (opt != nullptr) {
    std::map<std::string, Tensor<T>> m, v;
    for (const auto& a : c.arrays) {
      if (a.name.rfind("adam.m.", 0) == 0) m.emplace(a.name.substr(7), ckpt::to_tensor<T>(a));
      if (a.name.rfind("adam.v.", 0) == 0) v.emplace(a.name.substr(7), ckpt::to_tensor<T>(a));
    }
    opt->load_state(std::move(m), std::move(v), c.meta.value("adam_t", std::int64_t(0)));
  }
}

// Episodic meta-training. Per episode: sample from the episode's own derived
// stream, forward all active taps in train mode, backprop the weighted total,
// one Adam step over every bound parameter. Metrics go out as one JSON object
// per line. Checkpoints (when run_dir is non-empty): checkpoint-last at start
// and every eval point, checkpoint-best on validation improvement,
// checkpoint-final on normal completion; a divergence abort therefore always
// leaves the most recent good state on disk.
template <typename T>
class Trainer {
 public:
  Trainer(config::RunConfig cfg, const data::Split* train_data, const data::Split* val_data,
          std::string run_dir)
      : cfg_(std::move(cfg)),
        train_data_(train_data),
        val_data_(val_data),
        run_dir_(std::move(run_dir)),
        model_(model_config(cfg_), static_cast<std::uint64_t>(cfg_.train_seed)),
        opt_(cfg_.learning_rate) {}

  model::Model<T>& model() { return model_; }
  Adam<T>& optimizer() { return opt_; }
  double best_val_acc() const { return best_val_; }

  double scheduled_lr(std::int64_t episode) const {
    const auto k = static_cast<double>(episode / cfg_.decay_every);
    return cfg_.learning_rate * std::pow(cfg_.decay_factor, k);
  }

  void run(std::ostream* metrics) {
    const auto t0 = std::chrono::steady_clock::now();
    save("checkpoint-last.lbck", 0);
    if (cfg_.total_episodes == 0) {
      save("checkpoint-final.lbck", 0);
      return;
    }

    std::vector<std::pair<std::string, const Tensor<T>*>> grads;
    for (std::int64_t e = 0; e < cfg_.total_episodes; ++e) {
      opt_.set_lr(scheduled_lr(e));
      Rng er = Rng::derive(static_cast<std::uint64_t>(cfg_.train_seed), "train-episode",
                           static_cast<std::uint64_t>(e));
      const auto ep = episodes::sample_episode<T>(*train_data_, cfg_.train_spec(), er);

      Tape<T> tape;
      const auto fwd = model_.forward_episode(tape, ep, static_cast<T>(cfg_.alpha), cfg_.m,
                                              cfg_.weights, model::BnMode::train);
      const double total = static_cast<double>(tape.val(fwd.total)[0]);
      if (!std::isfinite(total)) fail_runtime("divergence at episode " + std::to_string(e));
      tape.backward(fwd.total);

      grads.clear();
      for (const auto& [name, id] : model_.bindings()) grads.emplace_back(name, &tape.grad(id));
      opt_.step(model_.params(), grads);

      nlohmann::json line{{"episode", e}, {"loss_total", total}, {"lr", opt_.lr()}};
      for (int tap = 2; tap <= 4; ++tap) {
        double weighted = 0.0;
        for (const auto& tf : fwd.taps)
          if (tf.tap == tap) weighted = tf.weight * static_cast<double>(tape.val(tf.ce)[0]);
        line["loss_l" + std::to_string(tap)] = weighted;
      }
      if (val_data_ != nullptr && cfg_.eval_every > 0 && (e + 1) % cfg_.eval_every == 0) {
        const double acc = validate(e);
        line["val_acc"] = acc;
        save("checkpoint-last.lbck", e + 1);
        if (acc > best_val_) {
          best_val_ = acc;
          save("checkpoint-best.lbck", e + 1);
        }
      }
      line["wallclock"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (metrics != nullptr) *metrics << line.dump() << '\n';
    }
    save("checkpoint-final.lbck", cfg_.total_episodes);
  }

  // Mean final-block query accuracy over val_episodes fresh episodes, keyed
  // by the training episode index so every validation round is independent.
  double validate(std::int64_t episode) {
    Rng vr = Rng::derive(static_cast<std::uint64_t>(cfg_.train_seed), "val-episode",
                         static_cast<std::uint64_t>(episode));
    double sum = 0.0;
    for (int i = 0; i < cfg_.val_episodes; ++i) {
      const auto ep = episodes::sample_episode<T>(*val_data_, cfg_.eval_spec(), vr);
      Tape<T> tape(false);
      const auto fwd = model_.forward_episode(tape, ep, static_cast<T>(cfg_.alpha), cfg_.m,
                                              cfg_.weights, model::BnMode::eval);
      sum += eval::query_accuracy(model_.predict(tape, fwd, ep), ep);
    }
    return sum / cfg_.val_episodes;
  }

  nlohmann::json checkpoint_meta(std::int64_t episode) const {
    return {{"episode", episode},
            {"best_val_acc", best_val_ >= 0.0 ? nlohmann::json(best_val_) : nlohmann::json()},
            {"precision", cfg_.precision},
            {"config_text", cfg_.dump()},
            {"rng", {{"seed", cfg_.train_seed}, {"episode_counter", episode}}}};
  }

 private:
  void save(const std::string& filename, std::int64_t episode) {
    if (run_dir_.empty()) return;
    ckpt::save(run_dir_ + "/" + filename, to_checkpoint(model_, &opt_, checkpoint_meta(episode)));
  }

  config::RunConfig cfg_;
  const data::Split* train_data_;
  const data::Split* val_data_;
  std::string run_dir_;
  model::Model<T> model_;
  Adam<T> opt_;
  double best_val_ = -1.0;  // negative until the first validation round
};

}  // namespace lookback::train
