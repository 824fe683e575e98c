// Exercises the C boundary the way an embedder would: through lookback.h
// only, checking status codes, error messages and output ownership.
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include <json.hpp>
#include <lookback.h>

namespace {

struct Owned {
  char* p = nullptr;
  ~Owned() { lb_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Config {
  lb_config* p = nullptr;
  ~Config() { lb_config_free(p); }
};

struct Dataset {
  lb_dataset* p = nullptr;
  ~Dataset() { lb_dataset_free(p); }
};

void set_all(lb_config* c, std::initializer_list<std::pair<const char*, const char*>> kvs) {
  for (const auto& [k, v] : kvs) REQUIRE(lb_config_set(c, k, v) == LB_OK);
}

// Small geometry so every call here stays in the millisecond range.
void micro_config(lb_config* c) {
  set_all(c, {{"data.height", "8"},
              {"data.width", "8"},
              {"data.channels", "1"},
              {"data.synth_classes", "4"},
              {"data.synth_examples", "20"},
              {"data.synth_separation", "1.0"},
              {"data.synth_noise", "0.3"},
              {"model.channels", "8"},
              {"model.relation_hidden", "4"},
              {"train.n_way", "2"},
              {"train.k_shot", "1"},
              {"train.q_per_class", "2"},
              {"train.m", "2"},
              {"train.total_episodes", "8"},
              {"train.eval_every", "4"},
              {"train.val_episodes", "2"},
              {"train.precision", "double"},
              {"train.seed", "11"},
              {"eval.n_way", "2"},
              {"eval.k_shot", "1"},
              {"eval.q_per_class", "2"},
              {"eval.n_episodes", "10"}});
}

std::string temp_dir(const std::string& stem) {
  const auto p = std::filesystem::temp_directory_path() / (stem + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("config handles: set, get, dump, and rejection of unknown keys") {
  Config c;
  REQUIRE(lb_config_create(&c.p) == LB_OK);

  CHECK(lb_config_set(c.p, "train.weights", "0,0,1") == LB_OK);
  Owned v;
  CHECK(lb_config_get(c.p, "train.weights", &v.p) == LB_OK);
  CHECK(v.str() == "0,0,1");

  CHECK(lb_config_set(c.p, "bogus.key", "1") == LB_ERR_CONFIG);
  CHECK(std::string(lb_last_error()).find("bogus.key") != std::string::npos);
  CHECK(lb_config_get(c.p, "bogus.key", &v.p) == LB_ERR_CONFIG);

  Owned text;
  CHECK(lb_config_dump(c.p, &text.p) == LB_OK);
  CHECK(text.str().find("train.weights = 0,0,1\n") != std::string::npos);

  CHECK(lb_config_load("/does/not/exist.cfg", &c.p) == LB_ERR_CONFIG);
  CHECK(lb_config_set(nullptr, "a", "b") == LB_ERR_CONFIG);
}

TEST_CASE("evaluate without a checkpoint is deterministic and well-formed") {
  Config c;
  REQUIRE(lb_config_create(&c.p) == LB_OK);
  micro_config(c.p);
  Dataset d;
  REQUIRE(lb_dataset_open(c.p, &d.p) == LB_OK);

  Owned json1, summary1, json2;
  REQUIRE(lb_evaluate(c.p, d.p, nullptr, 1, &json1.p, &summary1.p) == LB_OK);
  REQUIRE(lb_evaluate(c.p, d.p, nullptr, 1, &json2.p, nullptr) == LB_OK);
  CHECK(json1.str() == json2.str());
  CHECK(summary1.str().find("±") != std::string::npos);
  CHECK(summary1.str().find("accuracy ") == 0);

  const auto j = nlohmann::json::parse(json1.str());
  CHECK(j.at("n_episodes").get<int>() == 10);
  CHECK(j.at("per_episode").size() == 10);
  CHECK(j.at("per_layer").contains("4"));
  CHECK(j.at("mean_accuracy").get<double>() >= 0.0);
}

TEST_CASE("gradcheck through the C API passes on a miniature episode") {
  Config c;
  REQUIRE(lb_config_create(&c.p) == LB_OK);
  micro_config(c.p);
  REQUIRE(lb_config_set(c.p, "train.q_per_class", "1") == LB_OK);
  Dataset d;
  REQUIRE(lb_dataset_open(c.p, &d.p) == LB_OK);

  double max_rel_err = 1.0;
  int passed = 0;
  Owned report;
  REQUIRE(lb_gradcheck(c.p, d.p, 5, 60, &max_rel_err, &passed, &report.p) == LB_OK);
  CHECK(passed == 1);
  CHECK(max_rel_err <= 1e-4);
  const auto j = nlohmann::json::parse(report.str());
  CHECK(j.at("n_checked").get<int>() >= 60);
  CHECK(j.at("failures").empty());
}

TEST_CASE("train, evaluate from the checkpoint, compare with itself") {
  Config c;
  REQUIRE(lb_config_create(&c.p) == LB_OK);
  micro_config(c.p);
  const std::string dir = temp_dir("lb_capi_train");
  REQUIRE(lb_config_set(c.p, "output.run_dir", dir.c_str()) == LB_OK);
  Dataset d;
  REQUIRE(lb_dataset_open(c.p, &d.p) == LB_OK);

  REQUIRE(lb_train(c.p, d.p) == LB_OK);
  for (const char* f : {"config.cfg", "metrics.jsonl", "checkpoint-last.lbck",
                        "checkpoint-final.lbck"})
    CHECK(std::filesystem::exists(dir + "/" + f));

  const std::string final = dir + "/checkpoint-final.lbck";
  Owned json, summary;
  REQUIRE(lb_evaluate(c.p, d.p, final.c_str(), 0, &json.p, &summary.p) == LB_OK);
  CHECK(nlohmann::json::parse(json.str()).contains("per_layer"));

  // The trained model differs from a fresh one on the same episode stream.
  Owned fresh;
  REQUIRE(lb_evaluate(c.p, d.p, nullptr, 1, &fresh.p, nullptr) == LB_OK);

  Owned cmp;
  REQUIRE(lb_compare(c.p, d.p, final.c_str(), final.c_str(), &cmp.p) == LB_OK);
  const auto j = nlohmann::json::parse(cmp.str());
  CHECK(j.at("paired_diff").at("mean").get<double>() == 0.0);
  CHECK(j.at("paired_diff").at("ci95").get<double>() == 0.0);

  CHECK(lb_evaluate(c.p, d.p, (dir + "/missing.lbck").c_str(), 0, &json.p, nullptr) ==
        LB_ERR_RUNTIME);
  std::filesystem::remove_all(dir);
}

TEST_CASE("inspect dump arrives through the C boundary intact") {
  Config c;
  REQUIRE(lb_config_create(&c.p) == LB_OK);
  micro_config(c.p);
  Dataset d;
  REQUIRE(lb_dataset_open(c.p, &d.p) == LB_OK);

  Owned text;
  REQUIRE(lb_inspect(c.p, d.p, nullptr, 4, &text.p) == LB_OK);
  CHECK(text.str().rfind("episode seed=4 ", 0) == 0);
  CHECK(text.str().find("matrix P0") != std::string::npos);
  CHECK(text.str().find("\npredictions") != std::string::npos);

  Owned again;
  REQUIRE(lb_inspect(c.p, d.p, nullptr, 4, &again.p) == LB_OK);
  CHECK(text.str() == again.str());
}

TEST_CASE("synthetic export refuses a non-empty target without force") {
  Config c;
  REQUIRE(lb_config_create(&c.p) == LB_OK);
  micro_config(c.p);
  const std::string dir = temp_dir("lb_capi_synth");

  REQUIRE(lb_synth_export(c.p, dir.c_str(), 0) == LB_OK);
  CHECK(std::filesystem::exists(dir + "/synthetic_00"));
  CHECK(lb_synth_export(c.p, dir.c_str(), 0) == LB_ERR_INFEASIBLE);
  CHECK(std::string(lb_last_error()).find("not empty") != std::string::npos);
  CHECK(lb_synth_export(c.p, dir.c_str(), 1) == LB_OK);
  std::filesystem::remove_all(dir);
}
