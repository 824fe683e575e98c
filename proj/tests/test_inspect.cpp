#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lookback/inspect.hpp"

using namespace lookback;

namespace {

data::Split micro_split() {
  data::SyntheticSpec s;
  s.n_classes = 4;
  s.examples_per_class = 12;
  s.channels = 1;
  s.height = 8;
  s.width = 8;
  s.class_separation = 1.0;
  s.noise_scale = 0.3;
  s.seed = 77;
  return data::generate_synthetic(s, "test", 0, {0.5}, {0.25});
}

model::ModelConfig micro_model_cfg() {
  model::ModelConfig c;
  c.channels = 1;
  c.height = 8;
  c.width = 8;
  c.conv_channels = 8;
  c.relation_hidden = 4;
  return c;
}

inspect::InspectParams micro_params() {
  inspect::InspectParams p;
  p.spec = {2, 1, 2};
  p.m = 2;
  p.seed = 9;
  return p;
}

// Tiny reader for the dump format: labeled matrices plus key=value lines.
struct Dump {
  std::map<std::string, std::vector<std::vector<double>>> matrices;  // "tap4/W" etc.
  std::vector<int> labels, predictions, query_labels;
  std::map<std::string, double> raw_loss, weighted_loss;  // keyed by tap
  double total = 0.0;

  static Dump parse(const std::string& text) {
    Dump d;
    std::istringstream in(text);
    std::string line, tap = "none";
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string head;
      ls >> head;
      if (head == "tap") {
        ls >> tap;
      } else if (head == "matrix") {
        std::string name;
        std::int64_t rows = 0, cols = 0;
        ls >> name >> rows >> cols;
        std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
        for (auto& row : m) {
          REQUIRE(static_cast<bool>(std::getline(in, line)));
          std::istringstream rs(line);
          for (auto& v : row) REQUIRE(static_cast<bool>(rs >> v));
        }
        d.matrices["tap" + tap + "/" + name] = std::move(m);
      } else if (head == "labels" || head == "predictions" || head == "query_labels") {
        auto& dst = head == "labels" ? d.labels
                    : head == "predictions" ? d.predictions
                                            : d.query_labels;
        int v;
        while (ls >> v) dst.push_back(v);
      } else if (head == "loss") {
        std::string kv;
        while (ls >> kv) {
          const auto eq = kv.find('=');
          const double v = std::stod(kv.substr(eq + 1));
          (kv.substr(0, eq) == "raw" ? d.raw_loss : d.weighted_loss)[tap] = v;
        }
      } else if (head == "total") {
        ls >> d.total;
      }
    }
    return d;
  }
};

}  // namespace

TEST_CASE("dump is deterministic and episode-complete") {
  const auto split = micro_split();
  model::Model<double> m(micro_model_cfg(), 21);
  std::ostringstream a, b;
  inspect::dump_episode(m, split, micro_params(), a);
  inspect::dump_episode(m, split, micro_params(), b);
  CHECK(a.str() == b.str());

  const Dump d = Dump::parse(a.str());
  CHECK(d.labels.size() == 6);
  CHECK(d.predictions.size() == 4);
  CHECK(d.query_labels.size() == 4);
  for (const std::string tap : {"2", "3", "4"}) {
    for (const std::string name : {"S", "W", "L"})
      CHECK(d.matrices.at("tap" + tap + "/" + name).size() == 6);
    CHECK(d.matrices.at("tap" + tap + "/Pstar")[0].size() == 2);
    CHECK(d.matrices.at("tap" + tap + "/sigma")[0].size() == 6);
  }
  CHECK(d.matrices.at("tapnone/P0").size() == 6);

  std::ostringstream c;
  auto reseeded = micro_params();
  reseeded.seed = 10;
  inspect::dump_episode(m, split, reseeded, c);
  CHECK(c.str() != a.str());
}

TEST_CASE("dumped matrices satisfy the pipeline identities") {
  const auto split = micro_split();
  model::Model<double> m(micro_model_cfg(), 21);
  std::ostringstream out;
  inspect::dump_episode(m, split, micro_params(), out);
  const Dump d = Dump::parse(out.str());

  for (const std::string tap : {"2", "3", "4"}) {
    const auto& w = d.matrices.at("tap" + tap + "/W");
    const auto& l = d.matrices.at("tap" + tap + "/L");
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i][i] == 0.0);
      for (std::size_t j = 0; j < w.size(); ++j) {
        CHECK(w[i][j] == w[j][i]);
        CHECK(l[i][j] == l[j][i]);
      }
    }

    // Probabilities re-derive the dumped loss: rows sum to one and the
    // summed negative log-likelihood matches the raw loss line.
    const auto& probs = d.matrices.at("tap" + tap + "/probs");
    double nll = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      double sum = 0.0;
      for (double v : probs[i]) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-12);
      nll -= std::log(std::max(probs[i][static_cast<std::size_t>(d.labels[i])], 1e-12));
    }
    CHECK(std::abs(nll - d.raw_loss.at(tap)) < 1e-6);
  }

  double weighted = 0.0;
  for (const auto& [tap, v] : d.weighted_loss) weighted += v;
  CHECK(std::abs(weighted - d.total) < 1e-9);

  // Predictions are the argmax of the dumped final-tap query rows.
  const auto& pstar = d.matrices.at("tap4/Pstar");
  for (std::size_t q = 0; q < d.predictions.size(); ++q) {
    const auto& row = pstar[2 + q];  // two support nodes in a 2-way 1-shot episode
    int best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = static_cast<int>(c);
    CHECK(best == d.predictions[q]);
  }
}
