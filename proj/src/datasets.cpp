#include "lookback/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace lookback::data {

namespace {

std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), ErrorKind::config, "cannot open manifest " + path);
  std::vector<std::string> classes;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    classes.push_back(line.substr(first, last - first + 1));
  }
  return classes;
}

void check_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b,
                    const char* na, const char* nb) {
  std::set<std::string> sa(a.begin(), a.end());
  for (const std::string& c : b)
    check(!sa.count(c), ErrorKind::config,
          std::string("manifest splits ") + na + " and " + nb + " share class " + c);
}

}  // namespace

SplitManifest SplitManifest::load(const std::string& train_path, const std::string& val_path,
                                  const std::string& test_path) {
  SplitManifest m;
  m.train_classes = read_manifest(train_path);
  m.val_classes = read_manifest(val_path);
  m.test_classes = read_manifest(test_path);
  m.validate();
  return m;
}

void SplitManifest::validate() const {
  check(!train_classes.empty() && !val_classes.empty() && !test_classes.empty(), ErrorKind::config,
        "manifest splits must all be non-empty");
  check_disjoint(train_classes, val_classes, "train", "val");
  check_disjoint(train_classes, test_classes, "train", "test");
  check_disjoint(val_classes, test_classes, "val", "test");
}

Split generate_synthetic(const SyntheticSpec& spec, const std::string& split_tag, int id_base,
                         const std::vector<double>& norm_mean, const std::vector<double>& norm_std,
                         std::vector<std::vector<std::uint8_t>>* prototypes_out) {
  spec.validate();
  Split split;
  split.channels = spec.channels;
  split.height = spec.height;
  split.width = spec.width;
  split.norm_mean = norm_mean;
  split.norm_std = norm_std;
  const std::int64_t per = split.pixels_per_image();

  constexpr int kMaxAttempts = 1000;
  std::vector<std::vector<std::uint8_t>> protos;
  Rng proto_rng = Rng::derive(spec.seed, split_tag + "/prototype");
  for (int c = 0; c < spec.n_classes; ++c) {
    std::vector<std::uint8_t> cand(static_cast<std::size_t>(per));
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
      for (auto& p : cand) p = static_cast<std::uint8_t>(proto_rng.uniform_int(256));
      accepted = true;
      for (const auto& other : protos) {
        double d2 = 0.0;
        for (std::int64_t i = 0; i < per; ++i) {
          const double diff = (static_cast<double>(cand[static_cast<std::size_t>(i)]) -
                               static_cast<double>(other[static_cast<std::size_t>(i)])) /
                              255.0;
          d2 += diff * diff;
        }
        if (d2 < spec.class_separation * spec.class_separation) {
          accepted = false;
          break;
        }
      }
    }
    check(accepted, ErrorKind::infeasible, "separation infeasible");
    protos.push_back(std::move(cand));
  }

  for (int c = 0; c < spec.n_classes; ++c) {
    Split::Class cls;
    cls.id = id_base + c;
    std::ostringstream name;
    name << split_tag << "_" << (c < 10 ? "0" : "") << c;
    cls.name = name.str();
    cls.count = spec.examples_per_class;
    cls.pixels.resize(static_cast<std::size_t>(cls.count * per));
    const auto& proto = protos[static_cast<std::size_t>(c)];
    for (int e = 0; e < spec.examples_per_class; ++e) {
      Rng rng = Rng::derive(spec.seed, split_tag + "/example",
                            (static_cast<std::uint64_t>(c) << 32) | static_cast<std::uint64_t>(e));
      std::uint8_t* dst = cls.pixels.data() + std::int64_t(e) * per;
      for (std::int64_t i = 0; i < per; ++i) {
        const double v = static_cast<double>(proto[static_cast<std::size_t>(i)]) / 255.0 +
                         spec.noise_scale * rng.normal();
        const double clipped = std::min(std::max(v, 0.0), 1.0);
        dst[i] = static_cast<std::uint8_t>(std::lround(clipped * 255.0));
      }
    }
    split.classes.push_back(std::move(cls));
  }
  if (prototypes_out) *prototypes_out = std::move(protos);
  return split;
}

LoadedSplits synthetic_splits(const SyntheticSpec& spec, const std::vector<double>& norm_mean,
                              const std::vector<double>& norm_std) {
  check(spec.examples_per_class >= 5, ErrorKind::infeasible,
        "synthetic splits need at least 5 examples per class");
  const Split full = generate_synthetic(spec, "synthetic", 0, norm_mean, norm_std);
  const std::int64_t per = full.pixels_per_image();
  const std::int64_t e = spec.examples_per_class;
  const std::int64_t n_val = std::max<std::int64_t>(1, e / 5);
  const std::int64_t n_test = std::max<std::int64_t>(1, e / 5);
  const std::int64_t n_train = e - n_val - n_test;

  LoadedSplits out;
  for (Split* s : {&out.train, &out.val, &out.test}) {
    s->channels = full.channels;
    s->height = full.height;
    s->width = full.width;
    s->norm_mean = norm_mean;
    s->norm_std = norm_std;
  }
  for (const Split::Class& cls : full.classes) {
    const auto slice = [&](std::int64_t first, std::int64_t count) {
      Split::Class c;
      c.id = cls.id;
      c.name = cls.name;
      c.count = count;
      c.pixels.assign(cls.pixels.begin() + first * per,
                      cls.pixels.begin() + (first + count) * per);
      return c;
    };
    out.train.classes.push_back(slice(0, n_train));
    out.val.classes.push_back(slice(n_train, n_val));
    out.test.classes.push_back(slice(n_train + n_val, n_test));
  }
  return out;
}

namespace {

Split load_split(const std::string& root, const std::vector<std::string>& class_names,
                 int channels, int height, int width, const std::vector<double>& norm_mean,
                 const std::vector<double>& norm_std, int id_base) {
  Split split;
  split.channels = channels;
  split.height = height;
  split.width = width;
  split.norm_mean = norm_mean;
  split.norm_std = norm_std;
  const std::int64_t per = split.pixels_per_image();
  const std::int64_t plane = std::int64_t(height) * width;

  std::vector<std::string> missing;
  for (const std::string& name : class_names)
    if (!fs::is_directory(fs::path(root) / name)) missing.push_back(name);
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "missing class directories under " << root << ":";
    for (const std::string& name : missing) msg << " " << name;
    fail_runtime(msg.str());
  }

  int next_id = id_base;
  for (const std::string& name : class_names) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(fs::path(root) / name))
      if (entry.is_regular_file()) files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    check(!files.empty(), ErrorKind::runtime, "class too small: " + name + " has no images");

    Split::Class cls;
    cls.id = next_id++;
    cls.name = name;
    cls.count = static_cast<std::int64_t>(files.size());
    cls.pixels.resize(static_cast<std::size_t>(cls.count * per));
    for (std::size_t f = 0; f < files.size(); ++f) {
      cv::Mat img = cv::imread(files[f], channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
      check(!img.empty(), ErrorKind::runtime, "cannot decode image " + files[f]);
      cv::Mat resized;
      cv::resize(img, resized, cv::Size(width, height), 0, 0, cv::INTER_AREA);
      std::uint8_t* dst = cls.pixels.data() + static_cast<std::int64_t>(f) * per;
      if (channels == 1) {
        for (int i = 0; i < height; ++i)
          for (int j = 0; j < width; ++j) dst[i * width + j] = resized.at<std::uint8_t>(i, j);
      } else {
        check(channels == 3, ErrorKind::config, "channel count must be 1 or 3");
        for (int i = 0; i < height; ++i)
          for (int j = 0; j < width; ++j) {
            const cv::Vec3b bgr = resized.at<cv::Vec3b>(i, j);  // stored as RGB planes
            dst[0 * plane + i * width + j] = bgr[2];
            dst[1 * plane + i * width + j] = bgr[1];
            dst[2 * plane + i * width + j] = bgr[0];
          }
      }
    }
    split.classes.push_back(std::move(cls));
  }
  return split;
}

}  // namespace

LoadedSplits load_image_folder(const std::string& root, const SplitManifest& manifest, int channels,
                               int height, int width, const std::vector<double>& norm_mean,
                               const std::vector<double>& norm_std) {
  manifest.validate();
  check(fs::is_directory(root), ErrorKind::config, "dataset root not found: " + root);
  LoadedSplits out;
  int base = 0;
  out.train = load_split(root, manifest.train_classes, channels, height, width, norm_mean,
                         norm_std, base);
  base += out.train.n_classes();
  out.val =
      load_split(root, manifest.val_classes, channels, height, width, norm_mean, norm_std, base);
  base += out.val.n_classes();
  out.test =
      load_split(root, manifest.test_classes, channels, height, width, norm_mean, norm_std, base);
  return out;
}

void export_split(const Split& split, const std::string& root) {
  const std::int64_t plane = std::int64_t(split.height) * split.width;
  for (const Split::Class& cls : split.classes) {
    const fs::path dir = fs::path(root) / cls.name;
    fs::create_directories(dir);
    for (std::int64_t e = 0; e < cls.count; ++e) {
      const std::uint8_t* src = cls.pixels.data() + e * split.pixels_per_image();
      cv::Mat img;
      if (split.channels == 1) {
        img = cv::Mat(split.height, split.width, CV_8UC1);
        for (int i = 0; i < split.height; ++i)
          for (int j = 0; j < split.width; ++j)
            img.at<std::uint8_t>(i, j) = src[i * split.width + j];
      } else {
        img = cv::Mat(split.height, split.width, CV_8UC3);
        for (int i = 0; i < split.height; ++i)
          for (int j = 0; j < split.width; ++j)
            img.at<cv::Vec3b>(i, j) =
                cv::Vec3b(src[2 * plane + i * split.width + j], src[1 * plane + i * split.width + j],
                          src[0 * plane + i * split.width + j]);
      }
      std::ostringstream name;
      name << (e < 10 ? "00" : e < 100 ? "0" : "") << e << ".png";
      check(cv::imwrite((dir / name.str()).string(), img), ErrorKind::runtime,
            "cannot write image " + (dir / name.str()).string());
    }
  }
}

}  // namespace lookback::data
