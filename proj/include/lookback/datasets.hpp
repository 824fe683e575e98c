#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lookback/rng.hpp"
#include "lookback/tensor.hpp"

namespace lookback::data {

// Images are held as 8-bit CHW pixels; scaling to [0,1] and per-channel
// normalization happen when an example is written into an episode tensor.
struct Split {
  struct Class {
    int id = 0;
    std::string name;
    std::int64_t count = 0;
    std::vector<std::uint8_t> pixels;  // count * C*H*W
  };

  int channels = 3, height = 84, width = 84;
  std::vector<double> norm_mean, norm_std;  // size == channels
  std::vector<Class> classes;

  int n_classes() const { return static_cast<int>(classes.size()); }
  int class_id(int ci) const { return classes[static_cast<std::size_t>(ci)].id; }
  std::int64_t n_examples(int ci) const { return classes[static_cast<std::size_t>(ci)].count; }
  std::array<std::int64_t, 3> image_shape() const { return {channels, height, width}; }
  std::int64_t pixels_per_image() const { return std::int64_t(channels) * height * width; }

  const Class& class_by_id(int id) const {
    for (const Class& c : classes)
      if (c.id == id) return c;
    fail_runtime("unknown class id " + std::to_string(id));
  }

  template <typename T>
  void write_example(int ci, int ei, T* dst) const {
    const Class& cls = classes[static_cast<std::size_t>(ci)];
    const std::int64_t per = pixels_per_image();
    const std::uint8_t* src = cls.pixels.data() + std::int64_t(ei) * per;
    const std::int64_t plane = std::int64_t(height) * width;
    for (int c = 0; c < channels; ++c) {
      const double mean = norm_mean[static_cast<std::size_t>(c)];
      const double inv_std = 1.0 / norm_std[static_cast<std::size_t>(c)];
      for (std::int64_t i = 0; i < plane; ++i)
        dst[c * plane + i] =
            static_cast<T>((static_cast<double>(src[c * plane + i]) / 255.0 - mean) * inv_std);
    }
  }
};

struct SplitManifest {
  std::vector<std::string> train_classes, val_classes, test_classes;

  static SplitManifest load(const std::string& train_path, const std::string& val_path,
                            const std::string& test_path);
  void validate() const;  // pairwise disjoint, all non-empty
};

struct SyntheticSpec {
  int n_classes = 8;
  int examples_per_class = 40;
  int channels = 3, height = 32, width = 32;
  double class_separation = 5.0;
  double noise_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    check(n_classes >= 1, ErrorKind::config, "synthetic spec: n_classes must be at least 1");
    check(examples_per_class >= 1, ErrorKind::config,
          "synthetic spec: examples_per_class must be at least 1");
    check(channels >= 1 && height >= 1 && width >= 1, ErrorKind::config,
          "synthetic spec: image size must be positive");
    check(class_separation > 0.0, ErrorKind::config,
          "synthetic spec: class_separation must be positive");
    check(noise_scale > 0.0, ErrorKind::config, "synthetic spec: noise_scale must be positive");
  }
};

// Prototype-plus-Gaussian-noise classes on the 8-bit pixel grid. Prototypes
// are resampled until pairwise separation (Euclidean, [0,1] pixel space)
// holds; examples clip to [0,1] and re-quantize, so a filesystem round trip
// is exact. split_tag keys the random streams and names classes; id_base
// keeps class ids globally unique across splits.
Split generate_synthetic(const SyntheticSpec& spec, const std::string& split_tag, int id_base,
                         const std::vector<double>& norm_mean, const std::vector<double>& norm_std,
                         std::vector<std::vector<std::uint8_t>>* prototypes_out = nullptr);

struct LoadedSplits {
  Split train, val, test;
};

// Synthetic train/val/test share one prototype set; each class's example
// pool is partitioned 60/20/20 instead. Random prototypes carry no structure
// across classes, so class-disjoint synthetic splits would pin every
// episodic score at chance; shared classes with held-out examples are the
// transfer this data actually supports.
LoadedSplits synthetic_splits(const SyntheticSpec& spec, const std::vector<double>& norm_mean,
                              const std::vector<double>& norm_std);

// Class-per-folder layout: <root>/<class_name>/<image files>. Images are
// decoded, resized to the target size, and stored as 8-bit CHW (RGB order).
LoadedSplits load_image_folder(const std::string& root, const SplitManifest& manifest, int channels,
                               int height, int width, const std::vector<double>& norm_mean,
                               const std::vector<double>& norm_std);

// Writes <root>/<class_name>/NNN.png for every class of the split.
void export_split(const Split& split, const std::string& root);

}  // namespace lookback::data
