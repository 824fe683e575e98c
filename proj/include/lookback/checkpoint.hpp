#pragma once

#include <cstring>
#include <json.hpp>
#include <string>
#include <vector>

#include "lookback/common.hpp"
#include "lookback/tensor.hpp"

namespace lookback::ckpt {

// On-disk layout (all integers little-endian):
//   bytes 0..3   magic "LBCK"
//   bytes 4..7   u32 format version
//   bytes 8..15  u64 manifest length in bytes
//   manifest     JSON: {"meta": ..., "arrays": [{name,dtype,shape,offset,nbytes}]}
//   payload      raw array data, offsets relative to payload start
// Round trips are bit-exact: save(load(f)) reproduces f byte for byte.
inline constexpr std::uint32_t kFormatVersion = 1;

struct Array {
  std::string name;
  std::string dtype;  // "f32" | "f64"
  std::vector<std::int64_t> shape;
  std::vector<unsigned char> bytes;
};

struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<Array> arrays;

  const Array* find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }
};

void save(const std::string& path, const Checkpoint& ckpt);
Checkpoint load(const std::string& path);

template <typename T>
const char* dtype_tag() {
  if constexpr (std::is_same_v<T, float>) return "f32";
  else if constexpr (std::is_same_v<T, double>) return "f64";
  else static_assert(sizeof(T) == 0, "unsupported checkpoint dtype");
}

template <typename T>
Array make_array(std::string name, const Tensor<T>& t) {
  Array a;
  a.name = std::move(name);
  a.dtype = dtype_tag<T>();
  a.shape = t.shape();
  a.bytes.resize(static_cast<std::size_t>(t.numel()) * sizeof(T));
  std::memcpy(a.bytes.data(), t.data(), a.bytes.size());
  return a;
}

template <typename T>
Tensor<T> to_tensor(const Array& a) {
  check(a.dtype == dtype_tag<T>(),
        "array '" + a.name + "' has dtype " + a.dtype + ", expected " + dtype_tag<T>());
  Tensor<T> t(a.shape);
  check(a.bytes.size() == static_cast<std::size_t>(t.numel()) * sizeof(T),
        "array '" + a.name + "' payload size does not match its shape");
  std::memcpy(t.data(), a.bytes.data(), a.bytes.size());
  return t;
}

}  // namespace lookback::ckpt
