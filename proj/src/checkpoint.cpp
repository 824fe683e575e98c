#include "lookback/checkpoint.hpp"

#include <cstdint>
#include <fstream>

namespace lookback::ckpt {

namespace {

constexpr char kMagic[4] = {'L', 'B', 'C', 'K'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t read_uint(std::istream& in, int nbytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i) {
    const int c = in.get();
    check(c != EOF, "checkpoint truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void save(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json dir = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& a : ckpt.arrays) {
    dir.push_back({{"name", a.name},
                   {"dtype", a.dtype},
                   {"shape", a.shape},
                   {"offset", offset},
                   {"nbytes", a.bytes.size()}});
    offset += a.bytes.size();
  }
  const nlohmann::json manifest = {{"meta", ckpt.meta}, {"arrays", dir}};
  const std::string text = manifest.dump();

  std::string header;
  header.append(kMagic, 4);
  put_u32(header, kFormatVersion);
  put_u64(header, text.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), "cannot write checkpoint: " + path);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : ckpt.arrays)
    out.write(reinterpret_cast<const char*>(a.bytes.data()),
              static_cast<std::streamsize>(a.bytes.size()));
  out.flush();
  check(out.good(), "write failed for checkpoint: " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "cannot open checkpoint: " + path);

  char magic[4];
  in.read(magic, 4);
  check(in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0,
        "not a checkpoint file: " + path);
  const auto version = static_cast<std::uint32_t>(read_uint(in, 4));
  check(version == kFormatVersion,
        "checkpoint version " + std::to_string(version) + " unsupported, this build reads version " +
            std::to_string(kFormatVersion));
  const std::uint64_t manifest_len = read_uint(in, 8);

  std::string text(manifest_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(manifest_len));
  check(static_cast<std::uint64_t>(in.gcount()) == manifest_len, "checkpoint truncated");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail_runtime("checkpoint manifest is not valid JSON: " + std::string(e.what()));
  }

  const std::istream::pos_type payload_start = in.tellg();
  Checkpoint ckpt;
  ckpt.meta = manifest.at("meta");
  for (const auto& entry : manifest.at("arrays")) {
    Array a;
    a.name = entry.at("name").get<std::string>();
    a.dtype = entry.at("dtype").get<std::string>();
    a.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    a.bytes.resize(entry.at("nbytes").get<std::uint64_t>());
    in.seekg(payload_start + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    in.read(reinterpret_cast<char*>(a.bytes.data()), static_cast<std::streamsize>(a.bytes.size()));
    check(static_cast<std::size_t>(in.gcount()) == a.bytes.size(), "checkpoint truncated");
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

}  // namespace lookback::ckpt
