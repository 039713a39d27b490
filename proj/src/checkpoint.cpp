#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pelab/errors.hpp"
#include "pelab/model.hpp"
#include "pelab/scheme_json.hpp"

namespace pelab::model {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "pelab-checkpoint";
constexpr int kVersion = 1;

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xff) << (8 * (7 - i));
    return r;
  }
}

fs::path payload_path(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".bin");
  return p;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& manifest_path) {
  const fs::path manifest(manifest_path);
  const fs::path payload = payload_path(manifest);
  const auto tensors = ckpt.params.tensors();
  const auto names = ckpt.params.tensor_names();

  json jt = json::array();
  std::size_t offset = 0;
  std::ofstream bin(payload, std::ios::binary);
  if (!bin) throw IoError("cannot open '" + payload.string() + "' for writing");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& m = *tensors[i];
    jt.push_back({{"name", names[i]}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    for (double v : m.data()) {
      const std::uint64_t le = to_little(std::bit_cast<std::uint64_t>(v));
      bin.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
    offset += m.size();
  }
  bin.close();
  if (!bin) throw IoError("write failed for '" + payload.string() + "'");

  json j{{"format", kFormat},
         {"version", kVersion},
         {"dtype", "float64"},
         {"byte_order", "little"},
         {"payload", payload.filename().string()},
         {"scheme", encodings::to_json(ckpt.scheme)},
         {"model",
          {{"d_model", ckpt.params.dims.d_model},
           {"d_ff", ckpt.params.dims.d_ff},
           {"causal", ckpt.params.dims.causal}}},
         {"tensors", jt}};
  std::ofstream out(manifest);
  if (!out) throw IoError("cannot open '" + manifest.string() + "' for writing");
  out << j.dump(2) << '\n';
  out.close();
  if (!out) throw IoError("write failed for '" + manifest.string() + "'");
}

Checkpoint load_checkpoint(const std::string& manifest_path) {
  const fs::path manifest(manifest_path);
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open checkpoint '" + manifest.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw LoadError("checkpoint manifest is not valid JSON: " + std::string(e.what()));
  }

  Checkpoint ck;
  std::vector<std::uint64_t> raw;
  try {
    if (j.at("format") != kFormat || j.at("version") != kVersion)
      throw LoadError("unsupported checkpoint format");
    if (j.at("dtype") != "float64" || j.at("byte_order") != "little")
      throw LoadError("unsupported checkpoint payload encoding");
    ck.scheme = encodings::scheme_from_json(j.at("scheme"), encodings::SchemeConfig{});
    ModelConfig dims;
    dims.d_model = j.at("model").at("d_model").get<std::size_t>();
    dims.d_ff = j.at("model").at("d_ff").get<std::size_t>();
    dims.causal = j.at("model").at("causal").get<bool>();
    ck.params = init_params(dims, ck.scheme, 0);

    const fs::path payload = manifest.parent_path() / j.at("payload").get<std::string>();
    std::ifstream bin(payload, std::ios::binary | std::ios::ate);
    if (!bin) throw LoadError("cannot open checkpoint payload '" + payload.string() + "'");
    const auto bytes = static_cast<std::size_t>(bin.tellg());
    if (bytes % 8 != 0) throw LoadError("checkpoint payload size is not a multiple of 8");
    raw.resize(bytes / 8);
    bin.seekg(0);
    bin.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if (!bin) throw LoadError("short read on checkpoint payload");

    auto named = ck.params.tensors();
    const auto& jt = j.at("tensors");
    if (jt.size() != named.size()) throw LoadError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < named.size(); ++i) {
      const auto& e = jt.at(i);
      auto& m = *named[i].tensor;
      if (e.at("name") != named[i].name || e.at("rows") != m.rows() || e.at("cols") != m.cols())
        throw LoadError("checkpoint tensor '" + named[i].name + "' does not match the model");
      const auto off = e.at("offset").get<std::size_t>();
      if (off + m.size() > raw.size()) throw LoadError("checkpoint payload is truncated");
      for (std::size_t k = 0; k < m.size(); ++k)
        m.data()[k] = std::bit_cast<double>(to_little(raw[off + k]));
    }
  } catch (const json::exception& e) {
    throw LoadError("malformed checkpoint manifest: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw LoadError("checkpoint scheme is invalid: " + std::string(e.what()));
  }
  if (!ck.params.all_finite()) throw LoadError("checkpoint contains non-finite values");
  return ck;
}

}  // namespace pelab::model
