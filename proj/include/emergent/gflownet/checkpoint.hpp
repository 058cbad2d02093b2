#pragma once

// Model checkpoint container.
//
//   offset 0   8 bytes   magic "EMGTCKPT"
//   offset 8   u32 LE    format version
//   offset 12  u64 LE    header byte length H
//   offset 20  H bytes   UTF-8 JSON header
//   offset 20+H          tensor payload
//
// The header records encoder_kind, the training market size n, layer
// dimensions (graph only), the training temperature and seed, and one entry per tensor with its name,
// shape, dtype and payload offset. Parameters are "f32le" (little-endian
// IEEE-754 binary32, column-major); tabular lookup keys are "u64le".

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emergent/gflownet/emergent.hpp"
#include "emergent/gflownet/losses.hpp"

namespace emergent::gfn {

inline constexpr char kCheckpointMagic[8] = {'E', 'M', 'G', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  std::size_t n = 0;  // market size the model was trained on
  double temperature = 1.0;
  std::uint64_t seed = 0;
  Objective objective = Objective::ForwardLooking;
  std::size_t steps = 0;
};

struct Checkpoint {
  AnyPolicy model;
  CheckpointInfo info;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}
inline std::uint64_t get_le(const std::string& in, std::size_t at, int bytes) {
  if (at + static_cast<std::size_t>(bytes) > in.size()) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + k])) << (8 * k);
  return v;
}

inline void put_f32_tensor(std::string& payload, std::span<const double> values) {
  for (double v : values) put_u32(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline std::vector<double> get_f32_tensor(const std::string& in, std::size_t at, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(in, at + 4 * k, 4)));
  }
  return out;
}

}  // namespace detail

inline std::string serialize_checkpoint(const AnyPolicy& model, const CheckpointInfo& info) {
  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["encoder_kind"] = encoder_name(model);
  header["temperature"] = info.temperature;
  header["seed"] = info.seed;
  header["objective"] = objective_name(info.objective);
  header["steps"] = info.steps;
  std::string payload;
  auto tensors = nlohmann::ordered_json::array();
  auto add_entry = [&](const std::string& name, std::size_t rows, std::size_t cols,
                       const char* dtype) {
    tensors.push_back({{"name", name},
                       {"shape", {rows, cols}},
                       {"dtype", dtype},
                       {"offset", payload.size()}});
  };
  if (const auto* g = std::get_if<GraphPolicy>(&model)) {
    header["n"] = info.n;
    header["hidden"] = g->config().hidden;
    header["layers"] = g->config().layers;
    for (const auto& t : g->tensors()) {
      add_entry(t.name, t.rows, t.cols, "f32le");
      detail::put_f32_tensor(payload, g->parameters().subspan(t.offset, t.size()));
    }
  } else {
    const auto& tab = std::get<TabularPolicy>(model);
    header["n"] = tab.n();
    add_entry("table.keys", tab.slot_count(), 2, "u64le");
    for (const auto& k : tab.keys()) {
      detail::put_u64(payload, k.profile);
      detail::put_u64(payload, k.state);
    }
    add_entry("table.params", tab.slot_count(), tab.row_width(), "f32le");
    detail::put_f32_tensor(payload, tab.parameters());
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  const auto version = detail::get_le(bytes, 8, 4);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = detail::get_le(bytes, 12, 8);
  if (20 + header_len > bytes.size()) throw FormatError("checkpoint truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(20, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  const std::size_t base = 20 + header_len;
  try {
    CheckpointInfo info;
    info.n = header.at("n").get<std::size_t>();
    info.temperature = header.at("temperature").get<double>();
    info.seed = header.at("seed").get<std::uint64_t>();
    info.objective = header.at("objective").get<std::string>() == "db" ? Objective::DetailedBalance
                                                                       : Objective::ForwardLooking;
    info.steps = header.value("steps", std::size_t{0});
    auto find = [&](const std::string& name) -> const nlohmann::json& {
      for (const auto& t : header.at("tensors"))
        if (t.at("name") == name) return t;
      throw FormatError("checkpoint lacks tensor " + name);
    };
    auto shape_of = [](const nlohmann::json& t) {
      return std::make_pair(t.at("shape").at(0).get<std::size_t>(), t.at("shape").at(1).get<std::size_t>());
    };
    const std::string kind = header.at("encoder_kind").get<std::string>();
    if (kind == "graph") {
      GraphPolicy g({header.at("hidden").get<std::size_t>(), header.at("layers").get<std::size_t>()});
      for (const auto& t : g.tensors()) {
        const auto& entry = find(t.name);
        if (shape_of(entry) != std::make_pair(t.rows, t.cols) || entry.at("dtype") != "f32le") {
          throw FormatError("tensor " + t.name + " has an unexpected shape or dtype");
        }
        const auto values = detail::get_f32_tensor(bytes, base + entry.at("offset").get<std::size_t>(), t.size());
        std::copy(values.begin(), values.end(), g.parameters().begin() + static_cast<std::ptrdiff_t>(t.offset));
      }
      return {AnyPolicy(std::move(g)), info};
    }
    if (kind == "tabular") {
      TabularPolicy tab(header.at("n").get<std::size_t>());
      const auto& keys_entry = find("table.keys");
      const auto& params_entry = find("table.params");
      const auto [slots, two] = shape_of(keys_entry);
      if (two != 2 || shape_of(params_entry) != std::make_pair(slots, tab.row_width())) {
        throw FormatError("tabular tensors have inconsistent shapes");
      }
      std::vector<TabularPolicy::Key> keys(slots);
      const auto key_at = base + keys_entry.at("offset").get<std::size_t>();
      for (std::size_t k = 0; k < slots; ++k) {
        keys[k].profile = detail::get_le(bytes, key_at + 16 * k, 8);
        keys[k].state = detail::get_le(bytes, key_at + 16 * k + 8, 8);
      }
      tab.set_table(std::move(keys),
                    detail::get_f32_tensor(bytes, base + params_entry.at("offset").get<std::size_t>(),
                                           slots * tab.row_width()));
      return {AnyPolicy(std::move(tab)), info};
    }
    throw FormatError("unknown encoder_kind " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint describes an invalid model: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const AnyPolicy& model, const CheckpointInfo& info) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  const std::string bytes = serialize_checkpoint(model, info);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace emergent::gfn
