#include "layerwise/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "layerwise/errors.hpp"
#include "layerwise/io.hpp"

namespace lw {

namespace {

constexpr char kMagic[8] = {'L', 'W', 'C', 'K', 'P', 'T', '\0', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void put_tensor(std::string& out, const Tensor& t) {
  for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

}  // namespace

std::string encode_checkpoint(const Network& net) {
  nlohmann::json header;
  header["input_shape"] = net.input_shape();
  header["layers"] = nlohmann::json::array();
  for (const Layer& layer : net.layers()) {
    header["layers"].push_back({{"kind", to_string(layer.kind)},
                                {"activation", to_string(layer.activation)},
                                {"pool", layer.pool},
                                {"weights_shape", layer.weights.shape()},
                                {"bias_shape", layer.bias.shape()}});
  }
  header["parameter_count"] = net.parameter_count();
  const std::string header_text = header.dump();

  std::string payload;
  payload.reserve(net.parameter_count() * 8);
  for (const Layer& layer : net.layers()) {
    put_tensor(payload, layer.weights);
    put_tensor(payload, layer.bias);
  }

  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  out += payload;
  put_u64(out, fnv1a(payload));
  return out;
}

Network decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a layerwise checkpoint (bad magic)");
  }
  const std::uint32_t version = get_u32(bytes, 8);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t header_len = get_u32(bytes, 12);
  if (bytes.size() < 16 + header_len + 8) throw FormatError("checkpoint truncated in header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  std::size_t pos = 16 + header_len;
  const std::size_t payload_begin = pos;
  auto read_tensor = [&](const Shape& shape) {
    Tensor t(shape);
    if (element_count(shape) == 0) return Tensor();
    if (pos + t.size() * 8 + 8 > bytes.size()) throw FormatError("checkpoint truncated in parameter payload");
    for (double& v : t.data()) {
      v = std::bit_cast<double>(get_u64(bytes, pos));
      pos += 8;
    }
    return t;
  };

  std::vector<Layer> layers;
  try {
    for (const auto& entry : header.at("layers")) {
      Layer layer;
      layer.kind = parse_layer_kind(entry.at("kind").get<std::string>());
      layer.activation = parse_activation(entry.at("activation").get<std::string>());
      layer.pool = entry.at("pool").get<std::size_t>();
      layer.weights = read_tensor(entry.at("weights_shape").get<Shape>());
      layer.bias = read_tensor(entry.at("bias_shape").get<Shape>());
      layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is missing fields: ") + e.what());
  }
  if (pos + 8 != bytes.size()) throw FormatError("checkpoint has trailing or missing bytes");
  if (get_u64(bytes, pos) != fnv1a(std::string_view(bytes).substr(payload_begin, pos - payload_begin))) {
    throw FormatError("checkpoint payload checksum mismatch");
  }
  return Network(header.at("input_shape").get<Shape>(), std::move(layers));
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(net));
}

Network load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace lw
