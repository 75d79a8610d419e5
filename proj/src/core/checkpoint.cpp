#include "satpose/core/checkpoint.hpp"

#include <cstring>

#include <nlohmann/json.hpp>

#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"

SATPOSE_NS_BEGIN

namespace {

constexpr char kMagic[8] = {'S', 'A', 'T', 'P', 'C', 'K', 'P', 'T'};

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void append_f32_le(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float read_f32_le(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["format"] = 1;
  header["meta"] = meta_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(meta_json);
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    nlohmann::json e;
    e["name"] = t.name;
    e["role"] = t.role;
    e["shape"] = t.shape;
    e["offset"] = offset;
    table.push_back(std::move(e));
    offset += static_cast<std::uint64_t>(t.data.size()) * 4;
  }
  header["tensors"] = std::move(table);
  const std::string header_str = header.dump();

  std::string out;
  out.reserve(16 + header_str.size() + offset);
  out.append(kMagic, 8);
  append_u64_le(out, header_str.size());
  out += header_str;
  for (const auto& t : tensors) {
    for (const float f : t.data) append_f32_le(out, f);
  }
  write_binary_file(path, out.data(), out.size());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw DataError("not a checkpoint file: " + path.string());
  }
  const std::uint64_t header_len = read_u64_le(bytes.data() + 8);
  if (16 + header_len > bytes.size()) throw DataError("truncated checkpoint header");
  const std::string header_str(reinterpret_cast<const char*>(bytes.data() + 16),
                               static_cast<std::size_t>(header_len));
  nlohmann::json header = nlohmann::json::parse(header_str);

  Checkpoint ckpt;
  ckpt.meta_json = header.value("meta", nlohmann::json::object()).dump();
  const std::size_t payload = 16 + static_cast<std::size_t>(header_len);
  for (const auto& e : header.at("tensors")) {
    CheckpointTensor t;
    t.name = e.at("name").get<std::string>();
    t.role = e.at("role").get<std::string>();
    t.shape = e.at("shape").get<Shape>();
    const std::uint64_t offset = e.at("offset").get<std::uint64_t>();
    const std::uint64_t count = static_cast<std::uint64_t>(numel_of(t.shape));
    if (payload + offset + count * 4 > bytes.size()) {
      throw DataError("checkpoint payload out of range for tensor " + t.name);
    }
    t.data.resize(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
      t.data[static_cast<std::size_t>(i)] = read_f32_le(bytes.data() + payload + offset + i * 4);
    }
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

SATPOSE_NS_END
