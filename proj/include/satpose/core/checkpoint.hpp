#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "satpose/core/tensor.hpp"

SATPOSE_NS_BEGIN

// Single-file checkpoint: 8-byte magic, u64-LE header length, UTF-8 JSON
// header (tensor table + free-form meta), then raw little-endian float32
// payloads. Loading and re-saving is byte-exact.
struct CheckpointTensor {
  std::string name;
  std::string role;
  Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  std::string meta_json;  // embedded as-is under "meta"
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

SATPOSE_NS_END
