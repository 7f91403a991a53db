#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "nisdl/nn.hpp"

namespace nisdl {

/// Binary checkpoint container:
///
///   offset 0   8 bytes   magic "NISDLCK1"
///   offset 8   8 bytes   header length H, unsigned little-endian
///   offset 16  H bytes   UTF-8 JSON header
///   then       payload   raw little-endian IEEE-754 doubles
///
/// The header holds model_id, seed, config, and a manifest "tensors":
/// [{name, shape, offset, nbytes}] with offsets relative to the payload.
struct Checkpoint {
  struct NamedTensor {
    std::string name;
    Tensor value;
  };

  std::string model_id;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const Tensor* find(const std::string& name) const;
};

constexpr char kCheckpointMagic[8] = {'N', 'I', 'S', 'D', 'L', 'C', 'K', '1'};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint snapshot(const std::string& model_id, const ModelParams& params, nlohmann::json config);
/// Copies tensors into params by name; shape or name mismatch -> ErrorCode::shape.
void restore(const Checkpoint& ckpt, ModelParams& params);

}  // namespace nisdl
