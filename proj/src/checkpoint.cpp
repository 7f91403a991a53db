#include "nisdl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "nisdl/error.hpp"

namespace nisdl {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.value;
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json manifest = nlohmann::json::array();
  std::string payload;
  for (const auto& t : ckpt.tensors) {
    const std::size_t offset = payload.size();
    for (double v : t.value.values()) put_u64(payload, std::bit_cast<std::uint64_t>(v));
    manifest.push_back({{"name", t.name}, {"shape", t.value.shape()}, {"offset", offset},
                        {"nbytes", payload.size() - offset}});
  }
  nlohmann::json header = {{"format", "nisdl-checkpoint"}, {"version", 1},       {"model_id", ckpt.model_id},
                           {"seed", ckpt.seed},            {"config", ckpt.config}, {"tensors", manifest}};
  const std::string text = header.dump();

  std::string blob(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u64(blob, text.size());
  blob += text;
  blob += payload;

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write checkpoint " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) fail(ErrorCode::io, "failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open checkpoint " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  if (blob.size() < 16 || std::memcmp(blob.data(), kCheckpointMagic, 8) != 0) {
    fail(ErrorCode::io, path.string() + " is not a checkpoint (bad magic)");
  }
  const std::uint64_t header_len = get_u64(bytes + 8);
  if (header_len > blob.size() - 16) fail(ErrorCode::io, path.string() + ": truncated header");
  const std::size_t payload_start = 16 + header_len;

  Checkpoint ckpt;
  try {
    auto header = nlohmann::json::parse(blob.substr(16, header_len));
    ckpt.model_id = header.at("model_id").get<std::string>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.config = header.at("config");
    for (const auto& entry : header.at("tensors")) {
      Shape shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto nbytes = entry.at("nbytes").get<std::size_t>();
      if (nbytes != shape_size(shape) * 8 || payload_start + offset + nbytes > blob.size()) {
        fail(ErrorCode::io, path.string() + ": tensor " + entry.at("name").get<std::string>() + " out of bounds");
      }
      std::vector<double> values(shape_size(shape));
      for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = std::bit_cast<double>(get_u64(bytes + payload_start + offset + 8 * i));
      }
      ckpt.tensors.push_back({entry.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values))});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, path.string() + ": malformed header: " + e.what());
  }
  return ckpt;
}

Checkpoint snapshot(const std::string& model_id, const ModelParams& params, nlohmann::json config) {
  Checkpoint c;
  c.model_id = model_id;
  c.seed = params.rng_seed;
  c.config = std::move(config);
  for (const auto* p : params.tensors) c.tensors.push_back({p->name, p->value});
  return c;
}

void restore(const Checkpoint& ckpt, ModelParams& params) {
  if (ckpt.tensors.size() != params.tensors.size()) {
    fail(ErrorCode::shape, "checkpoint has " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                               std::to_string(params.tensors.size()));
  }
  for (auto* p : params.tensors) {
    const Tensor* t = ckpt.find(p->name);
    if (!t) fail(ErrorCode::shape, "checkpoint lacks tensor " + p->name);
    if (t->shape() != p->value.shape()) {
      fail(ErrorCode::shape, "tensor " + p->name + ": expected " + shape_string(p->value.shape()) + ", checkpoint has " +
                                 shape_string(t->shape()));
    }
    p->value = *t;
    p->grad.fill(0.0);
  }
}

}  // namespace nisdl
