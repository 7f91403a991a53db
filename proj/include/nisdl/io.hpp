#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nisdl/imaging.hpp"
#include "nisdl/magnify.hpp"

namespace nisdl {

/// 8-bit RGB PNG. Values are quantized with round(v * 255).
void write_png(const std::filesystem::path& path, const Frame& frame);
Frame read_png(const std::filesystem::path& path);

/// Clip manifest (JSON): frame_rate_hz plus ordered {path, timestamp}
/// entries, paths relative to the manifest's directory.
struct ClipManifest {
  struct Entry {
    std::string path;
    double timestamp = 0.0;
  };
  double frame_rate_hz = 0.0;
  std::vector<Entry> frames;
};

constexpr const char* kManifestName = "clip.json";

ClipManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const ClipManifest& manifest);

/// Reads every frame listed in a manifest.
VideoClip load_clip(const std::filesystem::path& manifest_path);
/// Writes dir/frames/NNNNNN.png and dir/clip.json; returns the manifest path.
std::filesystem::path save_clip(const std::filesystem::path& dir, const VideoClip& clip);

void ensure_directory(const std::filesystem::path& dir);

}  // namespace nisdl
