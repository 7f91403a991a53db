#include "nisdl/io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "nisdl/error.hpp"

namespace nisdl {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) fail(ErrorCode::io, "cannot open " + path.string());
  return f;
}

}  // namespace

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create directory " + dir.string() + ": " + ec.message());
}

void write_png(const std::filesystem::path& path, const Frame& frame) {
  if (frame.channels != 3) fail(ErrorCode::shape, "PNG output expects 3 channels");
  auto rgb = frame_to_rgb8(frame);
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::io, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::io, "failed writing PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(frame.width), static_cast<png_uint_32>(frame.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(frame.width) * 3;
  for (int y = 0; y < frame.height; ++y) png_write_row(png, rgb.data() + y * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Frame read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::io, "libpng initialization failed");
  }
  std::vector<std::uint8_t> rgb;
  int width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::io, "failed reading PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  rgb.resize(stride * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) png_read_row(png, rgb.data() + y * stride, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return frame_from_rgb8(rgb, height, width);
}

ClipManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open clip manifest " + path.string());
  ClipManifest m;
  try {
    auto doc = nlohmann::json::parse(in);
    m.frame_rate_hz = doc.at("frame_rate_hz").get<double>();
    for (const auto& e : doc.at("frames")) {
      m.frames.push_back({e.at("path").get<std::string>(), e.at("timestamp").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, "malformed clip manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const ClipManifest& manifest) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& e : manifest.frames) frames.push_back({{"path", e.path}, {"timestamp", e.timestamp}});
  nlohmann::json doc = {{"frame_rate_hz", manifest.frame_rate_hz}, {"frames", frames}};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

VideoClip load_clip(const std::filesystem::path& manifest_path) {
  ClipManifest m = read_manifest(manifest_path);
  VideoClip clip;
  clip.frame_rate_hz = m.frame_rate_hz;
  clip.frames.reserve(m.frames.size());
  const auto base = manifest_path.parent_path();
  for (const auto& e : m.frames) {
    Frame f = read_png(base / e.path);
    f.timestamp = e.timestamp;
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

std::filesystem::path save_clip(const std::filesystem::path& dir, const VideoClip& clip) {
  ensure_directory(dir / "frames");
  ClipManifest m;
  m.frame_rate_hz = clip.frame_rate_hz;
  char name[32];
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    std::snprintf(name, sizeof name, "frames/%06zu.png", i);
    write_png(dir / name, clip.frames[i]);
    m.frames.push_back({name, clip.frames[i].timestamp});
  }
  write_manifest(dir / kManifestName, m);
  return dir / kManifestName;
}

}  // namespace nisdl
