#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace satpose {

// 8-bit grayscale image, row-major.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image8() = default;
  Image8(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool inside(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

void write_png_gray8(const std::filesystem::path& path, const Image8& image);
Image8 read_png_gray8(const std::filesystem::path& path);

}  // namespace satpose
