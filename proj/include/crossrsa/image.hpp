#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace crossrsa {

/// RGB raster with channel-planar values in [0, 1]: data[(c * height + y) * width + x].
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  static constexpr std::size_t kChannels = 3;
  static Image filled(std::size_t width, std::size_t height, double value = 0.0);
  double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
  bool operator==(const Image&) const = default;
};

/// Decodes any PNG colour type to RGB. Throws DataError with `label` on failure.
Image decode_png(std::span<const std::uint8_t> bytes, const std::string& label);
Image read_png(const std::filesystem::path& path);
/// 8-bit RGB PNG; values are clamped to [0, 1] and rounded to 1/255.
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const Image& image, const std::filesystem::path& path);

/// Bilinear resize with half-pixel centres and edge clamping. Preserves the
/// image mean exactly for integer upscaling factors.
Image resize_bilinear(const Image& image, std::size_t width, std::size_t height);

}  // namespace crossrsa
