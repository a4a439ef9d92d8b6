#include "crossrsa/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "crossrsa/error.hpp"

namespace crossrsa {

Image Image::filled(std::size_t width, std::size_t height, double value) {
  Image img;
  img.width = width;
  img.height = height;
  img.data.assign(kChannels * width * height, value);
  return img;
}

Image decode_png(std::span<const std::uint8_t> bytes, const std::string& label) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw DataError("stimulus '" + label + "': not a decodable PNG (" + png.message + ")");
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw DataError("stimulus '" + label + "': PNG decode failed (" + msg + ")");
  }
  Image img = Image::filled(png.width, png.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < Image::kChannels; ++c) {
        img.at(c, y, x) = buf[(y * img.width + x) * 3 + c] / 255.0;
      }
    }
  }
  return img;
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_png(bytes, path.string());
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.data.size() != Image::kChannels * image.width * image.height || image.width == 0 || image.height == 0) {
    throw ConfigError("encode_png: image buffer does not match its size");
  }
  std::vector<std::uint8_t> buf(image.width * image.height * 3);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < Image::kChannels; ++c) {
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        buf[(y * image.width + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, buf.data(), 0, nullptr)) {
    throw DataError(std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, buf.data(), 0, nullptr)) {
    throw DataError(std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write image " + path.string());
}

namespace {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> taps(std::size_t in, std::size_t out) {
  std::vector<Tap> t(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double src = std::max(0.0, (static_cast<double>(i) + 0.5) * scale - 0.5);
    const auto lo = std::min(static_cast<std::size_t>(src), in - 1);
    const std::size_t hi = std::min(lo + 1, in - 1);
    t[i] = {lo, hi, src - static_cast<double>(lo)};
  }
  return t;
}

}  // namespace

Image resize_bilinear(const Image& image, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0 || image.width == 0 || image.height == 0) {
    throw ConfigError("resize_bilinear: empty image or target");
  }
  if (width == image.width && height == image.height) return image;
  const auto tx = taps(image.width, width);
  const auto ty = taps(image.height, height);
  Image out = Image::filled(width, height);
  for (std::size_t c = 0; c < Image::kChannels; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      const auto& a = ty[y];
      for (std::size_t x = 0; x < width; ++x) {
        const auto& b = tx[x];
        const double top = image.at(c, a.lo, b.lo) * (1.0 - b.frac) + image.at(c, a.lo, b.hi) * b.frac;
        const double bottom = image.at(c, a.hi, b.lo) * (1.0 - b.frac) + image.at(c, a.hi, b.hi) * b.frac;
        out.at(c, y, x) = top * (1.0 - a.frac) + bottom * a.frac;
      }
    }
  }
  return out;
}

}  // namespace crossrsa
