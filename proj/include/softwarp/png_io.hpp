#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "softwarp/error.hpp"
#include "softwarp/tensor.hpp"

// 8-bit PNG adapters. Samples in [0, 1] map to k/255; segmentation maps are stored as
// grayscale with pixel value = label.

namespace softwarp {

namespace detail {

class PngImage {
 public:
  PngImage() {
    image_.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image_); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;

  png_image* get() noexcept { return &image_; }
  png_image* operator->() noexcept { return &image_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError(what + ": " + image_.message);
  }

 private:
  png_image image_{};
};

inline std::uint8_t to_byte(double v) noexcept {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline std::vector<std::uint8_t> encode_raw(const std::vector<std::uint8_t>& pixels, int height, int width,
                                            bool color) {
  PngImage img;
  img->width = static_cast<png_uint_32>(width);
  img->height = static_cast<png_uint_32>(height);
  img->format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(img.get(), nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    img.fail("encode_png");
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(img.get(), out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    img.fail("encode_png");
  }
  out.resize(size);
  return out;
}

struct RawPng {
  int height = 0;
  int width = 0;
  bool color = false;
  std::vector<std::uint8_t> pixels;
};

// Decodes to 8-bit gray or RGB; alpha is composited away and palettes are expanded.
inline RawPng decode_raw(std::span<const std::uint8_t> bytes) {
  PngImage img;
  if (!png_image_begin_read_from_memory(img.get(), bytes.data(), bytes.size())) img.fail("decode_png");
  RawPng raw;
  raw.color = (img->format & PNG_FORMAT_FLAG_COLOR) != 0;
  raw.height = static_cast<int>(img->height);
  raw.width = static_cast<int>(img->width);
  img->format = raw.color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  raw.pixels.resize(PNG_IMAGE_SIZE(*img.get()));
  if (!png_image_finish_read(img.get(), nullptr, raw.pixels.data(), 0, nullptr)) img.fail("decode_png");
  return raw;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

/// PNG bytes of a 1- or 3-channel image; samples are clamped to [0, 1] and rounded to k/255.
inline std::vector<std::uint8_t> encode_png(const ImageTensor& image) {
  if (image.empty() || (image.channels() != 1 && image.channels() != 3)) {
    throw ShapeError("encode_png: need a non-empty 1- or 3-channel image");
  }
  std::vector<std::uint8_t> pixels(image.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = detail::to_byte(image.data()[i]);
  return detail::encode_raw(pixels, image.height(), image.width(), image.channels() == 3);
}

inline ImageTensor decode_png(std::span<const std::uint8_t> bytes) {
  const auto raw = detail::decode_raw(bytes);
  std::vector<double> data(raw.pixels.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = raw.pixels[i] / 255.0;
  return ImageTensor(raw.height, raw.width, raw.color ? 3 : 1, std::move(data));
}

inline std::vector<std::uint8_t> encode_segmentation_png(const SegmentationMap& seg) {
  if (seg.height() == 0 || seg.width() == 0) throw ShapeError("encode_segmentation_png: empty map");
  return detail::encode_raw({seg.labels().begin(), seg.labels().end()}, seg.height(), seg.width(), false);
}

/// Grayscale PNG with values 0..19; anything else throws.
inline SegmentationMap decode_segmentation_png(std::span<const std::uint8_t> bytes) {
  auto raw = detail::decode_raw(bytes);
  if (raw.color) throw IoError("decode_segmentation_png: expected a grayscale PNG");
  for (const int v : raw.pixels) {
    if (v >= kNumLabels) throw IoError("decode_segmentation_png: pixel value " + std::to_string(v) + " is not a label");
  }
  return SegmentationMap(raw.height, raw.width, std::move(raw.pixels));
}

inline ImageTensor read_png(const std::filesystem::path& path) { return decode_png(detail::read_bytes(path)); }

inline void write_png(const std::filesystem::path& path, const ImageTensor& image) {
  detail::write_bytes(path, encode_png(image));
}

inline SegmentationMap read_segmentation_png(const std::filesystem::path& path) {
  return decode_segmentation_png(detail::read_bytes(path));
}

inline void write_segmentation_png(const std::filesystem::path& path, const SegmentationMap& seg) {
  detail::write_bytes(path, encode_segmentation_png(seg));
}

}  // namespace softwarp
