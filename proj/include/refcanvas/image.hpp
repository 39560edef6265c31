#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace refcanvas {

/// Interleaved RGB float image. Channel values are nominally in [0, 1]; a
/// renderer may hold values outside that range until they are clipped.
class Image {
public:
  static constexpr std::size_t channels = 3;

  Image() = default;
  Image(std::size_t width, std::size_t height, float fill = 0.0f)
      : width_(width), height_(height), data_(width * height * channels, fill) {}
  Image(std::size_t width, std::size_t height, std::vector<float> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t pixel_count() const { return width_ * height_; }
  bool empty() const { return data_.empty(); }

  float at(std::size_t x, std::size_t y, std::size_t c) const {
    return data_[(y * width_ + x) * channels + c];
  }
  float &at(std::size_t x, std::size_t y, std::size_t c) {
    return data_[(y * width_ + x) * channels + c];
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool same_size(const Image &other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool operator==(const Image &) const = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<float> data_;
};

Image clip_unit(Image image);

/// Bilinear resample with pixel-center alignment. Returns a copy when the size
/// already matches.
Image resize_bilinear(const Image &image, std::size_t width, std::size_t height);

/// 8-bit quantization: round(clamp(v, 0, 1) * 255).
std::vector<std::uint8_t> to_rgb8(const Image &image);
Image from_rgb8(std::size_t width, std::size_t height, std::span<const std::uint8_t> rgb);

} // namespace refcanvas
