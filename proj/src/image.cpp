#include "refcanvas/image.hpp"

#include "refcanvas/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace refcanvas {

Image::Image(std::size_t width, std::size_t height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != width_ * height_ * channels) {
    throw Error(ErrorCode::shape_mismatch,
                "image buffer holds " + std::to_string(data_.size()) + " values, expected " +
                    std::to_string(width_ * height_ * channels));
  }
}

Image clip_unit(Image image) {
  for (float &v : image.data()) v = std::clamp(v, 0.0f, 1.0f);
  return image;
}

Image resize_bilinear(const Image &image, std::size_t width, std::size_t height) {
  if (image.width() == width && image.height() == height) return image;
  if (image.empty() || width == 0 || height == 0) {
    throw Error(ErrorCode::input, "cannot resize an empty image");
  }
  Image out(width, height);
  const double sx = static_cast<double>(image.width()) / static_cast<double>(width);
  const double sy = static_cast<double>(image.height()) / static_cast<double>(height);
  const auto max_x = static_cast<double>(image.width() - 1);
  const auto max_y = static_cast<double>(image.height() - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height() - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width() - 1);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < Image::channels; ++c) {
        const double top = image.at(x0, y0, c) * (1.0 - tx) + image.at(x1, y0, c) * tx;
        const double bottom = image.at(x0, y1, c) * (1.0 - tx) + image.at(x1, y1, c) * tx;
        out.at(x, y, c) = static_cast<float>(top * (1.0 - ty) + bottom * ty);
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> to_rgb8(const Image &image) {
  std::vector<std::uint8_t> out(image.data().size());
  std::transform(image.data().begin(), image.data().end(), out.begin(), [](float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  });
  return out;
}

Image from_rgb8(std::size_t width, std::size_t height, std::span<const std::uint8_t> rgb) {
  std::vector<float> data(rgb.size());
  std::transform(rgb.begin(), rgb.end(), data.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return Image(width, height, std::move(data));
}

} // namespace refcanvas
