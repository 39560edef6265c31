#include "refcanvas/template_masks.hpp"

#include "refcanvas/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace refcanvas {

float feather_alpha(double inside_px, double band_px) {
  if (inside_px <= 0.0) return 0.0f;
  if (inside_px >= band_px) return 1.0f;
  const double sigma = band_px / 3.0;
  const double t = (band_px - inside_px) / sigma;
  return static_cast<float>(std::exp(-0.5 * t * t));
}

FixedTemplateMaskProvider::FixedTemplateMaskProvider(double feather_px) : feather_px_(feather_px) {
  if (!std::isfinite(feather_px) || feather_px < 0.0) {
    throw Error(ErrorCode::config, "feather width must be a non-negative number of pixels");
  }
}

std::vector<RegionBox> FixedTemplateMaskProvider::boxes(FaceRegion region) {
  switch (region) {
  case FaceRegion::eyes: return {{0.20, 0.80, 0.33, 0.45}};
  case FaceRegion::nose: return {{0.38, 0.62, 0.45, 0.62}};
  case FaceRegion::mouth: return {{0.30, 0.70, 0.62, 0.75}};
  case FaceRegion::hair:
    return {{0.0, 1.0, 0.0, 0.30}, {0.0, 0.12, 0.0, 0.60}, {0.88, 1.0, 0.0, 0.60}};
  }
  return {};
}

namespace {

// Distance from (cx, cy) to the box's edges, ignoring edges on the image border
// (the region continues past the frame). Negative or zero when outside.
double inside_distance(const RegionBox &box, double cx, double cy, double w, double h) {
  const double x0 = box.x0 * w, x1 = box.x1 * w, y0 = box.y0 * h, y1 = box.y1 * h;
  if (cx < x0 || cx >= x1 || cy < y0 || cy >= y1) return 0.0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  double d = inf;
  if (box.x0 > 0.0) d = std::min(d, cx - x0);
  if (box.x1 < 1.0) d = std::min(d, x1 - cx);
  if (box.y0 > 0.0) d = std::min(d, cy - y0);
  if (box.y1 < 1.0) d = std::min(d, y1 - cy);
  return d;
}

} // namespace

RegionMask FixedTemplateMaskProvider::mask(FaceRegion region, std::size_t width,
                                           std::size_t height) const {
  RegionMask out{region, width, height, std::vector<float>(width * height, 0.0f)};
  const auto regions = boxes(region);
  const auto w = static_cast<double>(width);
  const auto h = static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double cx = static_cast<double>(x) + 0.5;
      const double cy = static_cast<double>(y) + 0.5;
      double d = 0.0;
      for (const auto &box : regions) d = std::max(d, inside_distance(box, cx, cy, w, h));
      out.alpha[y * width + x] = feather_alpha(d, feather_px_);
    }
  }
  return out;
}

RegionMasks FixedTemplateMaskProvider::masks_for(const Image &image) const {
  if (image.empty()) throw Error(ErrorCode::input, "cannot compute masks for an empty image");
  RegionMasks out;
  for (FaceRegion r : kFaceRegions) out.emplace(r, mask(r, image.width(), image.height()));
  return out;
}

RegionMask feathered_from_binary(FaceRegion region, std::size_t width, std::size_t height,
                                 std::span<const std::uint8_t> member, double feather_px) {
  if (member.size() != width * height) {
    throw Error(ErrorCode::shape_mismatch, "membership map does not match the mask size");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr double diag = 1.4142135623730951;
  std::vector<double> dist(width * height);
  for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = member[i] ? inf : 0.0;

  // Outside the frame counts as member, so the border does not feather.
  auto relax = [&](std::size_t i, std::ptrdiff_t x, std::ptrdiff_t y, double step) {
    if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(width) ||
        y >= static_cast<std::ptrdiff_t>(height)) {
      return;
    }
    dist[i] = std::min(dist[i], dist[static_cast<std::size_t>(y) * width +
                                     static_cast<std::size_t>(x)] + step);
  };
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(height); ++y) {
    for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(width); ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
      relax(i, x - 1, y, 1.0);
      relax(i, x, y - 1, 1.0);
      relax(i, x - 1, y - 1, diag);
      relax(i, x + 1, y - 1, diag);
    }
  }
  for (std::ptrdiff_t y = static_cast<std::ptrdiff_t>(height) - 1; y >= 0; --y) {
    for (std::ptrdiff_t x = static_cast<std::ptrdiff_t>(width) - 1; x >= 0; --x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
      relax(i, x + 1, y, 1.0);
      relax(i, x, y + 1, 1.0);
      relax(i, x + 1, y + 1, diag);
      relax(i, x - 1, y + 1, diag);
    }
  }

  RegionMask out{region, width, height, std::vector<float>(width * height, 0.0f)};
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (!member[i]) continue;
    // Chamfer distance is centre-to-centre; the boundary sits half a pixel closer.
    const double inside = std::isinf(dist[i]) ? inf : dist[i] - 0.5;
    out.alpha[i] = feather_alpha(inside, feather_px);
  }
  return out;
}

} // namespace refcanvas
