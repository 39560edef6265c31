#pragma once

#include "refcanvas/backend.hpp"

#include <span>
#include <vector>

namespace refcanvas {

/// Axis-aligned box in fractions of (width, height), half-open.
struct RegionBox {
  double x0, x1, y0, y1;
};

/// Soft mask profile: 0 outside, Gaussian ramp across a band of `band_px` pixels
/// inside the boundary, 1 deeper in. `inside_px` is the distance from the pixel
/// centre to the region boundary (<= 0 means outside).
float feather_alpha(double inside_px, double band_px);

/// Fixed face-region geometry for aligned face crops. Eyes, nose and mouth are
/// disjoint; hair covers the top 30% plus side margins. Feathering stays inside
/// each region so supports never grow.
class FixedTemplateMaskProvider final : public MaskProvider {
public:
  explicit FixedTemplateMaskProvider(double feather_px = 5.0);

  std::string name() const override { return "template"; }
  RegionMasks masks_for(const Image &image) const override;

  RegionMask mask(FaceRegion region, std::size_t width, std::size_t height) const;
  static std::vector<RegionBox> boxes(FaceRegion region);

private:
  double feather_px_;
};

/// Feathered mask from a binary membership map (row-major, width x height), using
/// a chamfer distance to the nearest non-member pixel.
RegionMask feathered_from_binary(FaceRegion region, std::size_t width, std::size_t height,
                                 std::span<const std::uint8_t> member, double feather_px);

} // namespace refcanvas
