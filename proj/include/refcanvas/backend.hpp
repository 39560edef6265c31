#pragma once

#include "refcanvas/attributes.hpp"
#include "refcanvas/image.hpp"
#include "refcanvas/latent.hpp"

#include <map>
#include <string>
#include <vector>

namespace refcanvas {

/// Soft per-pixel membership of one face region, row-major `width x height`.
struct RegionMask {
  FaceRegion region = FaceRegion::eyes;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> alpha;

  float at(std::size_t x, std::size_t y) const { return alpha[y * width + x]; }
  /// Number of pixels with alpha > 0.
  std::size_t support() const;
};

using RegionMasks = std::map<FaceRegion, RegionMask>;

/// Encoder/generator pair behind a fixed latent shape and output size.
class GeneratorBackend {
public:
  virtual ~GeneratorBackend() = default;

  virtual std::string name() const = 0;
  virtual LatentShape latent_shape() const = 0;
  virtual std::size_t image_width() const = 0;
  virtual std::size_t image_height() const = 0;
  /// Identical inputs give bit-identical outputs.
  virtual bool deterministic() const = 0;
  /// encode/generate may be called concurrently.
  virtual bool reentrant() const = 0;

  virtual LatentCode encode(const Image &image) const = 0;
  /// Image of image_width() x image_height() with channels in [0, 1].
  virtual Image generate(const LatentCode &latent) const = 0;

  /// Layer groups matched to this generator's layer semantics.
  virtual AttributeRegistry default_registry() const {
    return AttributeRegistry::standard(latent_shape().layers);
  }
};

class MaskProvider {
public:
  virtual ~MaskProvider() = default;
  virtual std::string name() const = 0;
  /// One mask per supported region, sized like `image`.
  virtual RegionMasks masks_for(const Image &image) const = 0;
};

} // namespace refcanvas
