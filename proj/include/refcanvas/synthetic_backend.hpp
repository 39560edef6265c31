#pragma once

#include "refcanvas/backend.hpp"

#include <cstdint>

namespace refcanvas {

/// Deterministic linear renderer used as a test oracle and for model-free runs.
///
/// image = base + sum_{l,k} latent[l][k] * basis[l][k]. Each basis image is a constant
/// per-channel colour on its own pixel cell, and the cells partition the image:
/// layer 0 owns the eyes band, 1 the nose band, 2 the mouth band, 3 everything else
/// (a global tint); within a layer, component k owns the k-th vertical stripe.
/// Disjoint supports make the basis orthogonal, so encode() is an exact least-squares
/// inverse. Base and basis values are dyadic rationals, which keeps the arithmetic
/// exact for latents on a 2^-10 grid.
class SyntheticBackend final : public GeneratorBackend {
public:
  static constexpr LatentShape kShape{4, 8};

  explicit SyntheticBackend(std::size_t size = 128, std::uint64_t seed = 0x5eedcafe);

  std::string name() const override { return "synthetic"; }
  LatentShape latent_shape() const override { return kShape; }
  std::size_t image_width() const override { return size_; }
  std::size_t image_height() const override { return size_; }
  bool deterministic() const override { return true; }
  bool reentrant() const override { return true; }

  LatentCode encode(const Image &image) const override;
  Image generate(const LatentCode &latent) const override;
  AttributeRegistry default_registry() const override;

  /// Linear render before the final clip to [0, 1].
  Image render_unclipped(const LatentCode &latent) const;

  /// Index (layer * width + component) of the basis cell owning pixel (x, y).
  std::size_t cell_of(std::size_t x, std::size_t y) const { return cell_[y * size_ + x]; }

private:
  std::size_t size_;
  std::vector<std::size_t> cell_;    // per pixel
  std::vector<double> base_;         // per pixel and channel
  std::vector<double> coefficient_;  // per cell and channel
  std::vector<double> energy_;       // per cell: sum of squared basis values
};

} // namespace refcanvas
