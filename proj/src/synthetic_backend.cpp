#include "refcanvas/synthetic_backend.hpp"

#include "refcanvas/error.hpp"
#include "refcanvas/template_masks.hpp"

#include <random>

namespace refcanvas {

namespace {

// Layer owning a row, from the template's band fractions.
std::size_t layer_for_row(double row_fraction) {
  const FaceRegion bands[] = {FaceRegion::eyes, FaceRegion::nose, FaceRegion::mouth};
  for (std::size_t l = 0; l < 3; ++l) {
    const auto box = FixedTemplateMaskProvider::boxes(bands[l]).front();
    if (row_fraction >= box.y0 && row_fraction < box.y1) return l;
  }
  return 3;
}

} // namespace

SyntheticBackend::SyntheticBackend(std::size_t size, std::uint64_t seed) : size_(size) {
  if (size_ < kShape.width) {
    throw Error(ErrorCode::config, "synthetic image size must be at least " +
                                       std::to_string(kShape.width) + " pixels");
  }
  std::mt19937_64 rng(seed);
  const std::size_t pixels = size_ * size_;

  cell_.resize(pixels);
  for (std::size_t y = 0; y < size_; ++y) {
    const std::size_t layer = layer_for_row((static_cast<double>(y) + 0.5) / static_cast<double>(size_));
    for (std::size_t x = 0; x < size_; ++x) {
      cell_[y * size_ + x] = layer * kShape.width + x * kShape.width / size_;
    }
  }

  base_.resize(pixels * Image::channels);
  for (double &b : base_) b = static_cast<double>(96 + rng() % 64) / 256.0;

  coefficient_.resize(kShape.size() * Image::channels);
  for (double &c : coefficient_) c = static_cast<double>(4 + rng() % 13) / 64.0;

  energy_.assign(kShape.size(), 0.0);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t c = 0; c < Image::channels; ++c) {
      const double b = coefficient_[cell_[p] * Image::channels + c];
      energy_[cell_[p]] += b * b;
    }
  }
  for (std::size_t cell = 0; cell < energy_.size(); ++cell) {
    if (energy_[cell] == 0.0) {
      throw Error(ErrorCode::config, "synthetic basis cell " + std::to_string(cell) + " is empty");
    }
  }
}

Image SyntheticBackend::render_unclipped(const LatentCode &latent) const {
  if (latent.shape() != kShape) {
    throw Error(ErrorCode::shape_mismatch, "synthetic backend expects a 4x8 latent");
  }
  Image out(size_, size_);
  auto dst = out.data();
  const auto z = latent.values();
  for (std::size_t p = 0; p < cell_.size(); ++p) {
    const std::size_t cell = cell_[p];
    for (std::size_t c = 0; c < Image::channels; ++c) {
      const std::size_t i = p * Image::channels + c;
      dst[i] = static_cast<float>(base_[i] + z[cell] * coefficient_[cell * Image::channels + c]);
    }
  }
  return out;
}

Image SyntheticBackend::generate(const LatentCode &latent) const {
  return clip_unit(render_unclipped(latent));
}

LatentCode SyntheticBackend::encode(const Image &image) const {
  if (image.empty()) throw Error(ErrorCode::input, "cannot encode an empty image");
  const Image fitted = resize_bilinear(image, size_, size_);
  const auto src = fitted.data();
  std::vector<double> numerator(kShape.size(), 0.0);
  for (std::size_t p = 0; p < cell_.size(); ++p) {
    const std::size_t cell = cell_[p];
    for (std::size_t c = 0; c < Image::channels; ++c) {
      const std::size_t i = p * Image::channels + c;
      numerator[cell] += (static_cast<double>(src[i]) - base_[i]) * coefficient_[cell * Image::channels + c];
    }
  }
  for (std::size_t cell = 0; cell < numerator.size(); ++cell) numerator[cell] /= energy_[cell];
  return LatentCode(kShape, std::move(numerator));
}

AttributeRegistry SyntheticBackend::default_registry() const {
  // Layers: 0 eyes band, 1 nose band, 2 mouth band, 3 global tint.
  AttributeRegistry reg(kShape.layers, LayerMask::all(kShape.layers));
  reg.add(AttributeSpec::global("age", LayerMask::of(kShape.layers, {1, 2})));
  reg.add(AttributeSpec::global("faceshape", LayerMask::of(kShape.layers, {0, 1})));
  reg.add(AttributeSpec::global("headpose", LayerMask::of(kShape.layers, {0})));
  reg.add(AttributeSpec::global("makeup", LayerMask::of(kShape.layers, {3})));
  reg.add(AttributeSpec::local("eyes", FaceRegion::eyes));
  reg.add(AttributeSpec::local("nose", FaceRegion::nose));
  reg.add(AttributeSpec::local("mouth", FaceRegion::mouth));
  reg.add(AttributeSpec::local("hair", FaceRegion::hair));
  return reg;
}

} // namespace refcanvas
