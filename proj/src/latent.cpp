#include "refcanvas/latent.hpp"

#include "refcanvas/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace refcanvas {

namespace {

void require_finite(std::span<const double> values, const char *what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::numeric, std::string(what) + " contains a non-finite value");
    }
  }
}

void require_same_shape(const LatentCode &a, const LatentCode &b) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::shape_mismatch,
                "latent shapes differ: " + std::to_string(a.shape().layers) + "x" +
                    std::to_string(a.shape().width) + " vs " +
                    std::to_string(b.shape().layers) + "x" + std::to_string(b.shape().width));
  }
}

void require_mask(const LayerMask &mask, const LatentCode &code) {
  if (mask.size() != code.shape().layers) {
    throw Error(ErrorCode::shape_mismatch,
                "layer mask has " + std::to_string(mask.size()) + " entries for a " +
                    std::to_string(code.shape().layers) + "-layer latent");
  }
}

// Exact at both ends: w == 0 yields a, w == 1 yields b.
inline double interpolate(double a, double b, double w) {
  if (w == 0.0) return a;
  if (w == 1.0) return b;
  return a + w * (b - a);
}

} // namespace

LatentCode::LatentCode(LatentShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (shape_.layers == 0 || shape_.width == 0) {
    throw Error(ErrorCode::shape_mismatch, "latent shape must be at least 1x1");
  }
  if (values_.size() != shape_.size()) {
    throw Error(ErrorCode::shape_mismatch,
                "latent expects " + std::to_string(shape_.size()) + " values, got " +
                    std::to_string(values_.size()));
  }
  require_finite(values_, "latent code");
}

LatentCode LatentCode::zeros(LatentShape shape) {
  return LatentCode(shape, std::vector<double>(shape.size(), 0.0));
}

std::span<const double> LatentCode::layer(std::size_t l) const {
  return std::span<const double>(values_).subspan(l * shape_.width, shape_.width);
}

void LatentCode::set(std::size_t l, std::size_t k, double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::numeric, "latent value must be finite");
  values_.at(l * shape_.width + k) = v;
}

LayerMask LayerMask::all(std::size_t layers) { return LayerMask(std::vector<bool>(layers, true)); }

LayerMask LayerMask::none(std::size_t layers) { return LayerMask(std::vector<bool>(layers, false)); }

LayerMask LayerMask::range(std::size_t layers, std::size_t first, std::size_t last) {
  if (first > last || last >= layers) {
    throw Error(ErrorCode::config, "layer range " + std::to_string(first) + "-" +
                                       std::to_string(last) + " outside " +
                                       std::to_string(layers) + " layers");
  }
  std::vector<bool> included(layers, false);
  std::fill(included.begin() + static_cast<std::ptrdiff_t>(first),
            included.begin() + static_cast<std::ptrdiff_t>(last) + 1, true);
  return LayerMask(std::move(included));
}

LayerMask LayerMask::of(std::size_t layers, std::initializer_list<std::size_t> indices) {
  return of(layers, std::span<const std::size_t>(indices.begin(), indices.size()));
}

LayerMask LayerMask::of(std::size_t layers, std::span<const std::size_t> indices) {
  std::vector<bool> included(layers, false);
  for (std::size_t i : indices) {
    if (i >= layers) {
      throw Error(ErrorCode::config,
                  "layer " + std::to_string(i) + " outside " + std::to_string(layers) + " layers");
    }
    included[i] = true;
  }
  return LayerMask(std::move(included));
}

std::size_t LayerMask::count() const {
  return static_cast<std::size_t>(std::count(included_.begin(), included_.end(), true));
}

std::vector<std::size_t> LayerMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < included_.size(); ++i) {
    if (included_[i]) out.push_back(i);
  }
  return out;
}

Weight::Weight(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw Error(ErrorCode::validation, "weight must lie in [0, 1], got " + std::to_string(value),
                "weight");
  }
}

void DistanceModel::validate() const {
  if (!std::isfinite(d_min) || !std::isfinite(d_max) || d_min < 0.0 || d_min >= d_max) {
    throw Error(ErrorCode::config,
                "distance model requires 0 <= d_min < d_max (got d_min=" + std::to_string(d_min) +
                    ", d_max=" + std::to_string(d_max) + ")",
                "distance_model");
  }
}

Weight distance_to_weight(double distance, const DistanceModel &model) {
  model.validate();
  if (!std::isfinite(distance) || distance < 0.0) {
    throw Error(ErrorCode::numeric, "distance must be finite and non-negative", "distance");
  }
  const double ramp = (model.d_max - distance) / (model.d_max - model.d_min);
  return Weight(std::clamp(ramp, 0.0, 1.0));
}

LatentCode blend_layers(const LatentCode &target, const LatentCode &reference,
                        const LayerMask &mask, Weight w) {
  require_same_shape(target, reference);
  require_mask(mask, target);

  const auto [layers, width] = target.shape();
  std::vector<double> out(target.values().begin(), target.values().end());
  const auto ref = reference.values();
  for (std::size_t l = 0; l < layers; ++l) {
    if (!mask.includes(l)) continue;
    for (std::size_t k = l * width; k < (l + 1) * width; ++k) {
      out[k] = interpolate(out[k], ref[k], w.value());
    }
  }
  require_finite(out, "blended latent");
  return LatentCode(target.shape(), std::move(out));
}

LatentCode compose_weighted(const LatentCode &target,
                            std::span<const LatentContribution> contributions) {
  for (const auto &c : contributions) {
    require_same_shape(target, c.reference.get());
    require_mask(c.mask, target);
  }

  const auto [layers, width] = target.shape();
  const auto base = target.values();
  std::vector<double> out(base.begin(), base.end());
  std::vector<const LatentContribution *> active;

  for (std::size_t l = 0; l < layers; ++l) {
    active.clear();
    double total = 0.0;
    for (const auto &c : contributions) {
      if (c.mask.includes(l) && c.weight.value() > 0.0) {
        active.push_back(&c);
        total += c.weight.value();
      }
    }
    if (active.empty()) continue;

    const std::size_t begin = l * width;
    if (active.size() == 1) {
      const auto ref = active.front()->reference.get().values();
      const double w = active.front()->weight.value();
      for (std::size_t k = begin; k < begin + width; ++k) out[k] = interpolate(base[k], ref[k], w);
      continue;
    }

    for (std::size_t k = begin; k < begin + width; ++k) {
      double lo = base[k];
      double hi = base[k];
      double value = 0.0;
      if (total >= 1.0) {
        // Normalizer is the weight sum, so the target's own coefficient vanishes.
        for (const auto *c : active) {
          const double r = c->reference.get().values()[k];
          value += (c->weight.value() / total) * r;
          lo = std::min(lo, r);
          hi = std::max(hi, r);
        }
      } else {
        double displacement = 0.0;
        for (const auto *c : active) {
          const double r = c->reference.get().values()[k];
          displacement += c->weight.value() * (r - base[k]);
          lo = std::min(lo, r);
          hi = std::max(hi, r);
        }
        value = base[k] + displacement;
      }
      // Rounding can push a convex combination an ulp outside the hull.
      out[k] = std::clamp(value, lo, hi);
    }
  }
  require_finite(out, "composed latent");
  return LatentCode(target.shape(), std::move(out));
}

} // namespace refcanvas
