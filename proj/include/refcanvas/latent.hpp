#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace refcanvas {

struct LatentShape {
  std::size_t layers = 18;
  std::size_t width = 512;

  std::size_t size() const { return layers * width; }
  bool operator==(const LatentShape &) const = default;
};

/// Layered latent code in the generator's extended latent space, stored
/// row-major as `layers x width` doubles. Every value is finite.
class LatentCode {
public:
  LatentCode() = default;
  LatentCode(LatentShape shape, std::vector<double> values);

  static LatentCode zeros(LatentShape shape);

  const LatentShape &shape() const { return shape_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> layer(std::size_t l) const;
  double at(std::size_t l, std::size_t k) const { return values_[l * shape_.width + k]; }
  void set(std::size_t l, std::size_t k, double v);

  bool operator==(const LatentCode &) const = default;

private:
  LatentShape shape_{0, 0};
  std::vector<double> values_;
};

/// Which layers an operation may touch.
class LayerMask {
public:
  LayerMask() = default;
  explicit LayerMask(std::vector<bool> included) : included_(std::move(included)) {}

  static LayerMask all(std::size_t layers);
  static LayerMask none(std::size_t layers);
  /// Inclusive range [first, last].
  static LayerMask range(std::size_t layers, std::size_t first, std::size_t last);
  static LayerMask of(std::size_t layers, std::initializer_list<std::size_t> indices);
  static LayerMask of(std::size_t layers, std::span<const std::size_t> indices);

  std::size_t size() const { return included_.size(); }
  bool includes(std::size_t l) const { return included_[l]; }
  std::size_t count() const;
  std::vector<std::size_t> indices() const;

  bool operator==(const LayerMask &) const = default;

private:
  std::vector<bool> included_;
};

/// Influence in [0, 1].
class Weight {
public:
  constexpr Weight() = default;
  explicit Weight(double value);

  static Weight zero() { return Weight(0.0); }
  static Weight one() { return Weight(1.0); }

  double value() const { return value_; }
  bool operator==(const Weight &) const = default;

private:
  double value_ = 0.0;
};

/// Linear falloff between d_min (full influence) and d_max (none), in canvas units.
struct DistanceModel {
  double d_min = 0.0;
  double d_max = 1.0;

  /// Throws ErrorCode::config unless 0 <= d_min < d_max, both finite.
  void validate() const;
  bool operator==(const DistanceModel &) const = default;
};

Weight distance_to_weight(double distance, const DistanceModel &model);

/// Interpolates reference into target on the masked layers:
/// out[l] = target[l] + w * (reference[l] - target[l]); other layers copied bit-exact.
LatentCode blend_layers(const LatentCode &target, const LatentCode &reference,
                        const LayerMask &mask, Weight w);

struct LatentContribution {
  std::reference_wrapper<const LatentCode> reference;
  LayerMask mask;
  Weight weight;
};

/// Resolves several references acting on the same target. Per layer, the weighted
/// displacements of every contribution that includes it (weight > 0) are summed and
/// divided by max(1, sum of weights), so the result stays inside the hull of the
/// target and the references. A single contribution reduces to blend_layers.
LatentCode compose_weighted(const LatentCode &target,
                            std::span<const LatentContribution> contributions);

} // namespace refcanvas
