#pragma once

#include "refcanvas/latent.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refcanvas {

enum class TransferMode { local, global };

/// Face regions, declared in canonical compositing order.
enum class FaceRegion { eyes, nose, mouth, hair };

inline constexpr std::array<FaceRegion, 4> kFaceRegions = {FaceRegion::eyes, FaceRegion::nose,
                                                           FaceRegion::mouth, FaceRegion::hair};

std::string_view region_name(FaceRegion region);
std::optional<FaceRegion> parse_region(std::string_view name);
std::string_view mode_name(TransferMode mode);

/// A selectable attribute. Global attributes carry a layer group, local ones a region;
/// never both.
struct AttributeSpec {
  std::string name;
  TransferMode mode = TransferMode::global;
  std::optional<LayerMask> layer_group;
  std::optional<FaceRegion> region;

  static AttributeSpec global(std::string name, LayerMask group);
  static AttributeSpec local(std::string name, FaceRegion region);

  bool operator==(const AttributeSpec &) const = default;
};

/// Ordered set of attributes. Registration order is the canonical order used
/// whenever contributions are enumerated.
class AttributeRegistry {
public:
  AttributeRegistry(std::size_t layers, LayerMask local_layer_group);

  /// The eight-attribute face registry. Layer groups follow the 18-layer
  /// convention (headpose 0-3, faceshape 0-5, age 4-9, makeup 10-17, local
  /// pre-blend 4-13); other layer counts are mapped proportionally.
  static AttributeRegistry standard(std::size_t layers = 18);

  void add(AttributeSpec spec);

  std::size_t layers() const { return layers_; }
  const std::vector<AttributeSpec> &attributes() const { return specs_; }
  const AttributeSpec *find(std::string_view name) const;
  const AttributeSpec &at(std::string_view name) const;
  std::optional<std::size_t> canonical_index(std::string_view name) const;
  std::vector<std::string> names() const;

  /// Layers a local attribute's latent pre-blend may modify.
  const LayerMask &local_layer_group() const { return local_group_; }

  /// Overrides layer groups from JSON:
  /// {"local_layer_group": [..], "layer_groups": {"age": [..], ...}}.
  void apply_overrides(const nlohmann::json &overrides);

private:
  void check(const AttributeSpec &spec) const;

  std::size_t layers_;
  LayerMask local_group_;
  std::vector<AttributeSpec> specs_;
};

} // namespace refcanvas
