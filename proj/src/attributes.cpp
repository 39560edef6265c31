#include "refcanvas/attributes.hpp"

#include "refcanvas/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace refcanvas {

std::string_view region_name(FaceRegion region) {
  switch (region) {
  case FaceRegion::eyes: return "eyes";
  case FaceRegion::nose: return "nose";
  case FaceRegion::mouth: return "mouth";
  case FaceRegion::hair: return "hair";
  }
  return "unknown";
}

std::optional<FaceRegion> parse_region(std::string_view name) {
  for (FaceRegion r : kFaceRegions) {
    if (region_name(r) == name) return r;
  }
  return std::nullopt;
}

std::string_view mode_name(TransferMode mode) {
  return mode == TransferMode::local ? "local" : "global";
}

AttributeSpec AttributeSpec::global(std::string name, LayerMask group) {
  return AttributeSpec{std::move(name), TransferMode::global, std::move(group), std::nullopt};
}

AttributeSpec AttributeSpec::local(std::string name, FaceRegion region) {
  return AttributeSpec{std::move(name), TransferMode::local, std::nullopt, region};
}

AttributeRegistry::AttributeRegistry(std::size_t layers, LayerMask local_layer_group)
    : layers_(layers), local_group_(std::move(local_layer_group)) {
  if (layers_ == 0) throw Error(ErrorCode::config, "registry needs at least one layer");
  if (local_group_.size() != layers_ || local_group_.count() == 0) {
    throw Error(ErrorCode::config, "local layer group must select at least one of " +
                                       std::to_string(layers_) + " layers");
  }
}

namespace {

// Maps an inclusive range on the 18-layer convention onto `layers` layers.
LayerMask scaled_range(std::size_t layers, std::size_t first, std::size_t last) {
  constexpr std::size_t kReference = 18;
  if (layers == kReference) return LayerMask::range(layers, first, last);
  std::vector<bool> included(layers, false);
  for (std::size_t l = 0; l < layers; ++l) {
    // Layer centre expressed in reference-layer coordinates.
    const std::size_t mapped = (2 * l + 1) * kReference / (2 * layers);
    included[l] = mapped >= first && mapped <= last;
  }
  if (std::none_of(included.begin(), included.end(), [](bool b) { return b; })) {
    const std::size_t centre = (first + last + 1) * layers / (2 * kReference);
    included[std::min(centre, layers - 1)] = true;
  }
  return LayerMask(std::move(included));
}

} // namespace

AttributeRegistry AttributeRegistry::standard(std::size_t layers) {
  AttributeRegistry reg(layers, scaled_range(layers, 4, 13));
  reg.add(AttributeSpec::global("age", scaled_range(layers, 4, 9)));
  reg.add(AttributeSpec::global("faceshape", scaled_range(layers, 0, 5)));
  reg.add(AttributeSpec::global("headpose", scaled_range(layers, 0, 3)));
  reg.add(AttributeSpec::global("makeup", scaled_range(layers, 10, 17)));
  reg.add(AttributeSpec::local("eyes", FaceRegion::eyes));
  reg.add(AttributeSpec::local("nose", FaceRegion::nose));
  reg.add(AttributeSpec::local("mouth", FaceRegion::mouth));
  reg.add(AttributeSpec::local("hair", FaceRegion::hair));
  return reg;
}

void AttributeRegistry::check(const AttributeSpec &spec) const {
  if (spec.name.empty()) throw Error(ErrorCode::config, "attribute name must not be empty");
  if (spec.mode == TransferMode::global) {
    if (!spec.layer_group || spec.region) {
      throw Error(ErrorCode::config, "global attribute '" + spec.name +
                                         "' needs a layer group and no region");
    }
    if (spec.layer_group->size() != layers_ || spec.layer_group->count() == 0) {
      throw Error(ErrorCode::config, "global attribute '" + spec.name +
                                         "' must include at least one of " +
                                         std::to_string(layers_) + " layers");
    }
  } else if (!spec.region || spec.layer_group) {
    throw Error(ErrorCode::config,
                "local attribute '" + spec.name + "' needs a region and no layer group");
  }
}

void AttributeRegistry::add(AttributeSpec spec) {
  check(spec);
  if (find(spec.name)) throw Error(ErrorCode::config, "attribute '" + spec.name + "' registered twice");
  specs_.push_back(std::move(spec));
}

const AttributeSpec *AttributeRegistry::find(std::string_view name) const {
  auto it = std::find_if(specs_.begin(), specs_.end(),
                         [&](const AttributeSpec &s) { return s.name == name; });
  return it == specs_.end() ? nullptr : &*it;
}

const AttributeSpec &AttributeRegistry::at(std::string_view name) const {
  if (const auto *spec = find(name)) return *spec;
  throw Error(ErrorCode::validation, "unknown attribute '" + std::string(name) + "'", "attributes");
}

std::optional<std::size_t> AttributeRegistry::canonical_index(std::string_view name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> AttributeRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(specs_.size());
  for (const auto &s : specs_) out.push_back(s.name);
  return out;
}

void AttributeRegistry::apply_overrides(const nlohmann::json &overrides) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) throw Error(ErrorCode::config, "attribute overrides must be an object");
  auto to_mask = [&](const nlohmann::json &j, const std::string &what) {
    if (!j.is_array()) throw Error(ErrorCode::config, what + " must be a list of layer indices");
    std::vector<std::size_t> idx;
    for (const auto &v : j) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw Error(ErrorCode::config, what + " holds a non-index value");
      }
      idx.push_back(v.get<std::size_t>());
    }
    return LayerMask::of(layers_, idx);
  };
  if (auto it = overrides.find("local_layer_group"); it != overrides.end()) {
    auto mask = to_mask(*it, "local_layer_group");
    if (mask.count() == 0) throw Error(ErrorCode::config, "local_layer_group must not be empty");
    local_group_ = std::move(mask);
  }
  if (auto it = overrides.find("layer_groups"); it != overrides.end()) {
    for (const auto &[name, layers] : it->items()) {
      auto spec_it = std::find_if(specs_.begin(), specs_.end(),
                                  [&](const AttributeSpec &s) { return s.name == name; });
      if (spec_it == specs_.end() || spec_it->mode != TransferMode::global) {
        throw Error(ErrorCode::config, "layer_groups names unknown global attribute '" + name + "'");
      }
      AttributeSpec updated = *spec_it;
      updated.layer_group = to_mask(layers, "layer_groups." + name);
      check(updated);
      *spec_it = std::move(updated);
    }
  }
}

} // namespace refcanvas
