#include "refcanvas/transfer.hpp"

#include "refcanvas/error.hpp"

#include <algorithm>
#include <string>

namespace refcanvas {

std::size_t RegionMask::support() const {
  return static_cast<std::size_t>(
      std::count_if(alpha.begin(), alpha.end(), [](float a) { return a > 0.0f; }));
}

void TransferRequest::validate() const {
  for (const auto &c : contributions) {
    if (c.reference.shape() != target_latent.shape()) {
      throw Error(ErrorCode::shape_mismatch,
                  "reference latent for '" + c.attribute.name + "' does not match the target shape");
    }
  }
}

LatentCode transfer_global(const LatentCode &target, const LatentCode &reference,
                           const AttributeSpec &attribute, Weight w) {
  if (attribute.mode != TransferMode::global || !attribute.layer_group) {
    throw Error(ErrorCode::mode, "'" + attribute.name + "' is not a global attribute", "attribute");
  }
  return blend_layers(target, reference, *attribute.layer_group, w);
}

Image transfer_local(const Image &target, const Image &blended, const RegionMask &mask, Weight w) {
  if (!target.same_size(blended) || mask.width != target.width() ||
      mask.height != target.height() || mask.alpha.size() != mask.width * mask.height) {
    throw Error(ErrorCode::shape_mismatch, "local transfer needs image and mask of equal size");
  }
  Image out = target;
  const auto src = blended.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < mask.alpha.size(); ++p) {
    const float k = static_cast<float>(w.value()) * mask.alpha[p];
    if (k == 0.0f) continue;
    for (std::size_t c = 0; c < Image::channels; ++c) {
      const std::size_t i = p * Image::channels + c;
      dst[i] = k == 1.0f ? src[i] : dst[i] + k * (src[i] - dst[i]);
    }
  }
  return out;
}

namespace {

Image checked_generate(const GeneratorBackend &backend, const LatentCode &latent) {
  Image image;
  try {
    image = backend.generate(latent);
  } catch (const Error &) {
    throw;
  } catch (const std::exception &e) {
    throw Error(ErrorCode::generation, backend.name() + " backend failed: " + e.what());
  }
  if (image.width() != backend.image_width() || image.height() != backend.image_height()) {
    throw Error(ErrorCode::generation, backend.name() + " backend returned an image of the wrong size");
  }
  return image;
}

} // namespace

Image render_result(const TransferRequest &request, const GeneratorBackend &backend,
                    const MaskProvider &masks, const AttributeRegistry &registry,
                    RenderTrace *trace) {
  request.validate();
  if (request.target_latent.shape() != backend.latent_shape()) {
    throw Error(ErrorCode::shape_mismatch, "target latent does not match the " + backend.name() +
                                               " backend's latent shape");
  }

  std::vector<LatentContribution> globals;
  std::vector<const TransferContribution *> locals;
  for (const auto &c : request.contributions) {
    if (c.weight.value() == 0.0) continue;
    if (c.attribute.mode == TransferMode::global) {
      if (!c.attribute.layer_group) {
        throw Error(ErrorCode::mode, "global attribute '" + c.attribute.name + "' has no layer group");
      }
      globals.push_back({std::cref(c.reference), *c.attribute.layer_group, c.weight});
      if (trace) {
        trace->steps.push_back({c.attribute.name, TransferMode::global, c.weight.value(),
                                c.attribute.layer_group->indices(), std::nullopt, 0});
      }
    } else {
      if (!c.attribute.region) {
        throw Error(ErrorCode::mode, "local attribute '" + c.attribute.name + "' has no region");
      }
      locals.push_back(&c);
    }
  }
  std::stable_sort(locals.begin(), locals.end(), [](const auto *a, const auto *b) {
    return *a->attribute.region < *b->attribute.region;
  });

  const LatentCode composed = compose_weighted(request.target_latent, globals);
  Image out = checked_generate(backend, composed);
  if (locals.empty()) return out;

  if (request.target_image.width() != backend.image_width() ||
      request.target_image.height() != backend.image_height()) {
    throw Error(ErrorCode::shape_mismatch, "target image must match the backend output size");
  }
  const RegionMasks region_masks = masks.masks_for(request.target_image);
  for (const auto *c : locals) {
    auto it = region_masks.find(*c->attribute.region);
    if (it == region_masks.end()) {
      throw Error(ErrorCode::mask, "no " + std::string(region_name(*c->attribute.region)) +
                                       " mask from provider " + masks.name());
    }
    const LatentCode candidate =
        blend_layers(composed, c->reference, registry.local_layer_group(), c->weight);
    out = transfer_local(out, checked_generate(backend, candidate), it->second, c->weight);
    if (trace) {
      trace->steps.push_back({c->attribute.name, TransferMode::local, c->weight.value(),
                              registry.local_layer_group().indices(), c->attribute.region,
                              it->second.support()});
    }
  }
  return out;
}

} // namespace refcanvas
