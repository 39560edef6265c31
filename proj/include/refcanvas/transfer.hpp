#pragma once

#include "refcanvas/attributes.hpp"
#include "refcanvas/backend.hpp"
#include "refcanvas/image.hpp"
#include "refcanvas/latent.hpp"

#include <vector>

namespace refcanvas {

struct TransferContribution {
  LatentCode reference;
  AttributeSpec attribute;
  Weight weight;
};

struct TransferRequest {
  LatentCode target_latent;
  /// Target photograph at the backend's output size; masks are computed on it.
  Image target_image;
  std::vector<TransferContribution> contributions;

  /// Throws shape_mismatch when latents disagree on shape.
  void validate() const;
};

/// Layer-restricted latent interpolation for a global attribute.
LatentCode transfer_global(const LatentCode &target, const LatentCode &reference,
                           const AttributeSpec &attribute, Weight w);

/// out[p] = target[p] + w * alpha[p] * (blended[p] - target[p]); alpha == 0 keeps
/// the target pixel bit-exact.
Image transfer_local(const Image &target, const Image &blended, const RegionMask &mask, Weight w);

/// What render_result did, for reports.
struct RenderStep {
  std::string attribute;
  TransferMode mode = TransferMode::global;
  double weight = 0.0;
  std::vector<std::size_t> layers;
  std::optional<FaceRegion> region;
  std::size_t mask_support = 0;
};

struct RenderTrace {
  std::vector<RenderStep> steps;
};

/// Globals are composed jointly in latent space; each local contribution is then
/// rendered from a region-restricted latent blend and composited into the global
/// render in region order eyes, nose, mouth, hair. Zero-weight contributions are
/// skipped.
Image render_result(const TransferRequest &request, const GeneratorBackend &backend,
                    const MaskProvider &masks, const AttributeRegistry &registry,
                    RenderTrace *trace = nullptr);

} // namespace refcanvas
