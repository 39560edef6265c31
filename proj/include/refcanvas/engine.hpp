#pragma once

#include "refcanvas/attributes.hpp"
#include "refcanvas/backend.hpp"
#include "refcanvas/config.hpp"
#include "refcanvas/content_store.hpp"
#include "refcanvas/session.hpp"
#include "refcanvas/transfer.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace refcanvas {

/// Backend, mask provider and registry bound together, plus a latent cache keyed
/// by content address. Shared by the HTTP service and the CLI so both run the
/// identical pipeline.
class Engine {
public:
  Engine(std::shared_ptr<const GeneratorBackend> backend, std::shared_ptr<const MaskProvider> masks,
         AttributeRegistry registry);

  /// Builds the configured backend. Never substitutes one backend for another:
  /// an unavailable real backend is an error.
  static std::shared_ptr<Engine> from_config(const ServiceConfig &config);

  const GeneratorBackend &backend() const { return *backend_; }
  const MaskProvider &masks() const { return *masks_; }
  const AttributeRegistry &registry() const { return registry_; }

  LatentCode latent_for(const ImageRef &ref, const ImageStore &store) const;
  /// The target photograph resized to the backend's output size.
  Image target_image_for(const ImageRef &ref, const ImageStore &store) const;

  TransferRequest request_from(const ImageRef &target, std::span<const PlannedContribution> plan,
                               const ImageStore &store) const;
  /// plan_contributions + latent resolution.
  TransferRequest build_transfer_request(const CanvasState &state, const ImageStore &store) const;

  /// render_result, serialized when the backend is not reentrant.
  Image render(const TransferRequest &request, RenderTrace *trace = nullptr) const;

private:
  std::shared_ptr<const GeneratorBackend> backend_;
  std::shared_ptr<const MaskProvider> masks_;
  AttributeRegistry registry_;
  mutable std::mutex cache_mutex_;
  mutable std::map<ImageRef, LatentCode> latents_;
  mutable std::mutex render_mutex_;
};

} // namespace refcanvas
