#include "refcanvas/engine.hpp"

#include "refcanvas/error.hpp"
#include "refcanvas/synthetic_backend.hpp"
#include "refcanvas/template_masks.hpp"
#include "refcanvas/torch_bridge.hpp"

#include <spdlog/spdlog.h>

namespace refcanvas {

Engine::Engine(std::shared_ptr<const GeneratorBackend> backend,
               std::shared_ptr<const MaskProvider> masks, AttributeRegistry registry)
    : backend_(std::move(backend)), masks_(std::move(masks)), registry_(std::move(registry)) {
  if (registry_.layers() != backend_->latent_shape().layers) {
    throw Error(ErrorCode::config, "attribute registry layer count does not match the backend");
  }
}

std::shared_ptr<Engine> Engine::from_config(const ServiceConfig &config) {
  config.validate();
  std::shared_ptr<const GeneratorBackend> backend;
  std::shared_ptr<const MaskProvider> masks;

  if (config.backend == "synthetic") {
    backend = std::make_shared<SyntheticBackend>(config.synthetic_size);
    if (config.masks == "parser") {
      throw Error(ErrorCode::config, "parser masks need the real backend's model helper", "masks");
    }
  } else {
    BridgeAssets assets = config.assets_dir.empty() ? BridgeAssets{} : BridgeAssets::in_directory(config.assets_dir);
    assets.python = config.python;
    assets.script = config.bridge_script;
    assets.timeout = config.generation_timeout();
    auto bridge_backend = open_real_backend(assets);
    backend = bridge_backend;
    if (config.masks != "template" && !assets.parser.empty()) {
      masks = std::make_shared<ParserMaskProvider>(
          std::make_shared<BridgeFaceParser>(bridge_backend->bridge()), config.feather_px);
    } else if (config.masks == "parser") {
      throw Error(ErrorCode::backend_unavailable, "masks=parser but no parser.pt in " +
                                                      config.assets_dir.string(), "masks");
    }
  }
  if (!masks) masks = std::make_shared<FixedTemplateMaskProvider>(config.feather_px);

  AttributeRegistry registry = backend->default_registry();
  registry.apply_overrides(config.attribute_overrides);
  spdlog::debug("engine: backend={} masks={}", backend->name(), masks->name());
  return std::make_shared<Engine>(std::move(backend), std::move(masks), std::move(registry));
}

LatentCode Engine::latent_for(const ImageRef &ref, const ImageStore &store) const {
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = latents_.find(ref); it != latents_.end()) return it->second;
  }
  const Image image = store.decode(ref);
  LatentCode latent;
  {
    std::unique_lock guard(render_mutex_, std::defer_lock);
    if (!backend_->reentrant()) guard.lock();
    try {
      latent = backend_->encode(image);
    } catch (const Error &) {
      throw;
    } catch (const std::exception &e) {
      throw Error(ErrorCode::generation, backend_->name() + " encoder failed: " + e.what());
    }
  }
  if (latent.shape() != backend_->latent_shape()) {
    throw Error(ErrorCode::generation, "encoder returned a latent of the wrong shape");
  }
  std::lock_guard lock(cache_mutex_);
  latents_.emplace(ref, latent);
  return latent;
}

Image Engine::target_image_for(const ImageRef &ref, const ImageStore &store) const {
  return resize_bilinear(store.decode(ref), backend_->image_width(), backend_->image_height());
}

TransferRequest Engine::request_from(const ImageRef &target, std::span<const PlannedContribution> plan,
                                     const ImageStore &store) const {
  TransferRequest request{latent_for(target, store), target_image_for(target, store), {}};
  for (const auto &item : plan) {
    request.contributions.push_back(
        {latent_for(item.image, store), registry_.at(item.attribute), item.weight});
  }
  return request;
}

TransferRequest Engine::build_transfer_request(const CanvasState &state, const ImageStore &store) const {
  const auto plan = plan_contributions(state, registry_);
  return request_from(*state.target, plan, store);
}

Image Engine::render(const TransferRequest &request, RenderTrace *trace) const {
  std::unique_lock guard(render_mutex_, std::defer_lock);
  if (!backend_->reentrant()) guard.lock();
  return render_result(request, *backend_, *masks_, registry_, trace);
}

} // namespace refcanvas
