#pragma once

#include "refcanvas/backend.hpp"
#include "refcanvas/template_masks.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <sys/types.h>

namespace refcanvas {

/// Locations of exported TorchScript modules and the helper that serves them.
///
/// encoder:   (1, 3, S, S) in [-1, 1] -> (1, L, D) extended latent (e.g. an exported e4e)
/// generator: (1, L, D) -> (1, 3, H, W) in [-1, 1] (e.g. an exported StyleGAN2 synthesis net)
/// parser:    (1, 3, 512, 512) ImageNet-normalized -> (1, 19, h, w) face-parsing logits
struct BridgeAssets {
  std::filesystem::path encoder;
  std::filesystem::path generator;
  std::filesystem::path parser;  // optional
  std::string python = "python3";
  std::filesystem::path script = REFCANVAS_BRIDGE_SCRIPT;
  std::chrono::milliseconds timeout{60000};

  /// encoder.pt / generator.pt / parser.pt inside `dir`.
  static BridgeAssets in_directory(const std::filesystem::path &dir);
};

/// A helper process speaking a framed protocol over stdin/stdout: each message is
/// one JSON header line followed by `bytes` raw payload bytes. Calls are serialized.
/// A helper that dies or times out is restarted on the next call.
class TorchBridge {
public:
  explicit TorchBridge(BridgeAssets assets);
  ~TorchBridge();

  TorchBridge(const TorchBridge &) = delete;
  TorchBridge &operator=(const TorchBridge &) = delete;

  struct Reply {
    nlohmann::json header;
    std::vector<std::uint8_t> payload;
  };

  Reply call(nlohmann::json header, std::span<const std::uint8_t> payload = {});
  const nlohmann::json &info() const { return info_; }
  const BridgeAssets &assets() const { return assets_; }

private:
  void start();
  void stop();
  Reply exchange(const nlohmann::json &header, std::span<const std::uint8_t> payload);

  BridgeAssets assets_;
  std::mutex mutex_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  nlohmann::json info_;
};

/// Pretrained encoder/generator served through a TorchBridge.
class TorchScriptBackend final : public GeneratorBackend {
public:
  explicit TorchScriptBackend(std::shared_ptr<TorchBridge> bridge);

  std::string name() const override { return "real"; }
  LatentShape latent_shape() const override { return shape_; }
  std::size_t image_width() const override { return width_; }
  std::size_t image_height() const override { return height_; }
  bool deterministic() const override { return true; }
  bool reentrant() const override { return false; }

  LatentCode encode(const Image &image) const override;
  Image generate(const LatentCode &latent) const override;

  const std::shared_ptr<TorchBridge> &bridge() const { return bridge_; }

private:
  std::shared_ptr<TorchBridge> bridge_;
  LatentShape shape_;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
};

/// Throws ErrorCode::backend_unavailable with a remediation hint when the model
/// files are missing.
std::shared_ptr<TorchScriptBackend> open_real_backend(const BridgeAssets &assets);

/// Per-pixel face-parsing labels (CelebAMask-HQ 19-class convention), row-major.
class FaceParser {
public:
  virtual ~FaceParser() = default;
  virtual std::vector<std::uint8_t> parse(const Image &image) const = 0;
};

class BridgeFaceParser final : public FaceParser {
public:
  explicit BridgeFaceParser(std::shared_ptr<TorchBridge> bridge);
  std::vector<std::uint8_t> parse(const Image &image) const override;

private:
  std::shared_ptr<TorchBridge> bridge_;
};

/// Label ids that make up a region: eyes {4, 5}, nose {10}, mouth {11, 12, 13}, hair {17}.
std::vector<std::uint8_t> parser_labels(FaceRegion region);

/// Masks from a face parser, feathered like the template masks. If parsing fails
/// the fixed template is used instead and a warning is logged.
class ParserMaskProvider final : public MaskProvider {
public:
  ParserMaskProvider(std::shared_ptr<const FaceParser> parser, double feather_px = 5.0);

  std::string name() const override { return "parser"; }
  RegionMasks masks_for(const Image &image) const override;

private:
  std::shared_ptr<const FaceParser> parser_;
  double feather_px_;
  FixedTemplateMaskProvider fallback_;
};

} // namespace refcanvas
