#pragma once

#include "refcanvas/latent.hpp"
#include "refcanvas/session.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace refcanvas {

struct ServiceConfig {
  std::string backend = "synthetic";  // synthetic | real
  std::filesystem::path assets_dir;   // encoder.pt, generator.pt, optional parser.pt
  std::string python = "python3";
  std::filesystem::path bridge_script = REFCANVAS_BRIDGE_SCRIPT;
  std::string masks = "auto";         // auto | template | parser
  double feather_px = 5.0;
  std::size_t synthetic_size = 128;

  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "refcanvas-data";
  std::filesystem::path static_dir;
  std::size_t workers = 0;                           // 0: backend default
  std::optional<std::chrono::milliseconds> timeout;  // unset: backend default
  std::string generation_mode = "auto";              // auto | sync | async

  CanvasGeometry canvas;
  std::optional<double> d_min;
  std::optional<double> d_max;
  nlohmann::json attribute_overrides;

  /// 60 s for the real backend, 5 s for the synthetic one.
  std::chrono::milliseconds generation_timeout() const;
  /// 1 for the real backend, 2 otherwise.
  std::size_t worker_count() const;
  /// Jobs with polling for the real backend, synchronous otherwise.
  bool async_generation() const;
  DistanceModel distance_model() const;

  void validate() const;
};

/// Command-line values; any that are set win over every other source.
struct ConfigOverrides {
  std::optional<std::filesystem::path> config_file;
  std::optional<std::string> backend;
  std::optional<std::filesystem::path> assets_dir;
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> static_dir;
  std::optional<std::string> host;
  std::optional<int> port;
};

using EnvLookup = std::function<std::optional<std::string>(const char *)>;
std::optional<std::string> process_env(const char *name);

/// Precedence: flags > environment > config file > defaults. Environment:
/// REFCANVAS_CONFIG, REFCANVAS_BACKEND, REFCANVAS_ASSETS_DIR, REFCANVAS_DATA_DIR,
/// REFCANVAS_PYTHON, REFCANVAS_HOST, REFCANVAS_PORT.
ServiceConfig load_config(const ConfigOverrides &flags, const EnvLookup &env = process_env);

/// Applies the keys present in a config-file document onto `config`.
void apply_config_file(ServiceConfig &config, const nlohmann::json &file);

} // namespace refcanvas
