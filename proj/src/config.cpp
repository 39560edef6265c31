#include "refcanvas/config.hpp"

#include "refcanvas/error.hpp"
#include "refcanvas/image_io.hpp"

#include <cstdlib>

namespace refcanvas {

std::chrono::milliseconds ServiceConfig::generation_timeout() const {
  if (timeout) return *timeout;
  return backend == "real" ? std::chrono::milliseconds(60000) : std::chrono::milliseconds(5000);
}

std::size_t ServiceConfig::worker_count() const {
  if (workers > 0) return workers;
  return backend == "real" ? 1 : 2;
}

bool ServiceConfig::async_generation() const {
  if (generation_mode == "sync") return false;
  if (generation_mode == "async") return true;
  return backend == "real";
}

DistanceModel ServiceConfig::distance_model() const {
  DistanceModel model = canvas.default_distance_model();
  if (d_min) model.d_min = *d_min;
  if (d_max) model.d_max = *d_max;
  model.validate();
  return model;
}

void ServiceConfig::validate() const {
  if (backend != "synthetic" && backend != "real") {
    throw Error(ErrorCode::config, "backend must be 'synthetic' or 'real', got '" + backend + "'", "backend");
  }
  if (masks != "auto" && masks != "template" && masks != "parser") {
    throw Error(ErrorCode::config, "masks must be auto, template or parser", "masks");
  }
  if (generation_mode != "auto" && generation_mode != "sync" && generation_mode != "async") {
    throw Error(ErrorCode::config, "generation_mode must be auto, sync or async", "generation_mode");
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::config, "port out of range", "port");
  canvas.validate();
  distance_model();
}

std::optional<std::string> process_env(const char *name) {
  if (const char *v = std::getenv(name); v && *v) return std::string(v);
  return std::nullopt;
}

void apply_config_file(ServiceConfig &c, const nlohmann::json &j) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::config, "config file must hold a JSON object");
    if (j.contains("backend")) j.at("backend").get_to(c.backend);
    if (j.contains("masks")) j.at("masks").get_to(c.masks);
    if (j.contains("feather_px")) j.at("feather_px").get_to(c.feather_px);
    if (j.contains("synthetic_size")) j.at("synthetic_size").get_to(c.synthetic_size);
    if (auto it = j.find("assets"); it != j.end()) {
      if (it->contains("dir")) c.assets_dir = it->at("dir").get<std::string>();
      if (it->contains("python")) it->at("python").get_to(c.python);
      if (it->contains("bridge_script")) c.bridge_script = it->at("bridge_script").get<std::string>();
    }
    if (auto it = j.find("server"); it != j.end()) {
      if (it->contains("host")) it->at("host").get_to(c.host);
      if (it->contains("port")) it->at("port").get_to(c.port);
      if (it->contains("data_dir")) c.data_dir = it->at("data_dir").get<std::string>();
      if (it->contains("static_dir")) c.static_dir = it->at("static_dir").get<std::string>();
      if (it->contains("workers")) it->at("workers").get_to(c.workers);
      if (it->contains("generation_mode")) it->at("generation_mode").get_to(c.generation_mode);
      if (it->contains("timeout_ms")) {
        c.timeout = std::chrono::milliseconds(it->at("timeout_ms").get<std::int64_t>());
      }
    }
    if (auto it = j.find("canvas"); it != j.end()) {
      if (it->contains("width")) it->at("width").get_to(c.canvas.width);
      if (it->contains("height")) it->at("height").get_to(c.canvas.height);
      if (it->contains("card_radius")) it->at("card_radius").get_to(c.canvas.card_radius);
      if (it->contains("d_min")) c.d_min = it->at("d_min").get<double>();
      if (it->contains("d_max")) c.d_max = it->at("d_max").get<double>();
    }
    if (j.contains("attributes")) c.attribute_overrides = j.at("attributes");
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::config, std::string("bad config file value: ") + e.what());
  }
}

ServiceConfig load_config(const ConfigOverrides &flags, const EnvLookup &env) {
  ServiceConfig config;

  std::optional<std::filesystem::path> file = flags.config_file;
  if (!file) {
    if (auto v = env("REFCANVAS_CONFIG")) file = *v;
  }
  if (file) {
    const auto bytes = read_file(*file);
    try {
      apply_config_file(config, nlohmann::json::parse(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::parse_error &e) {
      throw Error(ErrorCode::config, "cannot parse " + file->string() + ": " + e.what());
    }
  }

  if (auto v = env("REFCANVAS_BACKEND")) config.backend = *v;
  if (auto v = env("REFCANVAS_ASSETS_DIR")) config.assets_dir = *v;
  if (auto v = env("REFCANVAS_DATA_DIR")) config.data_dir = *v;
  if (auto v = env("REFCANVAS_PYTHON")) config.python = *v;
  if (auto v = env("REFCANVAS_HOST")) config.host = *v;
  if (auto v = env("REFCANVAS_PORT")) {
    try {
      config.port = std::stoi(*v);
    } catch (const std::exception &) {
      throw Error(ErrorCode::config, "REFCANVAS_PORT is not a number", "port");
    }
  }

  if (flags.backend) config.backend = *flags.backend;
  if (flags.assets_dir) config.assets_dir = *flags.assets_dir;
  if (flags.data_dir) config.data_dir = *flags.data_dir;
  if (flags.static_dir) config.static_dir = *flags.static_dir;
  if (flags.host) config.host = *flags.host;
  if (flags.port) config.port = *flags.port;

  config.validate();
  return config;
}

} // namespace refcanvas
