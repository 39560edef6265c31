#include "refcanvas/cli_render.hpp"
#include "refcanvas/error.hpp"
#include "refcanvas/http_api.hpp"
#include "refcanvas/image_io.hpp"
#include "refcanvas/synthetic_backend.hpp"

#include <csignal>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

using namespace refcanvas;
namespace fs = std::filesystem;

namespace {

ApiServer *running_server = nullptr;

void on_signal(int) {
  if (running_server) running_server->stop();
}

// Faces from the synthetic renderer plus a scene that uses them.
void write_demo_assets(const fs::path &dir, bool force) {
  const SyntheticBackend backend;
  const fs::path scene = dir / "scene.json";
  if (!force && fs::exists(scene)) {
    throw Error(ErrorCode::output_exists, scene.string() + " already exists; pass --force", "output");
  }
  fs::create_directories(dir);
  std::mt19937_64 rng(2024);
  const char *names[] = {"target.png", "ref_eyes.png", "ref_mouth.png", "ref_age.png"};
  for (const char *name : names) {
    std::vector<double> v(SyntheticBackend::kShape.size());
    for (double &x : v) x = static_cast<double>(static_cast<int>(rng() % 2049) - 1024) / 1024.0;
    write_file_atomic(dir / name, encode_png(backend.generate(LatentCode(SyntheticBackend::kShape, v))));
  }
  const nlohmann::json spec = {
      {"target", "target.png"},
      {"backend", "synthetic"},
      {"canvas", {{"width", 1000}, {"height", 800}, {"card_radius", 80}}},
      {"references",
       {{{"path", "ref_eyes.png"}, {"attributes", {"eyes"}}, {"position", {620, 400}}},
        {{"path", "ref_mouth.png"}, {"attributes", {"mouth", "makeup"}}, {"position", {500, 250}}},
        {{"path", "ref_age.png"}, {"attributes", {"age"}}, {"weight", 0.4}}}}};
  write_text_atomic(scene, spec.dump(2) + "\n");
  std::cout << "wrote demo faces and " << scene.string() << "\n";
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"refcanvas: canvas-driven facial attribute transfer"};
  app.require_subcommand(1);
  app.fallthrough();

  ConfigOverrides flags;
  std::string config_file, backend, assets_dir, data_dir, static_dir, host;
  int port = -1;
  int verbosity = 0;
  app.add_option("-c,--config", config_file, "JSON config file (env REFCANVAS_CONFIG)");
  app.add_option("--backend", backend, "synthetic | real (env REFCANVAS_BACKEND)")
      ->check(CLI::IsMember({"synthetic", "real"}));
  app.add_option("--assets", assets_dir, "directory holding encoder.pt, generator.pt, parser.pt");
  app.add_flag("-v,--verbose", verbosity, "more logging (repeatable)");

  auto *render = app.add_subcommand("render", "render a scene file to a PNG and a report");
  std::string spec_path, out_path;
  bool force = false;
  render->add_option("spec", spec_path, "scene file")->required();
  render->add_option("-o,--output", out_path, "output PNG")->required();
  render->add_flag("-f,--force", force, "overwrite existing output");

  auto *serve = app.add_subcommand("serve", "run the HTTP API");
  serve->add_option("--host", host, "bind address (env REFCANVAS_HOST)");
  serve->add_option("--port", port, "port, 0 for any (env REFCANVAS_PORT)")->check(CLI::Range(0, 65535));
  serve->add_option("--data-dir", data_dir, "session storage (env REFCANVAS_DATA_DIR)");
  serve->add_option("--static-dir", static_dir, "files served at /");

  auto *schema = app.add_subcommand("schema", "print the scene file JSON Schema");

  auto *demo = app.add_subcommand("demo-assets", "write synthetic faces and a sample scene");
  std::string demo_dir;
  demo->add_option("dir", demo_dir, "output directory")->required();
  demo->add_flag("-f,--force", force, "overwrite existing files");

  CLI11_PARSE(app, argc, argv);

  spdlog::set_level(verbosity >= 2 ? spdlog::level::debug
                                   : verbosity == 1 ? spdlog::level::info : spdlog::level::warn);
  if (!config_file.empty()) flags.config_file = config_file;
  if (!backend.empty()) flags.backend = backend;
  if (!assets_dir.empty()) flags.assets_dir = assets_dir;
  if (!data_dir.empty()) flags.data_dir = data_dir;
  if (!static_dir.empty()) flags.static_dir = static_dir;
  if (!host.empty()) flags.host = host;
  if (port >= 0) flags.port = port;

  try {
    if (*schema) {
      std::cout << scene_spec_schema().dump(2) << "\n";
      return exit_ok;
    }
    if (*demo) {
      write_demo_assets(demo_dir, force);
      return exit_ok;
    }
    if (*render) {
      const SceneSpec spec = load_scene_spec(spec_path);
      ConfigOverrides render_flags = flags;
      render_flags.backend.reset();
      const ServiceConfig config = load_config(render_flags);
      RenderOptions options{out_path, force, flags.backend};
      if (!options.backend) {
        // An explicit environment choice still beats the scene file.
        if (auto env = process_env("REFCANVAS_BACKEND")) options.backend = *env;
      }
      return cli_render(spec, options, config);
    }
    if (*serve) {
      const ServiceConfig config = load_config(flags);
      auto service = std::make_shared<SessionService>(config, Engine::from_config(config));
      ApiServer server(service);
      const int bound = server.bind(config.host, config.port);
      running_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << config.host << ":" << bound << "/api/v1 (backend "
                << config.backend << ")" << std::endl;
      server.listen();
      running_server = nullptr;
      return exit_ok;
    }
  } catch (const Error &e) {
    spdlog::error("{}: {}", code_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return exit_failure;
  }
  return exit_failure;
}
