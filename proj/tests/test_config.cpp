#include "doctest.h"
#include "test_util.hpp"

#include "refcanvas/config.hpp"
#include "refcanvas/engine.hpp"
#include "refcanvas/error.hpp"
#include "refcanvas/image_io.hpp"

#include <map>

using namespace refcanvas;
using nlohmann::json;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const char *name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

} // namespace

TEST_CASE("defaults") {
  const ServiceConfig c = load_config({}, env_of({}));
  CHECK(c.backend == "synthetic");
  CHECK(c.port == 8080);
  CHECK(c.generation_timeout() == std::chrono::milliseconds(5000));
  CHECK(c.worker_count() == 2);
  CHECK_FALSE(c.async_generation());
  ServiceConfig real = c;
  real.backend = "real";
  CHECK(real.generation_timeout() == std::chrono::milliseconds(60000));
  CHECK(real.worker_count() == 1);
  CHECK(real.async_generation());
}

TEST_CASE("flags beat environment beats file") {
  testutil::TempDir dir;
  const auto file = dir.path / "config.json";
  write_text_atomic(file, R"({"server": {"port": 9000, "host": "0.0.0.0", "timeout_ms": 1500},
                              "canvas": {"width": 600, "height": 400, "d_max": 250},
                              "masks": "template"})");
  ServiceConfig c = load_config({.config_file = file}, env_of({}));
  CHECK(c.port == 9000);
  CHECK(c.host == "0.0.0.0");
  CHECK(c.masks == "template");
  CHECK(c.generation_timeout() == std::chrono::milliseconds(1500));
  CHECK(c.distance_model().d_max == 250.0);
  CHECK(c.distance_model().d_min == 160.0);

  c = load_config({}, env_of({{"REFCANVAS_CONFIG", file.string()}, {"REFCANVAS_PORT", "9100"}}));
  CHECK(c.port == 9100);
  CHECK(c.host == "0.0.0.0");

  c = load_config({.config_file = file, .port = 9200},
                  env_of({{"REFCANVAS_PORT", "9100"}, {"REFCANVAS_DATA_DIR", "/tmp/x"}}));
  CHECK(c.port == 9200);
  CHECK(c.data_dir == "/tmp/x");
}

TEST_CASE("invalid configuration is reported") {
  const auto code = [](const std::function<void()> &fn) {
    try {
      fn();
    } catch (const Error &e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  CHECK(code([] { load_config({.backend = "gpu"}, env_of({})); }) == ErrorCode::config);
  CHECK(code([] { load_config({}, env_of({{"REFCANVAS_PORT", "eighty"}})); }) == ErrorCode::config);
  testutil::TempDir dir;
  write_text_atomic(dir.path / "bad.json", "{not json");
  CHECK(code([&] { load_config({.config_file = dir.path / "bad.json"}, env_of({})); }) ==
        ErrorCode::config);
  write_text_atomic(dir.path / "inverted.json", R"({"canvas": {"d_min": 300, "d_max": 200}})");
  CHECK(code([&] { load_config({.config_file = dir.path / "inverted.json"}, env_of({})); }) ==
        ErrorCode::config);
  ServiceConfig c;
  CHECK(code([&] { apply_config_file(c, nlohmann::json{{"server", {{"port", "x"}}}}); }) ==
        ErrorCode::config);
}

TEST_CASE("engine construction follows the configured backend") {
  ServiceConfig c;
  const auto engine = Engine::from_config(c);
  CHECK(engine->backend().name() == "synthetic");
  CHECK(engine->masks().name() == "template");
  CHECK(engine->registry().find("eyes"));

  c.attribute_overrides = {{"layer_groups", {{"age", json::array({3})}}}};
  CHECK(Engine::from_config(c)->registry().at("age").layer_group->indices() ==
        std::vector<std::size_t>{3});

  c = ServiceConfig{};
  c.masks = "parser";
  CHECK_THROWS_AS(Engine::from_config(c), Error);

  c = ServiceConfig{};
  c.backend = "real";
  c.assets_dir = "/nonexistent";
  try {
    Engine::from_config(c);
    FAIL("real backend should be unavailable");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::backend_unavailable);
  }
}

TEST_CASE("engine caches latents by content") {
  const auto engine = Engine::from_config(ServiceConfig{});
  ImageStore store;
  const auto ref = store.put(testutil::face_png(3));
  const auto a = engine->latent_for(ref, store);
  CHECK(engine->latent_for(ref, store) == a);
  CHECK(engine->target_image_for(ref, store).width() == 128);
}
