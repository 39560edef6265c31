#pragma once

#include "refcanvas/config.hpp"
#include "refcanvas/engine.hpp"
#include "refcanvas/error.hpp"
#include "refcanvas/scene_spec.hpp"

namespace refcanvas {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_validation = 2,
  exit_backend = 3,
  exit_output_exists = 4,
  exit_io = 5,
};

int exit_code_for(ErrorCode code);

struct RenderOptions {
  std::filesystem::path output;
  bool force = false;
  /// Wins over the scene's own backend key.
  std::optional<std::string> backend;
};

/// Path of the report written next to `output`: <stem>.report.json.
std::filesystem::path report_path(const std::filesystem::path &output);

/// Replays the scene through a SessionDocument (set target, place, select), renders
/// it with `engine` and writes the PNG and its report. Returns the report.
/// Throws on failure; nothing is written unless rendering succeeded.
nlohmann::json render_scene(const SceneSpec &spec, const Engine &engine, const RenderOptions &options);

/// Builds the engine from `config` (with the scene's or the option's backend) and
/// calls render_scene. Errors are logged and mapped to an exit code.
int cli_render(const SceneSpec &spec, const RenderOptions &options, ServiceConfig config);

} // namespace refcanvas
