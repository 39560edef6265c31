#include "refcanvas/cli_render.hpp"

#include "refcanvas/error.hpp"
#include "refcanvas/image_io.hpp"
#include "refcanvas/session_json.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

namespace refcanvas {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
  case ErrorCode::validation:
  case ErrorCode::input:
  case ErrorCode::ordering:
  case ErrorCode::duplicate:
  case ErrorCode::not_found:
  case ErrorCode::mode:
  case ErrorCode::config: return exit_validation;
  case ErrorCode::backend_unavailable:
  case ErrorCode::generation:
  case ErrorCode::timeout:
  case ErrorCode::mask: return exit_backend;
  case ErrorCode::output_exists: return exit_output_exists;
  case ErrorCode::io: return exit_io;
  case ErrorCode::shape_mismatch:
  case ErrorCode::numeric: return exit_failure;
  }
  return exit_failure;
}

fs::path report_path(const fs::path &output) {
  return output.parent_path() / (output.stem().string() + ".report.json");
}

namespace {

ImageRef load_image(ImageStore &store, const fs::path &path, const std::string &field) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
    decode_image(bytes);
  } catch (const Error &e) {
    throw Error(ErrorCode::input, "cannot use " + path.string() + ": " + e.what(), field);
  }
  return store.put(bytes);
}

// Re-raises with the scene field that caused the failure.
template <class F> void in_field(const std::string &field, F &&f) {
  try {
    f();
  } catch (const Error &e) {
    throw Error(e.code(), field + ": " + e.what(), field);
  }
}

} // namespace

json render_scene(const SceneSpec &spec, const Engine &engine, const RenderOptions &options) {
  if (options.output.empty()) throw Error(ErrorCode::validation, "an output path is required", "output");
  const fs::path report_file = report_path(options.output);
  if (!options.force && (fs::exists(options.output) || fs::exists(report_file))) {
    throw Error(ErrorCode::output_exists,
                options.output.string() + " already exists; pass --force to overwrite", "output");
  }

  const AttributeRegistry &registry = engine.registry();
  ImageStore store;
  SessionDocument doc("cli", CanvasState::empty(spec.canvas, spec.distance_model()));
  const ImageRef target = load_image(store, spec.target, "target");
  doc.set_target(target);

  std::vector<ImageRef> refs;
  for (std::size_t i = 0; i < spec.references.size(); ++i) {
    const auto &r = spec.references[i];
    const std::string field = "references[" + std::to_string(i) + "]";
    const ImageRef ref = load_image(store, r.path, field + ".path");
    const std::set<std::string> names(r.attributes.begin(), r.attributes.end());
    in_field(field, [&] {
      if (std::find(refs.begin(), refs.end(), ref) != refs.end()) {
        throw Error(ErrorCode::duplicate, "image " + r.path.string() + " appears twice");
      }
      for (const auto &name : names) registry.at(name);
      if (r.position) {
        doc.place_reference(ref, *r.position);
        doc.select_attributes(ref, names, registry);
      }
    });
    refs.push_back(ref);
  }

  const auto placed = plan_contributions(doc.current(), registry);
  std::vector<PlannedContribution> plan;
  json contributions = json::array();
  for (std::size_t i = 0; i < spec.references.size(); ++i) {
    const auto &r = spec.references[i];
    std::vector<PlannedContribution> mine;
    if (r.position) {
      for (const auto &p : placed) {
        if (p.image == refs[i]) mine.push_back(p);
      }
    } else if (*r.weight > 0.0) {
      for (const auto &a : registry.attributes()) {
        if (std::find(r.attributes.begin(), r.attributes.end(), a.name) != r.attributes.end()) {
          mine.push_back({refs[i], a.name, Weight(*r.weight), NAN});
        }
      }
    }
    for (const auto &p : mine) {
      const AttributeSpec &a = registry.at(p.attribute);
      json item = {{"reference", r.path.string()},
                   {"image", p.image.str()},
                   {"attribute", p.attribute},
                   {"mode", mode_name(a.mode)},
                   {"weight", p.weight.value()},
                   {"source", r.position ? "position" : "weight"},
                   {"distance", std::isnan(p.distance) ? json(nullptr) : json(p.distance)}};
      item["layers"] = a.mode == TransferMode::global ? a.layer_group->indices()
                                                      : registry.local_layer_group().indices();
      if (a.region) item["region"] = region_name(*a.region);
      contributions.push_back(item);
      plan.push_back(p);
    }
  }

  RenderTrace trace;
  const Image result = engine.render(engine.request_from(target, plan, store), &trace);
  const auto png = encode_png(result);

  json regions = json::array();
  for (const auto &step : trace.steps) {
    if (step.region) {
      regions.push_back({{"region", region_name(*step.region)},
                         {"attribute", step.attribute},
                         {"mask_support_px", step.mask_support}});
    }
  }
  json report = {{"output", options.output.string()},
                 {"sha256", sha256_hex(png)},
                 {"backend", engine.backend().name()},
                 {"masks", engine.masks().name()},
                 {"size", {{"width", result.width()}, {"height", result.height()}}},
                 {"target", {{"path", spec.target.string()}, {"image", target.str()}}},
                 {"canvas", spec.canvas},
                 {"distance_model", doc.current().distance_model},
                 {"contributions", contributions},
                 {"mask_regions", regions}};

  if (!options.output.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(options.output.parent_path(), ec);
  }
  write_file_atomic(options.output, png);
  write_text_atomic(report_file, report.dump(2) + "\n");
  return report;
}

int cli_render(const SceneSpec &spec, const RenderOptions &options, ServiceConfig config) {
  try {
    if (options.backend) {
      config.backend = *options.backend;
    } else if (spec.backend) {
      config.backend = *spec.backend;
    }
    const auto engine = Engine::from_config(config);
    const json report = render_scene(spec, *engine, options);
    spdlog::info("wrote {} ({} contribution(s), backend {})", options.output.string(),
                 report["contributions"].size(), engine->backend().name());
    return exit_ok;
  } catch (const Error &e) {
    spdlog::error("{}: {}", code_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return exit_failure;
  }
}

} // namespace refcanvas
