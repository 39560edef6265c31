// Acceptance gate: one PASS/FAIL/SKIP line per criterion, with runtime against its budget.
#include "refcanvas/cli_render.hpp"
#include "refcanvas/error.hpp"
#include "refcanvas/http_api.hpp"
#include "refcanvas/image_io.hpp"
#include "refcanvas/session_json.hpp"
#include "refcanvas/synthetic_backend.hpp"
#include "refcanvas/template_masks.hpp"
#include "refcanvas/torch_bridge.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace refcanvas;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr double kWeightOracleTol = 1e-12;  // absolute, weight vs long-double oracle
constexpr double kAffinityRelTol = 1e-6;    // relative to operand magnitude
constexpr double kSmokeOutsideDelta = 0.02; // mean absolute pixel delta outside the mouth
constexpr int kWeightCases = 10000;
constexpr int kBlendPairs = 1000;
constexpr int kCompositionCases = 1000;
constexpr int kOraclePairs = 100;
constexpr int kLocalityCasesPerRegion = 25;
constexpr int kSessionSeeds = 10;
constexpr int kSessionOps = 1000;
constexpr int kHistoryCommits = 10;

struct Outcome {
  enum Kind { pass, fail, skip } kind = pass;
  std::string detail;
};

Outcome failed(const std::string &why) { return {Outcome::fail, why}; }

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string hex_of(double v) {
  std::ostringstream s;
  s << std::hexfloat << v;
  return s.str();
}

LatentCode grid_latent(std::mt19937_64 &rng, LatentShape shape = SyntheticBackend::kShape) {
  std::vector<double> v(shape.size());
  for (double &x : v) x = static_cast<double>(static_cast<int>(rng() % 2049) - 1024) / 1024.0;
  return LatentCode(shape, std::move(v));
}

LatentCode random_latent(std::mt19937_64 &rng, LatentShape shape, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(shape.size());
  for (double &x : v) x = dist(rng);
  return LatentCode(shape, std::move(v));
}

LayerMask random_mask(std::mt19937_64 &rng, std::size_t layers) {
  std::vector<bool> m(layers);
  for (std::size_t i = 0; i < layers; ++i) m[i] = rng() % 2 == 0;
  return LayerMask(std::move(m));
}

std::vector<std::uint8_t> face_png(std::uint64_t seed) {
  static const SyntheticBackend backend;
  std::mt19937_64 rng(seed);
  return encode_png(backend.generate(grid_latent(rng)));
}

// ---------------------------------------------------------------------------

Outcome weight_suite() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < kWeightCases; ++i) {
    const double d_min = unit(rng) < 0.1 ? 0.0 : 500.0 * unit(rng);
    const double d_max = d_min + 1e-3 + 1000.0 * unit(rng);
    const DistanceModel m{d_min, d_max};
    const double d = 2000.0 * unit(rng);
    const double d2 = d + (unit(rng) < 0.2 ? 0.0 : 50.0 * unit(rng));
    const double w = distance_to_weight(d, m).value();
    const double w2 = distance_to_weight(d2, m).value();
    if (!(w >= 0.0 && w <= 1.0)) return failed("weight out of range at case " + std::to_string(i));
    if (w2 > w) return failed("not monotone at case " + std::to_string(i));
    if (distance_to_weight(d_min, m).value() != 1.0) return failed("weight(d_min) != 1 at case " + std::to_string(i));
    if (distance_to_weight(d_max, m).value() != 0.0) return failed("weight(d_max) != 0 at case " + std::to_string(i));
    const long double oracle =
        std::clamp((static_cast<long double>(d_max) - d) / (static_cast<long double>(d_max) - d_min), 0.0L, 1.0L);
    if (std::fabs(static_cast<long double>(w) - oracle) > kWeightOracleTol) {
      return failed("weight differs from oracle at case " + std::to_string(i));
    }
  }
  return {Outcome::pass, std::to_string(kWeightCases) + " cases"};
}

Outcome blend_suite() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const LatentShape shape{18, 512};
  double worst = 0.0;
  for (int i = 0; i < kBlendPairs; ++i) {
    const auto t = random_latent(rng, shape, 3.0);
    const auto r = random_latent(rng, shape, 3.0);
    const auto mask = random_mask(rng, shape.layers);
    if (blend_layers(t, r, mask, Weight(0.0)) != t) return failed("w=0 not identity at pair " + std::to_string(i));
    const auto one = blend_layers(t, r, mask, Weight(1.0));
    const double w1 = unit(rng), w2 = unit(rng), a = unit(rng);
    const auto b1 = blend_layers(t, r, mask, Weight(w1));
    const auto b2 = blend_layers(t, r, mask, Weight(w2));
    const auto bmix = blend_layers(t, r, mask, Weight(a * w1 + (1 - a) * w2));
    for (std::size_t l = 0; l < shape.layers; ++l) {
      for (std::size_t k = 0; k < shape.width; ++k) {
        const double tv = t.at(l, k), rv = r.at(l, k);
        if (!mask.includes(l)) {
          if (one.at(l, k) != tv || b1.at(l, k) != tv || bmix.at(l, k) != tv) {
            return failed("unmasked layer changed at pair " + std::to_string(i));
          }
          continue;
        }
        if (one.at(l, k) != rv) return failed("w=1 != reference at pair " + std::to_string(i));
        const double scale = std::max(std::fabs(tv), std::fabs(rv));
        const long double oracle = tv + static_cast<long double>(w1) * (static_cast<long double>(rv) - tv);
        const double e1 = static_cast<double>(std::fabs(b1.at(l, k) - oracle)) / scale;
        const double mixed = a * b1.at(l, k) + (1 - a) * b2.at(l, k);
        const double e2 = std::fabs(bmix.at(l, k) - mixed) / scale;
        worst = std::max({worst, e1, e2});
        if (e1 > kAffinityRelTol || e2 > kAffinityRelTol) {
          return failed("affinity error " + hex_of(std::max(e1, e2)) + " at pair " + std::to_string(i));
        }
      }
    }
  }
  std::ostringstream s;
  s << kBlendPairs << " pairs, worst relative affinity error " << worst;
  return {Outcome::pass, s.str()};
}

Outcome composition_suite() {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const LatentShape shape{18, 64};
  for (int i = 0; i < kCompositionCases; ++i) {
    const auto t = random_latent(rng, shape, 3.0);
    const std::size_t n = 1 + rng() % 5;
    std::vector<LatentCode> refs;
    for (std::size_t j = 0; j < n; ++j) refs.push_back(random_latent(rng, shape, 3.0));

    // Single contribution equals blend_layers exactly.
    const auto m0 = random_mask(rng, shape.layers);
    const Weight w0(unit(rng));
    const LatentContribution single[] = {{refs[0], m0, w0}};
    if (compose_weighted(t, single) != blend_layers(t, refs[0], m0, w0)) {
      return failed("single-contribution reduction differs at case " + std::to_string(i));
    }

    // Disjoint masks: any order gives the identical latent.
    std::vector<std::size_t> owner(shape.layers);
    for (auto &o : owner) o = rng() % (n + 1);  // n: no owner
    std::vector<LatentContribution> disjoint;
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<bool> m(shape.layers);
      for (std::size_t l = 0; l < shape.layers; ++l) m[l] = owner[l] == j;
      disjoint.push_back({refs[j], LayerMask(m), Weight(unit(rng))});
    }
    const auto base = compose_weighted(t, disjoint);
    auto shuffled = disjoint;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (compose_weighted(t, shuffled) != base) return failed("disjoint order dependence at case " + std::to_string(i));

    // Overlapping masks: every element stays in the hull of the target and active references.
    std::vector<LatentContribution> overlapping;
    for (std::size_t j = 0; j < n; ++j) {
      overlapping.push_back({refs[j], random_mask(rng, shape.layers), Weight(unit(rng) < 0.1 ? 1.0 : unit(rng))});
    }
    const auto out = compose_weighted(t, overlapping);
    for (std::size_t l = 0; l < shape.layers; ++l) {
      for (std::size_t k = 0; k < shape.width; ++k) {
        double lo = t.at(l, k), hi = t.at(l, k);
        for (const auto &c : overlapping) {
          if (c.mask.includes(l) && c.weight.value() > 0.0) {
            lo = std::min(lo, c.reference.get().at(l, k));
            hi = std::max(hi, c.reference.get().at(l, k));
          }
        }
        if (out.at(l, k) < lo || out.at(l, k) > hi) {
          return failed("overshoot at case " + std::to_string(i) + " layer " + std::to_string(l));
        }
      }
    }
  }
  return {Outcome::pass, std::to_string(kCompositionCases) + " cases"};
}

Outcome synthetic_oracle() {
  const SyntheticBackend backend;
  std::mt19937_64 rng(14);
  const double ws[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < kOraclePairs; ++i) {
    const auto t = grid_latent(rng);
    const auto r = grid_latent(rng);
    const Image gt = backend.render_unclipped(t);
    const Image gr = backend.render_unclipped(r);
    const auto mask = i % 2 == 0 ? LayerMask::all(4) : random_mask(rng, 4);
    for (double w : ws) {
      const Image gb = backend.render_unclipped(blend_layers(t, r, mask, Weight(w)));
      for (std::size_t y = 0; y < gb.height(); ++y) {
        for (std::size_t x = 0; x < gb.width(); ++x) {
          const bool masked = mask.includes(backend.cell_of(x, y) / SyntheticBackend::kShape.width);
          for (std::size_t c = 0; c < Image::channels; ++c) {
            const double expect = masked ? (1 - w) * gt.at(x, y, c) + w * static_cast<double>(gr.at(x, y, c))
                                         : static_cast<double>(gt.at(x, y, c));
            if (static_cast<double>(gb.at(x, y, c)) != expect) {
              return failed("pixel mismatch at pair " + std::to_string(i) + " w=" + std::to_string(w));
            }
          }
        }
      }
    }
  }
  return {Outcome::pass, std::to_string(kOraclePairs) + " pairs x 5 weights"};
}

Outcome locality() {
  const auto backend = std::make_shared<SyntheticBackend>();
  const auto masks = std::make_shared<FixedTemplateMaskProvider>();
  const Engine engine(backend, masks, backend->default_registry());
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t checked = 0;
  for (FaceRegion region : kFaceRegions) {
    const AttributeSpec &spec = engine.registry().at(region_name(region));
    for (int i = 0; i < kLocalityCasesPerRegion; ++i) {
      const LatentCode t = grid_latent(rng);
      const LatentCode r = grid_latent(rng);
      const Image target = backend->generate(t);
      const Weight w(i == 0 ? 1.0 : 0.05 + 0.95 * unit(rng));
      const TransferRequest plain{t, target, {}};
      const TransferRequest with{t, target, {{r, spec, w}}};
      const Image a = engine.render(plain);
      const Image b = engine.render(with);
      const RegionMask mask = masks->masks_for(target).at(region);
      bool changed = false;
      for (std::size_t y = 0; y < a.height(); ++y) {
        for (std::size_t x = 0; x < a.width(); ++x) {
          for (std::size_t c = 0; c < Image::channels; ++c) {
            const bool same = a.at(x, y, c) == b.at(x, y, c);
            if (mask.at(x, y) == 0.0f) {
              ++checked;
              if (!same) return failed(std::string(region_name(region)) + " leaked outside its mask");
            } else if (!same) {
              changed = true;
            }
          }
        }
      }
      if (!changed) return failed(std::string(region_name(region)) + " transfer had no effect");
    }
  }
  return {Outcome::pass, "4 regions x " + std::to_string(kLocalityCasesPerRegion) + " cases, " +
                             std::to_string(checked) + " zero-alpha samples"};
}

ImageRef ref_of(int n) { return ImageRef(sha256_hex("acceptance-" + std::to_string(n))); }

Outcome session_state_machine() {
  const AttributeRegistry registry = AttributeRegistry::standard();
  const auto names = registry.names();
  std::size_t edits = 0;
  for (int seed = 1; seed <= kSessionSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    const auto pick = [&](int n) { return static_cast<int>(rng() % n); };
    SessionDocument doc("acceptance", CanvasState::empty({1000, 800, 80}));
    std::vector<CanvasState> timeline{doc.current()};
    std::size_t cursor = 0;
    for (int op = 0; op < kSessionOps; ++op) {
      const int kind = pick(10);
      if (kind < 2) {
        if (doc.undo() != (cursor > 0)) return failed("undo availability mismatch");
        if (cursor > 0) --cursor;
      } else if (kind < 4) {
        if (doc.redo() != (cursor + 1 < timeline.size())) return failed("redo availability mismatch");
        if (cursor + 1 < timeline.size()) ++cursor;
      } else {
        const SessionDocument before = doc;
        const Point p{static_cast<double>(pick(1200)) - 100, static_cast<double>(pick(1000)) - 100};
        bool accepted = true;
        try {
          switch (pick(7)) {
          case 0: doc.set_target(ref_of(pick(3))); break;
          case 1: doc.place_reference(ref_of(10 + pick(6)), p); break;
          case 2: doc.move_reference(ref_of(10 + pick(6)), p); break;
          case 3: {
            std::set<std::string> chosen;
            for (const auto &n : names) {
              if (pick(3) == 0) chosen.insert(n);
            }
            if (pick(10) == 0) chosen.insert("not-an-attribute");
            doc.select_attributes(ref_of(10 + pick(6)), chosen, registry);
            break;
          }
          case 4: doc.remove_reference(ref_of(10 + pick(6))); break;
          case 5: doc.reset(); break;
          default:
            if (doc.history().empty()) {
              doc.restore_history(1);
            } else {
              doc.restore_history(doc.history()[pick(static_cast<int>(doc.history().size()))].id);
            }
          }
        } catch (const Error &) {
          accepted = false;
        }
        if (!accepted) {
          if (!(doc == before)) return failed("rejected edit changed the document");
        } else {
          ++edits;
          // Laws: undo after an edit restores the prior state; redo re-applies it.
          const CanvasState after = doc.current();
          if (!doc.undo() || doc.current() != before.current()) return failed("undo(edit) != identity");
          if (!doc.redo() || doc.current() != after) return failed("redo(undo) != identity");
          timeline.resize(cursor + 1);
          timeline.push_back(after);
          ++cursor;
        }
      }
      if (doc.current() != timeline[cursor]) return failed("state diverged from the shadow model");
      if (doc.undo_stack().size() != cursor || doc.redo_stack().size() != timeline.size() - 1 - cursor) {
        return failed("stack depth diverged from the shadow model");
      }
      if (pick(20) == 0) doc.commit_generation(ref_of(1000 + op), op);
      if (op % 100 == 99) {
        const auto back = session_from_json(json::parse(session_to_json(doc).dump()));
        if (!(back == doc)) return failed("serialization round-trip lost information");
        for (const auto &e : back.history()) {
          if (e.digest != e.compute_digest()) return failed("history digest changed");
        }
      }
    }
  }
  return {Outcome::pass, std::to_string(kSessionSeeds) + " x " + std::to_string(kSessionOps) + " ops, " +
                             std::to_string(edits) + " accepted edits"};
}

Outcome history_determinism(const fs::path &work) {
  ServiceConfig config;
  config.data_dir = work / "history";
  std::string id;
  std::map<std::uint64_t, std::vector<std::uint8_t>> stored;
  {
    auto svc = std::make_shared<SessionService>(config, Engine::from_config(config));
    id = svc->create_session()["id"];
    const ImageRef target = svc->upload_image(id, face_png(100));
    std::vector<ImageRef> refs;
    for (int i = 0; i < 4; ++i) refs.push_back(svc->upload_image(id, face_png(101 + i)));
    svc->set_target(id, target);
    const std::vector<std::set<std::string>> picks = {
        {"eyes"}, {"mouth", "age"}, {"makeup", "nose"}, {"hair", "faceshape", "headpose"}};
    std::mt19937_64 rng(16);
    for (int g = 0; g < kHistoryCommits; ++g) {
      const std::size_t j = static_cast<std::size_t>(g) % refs.size();
      const Point p{200.0 + static_cast<double>(rng() % 600), 150.0 + static_cast<double>(rng() % 500)};
      if (g < static_cast<int>(refs.size())) {
        svc->place_reference(id, refs[j], p);
        svc->select_attributes(id, refs[j], picks[j]);
      } else {
        svc->move_reference(id, refs[j], p);
      }
      const json out = svc->generate(id);
      const std::uint64_t hid = out["history_entry"]["id"];
      stored[hid] = svc->history_image(id, hid);
    }
  }
  // Fresh process state: new engine, empty latent cache, documents read back from disk.
  auto svc = std::make_shared<SessionService>(config, Engine::from_config(config));
  std::set<std::string> distinct;
  for (const auto &[hid, bytes] : stored) {
    svc->restore_history(id, hid);
    const json out = svc->generate(id);
    const auto again = svc->history_image(id, out["history_entry"]["id"]);
    if (again != bytes) return failed("history entry " + std::to_string(hid) + " regenerated differently");
    distinct.insert(sha256_hex(bytes));
  }
  return {Outcome::pass, std::to_string(stored.size()) + " commits, " + std::to_string(distinct.size()) +
                             " distinct results, restored after restart"};
}

int run_cli(const std::string &args) {
  const std::string cmd = std::string(REFCANVAS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct ScriptedScene {
  std::string name;
  json spec;
  // Where the walkthrough first drops each reference before moving it; empty: placed directly.
  std::map<std::size_t, Point> first_drop;
};

Outcome cli_http_equivalence(const fs::path &work) {
  const fs::path faces = work / "faces";
  fs::create_directories(faces);
  for (int i = 0; i < 6; ++i) write_file_atomic(faces / ("face" + std::to_string(i) + ".png"), face_png(200 + i));
  const auto face = [](int i) { return "faces/face" + std::to_string(i) + ".png"; };

  const json canvas = {{"width", 1000}, {"height", 800}, {"card_radius", 80}};
  std::vector<ScriptedScene> scenes = {
      {"walkthrough",
       {{"target", face(0)},
        {"canvas", canvas},
        {"references",
         {{{"path", face(1)}, {"attributes", {"eyes", "age"}}, {"position", {640, 420}}},
          {{"path", face(2)}, {"attributes", {"mouth"}}, {"position", {430, 560}}}}}},
       {{0, Point{900, 100}}, {1, Point{150, 700}}}},
      {"target only", {{"target", face(3)}, {"canvas", canvas}, {"references", json::array()}}, {}},
      {"all attributes",
       {{"target", face(4)},
        {"canvas", canvas},
        {"references",
         {{{"path", face(5)},
           {"attributes", {"age", "faceshape", "headpose", "makeup", "eyes", "nose", "mouth", "hair"}},
           {"position", {700, 300}}}}}},
       {}},
      {"mixed with zero weight and clamping",
       {{"target", face(1)},
        {"canvas", canvas},
        {"references",
         {{{"path", face(2)}, {"attributes", {"nose", "hair"}}, {"position", {560, 380}}},
          {{"path", face(3)}, {"attributes", {"mouth"}}, {"position", {1000, 800}}},
          {{"path", face(4)}, {"attributes", {"makeup", "eyes"}}, {"position", {-300, 400}}}}}},
       {{1, Point{520, 400}}}},
      {"custom canvas with overlapping globals",
       {{"target", face(5)},
        {"canvas", {{"width", 600}, {"height", 400}, {"card_radius", 30}, {"d_min", 10}, {"d_max", 250}}},
        {"references",
         {{{"path", face(0)}, {"attributes", {"age", "makeup"}}, {"position", {350, 200}}},
          {{"path", face(2)}, {"attributes", {"age", "faceshape"}}, {"position", {300, 60}}},
          {{"path", face(3)}, {"attributes", {"age", "eyes"}}, {"position", {120, 300}}}}}},
       {}},
  };

  ServiceConfig config;
  config.data_dir = work / "http";
  auto service = std::make_shared<SessionService>(config, Engine::from_config(config));
  ApiServer server(service);
  const int port = server.start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);
  const auto call = [&](const std::string &method, const std::string &path, const json &body) -> json {
    httplib::Result res = method == "POST"  ? client.Post(path, body.dump(), "application/json")
                          : method == "PUT" ? client.Put(path, body.dump(), "application/json")
                                            : client.Patch(path, body.dump(), "application/json");
    if (!res || res->status >= 300) {
      throw std::runtime_error(method + " " + path + " -> " + (res ? res->body : std::string("no response")));
    }
    return json::parse(res->body);
  };
  const auto upload = [&](const std::string &base, const fs::path &file) {
    const auto bytes = read_file(file);
    auto res = client.Post(base + "/images", std::string(bytes.begin(), bytes.end()), "image/png");
    if (!res || res->status != 201) throw std::runtime_error("upload failed");
    return json::parse(res->body)["image"].get<std::string>();
  };

  std::size_t compared = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto &scene = scenes[s];
    const fs::path spec_file = work / ("scene" + std::to_string(s) + ".json");
    const fs::path out_file = work / ("cli" + std::to_string(s) + ".png");
    write_text_atomic(spec_file, scene.spec.dump(2));
    if (run_cli("render " + spec_file.string() + " -o " + out_file.string()) != 0) {
      return failed("CLI render failed for '" + scene.name + "'");
    }
    const auto cli_png = read_file(out_file);

    // The same scene driven step by step over HTTP: import, place, select, move, generate.
    const SceneSpec spec = load_scene_spec(spec_file);
    const DistanceModel model = spec.distance_model();
    const json session = call("POST", "/api/v1/sessions",
                              {{"canvas",
                                {{"width", spec.canvas.width},
                                 {"height", spec.canvas.height},
                                 {"card_radius", spec.canvas.card_radius},
                                 {"d_min", model.d_min},
                                 {"d_max", model.d_max}}}});
    const std::string base = "/api/v1/sessions/" + session["id"].get<std::string>();
    const std::string target = upload(base, spec.target);
    std::vector<std::string> refs;
    for (const auto &r : spec.references) refs.push_back(upload(base, r.path));
    call("PUT", base + "/target", {{"image", target}});
    for (std::size_t i = 0; i < spec.references.size(); ++i) {
      const auto drop = scene.first_drop.find(i);
      const Point first = drop != scene.first_drop.end() ? drop->second : *spec.references[i].position;
      call("POST", base + "/references", {{"image", refs[i]}, {"position", {first.x, first.y}}});
      call("PUT", base + "/references/" + refs[i] + "/attributes", {{"attributes", spec.references[i].attributes}});
    }
    for (const auto &[i, _] : scene.first_drop) {
      const Point to = *spec.references[i].position;
      call("PATCH", base + "/references/" + refs[i], {{"position", {to.x, to.y}}});
    }
    const json generated = call("POST", base + "/generate", json::object());
    const std::string hid = std::to_string(generated["history_entry"]["id"].get<std::uint64_t>());
    auto res = client.Get(base + "/history/" + hid + "/image");
    if (!res || res->status != 200) return failed("could not fetch HTTP result for '" + scene.name + "'");
    const std::vector<std::uint8_t> http_png(res->body.begin(), res->body.end());
    if (http_png != cli_png) return failed("'" + scene.name + "' differs between CLI and HTTP");
    ++compared;
  }
  server.stop();
  return {Outcome::pass, std::to_string(compared) + " scenes bit-identical"};
}

Outcome real_backend_smoke(const std::optional<fs::path> &assets_dir) {
  if (!assets_dir || !fs::exists(*assets_dir / "encoder.pt") || !fs::exists(*assets_dir / "generator.pt")) {
    return {Outcome::skip, "no pretrained weights installed (set REFCANVAS_ASSETS_DIR)"};
  }
  const BridgeAssets assets = BridgeAssets::in_directory(*assets_dir);
  const auto backend = open_real_backend(assets);
  std::shared_ptr<const MaskProvider> masks = std::make_shared<FixedTemplateMaskProvider>();
  if (!assets.parser.empty()) masks = std::make_shared<ParserMaskProvider>(std::make_shared<BridgeFaceParser>(backend->bridge()));
  const Engine engine(backend, masks, backend->default_registry());

  std::mt19937_64 rng(17);
  const Image face = resize_bilinear(decode_image(face_png(300)), backend->image_width(), backend->image_height());
  const Image other = resize_bilinear(decode_image(face_png(301)), backend->image_width(), backend->image_height());
  const LatentCode t = backend->encode(face);
  const LatentCode r = backend->encode(other);
  const Image target = backend->generate(t);
  const Image plain = engine.render({t, target, {}});

  const Image makeup = engine.render({t, target, {{r, engine.registry().at("makeup"), Weight(1.0)}}});
  double makeup_delta = 0.0;
  for (std::size_t i = 0; i < plain.data().size(); ++i) makeup_delta += std::fabs(makeup.data()[i] - plain.data()[i]);
  makeup_delta /= static_cast<double>(plain.data().size());
  if (makeup_delta == 0.0) return failed("makeup transfer left the image unchanged");

  const Image mouth = engine.render({t, target, {{r, engine.registry().at("mouth"), Weight(1.0)}}});
  const RegionMask m = masks->masks_for(target).at(FaceRegion::mouth);
  double inside = 0.0, outside = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t y = 0; y < plain.height(); ++y) {
    for (std::size_t x = 0; x < plain.width(); ++x) {
      for (std::size_t c = 0; c < Image::channels; ++c) {
        const double d = std::fabs(mouth.at(x, y, c) - plain.at(x, y, c));
        if (m.at(x, y) == 0.0f) {
          outside += d;
          ++n_out;
        } else {
          inside += d;
          ++n_in;
        }
      }
    }
  }
  outside /= static_cast<double>(std::max<std::size_t>(n_out, 1));
  inside /= static_cast<double>(std::max<std::size_t>(n_in, 1));
  if (inside == 0.0) return failed("mouth transfer left the mouth unchanged");
  if (outside >= kSmokeOutsideDelta) return failed("mouth transfer changed pixels outside the mouth mask");
  std::ostringstream s;
  s << "makeup delta " << makeup_delta << ", mouth inside " << inside << ", outside " << outside;
  return {Outcome::pass, s.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("refcanvas-acceptance-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

} // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  std::optional<fs::path> real_assets;
  if (const char *dir = std::getenv("REFCANVAS_ASSETS_DIR"); dir && *dir) real_assets = fs::path(dir);

  TempDir work;
  // Everything except the smoke test runs with model lookup pointed at an empty directory.
  fs::create_directories(work.path / "no-models");
  ::setenv("REFCANVAS_ASSETS_DIR", (work.path / "no-models").c_str(), 1);
  ::unsetenv("REFCANVAS_BACKEND");
  ::unsetenv("REFCANVAS_CONFIG");

  std::vector<Criterion> model_free = {
      {"weight function suite", 5, weight_suite},
      {"blend algebra suite", 10, blend_suite},
      {"composition suite", 10, composition_suite},
      {"synthetic backend oracle", 30, synthetic_oracle},
      {"local transfer locality", 30, locality},
      {"session state machine", 60, session_state_machine},
      {"history determinism", 60, [&] { return history_determinism(work.path); }},
      {"CLI/HTTP equivalence", 60, [&] { return cli_http_equivalence(work.path); }},
  };

  int failures = 0;
  bool model_free_ok = true;
  const auto report = [&](const std::string &name, double budget, const std::function<Outcome()> &fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception &e) {
      o = failed(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.kind == Outcome::pass && budget > 0 && secs > budget) {
      o = failed("over time budget; " + o.detail);
    }
    const char *tag = o.kind == Outcome::pass ? "PASS" : o.kind == Outcome::skip ? "SKIP" : "FAIL";
    std::printf("%s  %-40s %7.2fs", tag, name.c_str(), secs);
    if (budget > 0) std::printf(" (budget %.0fs)", budget);
    std::printf("  %s\n", o.detail.c_str());
    std::fflush(stdout);
    if (o.kind == Outcome::fail) ++failures;
    return o;
  };

  for (const auto &c : model_free) {
    if (report(c.name, c.budget_s, c.run).kind != Outcome::pass) model_free_ok = false;
  }
  report("runs without pretrained models", 0, [&] {
    if (!model_free_ok) return failed("a model-free criterion did not pass");
    if (fs::exists(work.path / "no-models") && !fs::is_empty(work.path / "no-models")) {
      return failed("model directory was populated");
    }
    return Outcome{Outcome::pass, "synthetic backend only; no model files present; no UI build"};
  });
  report("real backend smoke test", 0, [&] { return real_backend_smoke(real_assets); });

  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
