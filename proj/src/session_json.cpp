#include "refcanvas/session_json.hpp"

#include "refcanvas/error.hpp"

namespace refcanvas {

void to_json(nlohmann::json &j, const Point &p) { j = {{"x", p.x}, {"y", p.y}}; }
void from_json(const nlohmann::json &j, Point &p) {
  j.at("x").get_to(p.x);
  j.at("y").get_to(p.y);
}

void to_json(nlohmann::json &j, const CanvasGeometry &g) {
  j = {{"width", g.width}, {"height", g.height}, {"card_radius", g.card_radius}};
}
void from_json(const nlohmann::json &j, CanvasGeometry &g) {
  j.at("width").get_to(g.width);
  j.at("height").get_to(g.height);
  j.at("card_radius").get_to(g.card_radius);
}

void to_json(nlohmann::json &j, const DistanceModel &m) {
  j = {{"d_min", m.d_min}, {"d_max", m.d_max}};
}
void from_json(const nlohmann::json &j, DistanceModel &m) {
  j.at("d_min").get_to(m.d_min);
  j.at("d_max").get_to(m.d_max);
}

void to_json(nlohmann::json &j, const ReferencePlacement &p) {
  j = {{"image", p.image.str()}, {"position", p.position},
       {"attributes", p.selected_attributes}};
}
void from_json(const nlohmann::json &j, ReferencePlacement &p) {
  p.image = ImageRef(j.at("image").get<std::string>());
  j.at("position").get_to(p.position);
  j.at("attributes").get_to(p.selected_attributes);
}

void to_json(nlohmann::json &j, const CanvasState &s) {
  j = {{"geometry", s.geometry},
       {"distance_model", s.distance_model},
       {"target", s.target ? nlohmann::json(s.target->str()) : nlohmann::json(nullptr)},
       {"placements", s.placements}};
}
void from_json(const nlohmann::json &j, CanvasState &s) {
  j.at("geometry").get_to(s.geometry);
  j.at("distance_model").get_to(s.distance_model);
  const auto &target = j.at("target");
  s.target = target.is_null() ? std::nullopt : std::optional(ImageRef(target.get<std::string>()));
  j.at("placements").get_to(s.placements);
}

void to_json(nlohmann::json &j, const HistoryEntry &e) {
  j = {{"id", e.id},
       {"snapshot", e.snapshot},
       {"result_image", e.result_image.str()},
       {"created_at_ms", e.created_at_ms},
       {"digest", e.digest}};
}
void from_json(const nlohmann::json &j, HistoryEntry &e) {
  j.at("id").get_to(e.id);
  j.at("snapshot").get_to(e.snapshot);
  e.result_image = ImageRef(j.at("result_image").get<std::string>());
  j.at("created_at_ms").get_to(e.created_at_ms);
  j.at("digest").get_to(e.digest);
}

nlohmann::json session_to_json(const SessionDocument &doc) {
  return {{"format", "refcanvas-session"},
          {"version", 1},
          {"id", doc.id()},
          {"current", doc.current()},
          {"undo", doc.undo_stack()},
          {"redo", doc.redo_stack()},
          {"history", doc.history()},
          {"next_history_id", doc.next_history_id()}};
}

SessionDocument session_from_json(const nlohmann::json &j) {
  try {
    if (j.value("format", "") != "refcanvas-session" || j.value("version", 0) != 1) {
      throw Error(ErrorCode::validation, "not a version 1 session document", "format");
    }
    return SessionDocument::restore(j.at("id").get<std::string>(), j.at("current").get<CanvasState>(),
                                    j.at("undo").get<std::vector<CanvasState>>(),
                                    j.at("redo").get<std::vector<CanvasState>>(),
                                    j.at("history").get<std::vector<HistoryEntry>>(),
                                    j.at("next_history_id").get<std::uint64_t>());
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::validation, std::string("malformed session document: ") + e.what());
  }
}

} // namespace refcanvas
