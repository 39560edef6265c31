#include "refcanvas/session.hpp"

#include "refcanvas/error.hpp"
#include "refcanvas/session_json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace refcanvas {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void CanvasGeometry::validate() const {
  if (!std::isfinite(width) || !std::isfinite(height) || width <= 0.0 || height <= 0.0) {
    throw Error(ErrorCode::validation, "canvas width and height must be positive", "canvas");
  }
  if (!std::isfinite(card_radius) || card_radius < 0.0) {
    throw Error(ErrorCode::validation, "card radius must be non-negative", "canvas.card_radius");
  }
}

Point CanvasGeometry::clamp(Point p) const {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw Error(ErrorCode::validation, "position must be finite", "position");
  }
  return {std::clamp(p.x, 0.0, width), std::clamp(p.y, 0.0, height)};
}

DistanceModel CanvasGeometry::default_distance_model() const {
  DistanceModel model{2.0 * card_radius, std::hypot(width, height) / 2.0};
  model.validate();
  return model;
}

CanvasState CanvasState::empty(CanvasGeometry geometry, std::optional<DistanceModel> model) {
  geometry.validate();
  CanvasState state;
  state.geometry = geometry;
  state.distance_model = model ? *model : geometry.default_distance_model();
  state.distance_model.validate();
  return state;
}

const ReferencePlacement *CanvasState::find(const ImageRef &image) const {
  auto it = std::find_if(placements.begin(), placements.end(),
                         [&](const ReferencePlacement &p) { return p.image == image; });
  return it == placements.end() ? nullptr : &*it;
}

double CanvasState::distance_of(const ReferencePlacement &placement) const {
  return distance(placement.position, target_position());
}

Weight CanvasState::weight_of(const ReferencePlacement &placement) const {
  return distance_to_weight(distance_of(placement), distance_model);
}

LineStyle line_style(Weight w) {
  constexpr int grey[3] = {0x80, 0x80, 0x80};
  constexpr int accent[3] = {0xE8, 0x55, 0x3A};
  char color[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(grey[c] + w.value() * (accent[c] - grey[c])));
  }
  std::snprintf(color, sizeof color, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return {1.0 + 5.0 * w.value(), color};
}

std::string HistoryEntry::compute_digest() const {
  nlohmann::json j;
  j["id"] = id;
  j["snapshot"] = snapshot;
  j["result_image"] = result_image.str();
  j["created_at_ms"] = created_at_ms;
  return sha256_hex(j.dump());
}

std::vector<PlannedContribution> plan_contributions(const CanvasState &state,
                                                    const AttributeRegistry &registry) {
  if (!state.target) throw Error(ErrorCode::ordering, "set a target image before generating", "target");
  std::vector<PlannedContribution> out;
  for (const auto &placement : state.placements) {
    const Weight w = state.weight_of(placement);
    if (w.value() == 0.0) continue;
    for (const auto &spec : registry.attributes()) {
      if (placement.selected_attributes.contains(spec.name)) {
        out.push_back({placement.image, spec.name, w, state.distance_of(placement)});
      }
    }
  }
  return out;
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

SessionDocument::SessionDocument(std::string id, CanvasState initial)
    : id_(std::move(id)), current_(std::move(initial)) {
  current_.geometry.validate();
  current_.distance_model.validate();
}

SessionDocument SessionDocument::restore(std::string id, CanvasState current,
                                         std::vector<CanvasState> undo,
                                         std::vector<CanvasState> redo,
                                         std::vector<HistoryEntry> history,
                                         std::uint64_t next_history_id) {
  SessionDocument doc(std::move(id), std::move(current));
  doc.undo_ = std::move(undo);
  doc.redo_ = std::move(redo);
  doc.history_ = std::move(history);
  doc.next_history_id_ = next_history_id;
  for (const auto &entry : doc.history_) {
    if (entry.id >= doc.next_history_id_) {
      throw Error(ErrorCode::validation, "history id " + std::to_string(entry.id) +
                                             " is not below the next id", "history");
    }
  }
  return doc;
}

void SessionDocument::record(CanvasState next) {
  undo_.push_back(std::move(current_));
  current_ = std::move(next);
  redo_.clear();
}

ReferencePlacement &SessionDocument::placement(const ImageRef &image, CanvasState &state) {
  auto it = std::find_if(state.placements.begin(), state.placements.end(),
                         [&](const ReferencePlacement &p) { return p.image == image; });
  if (it == state.placements.end()) {
    throw Error(ErrorCode::not_found, "image " + image.str() + " is not on the canvas", "image");
  }
  return *it;
}

void SessionDocument::set_target(const ImageRef &image) {
  CanvasState next = current_;
  next.target = image;
  record(std::move(next));
}

void SessionDocument::place_reference(const ImageRef &image, Point position) {
  if (!current_.target) {
    throw Error(ErrorCode::ordering, "set a target image before placing references", "target");
  }
  if (current_.find(image)) {
    throw Error(ErrorCode::duplicate, "image " + image.str() + " is already on the canvas", "image");
  }
  CanvasState next = current_;
  next.placements.push_back({image, next.geometry.clamp(position), {}});
  record(std::move(next));
}

void SessionDocument::move_reference(const ImageRef &image, Point position) {
  CanvasState next = current_;
  placement(image, next).position = next.geometry.clamp(position);
  record(std::move(next));
}

void SessionDocument::select_attributes(const ImageRef &image, const std::set<std::string> &names,
                                        const AttributeRegistry &registry) {
  std::string offenders;
  for (const auto &name : names) {
    if (!registry.find(name)) offenders += (offenders.empty() ? "" : ", ") + name;
  }
  if (!offenders.empty()) {
    throw Error(ErrorCode::validation, "unknown attributes: " + offenders, "attributes");
  }
  CanvasState next = current_;
  placement(image, next).selected_attributes = names;
  record(std::move(next));
}

void SessionDocument::remove_reference(const ImageRef &image) {
  CanvasState next = current_;
  auto &p = placement(image, next);
  next.placements.erase(next.placements.begin() + (&p - next.placements.data()));
  record(std::move(next));
}

bool SessionDocument::undo() {
  if (undo_.empty()) return false;
  redo_.push_back(std::move(current_));
  current_ = std::move(undo_.back());
  undo_.pop_back();
  return true;
}

bool SessionDocument::redo() {
  if (redo_.empty()) return false;
  undo_.push_back(std::move(current_));
  current_ = std::move(redo_.back());
  redo_.pop_back();
  return true;
}

void SessionDocument::reset() {
  CanvasState next = current_;
  next.placements.clear();
  record(std::move(next));
}

const HistoryEntry &SessionDocument::commit_generation(const ImageRef &result,
                                                       std::int64_t created_at_ms) {
  return commit_generation(result, current_, created_at_ms);
}

const HistoryEntry &SessionDocument::commit_generation(const ImageRef &result,
                                                       const CanvasState &rendered,
                                                       std::int64_t created_at_ms) {
  HistoryEntry entry{next_history_id_++, rendered, result, created_at_ms, {}};
  entry.digest = entry.compute_digest();
  history_.push_back(std::move(entry));
  return history_.back();
}

const HistoryEntry &SessionDocument::history_entry(std::uint64_t id) const {
  auto it = std::find_if(history_.begin(), history_.end(),
                         [&](const HistoryEntry &e) { return e.id == id; });
  if (it == history_.end()) {
    throw Error(ErrorCode::not_found, "no history entry " + std::to_string(id), "history_id");
  }
  return *it;
}

void SessionDocument::restore_history(std::uint64_t id) {
  record(history_entry(id).snapshot);
}

} // namespace refcanvas
