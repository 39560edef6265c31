#pragma once

#include "refcanvas/attributes.hpp"
#include "refcanvas/content_store.hpp"
#include "refcanvas/latent.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace refcanvas {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point &) const = default;
};

double distance(Point a, Point b);

struct CanvasGeometry {
  double width = 1000.0;
  double height = 800.0;
  /// Radius of the target and reference cards, canvas units.
  double card_radius = 80.0;

  void validate() const;
  Point center() const { return {width / 2.0, height / 2.0}; }
  Point clamp(Point p) const;
  /// d_min: target and reference cards touching; d_max: half the canvas diagonal.
  DistanceModel default_distance_model() const;

  bool operator==(const CanvasGeometry &) const = default;
};

struct ReferencePlacement {
  ImageRef image;
  Point position;
  std::set<std::string> selected_attributes;

  bool operator==(const ReferencePlacement &) const = default;
};

/// The whole mutable workspace. The target, when present, sits at the canvas centre.
struct CanvasState {
  CanvasGeometry geometry;
  DistanceModel distance_model;
  std::optional<ImageRef> target;
  std::vector<ReferencePlacement> placements;

  static CanvasState empty(CanvasGeometry geometry,
                           std::optional<DistanceModel> model = std::nullopt);

  Point target_position() const { return geometry.center(); }
  const ReferencePlacement *find(const ImageRef &image) const;
  double distance_of(const ReferencePlacement &placement) const;
  /// Derived, never stored: a pure function of geometry.
  Weight weight_of(const ReferencePlacement &placement) const;

  bool operator==(const CanvasState &) const = default;
};

/// Connection-line appearance for a weight: thickness 1 + 5w, colour from grey
/// (w = 0) to the accent colour (w = 1), as "#rrggbb".
struct LineStyle {
  double thickness = 1.0;
  std::string color;
};
LineStyle line_style(Weight w);

struct HistoryEntry {
  std::uint64_t id = 0;
  CanvasState snapshot;
  ImageRef result_image;
  std::int64_t created_at_ms = 0;
  /// SHA-256 over id, snapshot, result and timestamp, fixed at commit time.
  std::string digest;

  std::string compute_digest() const;
  bool operator==(const HistoryEntry &) const = default;
};

struct PlannedContribution {
  ImageRef image;
  std::string attribute;
  Weight weight;
  double distance = 0.0;
};

/// One entry per (placement, selected attribute) with weight > 0, in placement
/// order then registry order. Throws ErrorCode::ordering without a target.
std::vector<PlannedContribution> plan_contributions(const CanvasState &state,
                                                    const AttributeRegistry &registry);

std::int64_t now_ms();

/// Workspace state machine with undo/redo stacks and generation history.
/// Every edit pushes the previous state onto the undo stack and clears the redo stack.
class SessionDocument {
public:
  SessionDocument(std::string id, CanvasState initial);

  /// Rebuilds a document from persisted parts.
  static SessionDocument restore(std::string id, CanvasState current,
                                 std::vector<CanvasState> undo, std::vector<CanvasState> redo,
                                 std::vector<HistoryEntry> history, std::uint64_t next_history_id);

  const std::string &id() const { return id_; }
  const CanvasState &current() const { return current_; }
  const std::vector<CanvasState> &undo_stack() const { return undo_; }
  const std::vector<CanvasState> &redo_stack() const { return redo_; }
  const std::vector<HistoryEntry> &history() const { return history_; }
  std::uint64_t next_history_id() const { return next_history_id_; }
  bool can_undo() const { return !undo_.empty(); }
  bool can_redo() const { return !redo_.empty(); }

  void set_target(const ImageRef &image);
  /// Position is clamped into the canvas.
  void place_reference(const ImageRef &image, Point position);
  /// One call per completed drag.
  void move_reference(const ImageRef &image, Point position);
  void select_attributes(const ImageRef &image, const std::set<std::string> &names,
                         const AttributeRegistry &registry);
  void remove_reference(const ImageRef &image);
  /// No-op (returns false) on an empty stack.
  bool undo();
  bool redo();
  /// Clears placements and keeps the target; undoable.
  void reset();

  const HistoryEntry &commit_generation(const ImageRef &result, std::int64_t created_at_ms = now_ms());
  /// Commits against the state the result was rendered from, which may differ from
  /// current() when generation ran asynchronously.
  const HistoryEntry &commit_generation(const ImageRef &result, const CanvasState &rendered,
                                        std::int64_t created_at_ms);
  const HistoryEntry &history_entry(std::uint64_t id) const;
  /// Replaces the current state with a copy of the entry's snapshot; undoable.
  void restore_history(std::uint64_t id);

  bool operator==(const SessionDocument &) const = default;

private:
  void record(CanvasState next);
  ReferencePlacement &placement(const ImageRef &image, CanvasState &state);

  std::string id_;
  CanvasState current_;
  std::vector<CanvasState> undo_;
  std::vector<CanvasState> redo_;
  std::vector<HistoryEntry> history_;
  std::uint64_t next_history_id_ = 1;
};

} // namespace refcanvas
