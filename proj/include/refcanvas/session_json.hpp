#pragma once

#include "refcanvas/session.hpp"

#include <nlohmann/json.hpp>

// Structured-text form of session documents. Doubles round-trip exactly.
namespace refcanvas {

void to_json(nlohmann::json &j, const Point &p);
void from_json(const nlohmann::json &j, Point &p);
void to_json(nlohmann::json &j, const CanvasGeometry &g);
void from_json(const nlohmann::json &j, CanvasGeometry &g);
void to_json(nlohmann::json &j, const DistanceModel &m);
void from_json(const nlohmann::json &j, DistanceModel &m);
void to_json(nlohmann::json &j, const ReferencePlacement &p);
void from_json(const nlohmann::json &j, ReferencePlacement &p);
void to_json(nlohmann::json &j, const CanvasState &s);
void from_json(const nlohmann::json &j, CanvasState &s);
void to_json(nlohmann::json &j, const HistoryEntry &e);
void from_json(const nlohmann::json &j, HistoryEntry &e);

nlohmann::json session_to_json(const SessionDocument &doc);
/// Throws ErrorCode::validation on malformed documents.
SessionDocument session_from_json(const nlohmann::json &j);

} // namespace refcanvas
