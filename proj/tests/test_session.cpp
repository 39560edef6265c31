#include "doctest.h"
#include "test_util.hpp"

#include "refcanvas/error.hpp"
#include "refcanvas/session.hpp"
#include "refcanvas/session_json.hpp"

using namespace refcanvas;

namespace {

ImageRef ref_of(int n) { return ImageRef(sha256_hex("image-" + std::to_string(n))); }

CanvasState square_canvas() {
  // Target at (500, 500); d_min 0, d_max 100 keeps the arithmetic round.
  return CanvasState::empty({1000, 1000, 40}, DistanceModel{0.0, 100.0});
}

ErrorCode code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::io;
}

} // namespace

TEST_CASE("target replacement is undoable") {
  SessionDocument doc("s", square_canvas());
  doc.set_target(ref_of(1));
  doc.set_target(ref_of(2));
  CHECK(doc.current().target == ref_of(2));
  REQUIRE(doc.undo());
  CHECK(doc.current().target == ref_of(1));
  REQUIRE(doc.redo());
  CHECK(doc.current().target == ref_of(2));
  CHECK_FALSE(doc.redo());
}

TEST_CASE("weights follow placement distance") {
  SessionDocument doc("s", square_canvas());
  doc.set_target(ref_of(0));
  doc.place_reference(ref_of(1), {575, 500});
  const auto weight = [&] { return doc.current().weight_of(doc.current().placements[0]).value(); };
  CHECK(weight() == doctest::Approx(0.25).epsilon(1e-12));
  doc.move_reference(ref_of(1), {500, 525});
  CHECK(weight() == doctest::Approx(0.75).epsilon(1e-12));
  doc.move_reference(ref_of(1), {600, 500});
  CHECK(weight() == 0.0);
  doc.move_reference(ref_of(1), {500, 500});
  CHECK(weight() == 1.0);
  doc.undo();
  CHECK(weight() == 0.0);
}

TEST_CASE("default distance model uses card contact and the half diagonal") {
  const auto state = CanvasState::empty({1000, 800, 80});
  CHECK(state.distance_model.d_min == 160.0);
  CHECK(state.distance_model.d_max == doctest::Approx(std::hypot(1000.0, 800.0) / 2));
  CHECK(state.target_position() == Point{500, 400});
  SessionDocument doc("s", state);
  doc.set_target(ref_of(0));
  doc.place_reference(ref_of(1), {660, 400});
  CHECK(doc.current().weight_of(doc.current().placements[0]).value() == 1.0);
  doc.move_reference(ref_of(1), {1000, 800});
  CHECK(doc.current().weight_of(doc.current().placements[0]).value() == 0.0);
}

TEST_CASE("positions are clamped into the canvas") {
  SessionDocument doc("s", square_canvas());
  doc.set_target(ref_of(0));
  doc.place_reference(ref_of(1), {-50, 2000});
  CHECK(doc.current().placements[0].position == Point{0, 1000});
  CHECK(code_of([&] { doc.move_reference(ref_of(1), {NAN, 0}); }) == ErrorCode::validation);
}

TEST_CASE("invalid edits leave the document untouched") {
  SessionDocument doc("s", square_canvas());
  const AttributeRegistry registry = AttributeRegistry::standard();
  CHECK(code_of([&] { doc.place_reference(ref_of(1), {0, 0}); }) == ErrorCode::ordering);
  doc.set_target(ref_of(0));
  doc.place_reference(ref_of(1), {0, 0});
  const SessionDocument before = doc;
  CHECK(code_of([&] { doc.place_reference(ref_of(1), {10, 10}); }) == ErrorCode::duplicate);
  CHECK(code_of([&] { doc.move_reference(ref_of(9), {10, 10}); }) == ErrorCode::not_found);
  CHECK(code_of([&] { doc.remove_reference(ref_of(9)); }) == ErrorCode::not_found);
  try {
    doc.select_attributes(ref_of(1), {"age", "freckles", "tattoo"}, registry);
    FAIL("expected validation error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::validation);
    CHECK(std::string(e.what()).find("freckles, tattoo") != std::string::npos);
  }
  CHECK(code_of([&] { doc.restore_history(3); }) == ErrorCode::not_found);
  CHECK(doc == before);
  CHECK(code_of([&] { plan_contributions(square_canvas(), registry); }) == ErrorCode::ordering);
}

TEST_CASE("undo and redo on empty stacks are no-ops") {
  SessionDocument doc("s", square_canvas());
  const SessionDocument before = doc;
  CHECK_FALSE(doc.undo());
  CHECK_FALSE(doc.redo());
  CHECK(doc == before);
}

TEST_CASE("reset clears placements, keeps target and history, and is undoable") {
  const AttributeRegistry registry = AttributeRegistry::standard();
  SessionDocument doc("s", square_canvas());
  doc.set_target(ref_of(0));
  doc.place_reference(ref_of(1), {520, 500});
  doc.select_attributes(ref_of(1), {"mouth"}, registry);
  doc.commit_generation(ref_of(50), 1000);
  const CanvasState before = doc.current();
  doc.reset();
  CHECK(doc.current().placements.empty());
  CHECK(doc.current().target == ref_of(0));
  CHECK(doc.history().size() == 1);
  doc.undo();
  CHECK(doc.current() == before);
}

TEST_CASE("history snapshots are immutable and restorable") {
  const AttributeRegistry registry = AttributeRegistry::standard();
  SessionDocument doc("s", square_canvas());
  doc.set_target(ref_of(0));
  doc.place_reference(ref_of(1), {520, 500});
  const auto &first = doc.commit_generation(ref_of(50), 1000);
  CHECK(first.id == 1);
  const HistoryEntry saved = first;
  CHECK(saved.digest == saved.compute_digest());
  CHECK(saved.digest.size() == 64);

  doc.move_reference(ref_of(1), {900, 900});
  doc.place_reference(ref_of(2), {500, 510});
  doc.commit_generation(ref_of(51), 2000);
  CHECK(doc.history_entry(1) == saved);
  CHECK(doc.history_entry(2).id == 2);

  const CanvasState edited = doc.current();
  doc.restore_history(1);
  CHECK(doc.current() == saved.snapshot);
  CHECK(doc.history().size() == 2);
  doc.undo();
  CHECK(doc.current() == edited);
  CHECK(doc.history_entry(1) == saved);

  HistoryEntry tampered = saved;
  tampered.snapshot.placements[0].position.x += 1;
  CHECK(tampered.compute_digest() != saved.digest);
}

TEST_CASE("commit binds the rendered state") {
  SessionDocument doc("s", square_canvas());
  doc.set_target(ref_of(0));
  const CanvasState rendered = doc.current();
  doc.place_reference(ref_of(1), {0, 0});
  const auto &entry = doc.commit_generation(ref_of(7), rendered, 5);
  CHECK(entry.snapshot == rendered);
  CHECK(entry.snapshot != doc.current());
}

TEST_CASE("plan lists weighted attributes in placement then registry order") {
  const AttributeRegistry registry = AttributeRegistry::standard();
  SessionDocument doc("s", square_canvas());
  doc.set_target(ref_of(0));
  doc.place_reference(ref_of(2), {550, 500});
  doc.place_reference(ref_of(1), {500, 525});
  doc.place_reference(ref_of(3), {900, 900});
  doc.select_attributes(ref_of(2), {"mouth", "age"}, registry);
  doc.select_attributes(ref_of(1), {"hair", "eyes", "makeup"}, registry);
  doc.select_attributes(ref_of(3), {"nose"}, registry);
  const auto plan = plan_contributions(doc.current(), registry);
  REQUIRE(plan.size() == 5);
  const std::vector<std::string> names = {"age", "mouth", "makeup", "eyes", "hair"};
  for (std::size_t i = 0; i < plan.size(); ++i) CHECK(plan[i].attribute == names[i]);
  CHECK(plan[0].image == ref_of(2));
  CHECK(plan[0].weight.value() == doctest::Approx(0.5));
  CHECK(plan[2].image == ref_of(1));
  CHECK(plan[2].distance == doctest::Approx(25.0));
}

TEST_CASE("line style tracks weight") {
  CHECK(line_style(Weight(0)).thickness == 1.0);
  CHECK(line_style(Weight(0)).color == "#808080");
  CHECK(line_style(Weight(1)).thickness == 6.0);
  CHECK(line_style(Weight(1)).color == "#e8553a");
  CHECK(line_style(Weight(0.5)).thickness == 3.5);
}

namespace {

// Applies one random edit to `doc`; returns whether the edit was accepted.
bool random_edit(SessionDocument &doc, std::mt19937_64 &rng, const AttributeRegistry &registry) {
  const auto pick = [&](int n) { return static_cast<int>(rng() % n); };
  const Point p{static_cast<double>(pick(1200)) - 100, static_cast<double>(pick(1200)) - 100};
  try {
    switch (pick(6)) {
    case 0: doc.set_target(ref_of(pick(4))); break;
    case 1: doc.place_reference(ref_of(10 + pick(6)), p); break;
    case 2: doc.move_reference(ref_of(10 + pick(6)), p); break;
    case 3: {
      std::set<std::string> names;
      for (const auto &name : registry.names()) {
        if (pick(3) == 0) names.insert(name);
      }
      doc.select_attributes(ref_of(10 + pick(6)), names, registry);
      break;
    }
    case 4: doc.remove_reference(ref_of(10 + pick(6))); break;
    default: doc.reset(); break;
    }
    return true;
  } catch (const Error &) {
    return false;
  }
}

} // namespace

TEST_CASE("randomized edit/undo/redo sequences match a timeline model") {
  const AttributeRegistry registry = AttributeRegistry::standard();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    SessionDocument doc("s", square_canvas());
    std::vector<CanvasState> timeline{doc.current()};
    std::size_t cursor = 0;
    for (int op = 0; op < 1000; ++op) {
      const int kind = static_cast<int>(rng() % 10);
      if (kind < 2) {
        CHECK(doc.undo() == (cursor > 0));
        if (cursor > 0) --cursor;
      } else if (kind < 4) {
        CHECK(doc.redo() == (cursor + 1 < timeline.size()));
        if (cursor + 1 < timeline.size()) ++cursor;
      } else {
        const SessionDocument before = doc;
        if (random_edit(doc, rng, registry)) {
          timeline.resize(cursor + 1);
          timeline.push_back(doc.current());
          ++cursor;
        } else {
          REQUIRE(doc == before);
        }
      }
      REQUIRE(doc.current() == timeline[cursor]);
      REQUIRE(doc.can_undo() == (cursor > 0));
      REQUIRE(doc.can_redo() == (cursor + 1 < timeline.size()));
      REQUIRE(doc.undo_stack().size() == cursor);
      if (op % 97 == 0) doc.commit_generation(ref_of(100 + op), op);
    }
    const SessionDocument back = session_from_json(nlohmann::json::parse(session_to_json(doc).dump()));
    REQUIRE(back == doc);
  }
}

TEST_CASE("session serialization round-trips exactly") {
  const AttributeRegistry registry = AttributeRegistry::standard();
  SessionDocument doc("abc", CanvasState::empty({1000, 800, 80}));
  doc.set_target(ref_of(0));
  doc.place_reference(ref_of(1), {123.456789012345, 0.1 + 0.2});
  doc.select_attributes(ref_of(1), {"age", "hair"}, registry);
  doc.commit_generation(ref_of(5), 1234567890123);
  doc.undo();
  const auto j = session_to_json(doc);
  CHECK(j["format"] == "refcanvas-session");
  CHECK(session_from_json(nlohmann::json::parse(j.dump())) == doc);

  auto broken = j;
  broken["history"][0]["id"] = 99;
  CHECK(code_of([&] { session_from_json(broken); }) == ErrorCode::validation);
  CHECK(code_of([&] { session_from_json(nlohmann::json{{"format", "other"}}); }) ==
        ErrorCode::validation);
  CHECK(code_of([&] { session_from_json(nlohmann::json::array()); }) == ErrorCode::validation);
}
