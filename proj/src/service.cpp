#include "refcanvas/service.hpp"

#include "refcanvas/error.hpp"
#include "refcanvas/image_io.hpp"
#include "refcanvas/session_json.hpp"

#include <cstdio>
#include <random>

#include <spdlog/spdlog.h>

namespace refcanvas {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view job_status_name(JobStatus status) {
  switch (status) {
  case JobStatus::queued: return "queued";
  case JobStatus::running: return "running";
  case JobStatus::done: return "done";
  case JobStatus::failed: return "failed";
  }
  return "failed";
}

namespace {

JobStatus parse_job_status(const std::string &s) {
  for (JobStatus st : {JobStatus::queued, JobStatus::running, JobStatus::done, JobStatus::failed}) {
    if (job_status_name(st) == s) return st;
  }
  throw Error(ErrorCode::validation, "unknown job status '" + s + "'", "jobs");
}

bool finished(JobStatus s) { return s == JobStatus::done || s == JobStatus::failed; }

} // namespace

void to_json(json &j, const JobRecord &job) {
  j = json{{"id", job.id},
           {"status", job_status_name(job.status)},
           {"submitted_at_ms", job.submitted_at_ms},
           {"finished_at_ms", job.finished_at_ms},
           {"history_id", job.history_id ? json(*job.history_id) : json(nullptr)},
           {"result_image", job.result_image ? json(job.result_image->str()) : json(nullptr)}};
  if (job.status == JobStatus::failed) {
    j["error"] = {{"code", job.error_code}, {"message", job.error_message}};
  }
}

void from_json(const json &j, JobRecord &job) {
  job.id = j.at("id").get<std::string>();
  job.status = parse_job_status(j.at("status").get<std::string>());
  job.submitted_at_ms = j.at("submitted_at_ms").get<std::int64_t>();
  job.finished_at_ms = j.at("finished_at_ms").get<std::int64_t>();
  job.history_id.reset();
  job.result_image.reset();
  if (!j.at("history_id").is_null()) job.history_id = j["history_id"].get<std::uint64_t>();
  if (!j.at("result_image").is_null()) job.result_image = ImageRef(j["result_image"].get<std::string>());
  if (auto it = j.find("error"); it != j.end()) {
    job.error_code = it->at("code").get<std::string>();
    job.error_message = it->at("message").get<std::string>();
  }
}

WorkerPool::WorkerPool(std::size_t threads) {
  for (std::size_t i = 0; i < std::max<std::size_t>(threads, 1); ++i) {
    threads_.emplace_back([this] {
      for (;;) {
        std::function<void()> task;
        {
          std::unique_lock lock(mutex_);
          ready_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
          if (stopping_) return;
          task = std::move(queue_.front());
          queue_.pop_front();
        }
        task();
      }
    });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  ready_.notify_all();
  for (auto &t : threads_) t.join();
}

void WorkerPool::submit(std::function<void()> task) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(task));
  }
  ready_.notify_one();
}

std::string random_id() {
  std::random_device rd;
  std::string out;
  char buf[9];
  for (int i = 0; i < 4; ++i) {
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(rd()));
    out += buf;
  }
  return out;
}

struct SessionService::Slot {
  Slot(fs::path d, SessionDocument document)
      : dir(std::move(d)), store(dir / "images"), doc(std::move(document)) {}

  std::mutex mutex;
  std::condition_variable job_changed;
  fs::path dir;
  ImageStore store;
  SessionDocument doc;
  std::vector<JobRecord> jobs;
  bool deleted = false;
};

SessionService::SessionService(ServiceConfig config, std::shared_ptr<const Engine> engine)
    : config_(std::move(config)), engine_(std::move(engine)),
      sessions_root_(config_.data_dir / "sessions") {
  std::error_code ec;
  fs::create_directories(sessions_root_, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + sessions_root_.string() + ": " + ec.message());
  load_all();
  workers_ = std::make_unique<WorkerPool>(config_.worker_count());
}

SessionService::~SessionService() { workers_.reset(); }

void SessionService::load_all() {
  for (const auto &entry : fs::directory_iterator(sessions_root_)) {
    const fs::path file = entry.path() / "session.json";
    if (!entry.is_directory() || !fs::exists(file)) continue;
    try {
      const auto bytes = read_file(file);
      const json j = json::parse(bytes.begin(), bytes.end());
      auto slot = std::make_shared<Slot>(entry.path(), session_from_json(j.at("document")));
      bool interrupted = false;
      for (const auto &item : j.at("jobs")) {
        JobRecord job = item.get<JobRecord>();
        if (!finished(job.status)) {
          job.status = JobStatus::failed;
          job.error_code = std::string(code_name(ErrorCode::generation));
          job.error_message = "interrupted by a service restart";
          interrupted = true;
        }
        slot->jobs.push_back(std::move(job));
      }
      if (slot->doc.id() != entry.path().filename().string()) {
        throw Error(ErrorCode::validation, "session id does not match its directory");
      }
      if (interrupted) persist(*slot);
      sessions_.emplace(slot->doc.id(), std::move(slot));
    } catch (const std::exception &e) {
      spdlog::warn("skipping unreadable session {}: {}", entry.path().string(), e.what());
    }
  }
  spdlog::info("loaded {} session(s) from {}", sessions_.size(), sessions_root_.string());
}

void SessionService::persist(const Slot &slot) const {
  if (slot.deleted) return;
  json j = {{"document", session_to_json(slot.doc)}, {"jobs", slot.jobs}};
  write_text_atomic(slot.dir / "session.json", j.dump());
}

SessionService::SlotPtr SessionService::slot(const std::string &id) {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "no session '" + id + "'", "session");
  return it->second;
}

json SessionService::view(const Slot &slot) const {
  const CanvasState &s = slot.doc.current();
  const auto &registry = engine_->registry();
  json placements = json::array();
  for (const auto &p : s.placements) {
    const Weight w = s.weight_of(p);
    const LineStyle line = line_style(w);
    json attrs = json::array();
    json attr_weights = json::object();
    for (const auto &spec : registry.attributes()) {
      if (p.selected_attributes.contains(spec.name)) {
        attrs.push_back(spec.name);
        attr_weights[spec.name] = w.value();
      }
    }
    placements.push_back({{"image", p.image.str()},
                          {"position", p.position},
                          {"distance", s.distance_of(p)},
                          {"weight", w.value()},
                          {"line", {{"thickness", line.thickness}, {"color", line.color}}},
                          {"attributes", attrs},
                          {"attribute_weights", attr_weights}});
  }
  json history = json::array();
  for (const auto &e : slot.doc.history()) {
    history.push_back({{"id", e.id},
                       {"result_image", e.result_image.str()},
                       {"created_at_ms", e.created_at_ms},
                       {"digest", e.digest}});
  }
  return {{"id", slot.doc.id()},
          {"canvas", s.geometry},
          {"distance_model", s.distance_model},
          {"target", s.target ? json(s.target->str()) : json(nullptr)},
          {"target_position", s.target_position()},
          {"placements", placements},
          {"can_undo", slot.doc.can_undo()},
          {"can_redo", slot.doc.can_redo()},
          {"history", history},
          {"jobs", slot.jobs},
          {"backend", engine_->backend().name()},
          {"generation", config_.async_generation() ? "async" : "sync"}};
}

json SessionService::create_session(const json &options) {
  CanvasGeometry geometry = config_.canvas;
  std::optional<double> d_min = config_.d_min, d_max = config_.d_max;
  try {
    if (!options.is_null() && !options.is_object()) {
      throw Error(ErrorCode::validation, "session options must be an object");
    }
    if (options.is_object() && options.contains("canvas")) {
      const json &c = options.at("canvas");
      if (!c.is_object()) throw Error(ErrorCode::validation, "canvas must be an object", "canvas");
      if (c.contains("width")) geometry.width = c.at("width").get<double>();
      if (c.contains("height")) geometry.height = c.at("height").get<double>();
      if (c.contains("card_radius")) geometry.card_radius = c.at("card_radius").get<double>();
      if (c.contains("d_min")) d_min = c.at("d_min").get<double>();
      if (c.contains("d_max")) d_max = c.at("d_max").get<double>();
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::validation, std::string("bad canvas options: ") + e.what(), "canvas");
  }
  geometry.validate();
  DistanceModel model;
  try {
    model = geometry.default_distance_model();
    if (d_min) model.d_min = *d_min;
    if (d_max) model.d_max = *d_max;
    model.validate();
  } catch (const Error &e) {
    throw Error(ErrorCode::validation, e.what(), "canvas.d_min");
  }

  const std::string id = random_id();
  const fs::path dir = sessions_root_ / id;
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
  auto s = std::make_shared<Slot>(dir, SessionDocument(id, CanvasState::empty(geometry, model)));
  std::lock_guard slot_lock(s->mutex);
  persist(*s);
  {
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace(id, s);
  }
  return view(*s);
}

json SessionService::session_view(const std::string &id) {
  auto s = slot(id);
  std::lock_guard lock(s->mutex);
  return view(*s);
}

std::vector<std::string> SessionService::session_ids() {
  std::lock_guard lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto &[id, _] : sessions_) ids.push_back(id);
  return ids;
}

void SessionService::delete_session(const std::string &id) {
  SlotPtr s;
  {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::not_found, "no session '" + id + "'", "session");
    s = it->second;
    sessions_.erase(it);
  }
  std::lock_guard lock(s->mutex);
  s->deleted = true;
  s->job_changed.notify_all();
  std::error_code ec;
  fs::remove_all(s->dir, ec);
  if (ec) spdlog::warn("could not remove {}: {}", s->dir.string(), ec.message());
}

ImageRef SessionService::upload_image(const std::string &id, std::span<const std::uint8_t> bytes) {
  auto s = slot(id);
  decode_image(bytes);
  std::lock_guard lock(s->mutex);
  return s->store.put(bytes);
}

std::vector<std::uint8_t> SessionService::image_bytes(const std::string &id, const ImageRef &ref) {
  auto s = slot(id);
  return s->store.get(ref);
}

template <class F> json SessionService::mutate(const std::string &id, F &&edit) {
  auto s = slot(id);
  std::lock_guard lock(s->mutex);
  edit(*s);
  persist(*s);
  return view(*s);
}

namespace {

void require_image(const ImageStore &store, const ImageRef &ref) {
  if (!store.contains(ref)) {
    throw Error(ErrorCode::not_found, "image " + ref.str() + " has not been uploaded", "image");
  }
}

} // namespace

json SessionService::set_target(const std::string &id, const ImageRef &image) {
  return mutate(id, [&](Slot &s) {
    require_image(s.store, image);
    s.doc.set_target(image);
  });
}

json SessionService::place_reference(const std::string &id, const ImageRef &image, Point position) {
  return mutate(id, [&](Slot &s) {
    require_image(s.store, image);
    s.doc.place_reference(image, position);
  });
}

json SessionService::move_reference(const std::string &id, const ImageRef &image, Point position) {
  return mutate(id, [&](Slot &s) { s.doc.move_reference(image, position); });
}

json SessionService::select_attributes(const std::string &id, const ImageRef &image,
                                       const std::set<std::string> &names) {
  return mutate(id, [&](Slot &s) { s.doc.select_attributes(image, names, engine_->registry()); });
}

json SessionService::remove_reference(const std::string &id, const ImageRef &image) {
  return mutate(id, [&](Slot &s) { s.doc.remove_reference(image); });
}

json SessionService::undo(const std::string &id) {
  return mutate(id, [](Slot &s) { s.doc.undo(); });
}

json SessionService::redo(const std::string &id) {
  return mutate(id, [](Slot &s) { s.doc.redo(); });
}

json SessionService::reset(const std::string &id) {
  return mutate(id, [](Slot &s) { s.doc.reset(); });
}

JobRecord &SessionService::job(Slot &s, const std::string &job_id) {
  for (auto &j : s.jobs) {
    if (j.id == job_id) return j;
  }
  throw Error(ErrorCode::not_found, "no job '" + job_id + "'", "job");
}

void SessionService::run_job(const SlotPtr &s, const std::string &job_id, const CanvasState &state,
                             std::int64_t deadline_ms) {
  const auto fail = [&](const std::string &code, const std::string &message) {
    std::lock_guard lock(s->mutex);
    if (s->deleted) return;
    JobRecord &j = job(*s, job_id);
    j.status = JobStatus::failed;
    j.error_code = code;
    j.error_message = message;
    j.finished_at_ms = now_ms();
    spdlog::warn("job {} failed: {}", job_id, message);
    try {
      persist(*s);
    } catch (const std::exception &e) {
      spdlog::error("cannot persist session {}: {}", s->doc.id(), e.what());
    }
    s->job_changed.notify_all();
  };
  const std::string timeout_code(code_name(ErrorCode::timeout));
  const std::string timeout_message = "generation exceeded " +
                                      std::to_string(config_.generation_timeout().count()) + " ms";
  {
    std::lock_guard lock(s->mutex);
    if (s->deleted) return;
    if (now_ms() <= deadline_ms) {
      job(*s, job_id).status = JobStatus::running;
      persist(*s);
      s->job_changed.notify_all();
    }
  }
  if (now_ms() > deadline_ms) return fail(timeout_code, timeout_message);

  std::vector<std::uint8_t> png;
  try {
    const Image result = engine_->render(engine_->build_transfer_request(state, s->store));
    png = encode_png(result);
  } catch (const Error &e) {
    return fail(std::string(code_name(e.code())), e.what());
  } catch (const std::exception &e) {
    return fail(std::string(code_name(ErrorCode::generation)), e.what());
  }
  if (now_ms() > deadline_ms) return fail(timeout_code, timeout_message);

  std::lock_guard lock(s->mutex);
  if (s->deleted) return;
  try {
    const ImageRef ref = s->store.put(png);
    const HistoryEntry &entry = s->doc.commit_generation(ref, state, now_ms());
    JobRecord &j = job(*s, job_id);
    j.status = JobStatus::done;
    j.history_id = entry.id;
    j.result_image = ref;
    j.finished_at_ms = now_ms();
    persist(*s);
  } catch (const std::exception &e) {
    JobRecord &j = job(*s, job_id);
    j.status = JobStatus::failed;
    j.error_code = std::string(code_name(ErrorCode::io));
    j.error_message = e.what();
    j.finished_at_ms = now_ms();
  }
  s->job_changed.notify_all();
}

json SessionService::generate(const std::string &id) {
  auto s = slot(id);
  const auto timeout = config_.generation_timeout();
  std::unique_lock lock(s->mutex);
  const CanvasState state = s->doc.current();
  plan_contributions(state, engine_->registry());

  JobRecord record;
  record.id = random_id();
  record.submitted_at_ms = now_ms();
  const std::string job_id = record.id;
  const std::int64_t deadline = record.submitted_at_ms + timeout.count();
  s->jobs.push_back(record);
  persist(*s);
  workers_->submit([this, s, job_id, state, deadline] { run_job(s, job_id, state, deadline); });

  if (config_.async_generation()) return {{"job", job(*s, job_id)}, {"session", view(*s)}};

  const bool completed = s->job_changed.wait_until(
      lock, std::chrono::steady_clock::now() + timeout + std::chrono::milliseconds(50), [&] {
        return s->deleted || finished(job(*s, job_id).status);
      });
  if (s->deleted) throw Error(ErrorCode::not_found, "session was deleted during generation", "session");
  if (!completed) {
    throw Error(ErrorCode::timeout, "generation exceeded " + std::to_string(timeout.count()) + " ms");
  }
  const JobRecord &done = job(*s, job_id);
  if (done.status == JobStatus::failed) {
    ErrorCode code = ErrorCode::generation;
    for (int c = 0; c <= static_cast<int>(ErrorCode::io); ++c) {
      if (code_name(static_cast<ErrorCode>(c)) == done.error_code) code = static_cast<ErrorCode>(c);
    }
    throw Error(code, done.error_message);
  }
  const HistoryEntry &entry = s->doc.history_entry(*done.history_id);
  return {{"job", done},
          {"history_entry",
           {{"id", entry.id},
            {"result_image", entry.result_image.str()},
            {"created_at_ms", entry.created_at_ms},
            {"digest", entry.digest}}},
          {"session", view(*s)}};
}

json SessionService::job_status(const std::string &id, const std::string &job_id) {
  auto s = slot(id);
  std::lock_guard lock(s->mutex);
  return job(*s, job_id);
}

json SessionService::list_history(const std::string &id) {
  auto s = slot(id);
  std::lock_guard lock(s->mutex);
  return s->doc.history();
}

std::vector<std::uint8_t> SessionService::history_image(const std::string &id, std::uint64_t history_id) {
  auto s = slot(id);
  ImageRef ref;
  {
    std::lock_guard lock(s->mutex);
    ref = s->doc.history_entry(history_id).result_image;
  }
  return s->store.get(ref);
}

json SessionService::restore_history(const std::string &id, std::uint64_t history_id) {
  return mutate(id, [&](Slot &s) { s.doc.restore_history(history_id); });
}

json SessionService::attributes() const {
  const auto &registry = engine_->registry();
  json list = json::array();
  for (const auto &spec : registry.attributes()) {
    json item = {{"name", spec.name}, {"mode", mode_name(spec.mode)}};
    if (spec.layer_group) item["layers"] = spec.layer_group->indices();
    if (spec.region) item["region"] = region_name(*spec.region);
    list.push_back(item);
  }
  return {{"attributes", list}, {"local_layer_group", registry.local_layer_group().indices()}};
}

} // namespace refcanvas
