#pragma once

#include "refcanvas/config.hpp"
#include "refcanvas/engine.hpp"
#include "refcanvas/session.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <thread>

#include <nlohmann/json.hpp>

namespace refcanvas {

enum class JobStatus { queued, running, done, failed };
std::string_view job_status_name(JobStatus status);

struct JobRecord {
  std::string id;
  JobStatus status = JobStatus::queued;
  std::int64_t submitted_at_ms = 0;
  std::int64_t finished_at_ms = 0;
  std::optional<std::uint64_t> history_id;
  std::optional<ImageRef> result_image;
  std::string error_code;
  std::string error_message;
};

void to_json(nlohmann::json &j, const JobRecord &job);
void from_json(const nlohmann::json &j, JobRecord &job);

/// Fixed-size thread pool with a FIFO queue.
class WorkerPool {
public:
  explicit WorkerPool(std::size_t threads);
  ~WorkerPool();

  WorkerPool(const WorkerPool &) = delete;
  WorkerPool &operator=(const WorkerPool &) = delete;

  void submit(std::function<void()> task);

private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::function<void()>> queue_;
  std::vector<std::thread> threads_;
  bool stopping_ = false;
};

/// Sessions, their image stores and generation jobs. Each session lives in
/// `<data_dir>/sessions/<id>/` as session.json plus a content-addressed images/
/// directory; every mutation is written through before returning. Calls on one
/// session are serialized; generation runs on the worker pool.
class SessionService {
public:
  SessionService(ServiceConfig config, std::shared_ptr<const Engine> engine);
  ~SessionService();

  SessionService(const SessionService &) = delete;
  SessionService &operator=(const SessionService &) = delete;

  const ServiceConfig &config() const { return config_; }
  const Engine &engine() const { return *engine_; }

  /// `options` may carry {"canvas": {width, height, card_radius, d_min, d_max}}.
  nlohmann::json create_session(const nlohmann::json &options = nlohmann::json::object());
  nlohmann::json session_view(const std::string &id);
  std::vector<std::string> session_ids();
  void delete_session(const std::string &id);

  /// Rejects bytes that do not decode as an image. Idempotent.
  ImageRef upload_image(const std::string &id, std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> image_bytes(const std::string &id, const ImageRef &ref);

  nlohmann::json set_target(const std::string &id, const ImageRef &image);
  nlohmann::json place_reference(const std::string &id, const ImageRef &image, Point position);
  nlohmann::json move_reference(const std::string &id, const ImageRef &image, Point position);
  nlohmann::json select_attributes(const std::string &id, const ImageRef &image,
                                   const std::set<std::string> &names);
  nlohmann::json remove_reference(const std::string &id, const ImageRef &image);
  nlohmann::json undo(const std::string &id);
  nlohmann::json redo(const std::string &id);
  nlohmann::json reset(const std::string &id);

  /// Synchronous mode waits for the job and returns {"job", "history_entry", "session"};
  /// asynchronous mode returns {"job", "session"} right after queueing.
  nlohmann::json generate(const std::string &id);
  bool async_generation() const { return config_.async_generation(); }
  nlohmann::json job_status(const std::string &id, const std::string &job_id);

  nlohmann::json list_history(const std::string &id);
  std::vector<std::uint8_t> history_image(const std::string &id, std::uint64_t history_id);
  nlohmann::json restore_history(const std::string &id, std::uint64_t history_id);

  nlohmann::json attributes() const;

private:
  struct Slot;
  using SlotPtr = std::shared_ptr<Slot>;

  SlotPtr slot(const std::string &id);
  void load_all();
  void persist(const Slot &slot) const;
  nlohmann::json view(const Slot &slot) const;
  template <class F> nlohmann::json mutate(const std::string &id, F &&edit);
  void run_job(const SlotPtr &slot, const std::string &job_id, const CanvasState &state,
               std::int64_t deadline_ms);
  JobRecord &job(Slot &slot, const std::string &job_id);

  ServiceConfig config_;
  std::shared_ptr<const Engine> engine_;
  std::filesystem::path sessions_root_;
  std::mutex sessions_mutex_;
  std::map<std::string, SlotPtr> sessions_;
  std::unique_ptr<WorkerPool> workers_;
};

/// 32 lowercase hex digits from a random device.
std::string random_id();

} // namespace refcanvas
