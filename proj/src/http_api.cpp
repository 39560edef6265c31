#include "refcanvas/http_api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace refcanvas {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
  case ErrorCode::validation:
  case ErrorCode::input:
  case ErrorCode::mode:
  case ErrorCode::shape_mismatch:
  case ErrorCode::numeric:
  case ErrorCode::config: return 400;
  case ErrorCode::not_found: return 404;
  case ErrorCode::ordering:
  case ErrorCode::duplicate:
  case ErrorCode::output_exists: return 409;
  case ErrorCode::mask:
  case ErrorCode::io: return 500;
  case ErrorCode::generation: return 502;
  case ErrorCode::backend_unavailable: return 503;
  case ErrorCode::timeout: return 504;
  }
  return 500;
}

json api_error_body(const Error &error) {
  return {{"error",
           {{"code", code_name(error.code())},
            {"message", error.what()},
            {"field", error.field().empty() ? json(nullptr) : json(error.field())}}}};
}

namespace {

void send_json(httplib::Response &res, const json &body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json body_of(const httplib::Request &req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::validation, "request body must be a JSON object", "body");
    return j;
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::validation, std::string("request body is not valid JSON: ") + e.what(), "body");
  }
}

template <class T> T field_as(const json &body, const char *name) {
  auto it = body.find(name);
  if (it == body.end()) throw Error(ErrorCode::validation, std::string(name) + " is required", name);
  try {
    return it->get<T>();
  } catch (const json::exception &) {
    throw Error(ErrorCode::validation, std::string(name) + " has the wrong type", name);
  }
}

ImageRef image_field(const json &body) {
  try {
    return ImageRef(field_as<std::string>(body, "image"));
  } catch (const Error &e) {
    throw Error(ErrorCode::validation, e.what(), "image");
  }
}

Point position_field(const json &body) {
  auto it = body.find("position");
  if (it == body.end()) throw Error(ErrorCode::validation, "position is required", "position");
  try {
    if (it->is_array() && it->size() == 2) return {(*it)[0].get<double>(), (*it)[1].get<double>()};
    return {it->at("x").get<double>(), it->at("y").get<double>()};
  } catch (const json::exception &) {
    throw Error(ErrorCode::validation, "position must be {\"x\", \"y\"} or [x, y]", "position");
  }
}

ImageRef path_ref(const std::string &s) {
  try {
    return ImageRef(s);
  } catch (const Error &e) {
    throw Error(ErrorCode::validation, e.what(), "image");
  }
}

std::uint64_t path_id(const std::string &s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception &) {
  }
  throw Error(ErrorCode::validation, "history id must be a number", "history_id");
}

std::string sniff_content_type(const std::vector<std::uint8_t> &bytes) {
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P') return "image/png";
  if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) return "image/jpeg";
  return "application/octet-stream";
}

void send_image(httplib::Response &res, const std::vector<std::uint8_t> &bytes) {
  res.status = 200;
  res.set_content(std::string(bytes.begin(), bytes.end()), sniff_content_type(bytes));
  res.set_header("Cache-Control", "public, max-age=31536000, immutable");
}

} // namespace

ApiServer::ApiServer(std::shared_ptr<SessionService> service)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
  routes();
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::routes() {
  auto &s = *server_;
  auto svc = service_;

  s.set_exception_handler([](const httplib::Request &req, httplib::Response &res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error &e) {
      const int status = http_status(e.code());
      if (status >= 500) spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_json(res, api_error_body(e), status);
    } catch (const std::exception &e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_json(res, api_error_body(Error(ErrorCode::io, e.what())), 500);
    }
  });
  s.set_error_handler([](const httplib::Request &req, httplib::Response &res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_json(res, api_error_body(Error(ErrorCode::not_found, "no route for " + req.method + " " + req.path)),
                404);
    }
  });

  const std::string sid = "/api/v1/sessions/([0-9a-f]{32})";
  const std::string ref = "([0-9a-f]{64})";

  s.Get("/api/v1/health", [svc](const httplib::Request &, httplib::Response &res) {
    send_json(res, {{"status", "ok"},
                    {"backend", svc->engine().backend().name()},
                    {"masks", svc->engine().masks().name()},
                    {"generation", svc->async_generation() ? "async" : "sync"}});
  });
  s.Get("/api/v1/attributes", [svc](const httplib::Request &, httplib::Response &res) {
    send_json(res, svc->attributes());
  });

  s.Post("/api/v1/sessions", [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->create_session(body_of(req)), 201);
  });
  s.Get("/api/v1/sessions", [svc](const httplib::Request &, httplib::Response &res) {
    send_json(res, {{"sessions", svc->session_ids()}});
  });
  s.Get(sid, [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->session_view(req.matches[1]));
  });
  s.Delete(sid, [svc](const httplib::Request &req, httplib::Response &res) {
    svc->delete_session(req.matches[1]);
    res.status = 204;
  });

  s.Post(sid + "/images", [svc](const httplib::Request &req, httplib::Response &res) {
    const auto *data = reinterpret_cast<const std::uint8_t *>(req.body.data());
    const ImageRef r = svc->upload_image(req.matches[1], std::span(data, req.body.size()));
    send_json(res, {{"image", r.str()}}, 201);
  });
  s.Get(sid + "/images/" + ref, [svc](const httplib::Request &req, httplib::Response &res) {
    send_image(res, svc->image_bytes(req.matches[1], path_ref(req.matches[2])));
  });

  s.Put(sid + "/target", [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->set_target(req.matches[1], image_field(body_of(req))));
  });
  s.Post(sid + "/references", [svc](const httplib::Request &req, httplib::Response &res) {
    const json body = body_of(req);
    send_json(res, svc->place_reference(req.matches[1], image_field(body), position_field(body)));
  });
  s.Patch(sid + "/references/" + ref, [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->move_reference(req.matches[1], path_ref(req.matches[2]), position_field(body_of(req))));
  });
  s.Put(sid + "/references/" + ref + "/attributes",
        [svc](const httplib::Request &req, httplib::Response &res) {
          const auto names = field_as<std::vector<std::string>>(body_of(req), "attributes");
          send_json(res, svc->select_attributes(req.matches[1], path_ref(req.matches[2]),
                                                {names.begin(), names.end()}));
        });
  s.Delete(sid + "/references/" + ref, [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->remove_reference(req.matches[1], path_ref(req.matches[2])));
  });

  s.Post(sid + "/undo", [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->undo(req.matches[1]));
  });
  s.Post(sid + "/redo", [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->redo(req.matches[1]));
  });
  s.Post(sid + "/reset", [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->reset(req.matches[1]));
  });

  s.Post(sid + "/generate", [svc](const httplib::Request &req, httplib::Response &res) {
    json out = svc->generate(req.matches[1]);
    send_json(res, out, svc->async_generation() ? 202 : 200);
  });
  s.Get(sid + "/jobs/([0-9a-f]{32})", [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->job_status(req.matches[1], req.matches[2]));
  });

  s.Get(sid + "/history", [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, {{"history", svc->list_history(req.matches[1])}});
  });
  s.Get(sid + "/history/([0-9]+)/image", [svc](const httplib::Request &req, httplib::Response &res) {
    send_image(res, svc->history_image(req.matches[1], path_id(req.matches[2])));
  });
  s.Post(sid + "/history/([0-9]+)/restore", [svc](const httplib::Request &req, httplib::Response &res) {
    send_json(res, svc->restore_history(req.matches[1], path_id(req.matches[2])));
  });

  const auto &static_dir = svc->config().static_dir;
  if (!static_dir.empty()) {
    if (!s.set_mount_point("/", static_dir.string())) {
      throw Error(ErrorCode::config, "static directory " + static_dir.string() + " does not exist",
                  "static_dir");
    }
  }
}

int ApiServer::bind(const std::string &host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::io, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ApiServer::listen() { server_->listen_after_bind(); }

int ApiServer::start(const std::string &host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return bound;
}

void ApiServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

} // namespace refcanvas
