#pragma once

#include "refcanvas/error.hpp"
#include "refcanvas/service.hpp"

#include <memory>
#include <thread>

namespace httplib {
class Server;
}

namespace refcanvas {

/// HTTP status for an error code: 4xx for caller mistakes, 5xx for backend failures.
int http_status(ErrorCode code);

/// {"error": {"code", "message", "field"}}.
nlohmann::json api_error_body(const Error &error);

/// JSON API under /api/v1, plus optional static files at /.
class ApiServer {
public:
  explicit ApiServer(std::shared_ptr<SessionService> service);
  ~ApiServer();

  ApiServer(const ApiServer &) = delete;
  ApiServer &operator=(const ApiServer &) = delete;

  /// Binds (port 0 picks a free port) and returns the bound port.
  int bind(const std::string &host, int port);
  /// Blocks until stop().
  void listen();
  /// bind + listen on a background thread.
  int start(const std::string &host, int port);
  void stop();

private:
  void routes();

  std::shared_ptr<SessionService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

} // namespace refcanvas
