#pragma once

// JSON-over-HTTP front for SessionService.
//   POST /sessions                    create
//   GET  /sessions/{id}               current view
//   POST /sessions/{id}/actions       human move
//   GET  /sessions/{id}/result        final result
// Errors are {"error": {"code", "message"}} with 400 (BadRequest),
// 404 (UnknownSession), 409 (IllegalAction, Conflict) or 500.

#include <memory>
#include <string>
#include <utility>

#include "pianist/app/session.hpp"

namespace httplib {
class Server;
}

namespace pianist::app {

/// HTTP status for an error code raised by the service.
int http_status(const std::string& code);

class HttpServer {
public:
    explicit HttpServer(SessionService& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and returns the port; port 0 picks a free one.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();

private:
    SessionService& service_;
    std::unique_ptr<httplib::Server> server_;
};

} // namespace pianist::app
