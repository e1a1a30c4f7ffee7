#include "pianist/app/server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace pianist::app {
namespace {

void reply(httplib::Response& res, int status, const Json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& f)
{
    try {
        reply(res, 200, f());
    } catch (const Error& e) {
        reply(res, http_status(e.code()), Json{{"error", {{"code", e.code()}, {"message", e.what()}}}});
    } catch (const std::exception& e) {
        spdlog::error("session request failed: {}", e.what());
        reply(res, 500, Json{{"error", {{"code", "InternalError"}, {"message", e.what()}}}});
    }
}

Json parse_body(const httplib::Request& req)
{
    try {
        return Json::parse(req.body);
    } catch (const Json::exception&) {
        throw BadRequest("body is not valid JSON");
    }
}

} // namespace

int http_status(const std::string& code)
{
    if (code == "BadRequest" || code == "BadConfig")
        return 400;
    if (code == "UnknownSession")
        return 404;
    if (code == "IllegalAction" || code == "Conflict")
        return 409;
    return 500;
}

HttpServer::HttpServer(SessionService& service) : service_(service), server_(std::make_unique<httplib::Server>())
{
    auto& s = *server_;
    s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return service_.create(parse_body(req)); });
    });
    s.Get(R"(/sessions/([0-9a-zA-Z]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return service_.get(req.matches[1]); });
    });
    s.Post(R"(/sessions/([0-9a-zA-Z]+)/actions)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return service_.act(req.matches[1], parse_body(req)); });
    });
    s.Get(R"(/sessions/([0-9a-zA-Z]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return service_.result(req.matches[1]); });
    });
    s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty())
            return httplib::Server::HandlerResponse::Unhandled;
        const std::string code = res.status == 404 ? "NotFound" : "BadRequest";
        res.set_content(Json{{"error", {{"code", code}, {"message", "no route for " + req.method + " " + req.path}}}}
                            .dump(),
                        "application/json");
        return httplib::Server::HandlerResponse::Handled;
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port)
{
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0)
        throw BadConfig("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop()
{
    if (server_)
        server_->stop();
}

} // namespace pianist::app
