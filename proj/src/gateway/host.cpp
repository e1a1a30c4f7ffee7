#include "pianist/gateway/host.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "pianist/worldmodel/canonical.hpp"

namespace pianist::gateway {
namespace {

Json error_response(const Json& id, const std::string& code, const std::string& message)
{
    return Json{{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
}

Json dispatch(const JsonWorldModel& model, const std::string& method, const Json& params)
{
    if (method == "info")
        return model.info();
    if (method == "initial")
        return model.initial(params.value("seed", std::uint64_t{0}));
    if (method == "transition") {
        auto step = model.transition(params.at("state"), params.at("action"),
                                     params.at("actor").get<ActorId>());
        return Json{{"state", std::move(step.state)}, {"rewards", step.rewards}};
    }
    if (method == "enumerate") {
        auto e = model.enumerate(params.at("state"));
        return Json{{"actor", e.actor ? Json(*e.actor) : Json(nullptr)}, {"actions", e.actions}};
    }
    if (method == "partition")
        return model.partition(params.at("state"), params.at("actor").get<ActorId>());
    if (method == "realize")
        return model.realize(params.at("info_set"));
    if (method == "evaluate") {
        auto e = model.evaluate(params.at("state"));
        return Json{{"values", e.values}, {"notes", e.notes}};
    }
    if (method == "banked")
        return model.banked(params.at("state"));
    throw ProtocolViolation("unknown method '" + method + "'");
}

template <class T>
T field(const Json& j, const char* key, const std::string& raw)
{
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ProtocolViolation(std::string("bad '") + key + "' in response: " + raw);
    }
}

} // namespace

Json handshake(const ModelInfo& info)
{
    Json j = info;
    j["protocol"] = kModelProtocol;
    return j;
}

Json handle_request(const JsonWorldModel& model, const Json& request)
{
    const Json id = request.is_object() ? request.value("id", Json(nullptr)) : Json(nullptr);
    if (!request.is_object() || !request.contains("id") || !request.contains("method") ||
        !request.at("method").is_string())
        return error_response(id, "ProtocolViolation", "request needs id and method");
    const Json params = request.value("params", Json::object());
    try {
        return Json{{"id", id}, {"ok", true},
                    {"result", dispatch(model, request.at("method").get<std::string>(), params)}};
    } catch (const Error& e) {
        return error_response(id, e.code(), e.what());
    } catch (const Json::exception& e) {
        return error_response(id, "Inconsistent", std::string("malformed params: ") + e.what());
    } catch (const std::exception& e) {
        return error_response(id, "InternalError", e.what());
    }
}

std::size_t serve_model(const JsonWorldModel& model, std::istream& in, std::ostream& out)
{
    out << canonical_dump(handshake(model.info())) << '\n' << std::flush;
    std::size_t answered = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        Json request;
        try {
            request = Json::parse(line);
        } catch (const Json::exception&) {
            out << canonical_dump(error_response(nullptr, "ProtocolViolation", "unparseable request"))
                << '\n' << std::flush;
            continue;
        }
        ++answered;
        if (request.is_object() && request.value("method", "") == "shutdown") {
            out << canonical_dump(Json{{"id", request.value("id", Json(nullptr))},
                                       {"ok", true},
                                       {"result", nullptr}})
                << '\n' << std::flush;
            break;
        }
        out << canonical_dump(handle_request(model, request)) << '\n' << std::flush;
    }
    return answered;
}

// Client ---------------------------------------------------------------------

HostedModel::HostedModel(HostConfig config) : config_(std::move(config))
{
    if (config_.command.empty())
        throw BadConfig("host command is empty");
    if (config_.timeout_ms < 1)
        throw BadConfig("host timeout must be positive");

    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
        throw SpawnFailure(std::string("socketpair: ") + std::strerror(errno));
    pid_ = ::fork();
    if (pid_ < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw SpawnFailure(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", config_.command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(sv[1]);
    fd_ = sv[0];

    std::string line;
    try {
        line = read_line();
    } catch (const ProtocolViolation&) {
        terminate();
        throw SpawnFailure("host '" + config_.command + "' exited before the handshake");
    } catch (...) {
        terminate();
        throw;
    }
    try {
        auto j = Json::parse(line);
        if (!j.is_object() || j.value("protocol", "") != kModelProtocol)
            throw ProtocolViolation("protocol version mismatch, handshake: " + line);
        info_ = j.get<ModelInfo>();
    } catch (const Json::exception&) {
        terminate();
        throw ProtocolViolation("malformed handshake: " + line);
    } catch (...) {
        terminate();
        throw;
    }
}

HostedModel::~HostedModel() { close(); }

bool HostedModel::alive() const
{
    std::lock_guard lock(mutex_);
    return fd_ >= 0;
}

void HostedModel::close()
{
    std::lock_guard lock(mutex_);
    if (fd_ < 0)
        return;
    try {
        write_line(canonical_dump(Json{{"id", next_id_++}, {"method", "shutdown"}, {"params", Json::object()}}));
    } catch (const Error&) {
    }
    ::shutdown(fd_, SHUT_WR);
    ::close(fd_);
    fd_ = -1;
    // Give the host a moment to exit on its own.
    for (int i = 0; i < 100; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) != 0) {
            pid_ = -1;
            return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
}

void HostedModel::terminate() const
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
}

void HostedModel::write_line(const std::string& line) const
{
    std::string data = line + '\n';
    std::size_t sent = 0;
    while (sent < data.size()) {
        auto n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw ProtocolViolation(std::string("host is gone: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::string HostedModel::read_line() const
{
    using Clock = std::chrono::steady_clock;
    const auto deadline = Clock::now() + std::chrono::milliseconds(config_.timeout_ms);
    for (;;) {
        if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
            std::string line = buffer_.substr(0, pos);
            buffer_.erase(0, pos + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0)
            throw Timeout("no response from host within " + std::to_string(config_.timeout_ms) + " ms");
        pollfd p{fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
        if (ready < 0 && errno == EINTR)
            continue;
        if (ready < 0)
            throw ProtocolViolation(std::string("poll: ") + std::strerror(errno));
        if (ready == 0)
            continue;
        char chunk[4096];
        const auto n = ::read(fd_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            throw ProtocolViolation("host closed the connection" +
                                    (buffer_.empty() ? std::string() : ", partial line: " + buffer_));
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

Json HostedModel::call(const std::string& method, Json params) const
{
    std::lock_guard lock(mutex_);
    if (fd_ < 0)
        throw ProtocolViolation("endpoint is closed");
    const auto id = next_id_++;
    std::string raw;
    Json response;
    try {
        write_line(canonical_dump(Json{{"id", id}, {"method", method}, {"params", std::move(params)}}));
        raw = read_line();
        try {
            response = Json::parse(raw);
        } catch (const Json::exception&) {
            throw ProtocolViolation("malformed response line: " + raw);
        }
        if (!response.is_object() || response.value("id", Json(nullptr)) != Json(id) ||
            !response.contains("ok") || !response.at("ok").is_boolean())
            throw ProtocolViolation("response does not answer request " + std::to_string(id) + ": " + raw);
        if (response.at("ok").get<bool>() && !response.contains("result"))
            throw ProtocolViolation("response without result: " + raw);
        if (!response.at("ok").get<bool>() &&
            (!response.contains("error") || !response.at("error").is_object()))
            throw ProtocolViolation("error response without error object: " + raw);
    } catch (const Error&) {
        terminate();
        throw;
    }
    if (!response.at("ok").get<bool>()) {
        const auto& error = response.at("error");
        throw_error(error.value("code", std::string("Error")), error.value("message", std::string()));
    }
    return std::move(response.at("result"));
}

Json HostedModel::initial(std::uint64_t seed) const { return call("initial", {{"seed", seed}}); }

Step<Json> HostedModel::transition(const Json& state, const Json& action, ActorId actor) const
{
    auto r = call("transition", {{"state", state}, {"action", action}, {"actor", actor}});
    const auto raw = r.dump();
    return {field<Json>(r, "state", raw), field<Rewards>(r, "rewards", raw)};
}

Enumeration<Json> HostedModel::enumerate(const Json& state) const
{
    auto r = call("enumerate", {{"state", state}});
    const auto raw = r.dump();
    Enumeration<Json> e;
    auto actor = field<Json>(r, "actor", raw);
    if (!actor.is_null())
        e.actor = field<ActorId>(r, "actor", raw);
    e.actions = field<std::vector<Json>>(r, "actions", raw);
    return e;
}

Json HostedModel::partition(const Json& state, ActorId actor) const
{
    return call("partition", {{"state", state}, {"actor", actor}});
}

Json HostedModel::realize(const Json& info_set) const { return call("realize", {{"info_set", info_set}}); }

Evaluation HostedModel::evaluate(const Json& state) const
{
    auto r = call("evaluate", {{"state", state}});
    const auto raw = r.dump();
    return {field<Rewards>(r, "values", raw), r.value("notes", Json::object())};
}

Rewards HostedModel::banked(const Json& state) const
{
    auto r = call("banked", {{"state", state}});
    try {
        return r.get<Rewards>();
    } catch (const Json::exception&) {
        throw ProtocolViolation("bad banked rewards: " + r.dump());
    }
}

std::shared_ptr<HostedModel> host_model(HostConfig config)
{
    return std::make_shared<HostedModel>(std::move(config));
}

} // namespace pianist::gateway
