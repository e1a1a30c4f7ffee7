#pragma once

// Subprocess world-model protocol. A host process speaks line-delimited
// canonical JSON over stdio: it first writes a handshake
//   {"protocol":"pianist-model/1","game":...,"players":...}
// and then answers requests {id, method, params} with
//   {id, ok: true, result} or {id, ok: false, error: {code, message}}.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>

#include <sys/types.h>

#include "pianist/worldmodel/json_model.hpp"

namespace pianist::gateway {

PIANIST_DECLARE_ERROR(SpawnFailure);
PIANIST_DECLARE_ERROR(ProtocolViolation);
PIANIST_DECLARE_ERROR(Timeout);

inline constexpr const char* kModelProtocol = "pianist-model/1";

/// Handshake line announcing `info`.
Json handshake(const ModelInfo& info);

/// Answers one request object. Model errors become error responses; a
/// malformed request yields a ProtocolViolation error response.
Json handle_request(const JsonWorldModel& model, const Json& request);

/// Serves `model` until end of input or a "shutdown" request. Returns the
/// number of requests answered.
std::size_t serve_model(const JsonWorldModel& model, std::istream& in, std::ostream& out);

struct HostConfig {
    std::string command;     // run with /bin/sh -c
    int timeout_ms = 10'000; // per response, including the handshake
};

/// A world model living in a child process. One request is in flight at a
/// time; concurrent callers are serialised. After a transport failure the
/// endpoint is closed and every further call fails.
class HostedModel final : public JsonWorldModel {
public:
    explicit HostedModel(HostConfig config);
    ~HostedModel() override;

    HostedModel(const HostedModel&) = delete;
    HostedModel& operator=(const HostedModel&) = delete;

    /// Asks the host to exit, then reaps it. Idempotent.
    void close();
    bool alive() const;

    const ModelInfo& info() const override { return info_; }
    Json initial(std::uint64_t seed) const override;
    Step<Json> transition(const Json& state, const Json& action, ActorId actor) const override;
    Enumeration<Json> enumerate(const Json& state) const override;
    Json partition(const Json& state, ActorId actor) const override;
    Json realize(const Json& info_set) const override;
    Evaluation evaluate(const Json& state) const override;
    Rewards banked(const Json& state) const override;

private:
    Json call(const std::string& method, Json params) const;
    std::string read_line() const;
    void write_line(const std::string& line) const;
    void terminate() const;

    HostConfig config_;
    ModelInfo info_;
    mutable std::mutex mutex_;
    mutable pid_t pid_ = -1;
    mutable int fd_ = -1;
    mutable std::string buffer_;
    mutable std::uint64_t next_id_ = 1;
};

std::shared_ptr<HostedModel> host_model(HostConfig config);

} // namespace pianist::gateway
