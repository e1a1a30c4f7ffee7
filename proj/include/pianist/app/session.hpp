#pragma once

// Human-vs-agent sessions behind the HTTP API. A session holds the true
// state; every view it hands out carries only the human seat's partition.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pianist/app/games.hpp"

namespace pianist::app {

PIANIST_DECLARE_ERROR(BadRequest);
PIANIST_DECLARE_ERROR(UnknownSession);
PIANIST_DECLARE_ERROR(Conflict);

enum class SessionStatus { AwaitingHuman, AgentThinking, Finished };

std::string to_string(SessionStatus status);

struct SessionOptions {
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    std::chrono::seconds ttl{30 * 60}; // idle sessions expire after this
    bool async = false;                // agent moves run on a worker thread
    Clock clock = [] { return std::chrono::steady_clock::now(); };
    std::function<GameSetup(const Json&)> game_factory; // defaults to make_game(config, base_dir)
    std::string base_dir = ".";
};

struct Session;

/// Requests and responses are JSON:
///   create  {game: <game config>, human_seat?, agent?: <AgentSpec>, seed?}
///   act     {action, turn?}  (`turn` guards against stale or doubled posts)
/// Views are {session_id, game, status, human_seat, turn, observation,
/// legal_actions, free_text, result?}.
class SessionService {
public:
    explicit SessionService(SessionOptions options = {});
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    Json create(const Json& request);
    Json get(const std::string& id);
    Json act(const std::string& id, const Json& request);
    Json result(const std::string& id);

    /// Drops sessions idle for longer than the ttl; returns how many.
    std::size_t expire();
    std::size_t size() const;
    /// Blocks until no agent move is running in any session.
    void wait_idle();

private:
    std::shared_ptr<Session> find(const std::string& id);
    void run_agents(const std::shared_ptr<Session>& session);

    SessionOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
    std::mutex workers_mutex_;
    std::condition_variable workers_done_;
    int active_workers_ = 0;
};

} // namespace pianist::app
