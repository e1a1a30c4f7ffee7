#pragma once

// Matches between agents on a reference environment model, series
// statistics and JSON Lines trace files.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pianist/gateway/provider.hpp"
#include "pianist/mcts/search.hpp"
#include "pianist/worldmodel/canonical.hpp"
#include "pianist/worldmodel/json_model.hpp"
#include "pianist/worldmodel/trajectory.hpp"

namespace pianist::arena {

PIANIST_DECLARE_ERROR(AgentFailure);
PIANIST_DECLARE_ERROR(IoFailure);
PIANIST_DECLARE_ERROR(ParseFailure);

/// Everything an agent is told when it must move. The observation is the
/// environment's partition for the agent's seat; `legal` lists the actions
/// the environment enumerates for that seat.
struct Decision {
    ActorId seat = ActorId::player(0);
    Json observation;
    std::vector<Json> legal;
    std::uint64_t seed = 0; // per-decision, derived from the match seed and step
    int turn = 0;           // how many times this seat has moved already
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual Json act(const Decision& decision) = 0;
};

class RandomAgent final : public Agent {
public:
    explicit RandomAgent(std::uint64_t seed = 0) : seed_(seed) {}
    Json act(const Decision& decision) override;

private:
    std::uint64_t seed_;
};

/// Plays a fixed list of actions in order, one per turn of its seat.
class ScriptedAgent final : public Agent {
public:
    explicit ScriptedAgent(std::vector<Json> actions) : actions_(std::move(actions)) {}
    Json act(const Decision& decision) override;

private:
    std::vector<Json> actions_;
};

/// Searches a private copy of the game from the observation alone.
template <WorldModel M>
class MctsAgent final : public Agent {
public:
    MctsAgent(std::shared_ptr<const M> model, mcts::SearchConfig config)
        : model_(std::move(model)), config_(config)
    {
        config_.validate();
    }

    Json act(const Decision& decision) override
    {
        auto config = config_;
        config.seed = derive_seed(config_.seed, decision.seed);
        const auto info_set = decision.observation.get<typename M::InfoSet>();
        return Json(mcts::search(info_set, *model_, config).best_action);
    }

private:
    std::shared_ptr<const M> model_;
    mcts::SearchConfig config_;
};

class DirectPolicyAgent final : public Agent {
public:
    DirectPolicyAgent(std::shared_ptr<gateway::ProposalProvider> provider, std::string game)
        : provider_(std::move(provider)), game_(std::move(game))
    {}
    Json act(const Decision& decision) override;

private:
    std::shared_ptr<gateway::ProposalProvider> provider_;
    std::string game_;
};

/// Defers to a caller-supplied hook (a terminal prompt, a test double).
class ExternalAgent final : public Agent {
public:
    using Hook = std::function<Json(const Decision&)>;
    explicit ExternalAgent(Hook hook) : hook_(std::move(hook)) {}
    Json act(const Decision& decision) override { return hook_(decision); }

private:
    Hook hook_;
};

/// Records every decision it is shown before delegating.
class AuditingAgent final : public Agent {
public:
    explicit AuditingAgent(std::shared_ptr<Agent> inner) : inner_(std::move(inner)) {}
    Json act(const Decision& decision) override;
    std::vector<Decision> inputs() const;

private:
    std::shared_ptr<Agent> inner_;
    mutable std::mutex mutex_;
    std::vector<Decision> inputs_;
};

struct AgentSpec {
    std::string id;
    std::string kind = "random"; // mcts | random | direct_policy | scripted | lexicon_guesser | external
    mcts::SearchConfig search;
    std::uint64_t seed = 0;
    std::optional<gateway::ProviderConfig> provider;
    std::vector<Json> actions;

    void validate() const;
};

void to_json(Json& j, const AgentSpec& spec);
void from_json(const Json& j, AgentSpec& spec);

struct Outcome {
    enum class Kind { Win, Tie, Team };
    Kind kind = Kind::Tie;
    int winner = -1;         // Win only
    double team_score = 0.0; // Team only
    bool team_win = false;   // Team only: the shared score reached the win mark

    bool operator==(const Outcome&) const = default;
};

/// Win for the unique highest total, Tie otherwise; cooperative games
/// report the shared score instead, winning at `team_win_score` or more.
Outcome decide_outcome(const Rewards& final_rewards, bool cooperative, double team_win_score = 5.0);

void to_json(Json& j, const Outcome& outcome);
void from_json(const Json& j, Outcome& outcome);

struct MatchRecord {
    std::string game;
    std::vector<std::string> seats; // agent id per player
    std::vector<TrajectoryEvent> events;
    Rewards final_rewards;
    Outcome outcome;
    std::uint64_t seed = 0;

    bool operator==(const MatchRecord&) const = default;
};

void to_json(Json& j, const MatchRecord& record);
void from_json(const Json& j, MatchRecord& record);

struct Seat {
    std::string id;
    std::shared_ptr<Agent> agent;
};

struct MatchOptions {
    bool cooperative = false;
    double team_win_score = 5.0; // Taboo: solved on the first guess
    int step_cap = 10'000;
};

/// Plays one game from env.initial(seed). Chance moves are drawn by the
/// arena; each player seat sees only its own partition of the true state.
MatchRecord run_match(const JsonWorldModel& env, const std::vector<Seat>& seats, std::uint64_t seed,
                      const MatchOptions& options = {});

struct AgentStats {
    std::string id;
    int games = 0;
    int wins = 0;
    double winrate = 0.0;
    double winrate_stderr = 0.0; // one binomial standard error
    double mean_score = 0.0; // own total minus opponent total; team score when cooperative
    std::vector<int> seat_games;
    std::vector<int> seat_wins;
};

struct SeriesStats {
    int n_games = 0;
    int ties = 0;
    bool cooperative = false;
    std::vector<AgentStats> agents; // in seat order of game 0
};

void to_json(Json& j, const AgentStats& stats);
void to_json(Json& j, const SeriesStats& stats);

/// Binomial standard error sqrt(p(1-p)/n).
double binomial_stderr(double p, int n);

struct SeriesSpec {
    int n_games = 1;
    bool alternate_seats = true;
    std::uint64_t base_seed = 0;
    int parallel = 1;
    MatchOptions match;
};

struct SeriesResult {
    SeriesStats stats;
    std::vector<MatchRecord> records; // in game order
};

/// Game i uses seed base_seed + i; with alternation, odd games swap the
/// two seats.
SeriesResult run_series(const JsonWorldModel& env, const std::vector<Seat>& seats, const SeriesSpec& spec);

SeriesStats series_stats(const std::vector<MatchRecord>& records, const std::vector<std::string>& agent_ids);

/// Aligned text table: agent, winrate with stderr, mean score, then ties.
std::string format_table(const SeriesStats& stats);

void write_trace(const std::vector<MatchRecord>& records, const std::string& path);
std::vector<MatchRecord> read_trace(const std::string& path);

} // namespace pianist::arena
