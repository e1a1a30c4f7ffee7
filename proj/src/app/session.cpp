#include "pianist/app/session.hpp"

#include <algorithm>
#include <condition_variable>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "pianist/worldmodel/canonical.hpp"

namespace pianist::app {
namespace {

constexpr std::uint64_t kChanceStream = 0x6368616e6365; // "chance"

std::string random_id(std::uint64_t counter)
{
    static std::mt19937_64 rng{std::random_device{}()};
    static std::mutex mutex;
    std::uint64_t r;
    {
        std::lock_guard lock(mutex);
        r = rng();
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << r << std::setw(4) << (counter & 0xffff);
    return out.str();
}

} // namespace

std::string to_string(SessionStatus status)
{
    switch (status) {
    case SessionStatus::AwaitingHuman: return "awaiting_human";
    case SessionStatus::AgentThinking: return "agent_thinking";
    case SessionStatus::Finished: return "finished";
    }
    return "unknown";
}

struct Session {
    std::string id;
    GameSetup setup;
    int human = 0;
    std::string agent_id;
    std::shared_ptr<arena::Agent> agent;
    std::uint64_t seed = 0;
    Rng chance;

    // Guarded by `work`.
    std::mutex work;
    Json state;
    int step = 0;
    std::vector<int> turns;
    Rewards totals;
    std::vector<Json> legal; // human's options while awaiting
    std::optional<std::string> failure;

    // Guarded by `view_mutex`; what readers see.
    std::mutex view_mutex;
    SessionStatus status = SessionStatus::AgentThinking;
    Json view;
    std::condition_variable idle;

    std::atomic<bool> in_flight{false};
    std::chrono::steady_clock::time_point last_access; // guarded by the service mutex

    int players() const { return setup.env->info().players; }

    /// Rebuilds the public view from the current state. Caller holds `work`.
    void publish(SessionStatus next)
    {
        Json v{{"session_id", id},
               {"game", setup.game},
               {"status", to_string(next)},
               {"human_seat", human},
               {"turn", turns.at(static_cast<std::size_t>(human))},
               {"free_text", setup.free_text},
               {"observation", setup.env->partition(state, ActorId::player(human))},
               {"legal_actions", setup.free_text ? std::vector<Json>{} : legal},
               {"scores", totals}};
        if (next == SessionStatus::Finished) {
            Json r{{"final_rewards", totals},
                   {"outcome", arena::decide_outcome(totals, setup.match.cooperative, setup.match.team_win_score)}};
            if (failure)
                r["error"] = *failure;
            v["result"] = std::move(r);
        }
        std::lock_guard lock(view_mutex);
        status = next;
        view = std::move(v);
        idle.notify_all();
    }

    void apply(const Json& action, ActorId actor)
    {
        auto next = setup.env->transition(state, action, actor);
        for (int p = 0; p < players(); ++p)
            totals[static_cast<std::size_t>(p)] += next.rewards.at(static_cast<std::size_t>(p));
        state = std::move(next.state);
        ++step;
    }

    /// Plays environment and agent moves until the human must act or the
    /// game ends. Caller holds `work`.
    void advance()
    {
        for (;;) {
            if (step >= setup.match.step_cap)
                throw BudgetExceeded("session exceeded " + std::to_string(setup.match.step_cap) + " steps");
            auto e = setup.env->enumerate(state);
            if (e.terminal()) {
                legal.clear();
                publish(SessionStatus::Finished);
                return;
            }
            const auto actor = *e.actor;
            if (actor.is_environment()) {
                apply(e.actions[uniform_index(chance, e.actions.size())], actor);
                continue;
            }
            const auto p = static_cast<std::size_t>(actor.index());
            if (actor.index() == human) {
                legal = std::move(e.actions);
                publish(SessionStatus::AwaitingHuman);
                return;
            }
            arena::Decision d{actor, setup.env->partition(state, actor), e.actions,
                              derive_seed(seed, static_cast<std::uint64_t>(step)), turns[p]++};
            apply(agent->act(d), actor);
        }
    }

    /// advance() that turns an agent failure into a finished session.
    void advance_safely()
    {
        try {
            advance();
        } catch (const std::exception& e) {
            failure = std::string("agent failed: ") + e.what();
            legal.clear();
            publish(SessionStatus::Finished);
        }
    }
};

SessionService::SessionService(SessionOptions options) : options_(std::move(options))
{
    if (options_.ttl.count() <= 0)
        throw BadConfig("session ttl must be positive");
    if (!options_.game_factory) {
        auto base = options_.base_dir;
        options_.game_factory = [base](const Json& config) { return make_game(config, base); };
    }
}

SessionService::~SessionService()
{
    std::unique_lock lock(workers_mutex_);
    workers_done_.wait(lock, [&] { return active_workers_ == 0; });
}

std::shared_ptr<Session> SessionService::find(const std::string& id)
{
    std::lock_guard lock(mutex_);
    const auto now = options_.clock();
    auto it = sessions_.find(id);
    if (it == sessions_.end())
        throw UnknownSession("no session '" + id + "'");
    if (now - it->second->last_access > options_.ttl) {
        sessions_.erase(it);
        throw UnknownSession("session '" + id + "' expired");
    }
    it->second->last_access = now;
    return it->second;
}

Json SessionService::create(const Json& request)
{
    expire();
    if (!request.is_object() || !request.contains("game"))
        throw BadRequest("body must be an object with a 'game' config");

    auto s = std::make_shared<Session>();
    try {
        s->setup = options_.game_factory(request.at("game"));
        s->human = request.value("human_seat", 0);
        s->seed = request.value("seed", std::uint64_t{0});
        const auto spec = request.value("agent", Json{{"kind", "random"}, {"id", "random"}}).get<arena::AgentSpec>();
        s->agent_id = spec.id;
        s->agent = s->setup.make_agent(spec);
    } catch (const Json::exception& e) {
        throw BadRequest(std::string("malformed request: ") + e.what());
    } catch (const BadConfig& e) {
        throw BadRequest(e.what());
    }
    const int players = s->players();
    if (s->human < 0 || s->human >= players)
        throw BadRequest("human_seat must be in [0, " + std::to_string(players) + ")");
    s->chance.seed(derive_seed(s->seed, kChanceStream));
    s->turns.assign(static_cast<std::size_t>(players), 0);
    s->totals = zero_rewards(players);
    s->state = s->setup.env->initial(s->seed);

    {
        std::lock_guard lock(mutex_);
        s->id = random_id(next_id_++);
        s->last_access = options_.clock();
        sessions_[s->id] = s;
    }
    {
        std::lock_guard work(s->work);
        s->publish(SessionStatus::AgentThinking);
    }
    run_agents(s);
    return get(s->id);
}

void SessionService::run_agents(const std::shared_ptr<Session>& s)
{
    if (!options_.async) {
        std::lock_guard work(s->work);
        s->advance_safely();
        s->in_flight = false;
        return;
    }
    s->in_flight = true;
    {
        std::lock_guard lock(workers_mutex_);
        ++active_workers_;
    }
    std::thread([this, s] {
        {
            std::lock_guard work(s->work);
            s->advance_safely();
            s->in_flight = false;
            std::lock_guard view(s->view_mutex);
            s->idle.notify_all();
        }
        std::lock_guard lock(workers_mutex_);
        --active_workers_;
        workers_done_.notify_all();
    }).detach();
}

Json SessionService::get(const std::string& id)
{
    auto s = find(id);
    std::lock_guard lock(s->view_mutex);
    return s->view;
}

Json SessionService::act(const std::string& id, const Json& request)
{
    auto s = find(id);
    if (!request.is_object() || !request.contains("action"))
        throw BadRequest("body must be an object with an 'action'");

    bool expected = false;
    if (!s->in_flight.compare_exchange_strong(expected, true))
        throw Conflict("another move is being processed");
    try {
        std::unique_lock work(s->work);
        {
            std::lock_guard view(s->view_mutex);
            if (s->status == SessionStatus::Finished)
                throw Conflict("session is finished");
            if (s->status != SessionStatus::AwaitingHuman)
                throw Conflict("the agent is still thinking");
        }
        const int turn = s->turns.at(static_cast<std::size_t>(s->human));
        if (request.contains("turn") && request.at("turn") != Json(turn))
            throw Conflict("stale move: expected turn " + std::to_string(turn));

        Json action = request.at("action");
        if (!s->setup.free_text &&
            std::find(s->legal.begin(), s->legal.end(), action) == s->legal.end())
            throw IllegalAction("action " + canonical_dump(action) + " is not legal here");
        try {
            s->apply(action, ActorId::player(s->human));
        } catch (const Json::exception& e) {
            throw IllegalAction(std::string("malformed action: ") + e.what());
        }
        ++s->turns[static_cast<std::size_t>(s->human)];
        s->publish(SessionStatus::AgentThinking);
    } catch (...) {
        s->in_flight = false;
        throw;
    }
    run_agents(s);
    return get(id);
}

Json SessionService::result(const std::string& id)
{
    auto s = find(id);
    std::lock_guard lock(s->view_mutex);
    if (s->status != SessionStatus::Finished)
        throw Conflict("session is not finished");
    return s->view.at("result");
}

std::size_t SessionService::expire()
{
    std::lock_guard lock(mutex_);
    const auto now = options_.clock();
    return std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_access > options_.ttl; });
}

std::size_t SessionService::size() const
{
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

void SessionService::wait_idle()
{
    std::vector<std::shared_ptr<Session>> all;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [id, s] : sessions_)
            all.push_back(s);
    }
    for (const auto& s : all) {
        std::unique_lock lock(s->view_mutex);
        s->idle.wait(lock, [&] { return !s->in_flight.load(); });
    }
}

} // namespace pianist::app
