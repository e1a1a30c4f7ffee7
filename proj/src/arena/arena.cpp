#include "pianist/arena/arena.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "pianist/gateway/direct_policy.hpp"

namespace pianist::arena {
namespace {

constexpr std::uint64_t kChanceStream = 0x6368616e6365; // "chance"

const std::vector<std::string>& agent_kinds()
{
    static const std::vector<std::string> kinds{"mcts",     "random",          "direct_policy",
                                                "scripted", "lexicon_guesser", "external"};
    return kinds;
}

std::string percent(double p)
{
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << 100.0 * p;
    return out.str();
}

} // namespace

// Agents -----------------------------------------------------------------------

Json RandomAgent::act(const Decision& d)
{
    if (d.legal.empty())
        throw IllegalAction("no legal action");
    Rng rng(derive_seed(seed_, d.seed));
    return d.legal[uniform_index(rng, d.legal.size())];
}

Json ScriptedAgent::act(const Decision& d)
{
    if (d.turn < 0 || static_cast<std::size_t>(d.turn) >= actions_.size())
        throw IllegalAction("script has no action for turn " + std::to_string(d.turn));
    return actions_[static_cast<std::size_t>(d.turn)];
}

Json DirectPolicyAgent::act(const Decision& d)
{
    return gateway::direct_policy_decide(*provider_, game_, d.observation, d.legal).action;
}

Json AuditingAgent::act(const Decision& d)
{
    {
        std::lock_guard lock(mutex_);
        inputs_.push_back(d);
    }
    return inner_->act(d);
}

std::vector<Decision> AuditingAgent::inputs() const
{
    std::lock_guard lock(mutex_);
    return inputs_;
}

void AgentSpec::validate() const
{
    if (id.empty())
        throw BadConfig("agent id is empty");
    if (std::find(agent_kinds().begin(), agent_kinds().end(), kind) == agent_kinds().end())
        throw BadConfig("unknown agent kind '" + kind + "'");
    if (kind == "mcts")
        search.validate();
    if (kind == "direct_policy" && !provider)
        throw BadConfig("direct_policy agent '" + id + "' needs a provider");
    if (kind == "scripted" && actions.empty())
        throw BadConfig("scripted agent '" + id + "' has no actions");
}

void to_json(Json& j, const AgentSpec& s)
{
    j = Json{{"id", s.id}, {"kind", s.kind}, {"search", s.search}, {"seed", s.seed}, {"actions", s.actions}};
    if (s.provider)
        j["provider"] = *s.provider;
}

void from_json(const Json& j, AgentSpec& s)
{
    AgentSpec out;
    out.kind = j.value("kind", out.kind);
    out.id = j.value("id", out.kind);
    if (j.contains("search"))
        out.search = j.at("search").get<mcts::SearchConfig>();
    out.seed = j.value("seed", out.seed);
    if (j.contains("provider"))
        out.provider = j.at("provider").get<gateway::ProviderConfig>();
    out.actions = j.value("actions", out.actions);
    out.validate();
    s = std::move(out);
}

// Records ----------------------------------------------------------------------

Outcome decide_outcome(const Rewards& final_rewards, bool cooperative, double team_win_score)
{
    Outcome o;
    if (cooperative) {
        o.kind = Outcome::Kind::Team;
        o.team_score = final_rewards.empty() ? 0.0 : final_rewards.front();
        o.team_win = o.team_score >= team_win_score;
        return o;
    }
    if (final_rewards.empty())
        return o;
    const auto best = std::max_element(final_rewards.begin(), final_rewards.end());
    if (std::count(final_rewards.begin(), final_rewards.end(), *best) == 1) {
        o.kind = Outcome::Kind::Win;
        o.winner = static_cast<int>(best - final_rewards.begin());
    }
    return o;
}

void to_json(Json& j, const Outcome& o)
{
    switch (o.kind) {
    case Outcome::Kind::Win: j = Json{{"result", "win"}, {"winner", o.winner}}; break;
    case Outcome::Kind::Tie: j = Json{{"result", "tie"}}; break;
    case Outcome::Kind::Team: j = Json{{"result", "team"}, {"score", o.team_score}, {"win", o.team_win}}; break;
    }
}

void from_json(const Json& j, Outcome& o)
{
    Outcome out;
    const auto result = j.at("result").get<std::string>();
    if (result == "win") {
        out.kind = Outcome::Kind::Win;
        out.winner = j.at("winner").get<int>();
    } else if (result == "team") {
        out.kind = Outcome::Kind::Team;
        out.team_score = j.at("score").get<double>();
        out.team_win = j.at("win").get<bool>();
    } else if (result != "tie") {
        throw Inconsistent("unknown outcome '" + result + "'");
    }
    o = out;
}

void to_json(Json& j, const MatchRecord& r)
{
    j = Json{{"game", r.game},
             {"seats", r.seats},
             {"events", r.events},
             {"final_rewards", r.final_rewards},
             {"outcome", r.outcome},
             {"seed", r.seed}};
}

void from_json(const Json& j, MatchRecord& r)
{
    MatchRecord out;
    out.game = j.at("game").get<std::string>();
    out.seats = j.at("seats").get<std::vector<std::string>>();
    out.events = j.at("events").get<std::vector<TrajectoryEvent>>();
    out.final_rewards = j.at("final_rewards").get<Rewards>();
    out.outcome = j.at("outcome").get<Outcome>();
    out.seed = j.at("seed").get<std::uint64_t>();
    r = std::move(out);
}

// Matches ----------------------------------------------------------------------

MatchRecord run_match(const JsonWorldModel& env, const std::vector<Seat>& seats, std::uint64_t seed,
                      const MatchOptions& options)
{
    const int players = env.info().players;
    if (static_cast<int>(seats.size()) != players)
        throw BadConfig("match needs " + std::to_string(players) + " seats, got " +
                        std::to_string(seats.size()));
    for (const auto& seat : seats)
        if (!seat.agent)
            throw BadConfig("seat '" + seat.id + "' has no agent");

    MatchRecord record;
    record.game = env.info().game;
    record.seed = seed;
    record.final_rewards = zero_rewards(players);
    for (const auto& seat : seats)
        record.seats.push_back(seat.id);

    Rng chance(derive_seed(seed, kChanceStream));
    std::vector<int> turns(static_cast<std::size_t>(players), 0);
    auto state = env.initial(seed);
    for (int step = 0;; ++step) {
        auto options_now = env.enumerate(state);
        const auto digest = state_digest(state);
        if (options_now.terminal()) {
            record.events.push_back({digest, std::nullopt, nullptr, zero_rewards(players), step});
            break;
        }
        if (step >= options.step_cap)
            throw BudgetExceeded("match exceeded " + std::to_string(options.step_cap) + " steps");
        const auto actor = *options_now.actor;
        Json action;
        if (actor.is_environment()) {
            action = options_now.actions[uniform_index(chance, options_now.actions.size())];
        } else {
            const auto p = static_cast<std::size_t>(actor.index());
            const auto& seat = seats[p];
            Decision decision{actor, env.partition(state, actor), options_now.actions,
                              derive_seed(seed, static_cast<std::uint64_t>(step)), turns[p]++};
            try {
                action = seat.agent->act(decision);
            } catch (const std::exception& e) {
                throw AgentFailure("seat " + std::to_string(p) + " (" + seat.id + ") failed at step " +
                                   std::to_string(step) + ": " + e.what());
            }
        }
        Step<Json> next;
        try {
            next = env.transition(state, action, actor);
        } catch (const Error& e) {
            if (actor.is_environment())
                throw;
            throw AgentFailure("seat " + std::to_string(actor.index()) + " (" + seats[actor.index()].id +
                               ") played " + canonical_dump(action) + " at step " + std::to_string(step) +
                               ": " + e.what());
        }
        for (int p = 0; p < players; ++p)
            record.final_rewards[p] += next.rewards.at(p);
        record.events.push_back({digest, actor, action, next.rewards, step});
        state = std::move(next.state);
    }
    record.outcome = decide_outcome(record.final_rewards, options.cooperative, options.team_win_score);
    return record;
}

// Series -----------------------------------------------------------------------

double binomial_stderr(double p, int n) { return n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0; }

SeriesStats series_stats(const std::vector<MatchRecord>& records, const std::vector<std::string>& agent_ids)
{
    SeriesStats stats;
    stats.n_games = static_cast<int>(records.size());
    const std::size_t players = agent_ids.size();
    for (const auto& id : agent_ids)
        stats.agents.push_back({id, 0, 0, 0.0, 0.0, 0.0, std::vector<int>(players, 0), std::vector<int>(players, 0)});
    std::vector<double> score_sum(stats.agents.size(), 0.0);

    auto find = [&](const std::string& id) -> std::size_t {
        for (std::size_t i = 0; i < stats.agents.size(); ++i)
            if (stats.agents[i].id == id)
                return i;
        throw Inconsistent("record names unknown agent '" + id + "'");
    };

    for (const auto& r : records) {
        if (r.outcome.kind == Outcome::Kind::Tie)
            ++stats.ties;
        if (r.outcome.kind == Outcome::Kind::Team)
            stats.cooperative = true;
        std::vector<bool> counted(stats.agents.size(), false);
        for (std::size_t p = 0; p < r.seats.size(); ++p) {
            const auto a = find(r.seats[p]);
            auto& s = stats.agents[a];
            ++s.seat_games.at(p);
            bool won = false;
            double score = 0.0;
            if (r.outcome.kind == Outcome::Kind::Team) {
                won = r.outcome.team_win;
                score = r.outcome.team_score;
            } else {
                won = r.outcome.kind == Outcome::Kind::Win && r.outcome.winner == static_cast<int>(p);
                double others = 0.0;
                for (std::size_t q = 0; q < r.final_rewards.size(); ++q)
                    if (q != p)
                        others += r.final_rewards[q];
                score = r.final_rewards[p] - others / static_cast<double>(r.final_rewards.size() - 1);
            }
            if (won)
                ++s.seat_wins.at(p);
            // An agent holding several seats of one game counts the game once.
            if (!counted[a]) {
                counted[a] = true;
                ++s.games;
                s.wins += won;
                score_sum[a] += score;
            }
        }
    }
    for (std::size_t i = 0; i < stats.agents.size(); ++i) {
        auto& s = stats.agents[i];
        s.winrate = s.games ? static_cast<double>(s.wins) / s.games : 0.0;
        s.winrate_stderr = binomial_stderr(s.winrate, s.games);
        s.mean_score = s.games ? score_sum[i] / s.games : 0.0;
    }
    return stats;
}

SeriesResult run_series(const JsonWorldModel& env, const std::vector<Seat>& seats, const SeriesSpec& spec)
{
    if (spec.n_games < 1)
        throw BadConfig("a series needs at least one game");
    if (spec.parallel < 1)
        throw BadConfig("parallelism must be at least 1");
    if (spec.alternate_seats && seats.size() != 2)
        throw BadConfig("seat alternation needs exactly two seats");

    SeriesResult result;
    result.records.resize(static_cast<std::size_t>(spec.n_games));
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        for (int i = next++; i < spec.n_games; i = next++) {
            auto order = seats;
            if (spec.alternate_seats && i % 2 == 1)
                std::swap(order[0], order[1]);
            try {
                result.records[static_cast<std::size_t>(i)] =
                    run_match(env, order, spec.base_seed + static_cast<std::uint64_t>(i), spec.match);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next = spec.n_games;
            }
        }
    };
    const int threads = std::min(spec.parallel, spec.n_games);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);

    std::vector<std::string> ids;
    for (const auto& seat : seats)
        ids.push_back(seat.id);
    result.stats = series_stats(result.records, ids);
    return result;
}

void to_json(Json& j, const AgentStats& s)
{
    j = Json{{"id", s.id},
             {"games", s.games},
             {"wins", s.wins},
             {"winrate", s.winrate},
             {"winrate_stderr", s.winrate_stderr},
             {"mean_score", s.mean_score},
             {"seat_games", s.seat_games},
             {"seat_wins", s.seat_wins}};
}

void to_json(Json& j, const SeriesStats& s)
{
    j = Json{{"n_games", s.n_games}, {"ties", s.ties}, {"cooperative", s.cooperative}, {"agents", s.agents}};
}

std::string format_table(const SeriesStats& stats)
{
    std::size_t width = 5;
    for (const auto& a : stats.agents)
        width = std::max(width, a.id.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width) + 2) << "Agent" << std::setw(16) << "Winrate"
        << "Score\n";
    for (const auto& a : stats.agents) {
        std::ostringstream score;
        score << std::fixed << std::setprecision(2) << (stats.cooperative ? "" : (a.mean_score >= 0 ? "+" : ""))
              << a.mean_score;
        out << std::setw(static_cast<int>(width) + 2) << a.id << std::setw(16)
            << (percent(a.winrate) + "±" + percent(a.winrate_stderr) + "%") << score.str() << '\n';
    }
    out << "Games: " << stats.n_games;
    if (!stats.cooperative)
        out << "  Ties: " << stats.ties << " ("
            << percent(stats.n_games ? static_cast<double>(stats.ties) / stats.n_games : 0.0) << "%)";
    out << '\n';
    return out.str();
}

// Traces -----------------------------------------------------------------------

void write_trace(const std::vector<MatchRecord>& records, const std::string& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoFailure("cannot write " + path);
    for (const auto& r : records)
        out << canonical_dump(Json(r)) << '\n';
    if (!out)
        throw IoFailure("write to " + path + " failed");
}

std::vector<MatchRecord> read_trace(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoFailure("cannot read " + path);
    std::vector<MatchRecord> records;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            records.push_back(Json::parse(line).get<MatchRecord>());
        } catch (const std::exception& e) {
            throw ParseFailure(path + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return records;
}

} // namespace pianist::arena
