#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pianist/arena/arena.hpp"
#include "pianist/gops/gops.hpp"

using namespace pianist;
using namespace pianist::arena;

namespace {

std::shared_ptr<JsonWorldModel> gops_env(int k, std::vector<int> prize_order = {})
{
    gops::GopsConfig c;
    c.k = k;
    c.prize_order = std::move(prize_order);
    return std::make_shared<JsonAdapter<gops::GopsModel>>(std::make_shared<const gops::GopsModel>(c));
}

std::vector<Json> actions(std::initializer_list<int> cards)
{
    std::vector<Json> out;
    for (int c : cards)
        out.emplace_back(c);
    return out;
}

Seat scripted(const std::string& id, std::initializer_list<int> cards)
{
    return {id, std::make_shared<ScriptedAgent>(actions(cards))};
}

Seat random_seat(const std::string& id, std::uint64_t seed)
{
    return {id, std::make_shared<RandomAgent>(seed)};
}

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("pianist_arena_" + name)).string();
}

MatchRecord record(std::vector<std::string> seats, Rewards final_rewards, bool cooperative = false)
{
    MatchRecord r;
    r.game = "gops";
    r.seats = std::move(seats);
    r.final_rewards = final_rewards;
    r.outcome = decide_outcome(final_rewards, cooperative);
    return r;
}

} // namespace

TEST(Outcome, WinTieTeam)
{
    EXPECT_EQ(decide_outcome({3, 5}, false), (Outcome{Outcome::Kind::Win, 1, 0.0, false}));
    EXPECT_EQ(decide_outcome({4, 4}, false).kind, Outcome::Kind::Tie);
    auto team = decide_outcome({5, 5}, true);
    EXPECT_EQ(team.kind, Outcome::Kind::Team);
    EXPECT_TRUE(team.team_win);
    EXPECT_FALSE(decide_outcome({4, 4}, true).team_win);
    EXPECT_TRUE(decide_outcome({4, 4}, true, 4.0).team_win);
    for (const auto& o : {decide_outcome({1, 2}, false), decide_outcome({2, 2}, false), team})
        EXPECT_EQ(Json(o).get<Outcome>(), o);
    EXPECT_EQ(Json(decide_outcome({1, 2}, false)), (Json{{"result", "win"}, {"winner", 1}}));
}

TEST(RunMatch, ScriptedGameIsScoredExactly)
{
    // Prizes 1, 2, 3. Round 1: 3 beats 1 (p0 +1). Round 2: 2 ties 2 (pot 2).
    // Round 3: 3 beats 1, p1 takes 3 + pot 2.
    auto env = gops_env(3, {1, 2, 3});
    auto r = run_match(*env, {scripted("a", {3, 2, 1}), scripted("b", {1, 2, 3})}, 11);
    EXPECT_EQ(r.game, "gops");
    EXPECT_EQ(r.seats, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(r.final_rewards, (Rewards{1.0, 5.0}));
    EXPECT_EQ(r.outcome, (Outcome{Outcome::Kind::Win, 1, 0.0, false}));
    ASSERT_EQ(r.events.size(), 10u);
    Rewards sum{0.0, 0.0};
    for (std::size_t i = 0; i < r.events.size(); ++i) {
        EXPECT_EQ(r.events[i].step_index, static_cast<int>(i));
        sum[0] += r.events[i].rewards[0];
        sum[1] += r.events[i].rewards[1];
    }
    EXPECT_EQ(sum, r.final_rewards);
    EXPECT_TRUE(r.events.back().terminal());
    EXPECT_EQ(r.events[0].actor, ActorId::environment());
    EXPECT_EQ(r.events[1].actor, ActorId::player(0));
    EXPECT_EQ(r.events[2].rewards, (Rewards{1.0, 0.0}));

    auto again = run_match(*env, {scripted("a", {3, 2, 1}), scripted("b", {1, 2, 3})}, 11);
    EXPECT_EQ(again, r);
}

TEST(RunMatch, IllegalMoveNamesSeatAndStep)
{
    auto env = gops_env(3, {1, 2, 3});
    try {
        run_match(*env, {scripted("a", {3, 3}), scripted("b", {1, 2, 3})}, 0);
        FAIL() << "expected AgentFailure";
    } catch (const AgentFailure& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("seat 0 (a)"), std::string::npos) << what;
        EXPECT_NE(what.find("step 4"), std::string::npos) << what;
    }
}

TEST(RunMatch, ThrowingAgentBecomesAgentFailure)
{
    auto env = gops_env(3);
    auto boom = std::make_shared<ExternalAgent>([](const Decision&) -> Json { throw std::runtime_error("boom"); });
    try {
        run_match(*env, {random_seat("r", 1), {"x", boom}}, 0);
        FAIL() << "expected AgentFailure";
    } catch (const AgentFailure& e) {
        EXPECT_NE(std::string(e.what()).find("seat 1 (x) failed at step 2: boom"), std::string::npos) << e.what();
    }
}

TEST(RunMatch, RejectsBadSeating)
{
    auto env = gops_env(3);
    EXPECT_THROW(run_match(*env, {random_seat("r", 1)}, 0), BadConfig);
    EXPECT_THROW(run_match(*env, {random_seat("r", 1), {"none", nullptr}}, 0), BadConfig);
}

TEST(RunMatch, StepCapIsEnforced)
{
    auto env = gops_env(4);
    MatchOptions options;
    options.step_cap = 5;
    EXPECT_THROW(run_match(*env, {random_seat("a", 1), random_seat("b", 2)}, 0, options), BudgetExceeded);
}

TEST(RunMatch, AgentsSeeOnlyTheirPartition)
{
    auto env = gops_env(6);
    auto audit = std::make_shared<AuditingAgent>(std::make_shared<RandomAgent>(5));
    auto r = run_match(*env, {random_seat("r", 3), {"audited", audit}}, 42);
    const auto inputs = audit->inputs();
    ASSERT_EQ(inputs.size(), 6u);

    // Replay the trace and compare what the agent was shown with the truth.
    auto state = env->initial(42);
    std::size_t seen = 0;
    for (const auto& e : r.events) {
        if (e.terminal())
            break;
        if (*e.actor == ActorId::player(1)) {
            const auto& d = inputs.at(seen++);
            EXPECT_EQ(d.seat, ActorId::player(1));
            EXPECT_EQ(d.observation, env->partition(state, ActorId::player(1)));
            EXPECT_EQ(d.legal, env->enumerate(state).actions);
            EXPECT_TRUE(d.observation.at("opponent_committed").get<bool>());
            EXPECT_TRUE(d.observation.at("pending").is_null());
            // Any other committed card of player 0 yields the same view.
            const auto round_start = env->realize(env->partition(state, ActorId::player(0)));
            for (const auto& card : env->enumerate(round_start).actions) {
                auto alt = env->transition(round_start, card, ActorId::player(0)).state;
                EXPECT_EQ(env->partition(alt, ActorId::player(1)), d.observation);
            }
        }
        state = env->transition(state, e.action, *e.actor).state;
    }
    EXPECT_EQ(seen, inputs.size());
}

TEST(RunMatch, DecisionSeedsAndTurnsAreDerived)
{
    auto env = gops_env(3, {1, 2, 3});
    auto audit = std::make_shared<AuditingAgent>(std::make_shared<ScriptedAgent>(actions({1, 2, 3})));
    run_match(*env, {{"a", audit}, scripted("b", {1, 2, 3})}, 9);
    const auto inputs = audit->inputs();
    ASSERT_EQ(inputs.size(), 3u);
    for (int t = 0; t < 3; ++t) {
        EXPECT_EQ(inputs[t].turn, t);
        // Player 0 moves at steps 1, 4, 7.
        EXPECT_EQ(inputs[t].seed, derive_seed(9, static_cast<std::uint64_t>(1 + 3 * t)));
    }
}

TEST(Stats, BinomialStderr)
{
    // 120 wins of 200: sqrt(0.6 * 0.4 / 200) = sqrt(0.0012).
    EXPECT_NEAR(binomial_stderr(0.6, 200), 0.034641016151377546, 1e-12);
    EXPECT_EQ(binomial_stderr(0.5, 0), 0.0);
    EXPECT_EQ(binomial_stderr(1.0, 10), 0.0);
}

TEST(Stats, SeriesStatsBookkeeping)
{
    std::vector<MatchRecord> records{
        record({"a", "b"}, {10, 5}),  // a wins from seat 0
        record({"b", "a"}, {3, 12}),  // a wins from seat 1
        record({"a", "b"}, {4, 4}),   // tie
        record({"b", "a"}, {9, 2}),   // b wins from seat 0
    };
    auto s = series_stats(records, {"a", "b"});
    EXPECT_EQ(s.n_games, 4);
    EXPECT_EQ(s.ties, 1);
    EXPECT_FALSE(s.cooperative);
    const auto& a = s.agents[0];
    EXPECT_EQ(a.id, "a");
    EXPECT_EQ(a.games, 4);
    EXPECT_EQ(a.wins, 2);
    EXPECT_DOUBLE_EQ(a.winrate, 0.5);
    EXPECT_DOUBLE_EQ(a.winrate_stderr, std::sqrt(0.25 / 4));
    // Differences: +5, +9, 0, -7.
    EXPECT_DOUBLE_EQ(a.mean_score, 7.0 / 4);
    EXPECT_EQ(a.seat_games, (std::vector<int>{2, 2}));
    EXPECT_EQ(a.seat_wins, (std::vector<int>{1, 1}));
    const auto& b = s.agents[1];
    EXPECT_EQ(b.wins, 1);
    EXPECT_DOUBLE_EQ(b.mean_score, -7.0 / 4);
    EXPECT_EQ(b.seat_wins, (std::vector<int>{1, 0}));

    EXPECT_THROW(series_stats(records, {"a", "c"}), Inconsistent);
}

TEST(Stats, CooperativeSeriesReportsTeamScore)
{
    std::vector<MatchRecord> records{record({"cm", "g"}, {5, 5}, true), record({"cm", "g"}, {3, 3}, true)};
    auto s = series_stats(records, {"cm", "g"});
    EXPECT_TRUE(s.cooperative);
    EXPECT_EQ(s.ties, 0);
    for (const auto& a : s.agents) {
        EXPECT_EQ(a.wins, 1);
        EXPECT_DOUBLE_EQ(a.mean_score, 4.0);
    }
}

TEST(Stats, TableAndJson)
{
    auto s = series_stats({record({"alpha", "beta"}, {10, 5}), record({"beta", "alpha"}, {6, 6})}, {"alpha", "beta"});
    const auto table = format_table(s);
    EXPECT_NE(table.find("alpha"), std::string::npos);
    EXPECT_NE(table.find("beta"), std::string::npos);
    EXPECT_NE(table.find("50.0"), std::string::npos);
    EXPECT_NE(table.find("Ties: 1"), std::string::npos);
    Json j = s;
    EXPECT_EQ(j.at("n_games"), 2);
    EXPECT_EQ(j.at("agents").at(0).at("id"), "alpha");
    EXPECT_EQ(j.at("agents").at(0).at("wins"), 1);
}

TEST(Series, AlternatesSeatsAndSeeds)
{
    auto env = gops_env(4);
    SeriesSpec spec;
    spec.n_games = 6;
    spec.base_seed = 100;
    auto result = run_series(*env, {random_seat("a", 1), random_seat("b", 2)}, spec);
    ASSERT_EQ(result.records.size(), 6u);
    for (int i = 0; i < 6; ++i) {
        const auto& r = result.records[static_cast<std::size_t>(i)];
        EXPECT_EQ(r.seed, 100u + static_cast<std::uint64_t>(i));
        const auto expected = i % 2 == 0 ? std::vector<std::string>{"a", "b"} : std::vector<std::string>{"b", "a"};
        EXPECT_EQ(r.seats, expected);
    }
    EXPECT_EQ(result.stats.agents[0].seat_games, (std::vector<int>{3, 3}));

    spec.alternate_seats = false;
    for (const auto& r : run_series(*env, {random_seat("a", 1), random_seat("b", 2)}, spec).records)
        EXPECT_EQ(r.seats, (std::vector<std::string>{"a", "b"}));
}

TEST(Series, ParallelRunsMatchSerialRuns)
{
    auto env = gops_env(5);
    SeriesSpec spec;
    spec.n_games = 12;
    spec.base_seed = 3;
    auto serial = run_series(*env, {random_seat("a", 1), random_seat("b", 2)}, spec);
    spec.parallel = 4;
    auto parallel = run_series(*env, {random_seat("a", 1), random_seat("b", 2)}, spec);
    EXPECT_EQ(serial.records, parallel.records);
    spec.n_games = 0;
    EXPECT_THROW(run_series(*env, {random_seat("a", 1), random_seat("b", 2)}, spec), BadConfig);
}

TEST(Series, RandomVsRandomIsBalanced)
{
    auto env = gops_env(6);
    SeriesSpec spec;
    spec.n_games = 400;
    auto result = run_series(*env, {random_seat("a", 1), random_seat("b", 2)}, spec);
    std::array<double, 2> seat_points{};
    for (const auto& r : result.records) {
        if (r.outcome.kind == Outcome::Kind::Tie) {
            seat_points[0] += 0.5;
            seat_points[1] += 0.5;
        } else {
            seat_points[static_cast<std::size_t>(r.outcome.winner)] += 1.0;
        }
    }
    // Binomial 3-sigma bound for 400 fair games.
    EXPECT_NEAR(seat_points[0] / 400, 0.5, 0.075);
    EXPECT_NEAR(result.stats.agents[0].mean_score, 0.0, 1.5);
}

TEST(Agents, MctsAgentPlaysLegalDeterministicMoves)
{
    auto model = std::make_shared<const gops::GopsModel>(gops::GopsConfig{4, {}, gops::TieRule::CarryPot});
    JsonAdapter<gops::GopsModel> env(model);
    mcts::SearchConfig config;
    config.iterations = 50;
    auto agent = std::make_shared<MctsAgent<gops::GopsModel>>(model, config);
    auto r1 = run_match(env, {{"mcts", agent}, random_seat("r", 4)}, 8);
    auto r2 = run_match(env, {{"mcts", agent}, random_seat("r", 4)}, 8);
    EXPECT_EQ(r1, r2);
    EXPECT_TRUE(r1.events.back().terminal());
}

TEST(AgentSpec, JsonAndValidation)
{
    AgentSpec spec;
    spec.id = "m";
    spec.kind = "mcts";
    spec.search.iterations = 7;
    spec.seed = 3;
    auto back = Json(spec).get<AgentSpec>();
    EXPECT_EQ(back.id, "m");
    EXPECT_EQ(back.search.iterations, 7);
    EXPECT_EQ(back.seed, 3u);

    EXPECT_EQ((Json{{"kind", "random"}}.get<AgentSpec>().id), "random");
    EXPECT_THROW((Json{{"kind", "oracle"}}.get<AgentSpec>()), BadConfig);
    EXPECT_THROW((Json{{"kind", "direct_policy"}}.get<AgentSpec>()), BadConfig);
    EXPECT_THROW((Json{{"kind", "scripted"}}.get<AgentSpec>()), BadConfig);
    EXPECT_THROW((Json{{"kind", "mcts"}, {"search", {{"iterations", 0}}}}.get<AgentSpec>()), BadConfig);
}

TEST(Agents, ScriptedAndRandom)
{
    ScriptedAgent s(actions({4, 2}));
    Decision d;
    d.turn = 1;
    EXPECT_EQ(s.act(d), Json(2));
    d.turn = 2;
    EXPECT_THROW(s.act(d), IllegalAction);

    RandomAgent r(7);
    d.legal = actions({1, 2, 3});
    d.seed = 5;
    const auto first = r.act(d);
    EXPECT_EQ(r.act(d), first);
    d.legal.clear();
    EXPECT_THROW(r.act(d), IllegalAction);
}

TEST(Trace, RoundTrip)
{
    auto env = gops_env(4);
    SeriesSpec spec;
    spec.n_games = 3;
    auto records = run_series(*env, {random_seat("a", 1), random_seat("b", 2)}, spec).records;
    const auto path = temp_path("roundtrip.jsonl");
    write_trace(records, path);
    EXPECT_EQ(read_trace(path), records);

    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line))
        ++lines;
    EXPECT_EQ(lines, 3);
    std::filesystem::remove(path);
}

TEST(Trace, MalformedInput)
{
    const auto empty = temp_path("empty.jsonl");
    std::ofstream(empty).close();
    EXPECT_TRUE(read_trace(empty).empty());

    auto env = gops_env(3);
    auto r = run_match(*env, {random_seat("a", 1), random_seat("b", 2)}, 0);
    const auto truncated = temp_path("truncated.jsonl");
    {
        std::ofstream out(truncated);
        const auto line = Json(r).dump();
        out << line << '\n' << line.substr(0, line.size() / 2) << '\n';
    }
    try {
        read_trace(truncated);
        FAIL() << "expected ParseFailure";
    } catch (const ParseFailure& e) {
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(read_trace(temp_path("missing-dir/none.jsonl")), IoFailure);
    EXPECT_THROW(write_trace({r}, "/nonexistent-dir/x.jsonl"), IoFailure);
    std::filesystem::remove(empty);
    std::filesystem::remove(truncated);
}
