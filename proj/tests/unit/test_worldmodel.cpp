#include <gtest/gtest.h>

#include "pianist/worldmodel/canonical.hpp"
#include "pianist/worldmodel/json_model.hpp"
#include "pianist/worldmodel/model.hpp"
#include "pianist/worldmodel/trajectory.hpp"
#include "toy_games.hpp"

using namespace pianist;

TEST(ActorId, EnvironmentIsMinusOne)
{
    EXPECT_EQ(ActorId::environment().raw(), -1);
    EXPECT_TRUE(ActorId::environment().is_environment());
    EXPECT_EQ(ActorId::player(1).index(), 1);
    EXPECT_EQ(ActorId::from_raw(-1), ActorId::environment());
    EXPECT_EQ(ActorId::from_raw(0), ActorId::player(0));
    EXPECT_THROW(ActorId::player(-2), std::invalid_argument);
    EXPECT_THROW(ActorId::environment().index(), std::logic_error);
}

TEST(ActorId, JsonRoundTrip)
{
    Json j = ActorId::player(3);
    EXPECT_EQ(j, 3);
    EXPECT_EQ(Json(-1).get<ActorId>(), ActorId::environment());
    EXPECT_THROW(Json("x").get<ActorId>(), Inconsistent);
}

TEST(Errors, ThrowErrorKeepsType)
{
    EXPECT_THROW(throw_error("IllegalAction", "m"), IllegalAction);
    EXPECT_THROW(throw_error("WrongActor", "m"), WrongActor);
    try {
        throw_error("Custom", "message");
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "Custom");
        EXPECT_STREQ(e.what(), "message");
    }
}

TEST(Canonical, SortedCompactKeys)
{
    Json j = Json::parse(R"({"b": [1, 2], "a": 1})");
    EXPECT_EQ(canonical_dump(j), R"({"a":1,"b":[1,2]})");
}

TEST(Canonical, DigestsMatchReferenceBlake2b)
{
    // Reference values from an independent BLAKE2b implementation.
    EXPECT_EQ(digest128_hex("hello"), "46fb7408d4f285228f4af516ea25851b");
    EXPECT_EQ(digest128_hex(R"({"a":1,"b":[1,2]})"), "dfa78bb8697a5e09925c310f8b18bc8c");
    Json j = Json::parse(R"({"b": [1, 2], "a": 1})");
    EXPECT_EQ(state_digest(j), 0xdfa78bb8697a5e09ULL);
    EXPECT_EQ(digest_hex(state_digest(j)), "dfa78bb8697a5e09");
    EXPECT_EQ(digest_hex(1), "0000000000000001");
}

TEST(Canonical, DeriveSeedSeparatesStreams)
{
    EXPECT_EQ(derive_seed(7, 1, 2), derive_seed(7, 1, 2));
    EXPECT_NE(derive_seed(7, 1, 2), derive_seed(7, 2, 1));
    EXPECT_NE(derive_seed(7, 1), derive_seed(8, 1));
}

TEST(Sampling, WeightedIndexFollowsWeights)
{
    Rng rng(3);
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 30000; ++i)
        ++counts[weighted_index(rng, {0.0, 1.0, 3.0})];
    EXPECT_EQ(counts[0], 0);
    EXPECT_NEAR(counts[2] / 30000.0, 0.75, 0.02);
    EXPECT_LT(weighted_index(rng, {0.0, 0.0}), 2u);
    EXPECT_THROW(weighted_index(rng, {}), std::invalid_argument);
}

TEST(Rollout, TerminalStateGivesZeros)
{
    toy::MatrixGame game({{{{{1, 2}, {1, 2}}}, {{{1, 2}, {1, 2}}}}});
    auto v = rollout_evaluate(toy::MatrixState{0, 1}, game, 9, 1.0);
    EXPECT_EQ(v, (Rewards{0.0, 0.0}));
}

TEST(Rollout, DiscountsLaterRewards)
{
    toy::MatrixGame game({{{{{1, 2}, {1, 2}}}, {{{1, 2}, {1, 2}}}}});
    // The payoff arrives on the second step, so it is weighted by gamma once.
    auto v = rollout_evaluate(toy::MatrixState{}, game, 5, 0.5);
    EXPECT_DOUBLE_EQ(v[0], 0.5);
    EXPECT_DOUBLE_EQ(v[1], 1.0);
    EXPECT_THROW(rollout_evaluate(toy::MatrixState{}, game, 5, 0.0), BadConfig);
    EXPECT_THROW(rollout_evaluate(toy::MatrixState{}, game, 5, 1.0, 1), BudgetExceeded);
}

TEST(Rollout, DeterministicGivenSeed)
{
    toy::MatrixGame game({{{{{1, 0}, {0, 1}}}, {{{0, 1}, {1, 0}}}}});
    for (std::uint64_t seed = 0; seed < 50; ++seed)
        EXPECT_EQ(rollout_evaluate(toy::MatrixState{}, game, seed, 1.0),
                  rollout_evaluate(toy::MatrixState{}, game, seed, 1.0));
}

TEST(Trajectory, JsonRoundTrip)
{
    TrajectoryEvent move{0xabcdefULL, ActorId::player(1), Json(3), {0.0, 5.0}, 4};
    TrajectoryEvent end{0x1ULL, std::nullopt, Json(), {0.0, 0.0}, 5};
    for (const auto& e : {move, end}) {
        Json j = e;
        EXPECT_EQ(j.get<TrajectoryEvent>(), e);
    }
    EXPECT_EQ(Json(end)["actor"], "terminal");
}

TEST(JsonModel, AdapterMatchesTypedModel)
{
    auto game = std::make_shared<const toy::MatrixGame>(
        toy::Payoffs{{{{{1, 0}, {0, 1}}}, {{{2, 0}, {0, 2}}}}});
    JsonAdapter<toy::MatrixGame> adapter(game);
    DynamicModel dynamic(std::make_shared<JsonAdapter<toy::MatrixGame>>(game));

    Json s = adapter.initial(0);
    auto options = dynamic.enumerate(s);
    ASSERT_EQ(options.actor, ActorId::player(0));
    EXPECT_EQ(options.actions, (std::vector<Json>{0, 1}));
    auto step = dynamic.transition(s, 1, ActorId::player(0));
    step = dynamic.transition(step.state, 1, ActorId::player(1));
    EXPECT_EQ(step.rewards, (Rewards{0.0, 2.0}));
    EXPECT_TRUE(dynamic.enumerate(step.state).terminal());
    EXPECT_THROW(dynamic.transition(Json("garbage"), 0, ActorId::player(0)), Inconsistent);
}
