#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "pianist/gateway/conformance.hpp"
#include "pianist/gateway/direct_policy.hpp"
#include "pianist/gateway/host.hpp"
#include "pianist/gateway/provider.hpp"
#include "pianist/gops/gops.hpp"
#include "pianist/mcts/search.hpp"
#include "pianist/worldmodel/canonical.hpp"

using namespace pianist;
using namespace pianist::gateway;

namespace {

const std::string kHost = PIANIST_HOST_PATH;

std::filesystem::path temp_file(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / "pianist-gateway-test";
    std::filesystem::create_directories(dir);
    auto path = dir / name;
    std::filesystem::remove(path);
    return path;
}

ProviderConfig scripted_config(std::vector<std::string> script)
{
    ProviderConfig c;
    c.script = std::move(script);
    return c;
}

std::shared_ptr<const JsonWorldModel> gops_json(gops::TieRule rule = gops::TieRule::CarryPot, int k = 4)
{
    gops::GopsConfig c;
    c.k = k;
    c.tie_rule = rule;
    return std::make_shared<JsonAdapter<gops::GopsModel>>(std::make_shared<const gops::GopsModel>(c));
}

std::string host_command(const std::string& flags = "") { return "'" + kHost + "' --k 4 " + flags; }

// Minimal chat-completions endpoint on a random local port.
class MockEndpoint {
public:
    MockEndpoint()
    {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            requests.push_back(Json::parse(req.body));
            auth.push_back(req.get_header_value("Authorization"));
            if (status != 200) {
                res.status = status;
                return;
            }
            if (delay_ms)
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            const auto n = requests.size();
            Json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "reply " + std::to_string(n)}}}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        port = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockEndpoint()
    {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"; }

    int port = 0;
    int status = 200;
    int delay_ms = 0;
    std::vector<Json> requests;
    std::vector<std::string> auth;

private:
    httplib::Server server_;
    std::thread thread_;
    std::mutex mutex_;
};

ConformanceSuite small_suite()
{
    ConformanceSuite s;
    s.fuzz_playouts = 12;
    s.seed = 5;
    return s;
}

} // namespace

// Providers --------------------------------------------------------------------

TEST(ProviderConfig, Validation)
{
    ProviderConfig live;
    live.kind = ProviderKind::Live;
    EXPECT_THROW(live.validate(), BadConfig);
    live.endpoint = "http://localhost:1/v1/chat/completions";
    live.validate();
    live.max_actions = 0;
    EXPECT_THROW(live.validate(), BadConfig);

    ProviderConfig replay;
    replay.kind = ProviderKind::Replay;
    EXPECT_THROW(replay.validate(), BadConfig);

    auto j = Json::parse(R"({"kind":"replay","fixture_path":"x.jsonl","max_actions":3,
                             "fallback":{"kind":"scripted","script":["a"]}})");
    auto c = j.get<ProviderConfig>();
    EXPECT_EQ(c.kind, ProviderKind::Replay);
    ASSERT_TRUE(c.fallback);
    EXPECT_EQ(c.fallback->script, std::vector<std::string>{"a"});
    EXPECT_EQ(Json(c).get<ProviderConfig>().max_actions, 3);
    EXPECT_THROW(Json::parse(R"({"kind":"psychic"})").get<ProviderConfig>(), BadConfig);
}

TEST(PromptDigest, StableValues)
{
    EXPECT_EQ(prompt_digest("sys", "user", 2), "ff8072689e83550af97efe97d62762f2");
    EXPECT_EQ(prompt_digest("", "", 1), "1b1411c00977377b87e27c145360d462");
    EXPECT_NE(prompt_digest("sys", "user", 1), prompt_digest("sys", "user", 2));
}

TEST(ScriptedProvider, CyclesResponses)
{
    ScriptedProvider p(scripted_config({"a", "b"}));
    EXPECT_EQ(p.generate_k_responses("s", "u", 2), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(p.generate_k_responses("s", "u", 3), (std::vector<std::string>{"a", "b", "a"}));
    EXPECT_EQ(p.generate_decision("s", "u"), "b");
    EXPECT_THROW(p.generate_k_responses("s", "u", 5), KExceeded);
    EXPECT_THROW(p.generate_k_responses("s", "u", 0), KExceeded);
}

TEST(ScriptedProvider, ByPrompt)
{
    auto c = scripted_config({"default"});
    c.script_mode = "by_prompt";
    c.script_by_prompt["hello"] = {"x", "y"};
    ScriptedProvider p(c);
    EXPECT_EQ(p.generate_k_responses("s", "hello", 2), (std::vector<std::string>{"x", "y"}));
    EXPECT_EQ(p.generate_k_responses("s", "other", 1), std::vector<std::string>{"default"});
    EXPECT_THROW(p.generate_k_responses("s", "hello", 3), ProviderFailure);
}

TEST(ReplayProvider, ServesAndMisses)
{
    auto path = temp_file("replay.jsonl");
    append_fixture(path, {prompt_digest("s", "u", 2), "s", "u", 2, {"one", "two"}});
    ProviderConfig c;
    c.kind = ProviderKind::Replay;
    c.fixture_path = path.string();
    ReplayProvider p(c);
    EXPECT_EQ(p.size(), 1u);
    EXPECT_EQ(p.generate_k_responses("s", "u", 2), (std::vector<std::string>{"one", "two"}));
    try {
        p.generate_k_responses("s", "u", 1);
        FAIL() << "expected a miss";
    } catch (const FixtureMiss& e) {
        EXPECT_NE(std::string(e.what()).find(prompt_digest("s", "u", 1)), std::string::npos);
    }
}

TEST(ReplayProvider, RejectsTamperedDigest)
{
    auto path = temp_file("tampered.jsonl");
    append_fixture(path, {"00000000000000000000000000000000", "s", "u", 1, {"x"}});
    ProviderConfig c;
    c.kind = ProviderKind::Replay;
    c.fixture_path = path.string();
    EXPECT_THROW(ReplayProvider{c}, ProviderFailure);
    c.fixture_path = (path.parent_path() / "missing.jsonl").string();
    EXPECT_THROW(ReplayProvider{c}, ProviderFailure);
}

TEST(ReplayProvider, FallbackRecordsFixtures)
{
    auto fixture = temp_file("authored.jsonl");
    ProviderConfig c;
    c.kind = ProviderKind::Replay;
    c.fixture_path = fixture.string();
    c.record_path = fixture.string();
    c.fallback = std::make_shared<ProviderConfig>(scripted_config({"p", "q"}));
    auto p = make_provider(c);
    EXPECT_EQ(p->generate_k_responses("s", "u", 2), (std::vector<std::string>{"p", "q"}));
    EXPECT_EQ(p->generate_k_responses("s", "u", 2), (std::vector<std::string>{"p", "q"}));

    ProviderConfig strict;
    strict.kind = ProviderKind::Replay;
    strict.fixture_path = fixture.string();
    ReplayProvider replay(strict);
    EXPECT_EQ(replay.size(), 1u);
    EXPECT_EQ(replay.generate_k_responses("s", "u", 2), (std::vector<std::string>{"p", "q"}));
}

TEST(LiveProvider, SpeaksChatCompletions)
{
    MockEndpoint endpoint;
    ::setenv("PIANIST_TEST_KEY", "secret", 1);
    ProviderConfig c;
    c.kind = ProviderKind::Live;
    c.endpoint = endpoint.url();
    c.model_name = "test-model";
    c.api_key_env = "PIANIST_TEST_KEY";
    c.record_path = temp_file("live.jsonl").string();
    LiveProvider p(c);
    EXPECT_EQ(p.generate_k_responses("sys", "usr", 2), (std::vector<std::string>{"reply 1", "reply 2"}));
    EXPECT_EQ(p.generate_decision("sys", "decide"), "reply 3");

    ASSERT_EQ(endpoint.requests.size(), 3u);
    const auto& body = endpoint.requests[0];
    EXPECT_EQ(body.at("model"), "test-model");
    EXPECT_EQ(body.at("n"), 1);
    EXPECT_DOUBLE_EQ(body.at("temperature").get<double>(), 0.7);
    EXPECT_EQ(body.at("messages").at(0).at("role"), "system");
    EXPECT_EQ(body.at("messages").at(1).at("content"), "usr");
    EXPECT_DOUBLE_EQ(endpoint.requests[2].at("temperature").get<double>(), 0.0);
    EXPECT_EQ(endpoint.auth[0], "Bearer secret");

    ProviderConfig replay;
    replay.kind = ProviderKind::Replay;
    replay.fixture_path = c.record_path;
    ReplayProvider recorded(replay);
    EXPECT_EQ(recorded.generate_k_responses("sys", "usr", 2), (std::vector<std::string>{"reply 1", "reply 2"}));
    EXPECT_EQ(recorded.generate_decision("sys", "decide"), "reply 3");
}

TEST(LiveProvider, Failures)
{
    MockEndpoint endpoint;
    ProviderConfig c;
    c.kind = ProviderKind::Live;
    c.endpoint = endpoint.url();
    c.api_key_env = "PIANIST_TEST_UNSET_KEY";
    ::unsetenv("PIANIST_TEST_UNSET_KEY");
    EXPECT_THROW(LiveProvider(c).generate_k_responses("s", "u", 1), ProviderFailure);

    ::setenv("PIANIST_TEST_KEY", "secret", 1);
    c.api_key_env = "PIANIST_TEST_KEY";
    endpoint.status = 500;
    EXPECT_THROW(LiveProvider(c).generate_k_responses("s", "u", 1), ProviderFailure);

    endpoint.status = 200;
    endpoint.delay_ms = 600;
    c.timeout_ms = 100;
    EXPECT_THROW(LiveProvider(c).generate_k_responses("s", "u", 1), ProviderFailure);

    c.endpoint = "ftp://nowhere";
    EXPECT_THROW(LiveProvider{c}, BadConfig);
}

// Direct policy ------------------------------------------------------------------

TEST(DirectPolicy, ParsesFinalActionLine)
{
    ScriptedProvider p(scripted_config({"Thought: the middle card is safe.\nAction: 3"}));
    auto d = direct_policy_decide(p, "GOPS", Json{{"hand", {1, 3, 5}}}, {1, 3, 5});
    EXPECT_EQ(d.action, 3);
    EXPECT_FALSE(d.fell_back);
    EXPECT_EQ(d.responses.size(), 1u);
}

TEST(DirectPolicy, LastActionLineWins)
{
    std::vector<Json> legal{"ground", "barefoot"};
    EXPECT_EQ(parse_decision("Action: ground\nActually...\naction: **Barefoot**", legal), Json("barefoot"));
    EXPECT_FALSE(parse_decision("I pick ground", legal));
}

TEST(DirectPolicy, RetriesThenFallsBack)
{
    ScriptedProvider twice(scripted_config({"no idea", "Thought: hmm\nAction: 5"}));
    auto d = direct_policy_decide(twice, "GOPS", Json::object(), {1, 3, 5});
    EXPECT_EQ(d.action, 5);
    EXPECT_EQ(d.responses.size(), 2u);
    EXPECT_FALSE(d.fell_back);

    ScriptedProvider never(scripted_config({"Action: 4", "Thought: ..."}));
    d = direct_policy_decide(never, "GOPS", Json::object(), {1, 3, 5});
    EXPECT_EQ(d.action, 1);
    EXPECT_TRUE(d.fell_back);

    EXPECT_THROW(direct_policy_decide(never, "GOPS", Json::object(), {}), IllegalAction);
}

TEST(DirectPolicy, PromptListsLegalActions)
{
    auto p = decision_prompt("GOPS", Json{{"hand", {1, 2}}}, {1, 2});
    EXPECT_NE(p.user.find("Legal actions: 1, 2"), std::string::npos);
    EXPECT_NE(p.user.find("{\"hand\":[1,2]}"), std::string::npos);
    EXPECT_NE(p.user.find("Action:"), std::string::npos);
}

// Host protocol -------------------------------------------------------------------

TEST(HostServer, AnswersRequests)
{
    auto model = gops_json();
    std::istringstream in(R"({"id":1,"method":"initial","params":{"seed":3}}
{"id":2,"method":"enumerate","params":{"state":null}}
{"id":3,"method":"teleport","params":{}}
not json
{"id":4,"method":"shutdown"}
{"id":5,"method":"initial","params":{}}
)");
    std::ostringstream out;
    EXPECT_EQ(serve_model(*model, in, out), 4u);
    std::istringstream lines(out.str());
    std::string line;
    std::vector<Json> replies;
    while (std::getline(lines, line))
        replies.push_back(Json::parse(line));
    ASSERT_EQ(replies.size(), 6u);
    EXPECT_EQ(replies[0].at("protocol"), kModelProtocol);
    EXPECT_EQ(replies[0].at("game"), "gops");
    EXPECT_EQ(replies[1].at("result"), model->initial(3));
    EXPECT_EQ(replies[2].at("error").at("code"), "Inconsistent");
    EXPECT_EQ(replies[3].at("error").at("code"), "ProtocolViolation");
    EXPECT_EQ(replies[4].at("error").at("code"), "ProtocolViolation");
    EXPECT_TRUE(replies[5].at("ok").get<bool>());
}

TEST(HostedModel, MatchesInProcessModel)
{
    auto local = gops_json();
    HostedModel hosted({host_command(), 5000});
    EXPECT_EQ(hosted.info().game, "gops");
    EXPECT_EQ(hosted.info().players, 2);
    ASSERT_TRUE(hosted.info().value_bounds);

    Rng rng(9);
    auto s = local->initial(9);
    EXPECT_EQ(hosted.initial(9), s);
    for (;;) {
        auto e = local->enumerate(s);
        auto he = hosted.enumerate(s);
        EXPECT_EQ(he.actor, e.actor);
        EXPECT_EQ(he.actions, e.actions);
        EXPECT_EQ(hosted.evaluate(s).values, local->evaluate(s).values);
        EXPECT_EQ(hosted.banked(s), local->banked(s));
        for (int p = 0; p < 2; ++p) {
            auto h = local->partition(s, ActorId::player(p));
            EXPECT_EQ(hosted.partition(s, ActorId::player(p)), h);
            EXPECT_EQ(hosted.realize(h), local->realize(h));
        }
        if (e.terminal())
            break;
        const auto& a = e.actions[uniform_index(rng, e.actions.size())];
        auto step = local->transition(s, a, *e.actor);
        auto hstep = hosted.transition(s, a, *e.actor);
        EXPECT_EQ(hstep.state, step.state);
        EXPECT_EQ(hstep.rewards, step.rewards);
        s = step.state;
    }
    hosted.close();
    EXPECT_FALSE(hosted.alive());
    EXPECT_THROW(hosted.initial(0), ProtocolViolation);
}

TEST(HostedModel, RemoteErrorsKeepTheirType)
{
    HostedModel hosted({host_command(), 5000});
    auto s = hosted.initial(0);
    EXPECT_THROW(hosted.transition(s, 99, ActorId::environment()), IllegalAction);
    EXPECT_THROW(hosted.transition(s, 1, ActorId::player(1)), WrongActor);
    EXPECT_TRUE(hosted.alive());
}

TEST(HostedModel, SearchResultsMatchInProcess)
{
    gops::GopsConfig config;
    config.k = 4;
    gops::GopsModel typed(config);
    DynamicModel dynamic(host_model({host_command(), 5000}));

    mcts::SearchConfig sc;
    sc.iterations = 200;
    sc.seed = 17;
    auto s = typed.transition(typed.initial(0), 2, ActorId::environment()).state;
    auto local = mcts::search(typed.partition(s, ActorId::player(0)), typed, sc);
    auto remote = mcts::search(dynamic.partition(Json(s), ActorId::player(0)), dynamic, sc);
    EXPECT_EQ(Json(local.best_action), remote.best_action);
    EXPECT_EQ(local.root_visits, remote.root_visits);
    EXPECT_EQ(local.root_values, remote.root_values);
    ASSERT_EQ(local.action_stats.size(), remote.action_stats.size());
    for (std::size_t i = 0; i < local.action_stats.size(); ++i) {
        EXPECT_EQ(Json(local.action_stats[i].action), remote.action_stats[i].action);
        EXPECT_EQ(local.action_stats[i].visits, remote.action_stats[i].visits);
        EXPECT_EQ(local.action_stats[i].mean_value, remote.action_stats[i].mean_value);
    }
}

TEST(HostedModel, ProtocolFailures)
{
    EXPECT_THROW(HostedModel({"exit 3", 2000}), SpawnFailure);
    EXPECT_THROW(HostedModel({"/nonexistent/host-binary", 2000}), SpawnFailure);
    EXPECT_THROW(HostedModel({R"(echo '{"protocol":"pianist-model/2","game":"g","players":2}'; cat)", 2000}),
                 ProtocolViolation);
    EXPECT_THROW(HostedModel({"echo hello; cat", 2000}), ProtocolViolation);
    EXPECT_THROW(HostedModel({"sleep 5", 200}), Timeout);
    EXPECT_THROW(HostedModel({"", 200}), BadConfig);

    const std::string handshake = R"(echo '{"protocol":"pianist-model/1","game":"g","players":2}'; )";
    HostedModel garbled({handshake + "read line; echo 'garbage line'; sleep 5", 2000});
    try {
        garbled.initial(0);
        FAIL() << "expected a protocol violation";
    } catch (const ProtocolViolation& e) {
        EXPECT_NE(std::string(e.what()).find("garbage line"), std::string::npos);
    }
    EXPECT_FALSE(garbled.alive());

    HostedModel wrong_id({handshake + R"(read line; echo '{"id":99,"ok":true,"result":1}'; sleep 5)", 2000});
    EXPECT_THROW(wrong_id.initial(0), ProtocolViolation);

    HostedModel silent({handshake + "sleep 5", 200});
    EXPECT_THROW(silent.initial(0), Timeout);
    EXPECT_FALSE(silent.alive());
}

// Conformance --------------------------------------------------------------------

TEST(Conformance, ReferencePassesAgainstItself)
{
    auto reference = gops_json();
    auto report = validate_model(*reference, *reference, small_suite());
    EXPECT_TRUE(report.passed());
    EXPECT_EQ(report.attempts, 0);
    ASSERT_EQ(report.stages.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(report.stages[i].name, conformance_stages()[i]);
        EXPECT_TRUE(report.stages[i].exemplars.empty());
    }
}

TEST(Conformance, TieRuleMutantFailsTransition)
{
    auto reference = gops_json();
    auto mutant = gops_json(gops::TieRule::Discard);
    auto report = validate_model(*mutant, *reference, small_suite());
    ASSERT_FALSE(report.passed());
    ASSERT_EQ(report.stages.size(), 3u);
    const auto& stage = report.stages.back();
    EXPECT_EQ(stage.name, "transition");
    ASSERT_FALSE(stage.exemplars.empty());
    EXPECT_LE(stage.exemplars.size(), kMaxExemplars);
    for (const auto& e : stage.exemplars) {
        // Every disagreement is player 1 matching player 0's committed card.
        EXPECT_EQ(e.input.at("actor"), 1);
        EXPECT_EQ(e.input.at("state").at("pending").at(0), e.input.at("action"));
    }
}

TEST(Conformance, LeakyMutantFailsPartition)
{
    auto reference = gops_json();
    HostedModel leaky({host_command("--leaky-partition"), 5000});
    auto report = validate_model(leaky, *reference, small_suite());
    ASSERT_FALSE(report.passed());
    ASSERT_EQ(report.stages.size(), 4u);
    EXPECT_EQ(report.failure()->name, "partition");
    EXPECT_TRUE(report.failure()->exemplars.front().got.contains("opponent_pending"));
}

TEST(Conformance, HostedTieMutantFailsTransition)
{
    auto reference = gops_json();
    HostedModel mutant({host_command("--tie-rule discard"), 5000});
    auto report = validate_model(mutant, *reference, small_suite());
    ASSERT_FALSE(report.passed());
    EXPECT_EQ(report.failure()->name, "transition");
}

TEST(Conformance, MismatchedGameFailsFirstStage)
{
    auto reference = gops_json();
    auto other = gops_json(gops::TieRule::CarryPot, 5);
    auto report = validate_model(*other, *reference, small_suite());
    ASSERT_EQ(report.stages.size(), 1u);
    EXPECT_FALSE(report.passed());
}

TEST(Conformance, ReportJson)
{
    auto reference = gops_json();
    Json j = validate_model(*gops_json(gops::TieRule::Discard), *reference, small_suite());
    EXPECT_FALSE(j.at("passed").get<bool>());
    EXPECT_EQ(j.at("stages").size(), 3u);
    EXPECT_TRUE(j.at("stages").at(2).at("exemplars").at(0).contains("expected"));
}

TEST(Reflexion, MutantThenReference)
{
    auto reference = gops_json();
    std::vector<std::shared_ptr<const JsonWorldModel>> queue{gops_json(gops::TieRule::Discard), reference};
    std::size_t feedback_seen = 0;
    auto result = reflexion_loop(
        [&](const std::vector<ConformanceReport>& history) {
            feedback_seen += history.size();
            if (!history.empty()) {
                EXPECT_FALSE(history.back().failure()->exemplars.empty());
            }
            return queue.at(history.size());
        },
        *reference, 3, small_suite());
    EXPECT_EQ(result.model, reference);
    ASSERT_EQ(result.reports.size(), 2u);
    EXPECT_EQ(result.reports[0].attempts, 1);
    EXPECT_EQ(result.reports[1].attempts, 2);
    EXPECT_EQ(feedback_seen, 1u);
}

TEST(Reflexion, GivesUpAfterMaxAttempts)
{
    auto reference = gops_json();
    auto mutant = gops_json(gops::TieRule::Discard);
    auto result = reflexion_loop([&](const auto&) { return mutant; }, *reference, 3, small_suite());
    EXPECT_FALSE(result.model);
    EXPECT_EQ(result.reports.size(), 3u);
}

TEST(Reflexion, FirstCandidatePasses)
{
    auto reference = gops_json();
    auto result = reflexion_loop([&](const auto&) { return reference; }, *reference, 3, small_suite());
    ASSERT_TRUE(result.model);
    ASSERT_EQ(result.reports.size(), 1u);
    EXPECT_EQ(result.reports[0].attempts, 1);
    EXPECT_THROW(reflexion_loop([&](const auto&) { return reference; }, *reference, 0), BadConfig);
}
