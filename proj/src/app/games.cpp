#include "pianist/app/games.hpp"

#include <filesystem>

#include "pianist/gateway/host.hpp"
#include "pianist/gops/gops.hpp"

namespace pianist::app {
namespace {

std::string resolve(const std::string& path, const std::string& base_dir)
{
    std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).string();
}

gateway::ProviderConfig resolve_paths(gateway::ProviderConfig c, const std::string& base_dir)
{
    if (c.fixture_path)
        c.fixture_path = resolve(*c.fixture_path, base_dir);
    if (c.record_path)
        c.record_path = resolve(*c.record_path, base_dir);
    if (c.fallback)
        c.fallback = std::make_shared<gateway::ProviderConfig>(resolve_paths(*c.fallback, base_dir));
    return c;
}

/// Agents every game supports; nullptr for kinds the game must handle.
std::shared_ptr<arena::Agent> common_agent(const arena::AgentSpec& spec, const std::string& game,
                                           const std::string& base_dir)
{
    spec.validate();
    if (spec.kind == "random")
        return std::make_shared<arena::RandomAgent>(spec.seed);
    if (spec.kind == "scripted")
        return std::make_shared<arena::ScriptedAgent>(spec.actions);
    if (spec.kind == "direct_policy")
        return std::make_shared<arena::DirectPolicyAgent>(
            gateway::make_provider(resolve_paths(*spec.provider, base_dir)), game);
    if (spec.kind == "external")
        throw BadConfig("external agents are attached by the caller, not built from config");
    return nullptr;
}

GameSetup make_gops(const Json& config, const std::string& base_dir)
{
    GameSetup setup;
    setup.game = "gops";
    if (config.contains("host")) {
        gateway::HostConfig host{config.at("host").get<std::string>(),
                                 config.value("host_timeout_ms", 10'000)};
        auto hosted = gateway::host_model(host);
        if (hosted->info().game != "gops")
            throw BadConfig("host serves '" + hosted->info().game + "', not gops");
        setup.env = hosted;
        auto dynamic = std::make_shared<const DynamicModel>(hosted);
        setup.make_agent = [dynamic, base_dir](const arena::AgentSpec& spec) -> std::shared_ptr<arena::Agent> {
            if (auto agent = common_agent(spec, "GOPS", base_dir))
                return agent;
            if (spec.kind == "mcts")
                return std::make_shared<arena::MctsAgent<DynamicModel>>(dynamic, spec.search);
            throw BadConfig("agent kind '" + spec.kind + "' does not play gops");
        };
        return setup;
    }
    auto gops_config = config.get<gops::GopsConfig>();
    auto model = std::make_shared<const gops::GopsModel>(gops_config);
    setup.env = std::make_shared<JsonAdapter<gops::GopsModel>>(model);
    setup.make_agent = [model, base_dir](const arena::AgentSpec& spec) -> std::shared_ptr<arena::Agent> {
        if (auto agent = common_agent(spec, "GOPS", base_dir))
            return agent;
        if (spec.kind == "mcts")
            return std::make_shared<arena::MctsAgent<gops::GopsModel>>(model, spec.search);
        throw BadConfig("agent kind '" + spec.kind + "' does not play gops");
    };
    return setup;
}

GameSetup make_taboo(const Json& config, const std::string& base_dir)
{
    GameSetup setup;
    setup.game = "taboo";
    setup.free_text = true;
    auto lexicon = std::make_shared<const taboo::Lexicon>(
        taboo::Lexicon::load(resolve(config.value("lexicon", std::string("data/lexicon.json")), base_dir)));
    const auto& e = config.at("episode");
    auto episode = e.is_string() ? taboo::TabooEpisode::load(resolve(e.get<std::string>(), base_dir))
                                 : e.get<taboo::TabooEpisode>();
    auto taboo_config = config.value("taboo", Json::object()).get<taboo::TabooConfig>();
    if (!config.contains("provider"))
        throw BadConfig("taboo needs a provider for clue-master proposals");
    auto provider =
        gateway::make_provider(resolve_paths(config.at("provider").get<gateway::ProviderConfig>(), base_dir));
    auto model = std::make_shared<const taboo::TabooModel>(taboo_config, lexicon, provider, episode);
    setup.env = std::make_shared<JsonAdapter<taboo::TabooModel>>(model);
    setup.match.cooperative = true;
    setup.match.team_win_score = taboo_config.scoring == taboo::Scoring::Literal ? taboo::kMaxScore - 1
                                                                                  : taboo::kMaxScore;
    setup.make_agent = [model, lexicon, base_dir](const arena::AgentSpec& spec) -> std::shared_ptr<arena::Agent> {
        if (auto agent = common_agent(spec, "Taboo", base_dir))
            return agent;
        if (spec.kind == "mcts")
            return std::make_shared<arena::MctsAgent<taboo::TabooModel>>(model, spec.search);
        if (spec.kind == "lexicon_guesser")
            return std::make_shared<LexiconGuesserAgent>(lexicon);
        throw BadConfig("agent kind '" + spec.kind + "' does not play taboo");
    };
    return setup;
}

} // namespace

Json LexiconGuesserAgent::act(const arena::Decision& d)
{
    const auto o = d.observation.get<taboo::TabooObservation>();
    auto ranked = taboo::oracle_guess(o.statements, o.guesses, *lexicon_, 1);
    if (ranked.empty())
        throw taboo::LexiconMissing("no unguessed lexicon word left");
    return ranked.front().word;
}

GameSetup make_game(const Json& config, const std::string& base_dir)
{
    if (!config.is_object() || !config.contains("game"))
        throw BadConfig("game config needs a 'game' field");
    const auto game = config.at("game").get<std::string>();
    try {
        if (game == "gops")
            return make_gops(config, base_dir);
        if (game == "taboo")
            return make_taboo(config, base_dir);
    } catch (const Json::exception& e) {
        throw BadConfig("bad " + game + " config: " + e.what());
    }
    throw BadConfig("unknown game '" + game + "'");
}

} // namespace pianist::app
