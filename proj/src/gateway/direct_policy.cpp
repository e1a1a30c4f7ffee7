#include "pianist/gateway/direct_policy.hpp"

#include <algorithm>
#include <cctype>

#include <spdlog/spdlog.h>

#include "pianist/worldmodel/canonical.hpp"

namespace pianist::gateway {
namespace {

std::string trim(const std::string& text)
{
    const auto first = text.find_first_not_of(" \t\r\n`*\"'");
    if (first == std::string::npos)
        return {};
    const auto last = text.find_last_not_of(" \t\r\n`*\"'.");
    return text.substr(first, last - first + 1);
}

std::string lower(std::string text)
{
    for (auto& c : text)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return text;
}

} // namespace

std::string action_text(const Json& action)
{
    return action.is_string() ? action.get<std::string>() : canonical_dump(action);
}

DecisionPrompt decision_prompt(const std::string& game, const Json& observation,
                               const std::vector<Json>& legal, bool retry)
{
    DecisionPrompt p;
    p.system = "You are an expert player of " + game +
               ". Think briefly about the position, then choose exactly one legal action.";
    std::string actions;
    for (const auto& a : legal)
        actions += (actions.empty() ? "" : ", ") + action_text(a);
    p.user = "Your observation:\n" + canonical_dump(observation) + "\nLegal actions: " + actions +
             "\nAnswer in the form:\nThought: <your reasoning>\nAction: <one legal action>";
    if (retry)
        p.user += "\nYour previous reply did not end with a valid Action line. Pick one of the "
                  "legal actions exactly as written.";
    return p;
}

std::optional<Json> parse_decision(const std::string& response, const std::vector<Json>& legal)
{
    const auto haystack = lower(response);
    const auto pos = haystack.rfind("action:");
    if (pos == std::string::npos)
        return std::nullopt;
    auto rest = response.substr(pos + 7);
    rest = trim(rest.substr(0, rest.find('\n')));
    for (const auto& a : legal)
        if (action_text(a) == rest || lower(action_text(a)) == lower(rest))
            return a;
    return std::nullopt;
}

Decision direct_policy_decide(ProposalProvider& provider, const std::string& game,
                              const Json& observation, const std::vector<Json>& legal)
{
    if (legal.empty())
        throw IllegalAction("no legal action to choose from");
    Decision d;
    for (bool retry : {false, true}) {
        const auto prompt = decision_prompt(game, observation, legal, retry);
        d.responses.push_back(provider.generate_decision(prompt.system, prompt.user));
        if (auto action = parse_decision(d.responses.back(), legal)) {
            d.action = *action;
            return d;
        }
    }
    spdlog::warn("direct policy gave no usable action twice; playing {}", action_text(legal.front()));
    d.action = legal.front();
    d.fell_back = true;
    return d;
}

} // namespace pianist::gateway
