#pragma once

// Direct LLM policy: show the model the observation and legal actions, ask
// for a short thought and a final "Action: <move>" line.

#include <string>
#include <vector>

#include "pianist/gateway/provider.hpp"

namespace pianist::gateway {

struct DecisionPrompt {
    std::string system;
    std::string user;
};

DecisionPrompt decision_prompt(const std::string& game, const Json& observation,
                               const std::vector<Json>& legal, bool retry = false);

/// Text form of an action as shown to the model: strings verbatim, other
/// values as compact JSON.
std::string action_text(const Json& action);

/// Legal action named on the last "Action:" line of `response`, if any.
std::optional<Json> parse_decision(const std::string& response, const std::vector<Json>& legal);

struct Decision {
    Json action;
    bool fell_back = false; // both replies unusable; first legal action taken
    std::vector<std::string> responses;
};

/// Asks once, retries once on an unusable reply, then falls back to the
/// first legal action with a logged warning.
Decision direct_policy_decide(ProposalProvider& provider, const std::string& game,
                              const Json& observation, const std::vector<Json>& legal);

} // namespace pianist::gateway
