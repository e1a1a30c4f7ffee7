#pragma once

// Builds a playable game (environment model plus agent factory) from a
// JSON config such as
//   {"game": "gops", "k": 6}
//   {"game": "gops", "host": "pianist-host --k 6"}
//   {"game": "taboo", "episode": "data/episodes/barefoot.json",
//    "lexicon": "data/lexicon.json", "provider": {...}, "taboo": {...}}
// Relative paths resolve against `base_dir`.

#include <functional>
#include <memory>
#include <string>

#include "pianist/arena/arena.hpp"
#include "pianist/taboo/taboo.hpp"

namespace pianist::app {

struct GameSetup {
    std::string game;
    std::shared_ptr<const JsonWorldModel> env;
    arena::MatchOptions match;
    bool free_text = false; // human moves are free text rather than a menu
    std::function<std::shared_ptr<arena::Agent>(const arena::AgentSpec&)> make_agent;
};

GameSetup make_game(const Json& config, const std::string& base_dir = ".");

/// Taboo teammate: guesses the oracle's top word for the public transcript.
class LexiconGuesserAgent final : public arena::Agent {
public:
    explicit LexiconGuesserAgent(std::shared_ptr<const taboo::Lexicon> lexicon) : lexicon_(std::move(lexicon)) {}
    Json act(const arena::Decision& decision) override;

private:
    std::shared_ptr<const taboo::Lexicon> lexicon_;
};

} // namespace pianist::app
