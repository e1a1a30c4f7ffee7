#pragma once

// Two-player cooperative Taboo. Player 0 (clue master) knows the clue word and
// gives statements that must avoid the taboo words; player 1 (guesser) gets up
// to five single-word guesses. Statements come from a proposal provider, and
// the guesser is modelled by a lexicon association oracle.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <string>
#include <unordered_map>
#include <vector>

#include "pianist/gateway/provider.hpp"
#include "pianist/worldmodel/model.hpp"

namespace pianist::taboo {

PIANIST_DECLARE_ERROR(LexiconMissing);
PIANIST_DECLARE_ERROR(EmptyProposal);

inline constexpr int kMaxGuesses = 5;
inline constexpr int kMaxScore = 5;

/// Lowercase alphanumeric runs of `text`.
std::vector<std::string> tokenize(const std::string& text);

/// True iff a taboo word occurs as a whole token, ignoring case.
bool detect_taboo(const std::string& statement, const std::vector<std::string>& taboo_words);

class Lexicon {
public:
    Lexicon() = default;
    Lexicon(std::string id, std::vector<std::string> words,
            const std::vector<std::tuple<std::string, std::string, double>>& associations);

    static Lexicon load(const std::string& path);

    const std::string& id() const { return id_; }
    /// Words in frequency order, most common first.
    const std::vector<std::string>& words() const { return words_; }
    bool contains(const std::string& word) const { return index_.count(word) > 0; }
    std::size_t rank_of(const std::string& word) const; // position in words()

    /// Summed association weight of each lexicon word with the content
    /// tokens of `statements`, aligned with words().
    std::vector<double> scores(const std::vector<std::string>& statements) const;

    using Association = std::tuple<std::string, std::string, double>; // token, word, weight
    const std::vector<Association>& associations() const { return associations_; }

private:
    std::string id_;
    std::vector<std::string> words_;
    std::vector<Association> associations_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::vector<std::pair<std::size_t, double>>> by_token_;
};

void to_json(Json& j, const Lexicon& lexicon);
void from_json(const Json& j, Lexicon& lexicon);

struct RankedGuess {
    std::string word;
    double score = 0.0;
};

/// Lexicon words ranked by association score (ties alphabetical), excluding
/// prior guesses; at most k entries.
std::vector<RankedGuess> oracle_guess(const std::vector<std::string>& statements,
                                      const std::vector<std::string>& guesses,
                                      const Lexicon& lexicon, int k);

struct TabooEpisode {
    std::string clue_word;
    std::vector<std::string> taboo_words; // sorted
    std::string lexicon_id;

    void validate() const;
    static TabooEpisode load(const std::string& path);
    bool operator==(const TabooEpisode&) const = default;
};

void to_json(Json& j, const TabooEpisode& episode);
void from_json(const Json& j, TabooEpisode& episode);

struct TabooState {
    TabooEpisode episode;
    std::vector<std::string> statements;
    std::vector<std::string> guesses;
    bool taboo_used = false;
    bool game_over = false;

    bool solved() const { return !guesses.empty() && guesses.back() == episode.clue_word; }
    bool operator==(const TabooState&) const = default;
};

void to_json(Json& j, const TabooState& state);
void from_json(const Json& j, TabooState& state);

enum class Role { ClueMaster, Guesser };

struct TabooObservation {
    Role role = Role::Guesser;
    std::vector<std::string> statements;
    std::vector<std::string> guesses;
    bool game_over = false;
    bool taboo_used = false;
    bool solved = false;
    int guesses_remaining = kMaxGuesses;
    std::string lexicon_id;
    std::optional<std::string> clue_word;                // clue master only
    std::optional<std::vector<std::string>> taboo_words; // clue master only

    bool operator==(const TabooObservation&) const = default;
};

void to_json(Json& j, const TabooObservation& observation);
void from_json(const Json& j, TabooObservation& observation);

enum class Scoring {
    IncorrectGuesses, // 5 minus wrong guesses; a first-try success scores 5
    Literal,          // 5 minus all guesses
};

/// Team score of a finished game, clamped to [0, 5].
int taboo_score(const TabooState& state, Scoring scoring = Scoring::IncorrectGuesses);

struct TabooConfig {
    int proposals = 2;      // clue-master candidates per turn
    int guess_options = 2;  // guesser candidates per turn
    Scoring scoring = Scoring::IncorrectGuesses;
    bool guesser_top1 = false; // deterministic teammate instead of score-weighted

    void validate() const;
};

void to_json(Json& j, const TabooConfig& config);
void from_json(const Json& j, TabooConfig& config);

struct Prompt {
    std::string system;
    std::string user;
};

Prompt clue_master_prompt(const TabooState& state);

class TabooModel {
public:
    using State = TabooState;
    using Action = std::string;
    using InfoSet = TabooObservation;

    TabooModel(TabooConfig config, std::shared_ptr<const Lexicon> lexicon,
               std::shared_ptr<gateway::ProposalProvider> proposer, TabooEpisode episode);

    const ModelInfo& info() const { return info_; }
    const TabooConfig& config() const { return config_; }
    const Lexicon& lexicon() const { return *lexicon_; }
    const TabooEpisode& episode() const { return episode_; }

    State initial(std::uint64_t seed = 0) const;
    Step<State> transition(const State& state, const std::string& action, ActorId actor) const;
    Enumeration<std::string> enumerate(const State& state) const;
    InfoSet partition(const State& state, ActorId actor) const;
    State realize(const InfoSet& observation) const;
    Evaluation evaluate(const State& state) const;
    Rewards banked(const State& state) const;

    /// The guesser is a fixed teammate: weights proportional to oracle scores.
    std::optional<std::vector<double>> fixed_policy(const State& state, ActorId actor,
                                                    const std::vector<std::string>& actions) const;

private:
    std::vector<std::string> proposals(const State& state) const;

    TabooConfig config_;
    std::shared_ptr<const Lexicon> lexicon_;
    std::shared_ptr<gateway::ProposalProvider> proposer_;
    TabooEpisode episode_;
    ModelInfo info_;
    mutable std::mutex memo_mutex_;
    mutable std::unordered_map<std::string, std::vector<std::string>> memo_;
};

} // namespace pianist::taboo

template <>
struct std::hash<pianist::taboo::TabooState> {
    std::size_t operator()(const pianist::taboo::TabooState& state) const;
};

template <>
struct std::hash<pianist::taboo::TabooObservation> {
    std::size_t operator()(const pianist::taboo::TabooObservation& observation) const;
};

static_assert(pianist::WorldModel<pianist::taboo::TabooModel>);
static_assert(pianist::HasFixedPolicies<pianist::taboo::TabooModel>);
