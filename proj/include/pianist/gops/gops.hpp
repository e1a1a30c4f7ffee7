#pragma once

// Goofspiel for two players. Each round the environment reveals a prize card,
// then both players bid a card from their hand. The simultaneous bids are
// serialised: player 0 commits first and player 1's view hides that card.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <boost/container/static_vector.hpp>

#include "pianist/worldmodel/model.hpp"

namespace pianist::gops {

inline constexpr int kMaxCards = 24;

using CardList = boost::container::static_vector<int, kMaxCards>;

/// Set of card values; bit c is set when card c is present.
using Hand = std::uint32_t;

Hand full_hand(int k);
bool has_card(Hand hand, int card);
std::vector<int> cards_of(Hand hand); // ascending
int hand_size(Hand hand);

enum class TieRule {
    CarryPot, // tied prize joins a pot won by the next decisive round
    Discard,  // tied prize is thrown away
};

struct GopsConfig {
    int k = 6;
    std::vector<int> prize_order; // empty: the environment draws uniformly
    TieRule tie_rule = TieRule::CarryPot;

    void validate() const;
};

void to_json(Json& j, const GopsConfig& config);
void from_json(const Json& j, GopsConfig& config);

struct GopsState {
    int k = 0;
    std::array<Hand, 2> hands{};
    CardList revealed; // resolved prizes, oldest first
    std::optional<int> current_prize;
    std::array<std::optional<int>, 2> pending;
    std::array<CardList, 2> plays;
    std::array<int, 2> scores{};
    int pot = 0;
    CardList undrawn; // ascending, or in the fixed reveal order

    bool operator==(const GopsState&) const = default;
};

void to_json(Json& j, const GopsState& state);
void from_json(const Json& j, GopsState& state);

/// A player's view. The opponent's committed card and hand are erased; the
/// undrawn deck is implied by the revealed cards.
struct GopsObservation {
    int viewer = 0;
    int k = 0;
    Hand hand = 0;
    std::optional<int> pending; // own committed card
    bool opponent_committed = false;
    CardList revealed;
    std::optional<int> current_prize;
    std::array<CardList, 2> plays;
    std::array<int, 2> scores{};
    int pot = 0;

    bool operator==(const GopsObservation&) const = default;
};

void to_json(Json& j, const GopsObservation& observation);
void from_json(const Json& j, GopsObservation& observation);

/// Sum of all prize values, k(k+1)/2.
int total_points(int k);

/// scores + pot + undrawn + unresolved current prize.
int accounted_points(const GopsState& state);

class GopsModel {
public:
    using State = GopsState;
    using Action = int;
    using InfoSet = GopsObservation;

    explicit GopsModel(GopsConfig config = {});

    const ModelInfo& info() const { return info_; }
    const GopsConfig& config() const { return config_; }

    State initial(std::uint64_t seed = 0) const;
    Step<State> transition(const State& state, int action, ActorId actor) const;
    Enumeration<int> enumerate(const State& state) const;
    InfoSet partition(const State& state, ActorId actor) const;
    State realize(const InfoSet& observation) const;

    /// Each player's score plus half of every point still in play.
    Evaluation evaluate(const State& state) const;
    Rewards banked(const State& state) const;

private:
    GopsConfig config_;
    ModelInfo info_;
};

} // namespace pianist::gops

template <>
struct std::hash<pianist::gops::GopsState> {
    std::size_t operator()(const pianist::gops::GopsState& state) const;
};

template <>
struct std::hash<pianist::gops::GopsObservation> {
    std::size_t operator()(const pianist::gops::GopsObservation& observation) const;
};

static_assert(pianist::WorldModel<pianist::gops::GopsModel>);
