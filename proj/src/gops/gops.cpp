#include "pianist/gops/gops.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include <boost/container_hash/hash.hpp>

namespace pianist::gops {
namespace {

Json list_json(const CardList& cards) { return Json(std::vector<int>(cards.begin(), cards.end())); }

CardList list_from(const Json& j, int k)
{
    if (!j.is_array() || j.size() > static_cast<std::size_t>(kMaxCards))
        throw Inconsistent("card list must be an array of at most " + std::to_string(kMaxCards));
    CardList out;
    for (const auto& v : j) {
        int card = v.get<int>();
        if (card < 1 || card > k)
            throw Inconsistent("card " + std::to_string(card) + " outside 1.." + std::to_string(k));
        out.push_back(card);
    }
    return out;
}

Json hand_json(Hand hand) { return Json(cards_of(hand)); }

Hand hand_from(const Json& j, int k)
{
    Hand hand = 0;
    for (int card : list_from(j, k)) {
        if (has_card(hand, card))
            throw Inconsistent("duplicate card in hand");
        hand |= Hand{1} << card;
    }
    return hand;
}

Json optional_json(const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<int> optional_from(const Json& j)
{
    if (j.is_null())
        return std::nullopt;
    return j.get<int>();
}

Hand as_set(const CardList& cards, const char* what)
{
    Hand set = 0;
    for (int card : cards) {
        if (has_card(set, card))
            throw Inconsistent(std::string("duplicate card in ") + what);
        set |= Hand{1} << card;
    }
    return set;
}

int sum_of(const CardList& cards) { return std::accumulate(cards.begin(), cards.end(), 0); }

} // namespace

Hand full_hand(int k) { return ((Hand{1} << (k + 1)) - 1) & ~Hand{1}; }

bool has_card(Hand hand, int card) { return card >= 1 && card <= kMaxCards && ((hand >> card) & 1U); }

std::vector<int> cards_of(Hand hand)
{
    std::vector<int> out;
    for (int c = 1; c <= kMaxCards; ++c)
        if (has_card(hand, c))
            out.push_back(c);
    return out;
}

int hand_size(Hand hand) { return std::popcount(hand); }

int total_points(int k) { return k * (k + 1) / 2; }

int accounted_points(const GopsState& s)
{
    return s.scores[0] + s.scores[1] + s.pot + sum_of(s.undrawn) + s.current_prize.value_or(0);
}

void GopsConfig::validate() const
{
    if (k < 1 || k > kMaxCards)
        throw BadConfig("k must lie in 1.." + std::to_string(kMaxCards));
    if (!prize_order.empty()) {
        std::vector<int> sorted = prize_order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<int> expected(static_cast<std::size_t>(k));
        std::iota(expected.begin(), expected.end(), 1);
        if (sorted != expected)
            throw BadConfig("prize_order must be a permutation of 1..k");
    }
}

void to_json(Json& j, const GopsConfig& config)
{
    j = Json{{"k", config.k},
             {"prize_order", config.prize_order},
             {"tie_rule", config.tie_rule == TieRule::Discard ? "discard" : "carry"}};
}

void from_json(const Json& j, GopsConfig& config)
{
    GopsConfig out;
    out.k = j.value("k", out.k);
    out.prize_order = j.value("prize_order", std::vector<int>{});
    auto rule = j.value("tie_rule", std::string("carry"));
    if (rule == "discard")
        out.tie_rule = TieRule::Discard;
    else if (rule != "carry")
        throw BadConfig("unknown tie_rule '" + rule + "'");
    out.validate();
    config = std::move(out);
}

void to_json(Json& j, const GopsState& s)
{
    j = Json{{"k", s.k},
             {"hands", {hand_json(s.hands[0]), hand_json(s.hands[1])}},
             {"revealed", list_json(s.revealed)},
             {"current_prize", optional_json(s.current_prize)},
             {"pending", {optional_json(s.pending[0]), optional_json(s.pending[1])}},
             {"plays", {list_json(s.plays[0]), list_json(s.plays[1])}},
             {"scores", {s.scores[0], s.scores[1]}},
             {"pot", s.pot},
             {"undrawn", list_json(s.undrawn)}};
}

void from_json(const Json& j, GopsState& s)
{
    GopsState out;
    out.k = j.at("k").get<int>();
    if (out.k < 1 || out.k > kMaxCards)
        throw Inconsistent("k out of range");
    for (std::size_t p = 0; p < 2; ++p) {
        out.hands[p] = hand_from(j.at("hands").at(p), out.k);
        out.pending[p] = optional_from(j.at("pending").at(p));
        out.plays[p] = list_from(j.at("plays").at(p), out.k);
        out.scores[p] = j.at("scores").at(p).get<int>();
    }
    out.revealed = list_from(j.at("revealed"), out.k);
    out.current_prize = optional_from(j.at("current_prize"));
    out.pot = j.at("pot").get<int>();
    out.undrawn = list_from(j.at("undrawn"), out.k);
    s = std::move(out);
}

void to_json(Json& j, const GopsObservation& o)
{
    j = Json{{"viewer", o.viewer},
             {"k", o.k},
             {"hand", hand_json(o.hand)},
             {"pending", optional_json(o.pending)},
             {"opponent_committed", o.opponent_committed},
             {"revealed", list_json(o.revealed)},
             {"current_prize", optional_json(o.current_prize)},
             {"plays", {list_json(o.plays[0]), list_json(o.plays[1])}},
             {"scores", {o.scores[0], o.scores[1]}},
             {"pot", o.pot}};
}

void from_json(const Json& j, GopsObservation& o)
{
    GopsObservation out;
    out.viewer = j.at("viewer").get<int>();
    out.k = j.at("k").get<int>();
    if (out.k < 1 || out.k > kMaxCards)
        throw Inconsistent("k out of range");
    out.hand = hand_from(j.at("hand"), out.k);
    out.pending = optional_from(j.at("pending"));
    out.opponent_committed = j.at("opponent_committed").get<bool>();
    out.revealed = list_from(j.at("revealed"), out.k);
    out.current_prize = optional_from(j.at("current_prize"));
    for (std::size_t p = 0; p < 2; ++p) {
        out.plays[p] = list_from(j.at("plays").at(p), out.k);
        out.scores[p] = j.at("scores").at(p).get<int>();
    }
    out.pot = j.at("pot").get<int>();
    o = std::move(out);
}

GopsModel::GopsModel(GopsConfig config) : config_(std::move(config))
{
    config_.validate();
    info_.game = "gops";
    info_.players = 2;
    info_.discount = 1.0;
    info_.value_bounds = std::pair{0.0, static_cast<double>(total_points(config_.k))};
}

GopsState GopsModel::initial(std::uint64_t) const
{
    GopsState s;
    s.k = config_.k;
    s.hands = {full_hand(config_.k), full_hand(config_.k)};
    if (config_.prize_order.empty())
        for (int c = 1; c <= config_.k; ++c)
            s.undrawn.push_back(c);
    else
        s.undrawn.assign(config_.prize_order.begin(), config_.prize_order.end());
    return s;
}

Enumeration<int> GopsModel::enumerate(const GopsState& s) const
{
    if (!s.current_prize) {
        if (s.undrawn.empty())
            return {};
        if (!config_.prize_order.empty())
            return {ActorId::environment(), {s.undrawn.front()}};
        return {ActorId::environment(), std::vector<int>(s.undrawn.begin(), s.undrawn.end())};
    }
    const std::size_t p = s.pending[0] ? 1 : 0;
    return {ActorId::player(static_cast<int>(p)), cards_of(s.hands[p])};
}

Step<GopsState> GopsModel::transition(const GopsState& s, int action, ActorId actor) const
{
    auto options = enumerate(s);
    if (options.terminal())
        throw IllegalAction("game is over");
    if (*options.actor != actor)
        throw WrongActor(to_string(actor) + " acted but " + to_string(*options.actor) + " is due");
    if (std::find(options.actions.begin(), options.actions.end(), action) == options.actions.end())
        throw IllegalAction("card " + std::to_string(action) + " is not available to " +
                            to_string(actor));

    GopsState next = s;
    Rewards rewards = zero_rewards(2);
    if (actor.is_environment()) {
        next.undrawn.erase(std::find(next.undrawn.begin(), next.undrawn.end(), action));
        next.current_prize = action;
        return {std::move(next), std::move(rewards)};
    }

    const auto p = static_cast<std::size_t>(actor.index());
    next.hands[p] &= ~(Hand{1} << action);
    next.pending[p] = action;
    if (!next.pending[0] || !next.pending[1])
        return {std::move(next), std::move(rewards)};

    const int a = *next.pending[0];
    const int b = *next.pending[1];
    const int prize = *next.current_prize;
    if (a != b) {
        const std::size_t winner = a > b ? 0 : 1;
        const int points = prize + next.pot;
        next.scores[winner] += points;
        rewards[winner] = points;
        next.pot = 0;
    } else if (config_.tie_rule == TieRule::CarryPot) {
        next.pot += prize;
    }
    next.plays[0].push_back(a);
    next.plays[1].push_back(b);
    next.pending = {};
    next.revealed.push_back(prize);
    next.current_prize.reset();
    return {std::move(next), std::move(rewards)};
}

GopsObservation GopsModel::partition(const GopsState& s, ActorId actor) const
{
    if (!actor.is_player() || actor.index() > 1)
        throw WrongActor("GOPS observations exist for players 0 and 1 only");
    const auto p = static_cast<std::size_t>(actor.index());
    GopsObservation o;
    o.viewer = actor.index();
    o.k = s.k;
    o.hand = s.hands[p];
    o.pending = s.pending[p];
    o.opponent_committed = s.pending[1 - p].has_value();
    o.revealed = s.revealed;
    o.current_prize = s.current_prize;
    o.plays = s.plays;
    o.scores = s.scores;
    o.pot = s.pot;
    return o;
}

GopsState GopsModel::realize(const GopsObservation& o) const
{
    if (o.k != config_.k)
        throw Inconsistent("observation deck size differs from the model's");
    if (o.viewer != 0 && o.viewer != 1)
        throw Inconsistent("viewer must be 0 or 1");
    const auto me = static_cast<std::size_t>(o.viewer);
    const auto them = 1 - me;
    const Hand full = full_hand(o.k);
    const std::size_t rounds = o.revealed.size();
    if (o.plays[0].size() != rounds || o.plays[1].size() != rounds)
        throw Inconsistent("play histories do not match the number of resolved prizes");

    Hand own_played = as_set(o.plays[me], "own plays");
    Hand their_played = as_set(o.plays[them], "opponent plays");
    Hand prizes = as_set(o.revealed, "revealed prizes");
    if ((o.hand & ~full) != 0 || (o.hand & own_played) != 0)
        throw Inconsistent("hand overlaps played cards");
    Hand own_cards = o.hand | own_played;
    if (o.pending) {
        if (!has_card(full, *o.pending) || has_card(own_cards, *o.pending))
            throw Inconsistent("pending card is not a free card");
        own_cards |= Hand{1} << *o.pending;
    }
    if (own_cards != full)
        throw Inconsistent("own hand, plays and pending do not partition the deck");
    if (o.current_prize) {
        if (!has_card(full, *o.current_prize) || has_card(prizes, *o.current_prize))
            throw Inconsistent("current prize was already revealed");
    } else if (o.pending || o.opponent_committed) {
        throw Inconsistent("commitment without a prize on the table");
    }
    if (o.viewer == 0 && o.opponent_committed && !o.pending)
        throw Inconsistent("player 1 cannot commit before player 0");
    if (o.viewer == 1 && o.pending && !o.opponent_committed)
        throw Inconsistent("player 1 cannot commit before player 0");
    if (o.scores[0] < 0 || o.scores[1] < 0 || o.pot < 0)
        throw Inconsistent("negative points");

    GopsState s;
    s.k = o.k;
    s.hands[me] = o.hand | (o.pending ? Hand{1} << *o.pending : Hand{0});
    s.hands[them] = full & ~their_played;
    s.revealed = o.revealed;
    s.current_prize = o.current_prize;
    s.plays = o.plays;
    s.scores = o.scores;
    s.pot = o.pot;
    Hand drawn = prizes | (o.current_prize ? Hand{1} << *o.current_prize : Hand{0});
    if (config_.prize_order.empty()) {
        for (int c = 1; c <= o.k; ++c)
            if (!has_card(drawn, c))
                s.undrawn.push_back(c);
    } else {
        for (int c : config_.prize_order)
            if (!has_card(drawn, c))
                s.undrawn.push_back(c);
    }
    if (config_.tie_rule == TieRule::CarryPot && accounted_points(s) != total_points(o.k))
        throw Inconsistent("points in the observation do not add up");
    if (accounted_points(s) > total_points(o.k))
        throw Inconsistent("points in the observation exceed the deck total");
    return s;
}

Evaluation GopsModel::evaluate(const GopsState& s) const
{
    const double open = s.pot + sum_of(s.undrawn) + s.current_prize.value_or(0);
    if (!s.current_prize && s.undrawn.empty())
        return {{static_cast<double>(s.scores[0]), static_cast<double>(s.scores[1])}};
    return {{s.scores[0] + open / 2.0, s.scores[1] + open / 2.0}};
}

Rewards GopsModel::banked(const GopsState& s) const
{
    return {static_cast<double>(s.scores[0]), static_cast<double>(s.scores[1])};
}

} // namespace pianist::gops

std::size_t std::hash<pianist::gops::GopsState>::operator()(const pianist::gops::GopsState& s) const
{
    std::size_t seed = 0;
    boost::hash_combine(seed, s.k);
    boost::hash_combine(seed, s.hands[0]);
    boost::hash_combine(seed, s.hands[1]);
    boost::hash_range(seed, s.revealed.begin(), s.revealed.end());
    boost::hash_combine(seed, s.current_prize.value_or(0));
    boost::hash_combine(seed, s.pending[0].value_or(0));
    boost::hash_combine(seed, s.pending[1].value_or(0));
    for (const auto& plays : s.plays) {
        boost::hash_combine(seed, plays.size());
        boost::hash_range(seed, plays.begin(), plays.end());
    }
    boost::hash_combine(seed, s.scores[0]);
    boost::hash_combine(seed, s.scores[1]);
    boost::hash_combine(seed, s.pot);
    boost::hash_range(seed, s.undrawn.begin(), s.undrawn.end());
    return seed;
}

std::size_t
std::hash<pianist::gops::GopsObservation>::operator()(const pianist::gops::GopsObservation& o) const
{
    std::size_t seed = 0;
    boost::hash_combine(seed, o.viewer);
    boost::hash_combine(seed, o.hand);
    boost::hash_combine(seed, o.pending.value_or(0));
    boost::hash_combine(seed, o.opponent_committed);
    boost::hash_range(seed, o.revealed.begin(), o.revealed.end());
    boost::hash_combine(seed, o.current_prize.value_or(0));
    for (const auto& plays : o.plays) {
        boost::hash_combine(seed, plays.size());
        boost::hash_range(seed, plays.begin(), plays.end());
    }
    boost::hash_combine(seed, o.scores[0]);
    boost::hash_combine(seed, o.scores[1]);
    boost::hash_combine(seed, o.pot);
    return seed;
}
