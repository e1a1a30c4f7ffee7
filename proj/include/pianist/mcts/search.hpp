#pragma once

// Information-set Monte Carlo Tree Search.
//
// Every iteration realises a hidden state consistent with the searcher's
// information set, descends with UCT values averaged over all states that
// share the acting player's information set (weighted by visit counts),
// expands one untried action, estimates the new node's value and backs the
// result up along creation-parent links.
//
// Node values are values-to-go: V_i(s) estimates the discounted rewards player
// i still collects after s. Edge rewards carry what a transition pays out.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pianist/worldmodel/canonical.hpp"
#include "pianist/worldmodel/model.hpp"

namespace pianist::mcts {

enum class ValueMode { RandomRollout, Heuristic };

struct SearchConfig {
    int iterations = 100;
    double exploration = 1.414;
    double gamma = 1.0;
    std::uint64_t seed = 0;
    ValueMode value_mode = ValueMode::RandomRollout;
    int rollout_cap = kDefaultRolloutCap;

    /// Throws BadConfig unless iterations >= 1, exploration >= 0,
    /// 0 < gamma <= 1 and rollout_cap >= 1.
    void validate() const;
};

void to_json(Json& j, const SearchConfig& config);
void from_json(const Json& j, SearchConfig& config);

class EmptyInfoSet : public Error {
public:
    explicit EmptyInfoSet(const std::string& m) : Error("EmptyInfoSet", m) {}
};
class NoExpandedEdges : public Error {
public:
    explicit NoExpandedEdges(const std::string& m) : Error("NoExpandedEdges", m) {}
};
class NoLegalAction : public Error {
public:
    explicit NoLegalAction(const std::string& m) : Error("NoLegalAction", m) {}
};
/// Raised when one information-set bucket holds nodes of different actors.
class MixedActors : public Error {
public:
    explicit MixedActors(const std::string& m) : Error("MixedActors", m) {}
};

/// P(s) = n(s) / sum n(s') over the states of one information set.
std::vector<double> infoset_weights(std::span<const int> visits);

/// r_i + gamma * V_i(s') + C * sqrt(ln n(s) / n(s')).
double uct_value(double reward, double gamma, double child_value, double exploration,
                 int parent_visits, int child_visits);

/// V_i(s) += (r_i + gamma * V_i(s') - V_i(s)) / n(s) for every player, then n(s) += 1.
void backup(Rewards& values, int& visits, const Rewards& edge_rewards, const Rewards& child_values,
            double gamma);

template <class Action>
struct ActionStats {
    Action action;
    int visits = 0;
    double mean_value = 0.0;
};

template <class Action>
struct SearchResult {
    Action best_action;
    ActorId actor = ActorId::environment();
    Rewards root_values;
    int root_visits = 0;
    std::vector<ActionStats<Action>> action_stats;

    const ActionStats<Action>* stats_for(const Action& action) const
    {
        for (const auto& s : action_stats)
            if (s.action == action)
                return &s;
        return nullptr;
    }
};

template <WorldModel M>
class SearchGraph {
public:
    using State = typename M::State;
    using Action = typename M::Action;
    using InfoSet = typename M::InfoSet;
    using NodeId = std::size_t;

    struct Edge {
        Action action;
        NodeId child;
        Rewards rewards;
    };

    struct Node {
        State state;
        Rewards values;
        int visits = 1;
        std::optional<ActorId> actor; // nullopt: terminal
        std::vector<Action> actions;  // canonical order
        std::vector<Action> untried;  // canonical order, disjoint from edges
        std::vector<Edge> edges;
        std::optional<InfoSet> info_key; // set for player nodes only
        std::optional<NodeId> parent;    // creation parent
        bool chance = false;             // environment or fixed-policy node
        std::vector<double> policy;      // chance weights aligned with actions; empty = uniform

        bool terminal() const { return !actor.has_value(); }

        const Edge* edge(const Action& action) const
        {
            for (const auto& e : edges)
                if (e.action == action)
                    return &e;
            return nullptr;
        }
    };

    SearchGraph(const M& model, SearchConfig config)
        : model_(&model), config_(config), rng_(config.seed)
    {
        config_.validate();
    }

    const SearchConfig& config() const { return config_; }
    const M& model() const { return *model_; }
    Rng& rng() { return rng_; }

    std::size_t size() const { return nodes_.size(); }
    const Node& node(NodeId id) const { return nodes_.at(id); }
    Node& node(NodeId id) { return nodes_.at(id); }

    std::optional<NodeId> find(const State& state) const
    {
        if (auto it = by_state_.find(state); it != by_state_.end())
            return it->second;
        return std::nullopt;
    }

    std::span<const NodeId> bucket(const InfoSet& key) const
    {
        if (auto it = buckets_.find(key); it != buckets_.end())
            return it->second;
        return {};
    }

    std::vector<double> weights(std::span<const NodeId> ids) const
    {
        std::vector<int> visits;
        visits.reserve(ids.size());
        for (NodeId id : ids)
            visits.push_back(nodes_.at(id).visits);
        return infoset_weights(visits);
    }

    /// Inserts a parentless node for `state` (or returns the existing one).
    NodeId add_root(State state, std::uint64_t value_seed = 0)
    {
        if (auto existing = find(state))
            return *existing;
        return create_node(std::move(state), std::nullopt, value_seed);
    }

    /// Picks the node an iteration starts from. The realised state's own
    /// information-set bucket is consulted: a non-empty bucket yields a
    /// uniformly random member, otherwise a node for the state is created.
    /// When the realised state precedes the searcher's decision (moves the
    /// searcher cannot see are still to be made), those moves are drawn
    /// uniformly until a state of `info_set` is reached.
    NodeId realize_root(const InfoSet& info_set)
    {
        const NodeId start = realized_node(info_set);
        NodeId id = start;
        for (int depth = 0; depth < config_.rollout_cap; ++depth) {
            const Node& n = nodes_[id];
            if (n.info_key && *n.info_key == info_set)
                return id;
            if (n.terminal())
                break;
            const std::size_t pick = n.chance && !n.policy.empty() ? weighted_index(rng_, n.policy)
                                                                   : uniform_index(rng_, n.actions.size());
            const Action action = n.actions[pick];
            if (const Edge* e = n.edge(action))
                id = e->child;
            else
                id = expand(id, action, next_value_seed());
        }
        return start;
    }

    /// Node for the realised state of `info_set`, or a member of that
    /// state's own bucket.
    NodeId realized_node(const InfoSet& info_set)
    {
        State realized = model_->realize(info_set);
        std::optional<InfoSet> key;
        if (auto existing = find(realized)) {
            const Node& n = nodes_[*existing];
            if (!n.info_key)
                return *existing;
            key = n.info_key;
        } else {
            auto options = model_->enumerate(realized);
            if (options.actor && options.actor->is_player())
                key = model_->partition(realized, *options.actor);
        }
        if (key) {
            auto members = bucket(*key);
            if (members.size() == 1)
                return members.front();
            if (!members.empty())
                return members[uniform_index(rng_, members.size())];
        }
        return add_root(std::move(realized), next_value_seed());
    }

    /// Descends from `root` to the first node with an untried action and
    /// returns it with that action, or returns a terminal node with nullopt.
    std::pair<NodeId, std::optional<Action>> select(NodeId root, std::vector<Action>* path = nullptr)
    {
        NodeId id = root;
        for (int depth = 0;; ++depth) {
            if (depth > config_.rollout_cap)
                throw BudgetExceeded("selection exceeded the depth cap; cyclic model?");
            const Node& n = nodes_[id];
            if (n.terminal())
                return {id, std::nullopt};
            const Action* chosen = nullptr;
            if (n.chance) {
                std::size_t pick = n.policy.empty() ? uniform_index(rng_, n.actions.size())
                                                    : weighted_index(rng_, n.policy);
                chosen = &n.actions[pick];
                if (!n.edge(*chosen)) {
                    if (path)
                        path->push_back(*chosen);
                    return {id, *chosen};
                }
            } else if (!n.untried.empty()) {
                Action action = n.untried[uniform_index(rng_, n.untried.size())];
                if (path)
                    path->push_back(action);
                return {id, std::move(action)};
            } else {
                Action action = uct_select(id);
                const Edge* e = n.edge(action);
                if (path)
                    path->push_back(action);
                id = e->child;
                continue;
            }
            if (path)
                path->push_back(*chosen);
            id = n.edge(*chosen)->child;
        }
    }

    /// Visit-weighted UCT score of `action` across the bucket of player node
    /// `id`; nullopt when no state in the bucket has expanded that action.
    std::optional<double> aggregated_uct(NodeId id, const Action& action) const
    {
        const Node& n = nodes_.at(id);
        if (n.terminal() || !n.actor->is_player() || !n.info_key)
            throw NoExpandedEdges("UCT needs a player decision node");
        const auto player = static_cast<std::size_t>(n.actor->index());
        auto members = bucket(*n.info_key);
        check_homogeneous(members, *n.actor);

        std::vector<int> visits;
        std::vector<double> values;
        for (NodeId member : members) {
            const Node& s = nodes_[member];
            const Edge* e = s.edge(action);
            if (!e)
                continue;
            const Node& child = nodes_[e->child];
            visits.push_back(s.visits);
            values.push_back(uct_value(e->rewards.at(player), config_.gamma, child.values.at(player),
                                       config_.exploration, s.visits, child.visits));
        }
        if (visits.empty())
            return std::nullopt;
        auto w = infoset_weights(visits);
        double score = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k)
            score += w[k] * values[k];
        return score;
    }

    /// Info-set aggregated UCT choice at a fully expanded player node.
    Action uct_select(NodeId id) const
    {
        const Node& n = nodes_.at(id);
        const Action* best = nullptr;
        double best_score = -std::numeric_limits<double>::infinity();
        for (const auto& action : n.actions) {
            auto score = aggregated_uct(id, action);
            if (score && *score > best_score) {
                best_score = *score;
                best = &action;
            }
        }
        if (!best)
            throw NoExpandedEdges("no expanded edge in the information set");
        return *best;
    }

    /// Applies `action` at `parent`, creating (or linking) the child node.
    NodeId expand(NodeId parent, const Action& action, std::uint64_t value_seed)
    {
        auto& untried = nodes_.at(parent).untried;
        auto it = std::find(untried.begin(), untried.end(), action);
        if (it == untried.end())
            throw IllegalAction("action is not untried at this node");
        untried.erase(it);

        auto step = model_->transition(nodes_[parent].state, action, *nodes_[parent].actor);
        NodeId child;
        if (auto existing = find(step.state))
            child = *existing;
        else
            child = create_node(std::move(step.state), parent, value_seed);
        nodes_[parent].edges.push_back(Edge{action, child, std::move(step.rewards)});
        return child;
    }

    /// Walks creation-parent links from `leaf`, applying the value backup to
    /// each ancestor with the traversed edge's rewards and the child's values.
    void backpropagate(NodeId leaf)
    {
        nodes_.at(leaf).visits += 1;
        NodeId child = leaf;
        while (auto parent = nodes_[child].parent) {
            Node& p = nodes_[*parent];
            const Edge* via = nullptr;
            for (const auto& e : p.edges)
                if (e.child == child)
                    via = &e;
            if (!via)
                throw Inconsistent("creation parent lost its edge to the child");
            backup(p.values, p.visits, via->rewards, nodes_[child].values, config_.gamma);
            child = *parent;
        }
    }

    /// One full iteration; returns the leaf that was backed up.
    NodeId iterate(const InfoSet& info_set, std::ostream* trace = nullptr)
    {
        NodeId root = realize_root(info_set);
        std::vector<Action> path;
        auto [node_id, action] = select(root, trace ? &path : nullptr);
        NodeId leaf = node_id;
        if (action)
            leaf = expand(node_id, *action, next_value_seed());
        backpropagate(leaf);
        if (trace)
            write_trace(*trace, root, path, leaf);
        ++iteration_;
        return leaf;
    }

    void run(const InfoSet& info_set, int iterations, std::ostream* trace = nullptr)
    {
        for (int i = 0; i < iterations; ++i)
            iterate(info_set, trace);
    }

    /// Aggregates the searcher's information-set bucket: best action is the
    /// one with the highest visit-weighted mean value for the acting player.
    SearchResult<Action> summarize(const InfoSet& info_set) const
    {
        auto members = bucket(info_set);
        if (members.empty())
            return fallback_result(info_set);
        const ActorId actor = *nodes_[members.front()].actor;
        check_homogeneous(members, actor);
        const int player = actor.index();
        const int players = model_->info().players;

        SearchResult<Action> result;
        result.actor = actor;
        result.root_values = zero_rewards(players);
        auto w = weights(members);
        for (std::size_t k = 0; k < members.size(); ++k) {
            const Node& s = nodes_[members[k]];
            result.root_visits += s.visits;
            for (int i = 0; i < players; ++i)
                result.root_values[static_cast<std::size_t>(i)] +=
                    w[k] * s.values[static_cast<std::size_t>(i)];
        }

        std::vector<Action> actions;
        for (NodeId member : members)
            for (const auto& a : nodes_[member].actions)
                actions.push_back(a);
        canonicalize(actions);

        std::vector<int> visits;
        std::vector<double> returns;
        for (const auto& action : actions) {
            visits.clear();
            returns.clear();
            int child_visits = 0;
            for (NodeId member : members) {
                const Node& s = nodes_[member];
                const Edge* e = s.edge(action);
                if (!e)
                    continue;
                const Node& child = nodes_[e->child];
                visits.push_back(s.visits);
                returns.push_back(e->rewards.at(static_cast<std::size_t>(player)) +
                                  config_.gamma * child.values.at(static_cast<std::size_t>(player)));
                // Children start at n = 1; every traversal adds one.
                child_visits += child.visits - 1;
            }
            if (visits.empty())
                continue;
            auto cw = infoset_weights(visits);
            double mean = 0.0;
            for (std::size_t k = 0; k < cw.size(); ++k)
                mean += cw[k] * returns[k];
            result.action_stats.push_back({action, child_visits, mean});
        }

        if (result.action_stats.empty()) {
            result.best_action = actions.front();
            result.action_stats.push_back({actions.front(), 0, 0.0});
            return result;
        }
        const ActionStats<Action>* best = &result.action_stats.front();
        for (const auto& s : result.action_stats)
            if (s.mean_value > best->mean_value)
                best = &s;
        result.best_action = best->action;
        return result;
    }

private:
    std::uint64_t next_value_seed()
    {
        return derive_seed(config_.seed, 0x76616c7565ULL, iteration_, value_draws_++);
    }

    Rewards leaf_values(const State& state, bool terminal, std::uint64_t value_seed) const
    {
        const int players = model_->info().players;
        if (terminal)
            return zero_rewards(players);
        if (config_.value_mode == ValueMode::RandomRollout)
            return rollout_evaluate(state, *model_, value_seed, config_.gamma, config_.rollout_cap);
        auto values = model_->evaluate(state).values;
        auto banked = model_->banked(state);
        values.resize(static_cast<std::size_t>(players), 0.0);
        for (std::size_t i = 0; i < values.size() && i < banked.size(); ++i)
            values[i] -= banked[i];
        return values;
    }

    NodeId create_node(State state, std::optional<NodeId> parent, std::uint64_t value_seed)
    {
        auto options = model_->enumerate(state);
        canonicalize(options.actions);
        if (options.actor && options.actions.empty())
            throw Inconsistent("non-terminal state without legal actions");

        Node n{.state = state,
               .values = leaf_values(state, options.terminal(), value_seed),
               .visits = 1,
               .actor = options.actor,
               .actions = options.actions,
               .untried = std::move(options.actions),
               .edges = {},
               .info_key = std::nullopt,
               .parent = parent,
               .chance = false,
               .policy = {}};
        if (n.actor) {
            if (n.actor->is_environment()) {
                n.chance = true;
            } else {
                n.info_key = model_->partition(state, *n.actor);
                if (auto weights = fixed_policy_weights(*model_, state, *n.actor, n.actions)) {
                    n.chance = true;
                    n.policy = std::move(*weights);
                    if (n.policy.size() != n.actions.size())
                        throw Inconsistent("fixed policy weights do not match the action count");
                }
            }
        }

        NodeId id = nodes_.size();
        if (n.info_key)
            buckets_[*n.info_key].push_back(id);
        nodes_.push_back(std::move(n));
        by_state_.emplace(std::move(state), id);
        return id;
    }

    void check_homogeneous(std::span<const NodeId> members, ActorId actor) const
    {
        for (NodeId member : members)
            if (nodes_[member].actor != actor)
                throw MixedActors("information-set bucket mixes acting actors");
    }

    SearchResult<Action> fallback_result(const InfoSet& info_set) const
    {
        State realized = model_->realize(info_set);
        auto options = model_->enumerate(realized);
        if (options.terminal() || options.actions.empty())
            throw NoLegalAction("information set has no legal action");
        canonicalize(options.actions);
        SearchResult<Action> result;
        result.best_action = options.actions.front();
        result.actor = *options.actor;
        result.root_values = zero_rewards(model_->info().players);
        result.action_stats.push_back({options.actions.front(), 0, 0.0});
        return result;
    }

    void write_trace(std::ostream& out, NodeId root, const std::vector<Action>& path,
                     NodeId leaf) const
    {
        Json line;
        line["iteration"] = iteration_;
        if constexpr (std::is_constructible_v<Json, const State&>)
            line["state"] = digest_hex(state_digest(Json(nodes_[root].state)));
        Json actions = Json::array();
        if constexpr (std::is_constructible_v<Json, const Action&>)
            for (const auto& a : path)
                actions.push_back(canonical_dump(Json(a)));
        line["path"] = std::move(actions);
        line["leaf_values"] = nodes_[leaf].values;
        out << canonical_dump(line) << '\n';
    }

    const M* model_;
    SearchConfig config_;
    Rng rng_;
    std::vector<Node> nodes_;
    std::unordered_map<State, NodeId> by_state_;
    std::unordered_map<InfoSet, std::vector<NodeId>> buckets_;
    std::uint64_t iteration_ = 0;
    std::uint64_t value_draws_ = 0;
};

/// Runs `config.iterations` iterations on a fresh graph and returns the
/// recommended action for the player owning `info_set`.
template <WorldModel M>
SearchResult<typename M::Action> search(const typename M::InfoSet& info_set, const M& model,
                                        const SearchConfig& config, std::ostream* trace = nullptr)
{
    {
        auto realized = model.realize(info_set);
        if (model.enumerate(realized).terminal())
            throw NoLegalAction("cannot search from a terminal information set");
    }
    SearchGraph<M> graph(model, config);
    graph.run(info_set, config.iterations, trace);
    return graph.summarize(info_set);
}

} // namespace pianist::mcts
