#pragma once

// The world-model contract. A model bundles the transition-reward function,
// the actor/action enumerator, the information partition, the information
// realization and a value heuristic over game-specific hidden states.
//
// Operations are pure: identical inputs give identical outputs. Chance is
// expressed only through environment actions, which callers sample.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "pianist/worldmodel/types.hpp"

namespace pianist {

inline constexpr int kDefaultRolloutCap = 10'000;

template <class T>
concept Hashable = requires(const T& value) {
    { std::hash<T>{}(value) } -> std::convertible_to<std::size_t>;
} && std::equality_comparable<T>;

template <class T>
concept CanonicallyOrdered = std::equality_comparable<T> && requires(const T& a, const T& b) {
    { a < b } -> std::convertible_to<bool>;
};

template <class M>
concept WorldModel =
    Hashable<typename M::State> && Hashable<typename M::InfoSet> &&
    CanonicallyOrdered<typename M::Action> &&
    requires(const M& model, const typename M::State& state, const typename M::Action& action,
             const typename M::InfoSet& info_set, ActorId actor, std::uint64_t seed) {
        { model.info() } -> std::convertible_to<const ModelInfo&>;
        { model.initial(seed) } -> std::same_as<typename M::State>;
        { model.transition(state, action, actor) } -> std::same_as<Step<typename M::State>>;
        { model.enumerate(state) } -> std::same_as<Enumeration<typename M::Action>>;
        { model.partition(state, actor) } -> std::same_as<typename M::InfoSet>;
        { model.realize(info_set) } -> std::same_as<typename M::State>;
        { model.evaluate(state) } -> std::same_as<Evaluation>;
        // Rewards already credited on the way to `state`; lets a search turn
        // whole-game heuristic values into values-to-go.
        { model.banked(state) } -> std::same_as<Rewards>;
    };

/// Models may steer selected player actors with a fixed stochastic policy
/// (for example a scripted teammate). When this returns weights the search
/// treats the node like a chance node instead of optimising over it.
template <class M>
concept HasFixedPolicies =
    WorldModel<M> && requires(const M& model, const typename M::State& state, ActorId actor,
                              const std::vector<typename M::Action>& actions) {
        { model.fixed_policy(state, actor, actions) } -> std::same_as<std::optional<std::vector<double>>>;
    };

template <WorldModel M>
std::optional<std::vector<double>> fixed_policy_weights(const M& model, const typename M::State& state,
                                                        ActorId actor,
                                                        const std::vector<typename M::Action>& actions)
{
    if constexpr (HasFixedPolicies<M>)
        return model.fixed_policy(state, actor, actions);
    else
        return std::nullopt;
}

using Rng = std::mt19937_64;

inline std::size_t uniform_index(Rng& rng, std::size_t size)
{
    return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
}

/// Samples an index proportionally to non-negative weights; falls back to a
/// uniform draw when every weight is zero.
std::size_t weighted_index(Rng& rng, const std::vector<double>& weights);

/// Canonical action order: sorted ascending, duplicates removed.
template <class Action>
void canonicalize(std::vector<Action>& actions)
{
    std::sort(actions.begin(), actions.end());
    actions.erase(std::unique(actions.begin(), actions.end()), actions.end());
}

/// Plays uniformly random legal actions (environment included) to a terminal
/// state and returns each player's discounted reward sum from `state` on.
template <WorldModel M>
Rewards rollout_evaluate(const typename M::State& state, const M& model, std::uint64_t seed,
                         double gamma, int step_cap = kDefaultRolloutCap)
{
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw BadConfig("rollout discount must lie in (0, 1]");
    Rng rng(seed);
    Rewards total = zero_rewards(model.info().players);
    typename M::State current = state;
    double weight = 1.0;
    for (int step = 0;; ++step) {
        auto options = model.enumerate(current);
        if (options.terminal())
            return total;
        if (step >= step_cap)
            throw BudgetExceeded("rollout did not terminate within " + std::to_string(step_cap) +
                                 " steps");
        if (options.actions.empty())
            throw Inconsistent("non-terminal state without legal actions");
        canonicalize(options.actions);
        const auto& action = options.actions[uniform_index(rng, options.actions.size())];
        auto next = model.transition(current, action, *options.actor);
        for (std::size_t i = 0; i < total.size() && i < next.rewards.size(); ++i)
            total[i] += weight * next.rewards[i];
        weight *= gamma;
        current = std::move(next.state);
    }
}

} // namespace pianist
