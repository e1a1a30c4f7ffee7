#pragma once

// Shared vocabulary of the world-model contract: actors, rewards, enumeration
// results and the error types every model and engine component throws.

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pianist {

using Json = nlohmann::json;

/// Acting entity in a game. The environment (chance) is encoded as -1,
/// players are dense indices starting at 0.
class ActorId {
public:
    static constexpr ActorId environment() { return ActorId{-1}; }

    static ActorId player(int index)
    {
        if (index < 0)
            throw std::invalid_argument("player index must be non-negative");
        return ActorId{index};
    }

    /// Decodes the wire encoding (-1 environment, otherwise a player index).
    static ActorId from_raw(int raw)
    {
        return raw == -1 ? environment() : player(raw);
    }

    constexpr bool is_environment() const { return value_ == -1; }
    constexpr bool is_player() const { return value_ >= 0; }
    constexpr int raw() const { return value_; }

    int index() const
    {
        if (!is_player())
            throw std::logic_error("environment actor has no player index");
        return value_;
    }

    auto operator<=>(const ActorId&) const = default;

private:
    constexpr explicit ActorId(int value) : value_(value) {}

    int value_;
};

std::string to_string(ActorId actor);


/// Per-player rewards, indexed by player. Always sized to the player count;
/// the environment never receives a reward.
using Rewards = std::vector<double>;

inline Rewards zero_rewards(int players) { return Rewards(static_cast<std::size_t>(players), 0.0); }

template <class Action>
struct Enumeration {
    std::optional<ActorId> actor; // nullopt at terminal states
    std::vector<Action> actions;

    bool terminal() const { return !actor.has_value(); }
};

template <class State>
struct Step {
    State state;
    Rewards rewards;
};

struct Evaluation {
    Rewards values;
    Json notes = Json::object();
};

struct ModelInfo {
    std::string game;
    int players = 2;
    double discount = 1.0;
    /// Closed range every value estimate must fall in, when known.
    std::optional<std::pair<double, double>> value_bounds;
};

void to_json(Json& j, const ModelInfo& info);
void from_json(const Json& j, ModelInfo& info);

// ---------------------------------------------------------------------------
// Errors. Each carries a stable code that survives the subprocess protocol.

class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code))
    {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define PIANIST_DECLARE_ERROR(Name)                                                                \
    class Name : public Error {                                                                    \
    public:                                                                                        \
        explicit Name(const std::string& message) : Error(#Name, message) {}                       \
    }

PIANIST_DECLARE_ERROR(IllegalAction);
PIANIST_DECLARE_ERROR(WrongActor);
PIANIST_DECLARE_ERROR(Inconsistent);
PIANIST_DECLARE_ERROR(BudgetExceeded);
PIANIST_DECLARE_ERROR(BadConfig);
PIANIST_DECLARE_ERROR(NotTerminal);

/// Re-raises an error received as (code, message), preserving the concrete
/// type for the codes declared above. Unknown codes become a plain Error.
[[noreturn]] void throw_error(const std::string& code, const std::string& message);

} // namespace pianist

// ActorId has no default value, so it needs a value-returning serializer.
template <>
struct nlohmann::adl_serializer<pianist::ActorId> {
    static pianist::ActorId from_json(const pianist::Json& j);
    static void to_json(pianist::Json& j, const pianist::ActorId& actor);
};
