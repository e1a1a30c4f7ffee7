#pragma once

#include <cstdint>
#include <optional>

#include "pianist/worldmodel/types.hpp"

namespace pianist {

/// One step of a realised trajectory. A terminal event has no actor and
/// no action and is always the last event of its trajectory.
struct TrajectoryEvent {
    std::uint64_t state_digest = 0;
    std::optional<ActorId> actor;
    Json action; // null for the terminal event
    Rewards rewards;
    int step_index = 0;

    bool terminal() const { return !actor.has_value(); }

    bool operator==(const TrajectoryEvent&) const = default;
};

void to_json(Json& j, const TrajectoryEvent& event);
void from_json(const Json& j, TrajectoryEvent& event);

} // namespace pianist
