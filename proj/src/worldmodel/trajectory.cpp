#include "pianist/worldmodel/trajectory.hpp"

#include <stdexcept>

#include "pianist/worldmodel/canonical.hpp"

namespace pianist {

void to_json(Json& j, const TrajectoryEvent& event)
{
    j = Json{{"state", digest_hex(event.state_digest)},
             {"actor", event.actor ? Json(event.actor->raw()) : Json("terminal")},
             {"action", event.action},
             {"rewards", event.rewards},
             {"step", event.step_index}};
}

void from_json(const Json& j, TrajectoryEvent& event)
{
    event.state_digest = std::stoull(j.at("state").get<std::string>(), nullptr, 16);
    const auto& actor = j.at("actor");
    if (actor.is_string()) {
        if (actor.get<std::string>() != "terminal")
            throw std::invalid_argument("unknown actor marker " + actor.dump());
        event.actor.reset();
    } else {
        event.actor = ActorId::from_raw(actor.get<int>());
    }
    event.action = j.at("action");
    event.rewards = j.at("rewards").get<Rewards>();
    event.step_index = j.at("step").get<int>();
}

} // namespace pianist
