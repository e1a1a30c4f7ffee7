#include "pianist/worldmodel/types.hpp"

namespace pianist {

std::string to_string(ActorId actor)
{
    if (actor.is_environment())
        return "environment";
    return "player " + std::to_string(actor.raw());
}

void to_json(Json& j, const ModelInfo& info)
{
    j = Json{{"game", info.game}, {"players", info.players}, {"discount", info.discount}};
    if (info.value_bounds)
        j["value_bounds"] = {info.value_bounds->first, info.value_bounds->second};
}

void from_json(const Json& j, ModelInfo& info)
{
    info.game = j.at("game").get<std::string>();
    info.players = j.at("players").get<int>();
    info.discount = j.value("discount", 1.0);
    info.value_bounds.reset();
    if (auto it = j.find("value_bounds"); it != j.end() && it->is_array() && it->size() == 2)
        info.value_bounds = std::pair{(*it)[0].get<double>(), (*it)[1].get<double>()};
}

void throw_error(const std::string& code, const std::string& message)
{
    if (code == "IllegalAction")
        throw IllegalAction(message);
    if (code == "WrongActor")
        throw WrongActor(message);
    if (code == "Inconsistent")
        throw Inconsistent(message);
    if (code == "BudgetExceeded")
        throw BudgetExceeded(message);
    if (code == "BadConfig")
        throw BadConfig(message);
    if (code == "NotTerminal")
        throw NotTerminal(message);
    throw Error(code, message);
}

} // namespace pianist

pianist::ActorId nlohmann::adl_serializer<pianist::ActorId>::from_json(const pianist::Json& j)
{
    if (!j.is_number_integer())
        throw pianist::Inconsistent("actor must be an integer, got " + j.dump());
    return pianist::ActorId::from_raw(j.get<int>());
}

void nlohmann::adl_serializer<pianist::ActorId>::to_json(pianist::Json& j,
                                                        const pianist::ActorId& actor)
{
    j = actor.raw();
}
