#include "pianist/mcts/search.hpp"

namespace pianist::mcts {

void SearchConfig::validate() const
{
    if (iterations < 1)
        throw BadConfig("iterations must be at least 1");
    if (!(exploration >= 0.0))
        throw BadConfig("exploration constant must be non-negative");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw BadConfig("gamma must lie in (0, 1]");
    if (rollout_cap < 1)
        throw BadConfig("rollout_cap must be positive");
}

void to_json(Json& j, const SearchConfig& config)
{
    j = Json{{"iterations", config.iterations},
             {"exploration", config.exploration},
             {"gamma", config.gamma},
             {"seed", config.seed},
             {"value_mode", config.value_mode == ValueMode::Heuristic ? "heuristic" : "rollout"},
             {"rollout_cap", config.rollout_cap}};
}

void from_json(const Json& j, SearchConfig& config)
{
    SearchConfig out;
    out.iterations = j.value("iterations", out.iterations);
    out.exploration = j.value("exploration", out.exploration);
    out.gamma = j.value("gamma", out.gamma);
    out.seed = j.value("seed", out.seed);
    out.rollout_cap = j.value("rollout_cap", out.rollout_cap);
    auto mode = j.value("value_mode", std::string("rollout"));
    if (mode == "heuristic")
        out.value_mode = ValueMode::Heuristic;
    else if (mode == "rollout")
        out.value_mode = ValueMode::RandomRollout;
    else
        throw BadConfig("unknown value_mode '" + mode + "'");
    out.validate();
    config = out;
}

std::vector<double> infoset_weights(std::span<const int> visits)
{
    if (visits.empty())
        throw EmptyInfoSet("information set has no nodes");
    double total = 0.0;
    for (int n : visits) {
        if (n < 1)
            throw Inconsistent("visit counts must be positive");
        total += n;
    }
    std::vector<double> weights;
    weights.reserve(visits.size());
    for (int n : visits)
        weights.push_back(n / total);
    return weights;
}

double uct_value(double reward, double gamma, double child_value, double exploration,
                 int parent_visits, int child_visits)
{
    return reward + gamma * child_value +
           exploration * std::sqrt(std::log(static_cast<double>(parent_visits)) / child_visits);
}

void backup(Rewards& values, int& visits, const Rewards& edge_rewards, const Rewards& child_values,
            double gamma)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        double target = edge_rewards.at(i) + gamma * child_values.at(i);
        values[i] += (target - values[i]) / visits;
    }
    ++visits;
}

} // namespace pianist::mcts
