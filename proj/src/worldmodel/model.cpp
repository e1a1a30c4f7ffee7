#include "pianist/worldmodel/model.hpp"

#include <numeric>

namespace pianist {

std::size_t weighted_index(Rng& rng, const std::vector<double>& weights)
{
    if (weights.empty())
        throw std::invalid_argument("weighted_index needs at least one weight");
    double total = 0.0;
    for (double w : weights)
        total += w > 0.0 ? w : 0.0;
    if (total <= 0.0)
        return uniform_index(rng, weights.size());
    double draw = std::uniform_real_distribution<double>(0.0, total)(rng);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double w = weights[i] > 0.0 ? weights[i] : 0.0;
        if (draw < w)
            return i;
        draw -= w;
    }
    // Rounding can leave draw marginally above the last bucket.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0)
            return i;
    return weights.size() - 1;
}

} // namespace pianist
