// Serves a built-in world model over the subprocess protocol on stdio.
//
//   pianist-host --game gops --k 6
//   pianist-host --game gops --tie-rule discard      # mutant: tied prizes dropped
//   pianist-host --game gops --leaky-partition       # mutant: reveals opponent bids

#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "pianist/gateway/host.hpp"
#include "pianist/gops/gops.hpp"

namespace {

using pianist::ActorId;
using pianist::Json;

/// Adds the opponent's committed card to every observation.
class LeakyPartition final : public pianist::JsonWorldModel {
public:
    explicit LeakyPartition(std::shared_ptr<const pianist::JsonWorldModel> inner) : inner_(std::move(inner)) {}

    const pianist::ModelInfo& info() const override { return inner_->info(); }
    Json initial(std::uint64_t seed) const override { return inner_->initial(seed); }
    pianist::Step<Json> transition(const Json& s, const Json& a, ActorId actor) const override
    {
        return inner_->transition(s, a, actor);
    }
    pianist::Enumeration<Json> enumerate(const Json& s) const override { return inner_->enumerate(s); }
    Json partition(const Json& s, ActorId actor) const override
    {
        auto h = inner_->partition(s, actor);
        if (actor.is_player()) {
            const auto& pending = s.at("pending").at(1 - actor.raw());
            if (!pending.is_null())
                h["opponent_pending"] = pending;
        }
        return h;
    }
    Json realize(const Json& h) const override { return inner_->realize(h); }
    pianist::Evaluation evaluate(const Json& s) const override { return inner_->evaluate(s); }
    pianist::Rewards banked(const Json& s) const override { return inner_->banked(s); }

private:
    std::shared_ptr<const pianist::JsonWorldModel> inner_;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Serve a world model over line-delimited JSON on stdin/stdout"};
    std::string game = "gops";
    int k = 6;
    std::vector<int> prize_order;
    std::string tie_rule = "carry";
    bool leaky = false;
    app.add_option("--game", game, "Model to serve")->check(CLI::IsMember({"gops"}));
    app.add_option("--k", k, "GOPS cards per suit")->check(CLI::Range(1, pianist::gops::kMaxCards));
    app.add_option("--prize-order", prize_order, "Fixed prize order");
    app.add_option("--tie-rule", tie_rule, "carry or discard")->check(CLI::IsMember({"carry", "discard"}));
    app.add_flag("--leaky-partition", leaky, "Leak the opponent's committed card");
    CLI11_PARSE(app, argc, argv);

    try {
        pianist::gops::GopsConfig config;
        config.k = k;
        config.prize_order = prize_order;
        config.tie_rule = tie_rule == "discard" ? pianist::gops::TieRule::Discard : pianist::gops::TieRule::CarryPot;
        std::shared_ptr<const pianist::JsonWorldModel> model =
            std::make_shared<pianist::JsonAdapter<pianist::gops::GopsModel>>(
                std::make_shared<const pianist::gops::GopsModel>(config));
        if (leaky)
            model = std::make_shared<LeakyPartition>(model);
        std::ios::sync_with_stdio(false);
        pianist::gateway::serve_model(*model, std::cin, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "pianist-host: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
