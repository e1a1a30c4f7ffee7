#pragma once

// Type-erased world models over canonical JSON values. This is the boundary
// used by the match arena, the conformance harness and the subprocess host:
// any model, in-process or external, looks the same at this level.

#include <memory>
#include <utility>

#include "pianist/worldmodel/model.hpp"

namespace pianist {

class JsonWorldModel {
public:
    virtual ~JsonWorldModel() = default;

    virtual const ModelInfo& info() const = 0;
    virtual Json initial(std::uint64_t seed) const = 0;
    virtual Step<Json> transition(const Json& state, const Json& action, ActorId actor) const = 0;
    virtual Enumeration<Json> enumerate(const Json& state) const = 0;
    virtual Json partition(const Json& state, ActorId actor) const = 0;
    virtual Json realize(const Json& info_set) const = 0;
    virtual Evaluation evaluate(const Json& state) const = 0;
    virtual Rewards banked(const Json& state) const = 0;
};

/// Exposes a typed model through the JSON interface. State, action and
/// information-set types must be convertible with nlohmann's ADL hooks.
template <WorldModel M>
class JsonAdapter final : public JsonWorldModel {
public:
    using State = typename M::State;
    using Action = typename M::Action;
    using InfoSet = typename M::InfoSet;

    explicit JsonAdapter(std::shared_ptr<const M> model) : model_(std::move(model)) {}

    const M& model() const { return *model_; }

    const ModelInfo& info() const override { return model_->info(); }

    Json initial(std::uint64_t seed) const override { return model_->initial(seed); }

    Step<Json> transition(const Json& state, const Json& action, ActorId actor) const override
    {
        auto step = model_->transition(decode<State>(state), decode<Action>(action), actor);
        return {Json(step.state), std::move(step.rewards)};
    }

    Enumeration<Json> enumerate(const Json& state) const override
    {
        auto options = model_->enumerate(decode<State>(state));
        canonicalize(options.actions);
        Enumeration<Json> out{options.actor, {}};
        out.actions.reserve(options.actions.size());
        for (const auto& action : options.actions)
            out.actions.emplace_back(action);
        return out;
    }

    Json partition(const Json& state, ActorId actor) const override
    {
        return model_->partition(decode<State>(state), actor);
    }

    Json realize(const Json& info_set) const override
    {
        return model_->realize(decode<InfoSet>(info_set));
    }

    Evaluation evaluate(const Json& state) const override
    {
        return model_->evaluate(decode<State>(state));
    }

    Rewards banked(const Json& state) const override
    {
        return model_->banked(decode<State>(state));
    }

private:
    template <class T>
    static T decode(const Json& value)
    {
        try {
            return value.get<T>();
        } catch (const Json::exception& e) {
            throw Inconsistent(std::string("malformed payload: ") + e.what());
        }
    }

    std::shared_ptr<const M> model_;
};

/// Typed view of a JSON model so the search engine can run on it directly.
/// States, actions and information sets are the canonical JSON values.
class DynamicModel {
public:
    using State = Json;
    using Action = Json;
    using InfoSet = Json;

    explicit DynamicModel(std::shared_ptr<const JsonWorldModel> model) : model_(std::move(model)) {}

    const JsonWorldModel& backend() const { return *model_; }

    const ModelInfo& info() const { return model_->info(); }
    Json initial(std::uint64_t seed) const { return model_->initial(seed); }
    Step<Json> transition(const Json& s, const Json& a, ActorId actor) const
    {
        return model_->transition(s, a, actor);
    }
    Enumeration<Json> enumerate(const Json& s) const { return model_->enumerate(s); }
    Json partition(const Json& s, ActorId actor) const { return model_->partition(s, actor); }
    Json realize(const Json& h) const { return model_->realize(h); }
    Evaluation evaluate(const Json& s) const { return model_->evaluate(s); }
    Rewards banked(const Json& s) const { return model_->banked(s); }

private:
    std::shared_ptr<const JsonWorldModel> model_;
};

static_assert(WorldModel<DynamicModel>);

} // namespace pianist
