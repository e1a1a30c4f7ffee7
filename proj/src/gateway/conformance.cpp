#include "pianist/gateway/conformance.hpp"

#include <cmath>
#include <map>
#include <set>

#include "pianist/worldmodel/canonical.hpp"

namespace pianist::gateway {
namespace {

Json error_json(const std::exception& e)
{
    if (auto* err = dynamic_cast<const Error*>(&e))
        return Json{{"error", err->code()}, {"message", err->what()}};
    return Json{{"error", "exception"}, {"message", e.what()}};
}

Json enumeration_json(Enumeration<Json> e)
{
    canonicalize(e.actions);
    return Json{{"actor", e.actor ? Json(*e.actor) : Json(nullptr)}, {"actions", e.actions}};
}

bool rewards_match(const Rewards& a, const Rewards& b, double tolerance)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(std::abs(a[i] - b[i]) <= tolerance))
            return false;
    return true;
}

class Stage {
public:
    explicit Stage(std::string name) { result_.name = std::move(name); }

    void fail(Json input, Json expected, Json got)
    {
        result_.passed = false;
        if (result_.exemplars.size() < kMaxExemplars)
            result_.exemplars.push_back({std::move(input), std::move(expected), std::move(got)});
    }
    bool full() const { return result_.exemplars.size() >= kMaxExemplars; }
    StageResult take() { return std::move(result_); }

private:
    StageResult result_;
};

struct Context {
    const JsonWorldModel& candidate;
    const JsonWorldModel& reference;
    const ConformanceSuite& suite;
    std::vector<Json> states;
    int players;
};

StageResult infoset_roundtrip(const Context& c)
{
    Stage stage("infoset_roundtrip");
    const auto& ci = c.candidate.info();
    const auto& ri = c.reference.info();
    if (ci.game != ri.game || ci.players != ri.players) {
        stage.fail("info", Json(ri), Json(ci));
        return stage.take();
    }
    for (const auto& s : c.states) {
        for (int p = 0; p < c.players && !stage.full(); ++p) {
            const Json input{{"state", s}, {"actor", p}};
            try {
                auto h = c.candidate.partition(s, ActorId::player(p));
                auto back = Json::parse(canonical_dump(h));
                if (back != h) {
                    stage.fail(input, h, back);
                    continue;
                }
                c.candidate.realize(back);
            } catch (const std::exception& e) {
                stage.fail(input, "a serialisable information set accepted by realize", error_json(e));
            }
        }
    }
    return stage.take();
}

StageResult enumerate_agreement(const Context& c)
{
    Stage stage("enumerate");
    for (const auto& s : c.states) {
        if (stage.full())
            break;
        const auto expected = enumeration_json(c.reference.enumerate(s));
        try {
            auto got = enumeration_json(c.candidate.enumerate(s));
            if (got != expected)
                stage.fail(s, expected, got);
        } catch (const std::exception& e) {
            stage.fail(s, expected, error_json(e));
        }
    }
    return stage.take();
}

StageResult transition_agreement(const Context& c)
{
    Stage stage("transition");
    for (const auto& s : c.states) {
        const auto options = c.reference.enumerate(s);
        if (options.terminal())
            continue;
        for (const auto& a : options.actions) {
            if (stage.full())
                return stage.take();
            const Json input{{"state", s}, {"action", a}, {"actor", *options.actor}};
            const auto ref = c.reference.transition(s, a, *options.actor);
            const Json expected{{"state", ref.state}, {"rewards", ref.rewards}};
            try {
                auto got = c.candidate.transition(s, a, *options.actor);
                if (got.state != ref.state || !rewards_match(got.rewards, ref.rewards, c.suite.tolerance))
                    stage.fail(input, expected, Json{{"state", got.state}, {"rewards", got.rewards}});
            } catch (const std::exception& e) {
                stage.fail(input, expected, error_json(e));
            }
        }
    }
    return stage.take();
}

StageResult partition_erasure(const Context& c)
{
    Stage stage("partition");
    // States the reference cannot tell apart must stay indistinguishable.
    std::map<std::pair<int, std::string>, std::pair<Json, std::string>> seen;
    for (const auto& s : c.states) {
        for (int p = 0; p < c.players && !stage.full(); ++p) {
            const Json input{{"state", s}, {"actor", p}};
            const auto expected = c.reference.partition(s, ActorId::player(p));
            Json got;
            try {
                got = c.candidate.partition(s, ActorId::player(p));
            } catch (const std::exception& e) {
                stage.fail(input, expected, error_json(e));
                continue;
            }
            if (got != expected) {
                stage.fail(input, expected, got);
                continue;
            }
            const auto key = std::pair{p, canonical_dump(expected)};
            const auto dump = canonical_dump(got);
            auto [it, fresh] = seen.try_emplace(key, s, dump);
            if (!fresh && it->second.second != dump)
                stage.fail(Json{{"states", {it->second.first, s}}, {"actor", p}},
                           "identical information sets", Json{Json::parse(it->second.second), got});
        }
    }
    return stage.take();
}

StageResult realization_consistency(const Context& c)
{
    Stage stage("realize");
    for (const auto& s : c.states) {
        for (int p = 0; p < c.players && !stage.full(); ++p) {
            const auto actor = ActorId::player(p);
            const auto h = c.reference.partition(s, actor);
            const Json input{{"info_set", h}, {"actor", p}};
            const auto expected = c.reference.partition(c.reference.realize(h), actor);
            try {
                auto r = c.candidate.realize(h);
                auto got = c.reference.partition(r, actor);
                if (got != expected)
                    stage.fail(input, expected, got);
            } catch (const std::exception& e) {
                stage.fail(input, expected, error_json(e));
            }
        }
    }
    return stage.take();
}

StageResult evaluate_bounds(const Context& c)
{
    Stage stage("evaluate");
    const auto bounds = c.reference.info().value_bounds;
    const double tol = c.suite.tolerance;
    Json expected{{"players", c.players}};
    if (bounds)
        expected["bounds"] = {bounds->first, bounds->second};
    for (const auto& s : c.states) {
        if (stage.full())
            break;
        try {
            auto values = c.candidate.evaluate(s).values;
            bool ok = static_cast<int>(values.size()) == c.players;
            for (double v : values)
                ok = ok && std::isfinite(v) &&
                     (!bounds || (v >= bounds->first - tol && v <= bounds->second + tol));
            if (!ok)
                stage.fail(s, expected, values);
        } catch (const std::exception& e) {
            stage.fail(s, expected, error_json(e));
        }
    }
    return stage.take();
}

} // namespace

bool ConformanceReport::passed() const
{
    return stages.size() == conformance_stages().size() && failure() == nullptr;
}

const StageResult* ConformanceReport::failure() const
{
    for (const auto& s : stages)
        if (!s.passed)
            return &s;
    return nullptr;
}

void to_json(Json& j, const Exemplar& e)
{
    j = Json{{"input", e.input}, {"expected", e.expected}, {"got", e.got}};
}

void to_json(Json& j, const StageResult& s)
{
    j = Json{{"name", s.name}, {"passed", s.passed}, {"exemplars", s.exemplars}};
}

void to_json(Json& j, const ConformanceReport& r)
{
    j = Json{{"stages", r.stages}, {"attempts", r.attempts}, {"passed", r.passed()}};
}

const std::vector<std::string>& conformance_stages()
{
    static const std::vector<std::string> names{"infoset_roundtrip", "enumerate", "transition",
                                                "partition",         "realize",   "evaluate"};
    return names;
}

std::vector<Json> suite_states(const JsonWorldModel& reference, const ConformanceSuite& suite)
{
    std::vector<Json> states;
    std::set<std::string> seen;
    auto add = [&](const Json& s) {
        if (seen.insert(canonical_dump(s)).second)
            states.push_back(s);
    };
    for (const auto& s : suite.golden_states)
        add(s);
    for (int i = 0; i < suite.fuzz_playouts; ++i) {
        Rng rng(derive_seed(suite.seed, 0x66757a7a, static_cast<std::uint64_t>(i)));
        auto s = reference.initial(suite.seed + static_cast<std::uint64_t>(i));
        for (int step = 0;; ++step) {
            add(s);
            auto options = reference.enumerate(s);
            if (options.terminal())
                break;
            if (step >= suite.step_cap)
                throw BudgetExceeded("fuzz playout did not terminate");
            const auto& a = options.actions[uniform_index(rng, options.actions.size())];
            s = reference.transition(s, a, *options.actor).state;
        }
    }
    return states;
}

ConformanceReport validate_model(const JsonWorldModel& candidate, const JsonWorldModel& reference,
                                 const ConformanceSuite& suite)
{
    Context c{candidate, reference, suite, suite_states(reference, suite), reference.info().players};
    using StageFn = StageResult (*)(const Context&);
    const StageFn stages[] = {infoset_roundtrip,    enumerate_agreement,     transition_agreement,
                              partition_erasure,    realization_consistency, evaluate_bounds};
    ConformanceReport report;
    for (auto stage : stages) {
        report.stages.push_back(stage(c));
        if (!report.stages.back().passed)
            break;
    }
    return report;
}

ReflexionResult reflexion_loop(const CandidateGenerator& generator, const JsonWorldModel& reference,
                               int max_attempts, const ConformanceSuite& suite)
{
    if (max_attempts < 1)
        throw BadConfig("max_attempts must be at least 1");
    ReflexionResult result;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        auto candidate = generator(result.reports);
        if (!candidate)
            throw BadConfig("generator produced no candidate");
        auto report = validate_model(*candidate, reference, suite);
        report.attempts = attempt;
        const bool passed = report.passed();
        result.reports.push_back(std::move(report));
        if (passed) {
            result.model = std::move(candidate);
            return result;
        }
    }
    return result;
}

} // namespace pianist::gateway
