#pragma once

// Staged conformance checks of a candidate world model against a reference,
// and the regenerate-until-valid loop built on them.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pianist/worldmodel/json_model.hpp"

namespace pianist::gateway {

inline constexpr std::size_t kMaxExemplars = 10;

struct Exemplar {
    Json input;
    Json expected;
    Json got;
};

struct StageResult {
    std::string name;
    bool passed = true;
    std::vector<Exemplar> exemplars;
};

struct ConformanceReport {
    std::vector<StageResult> stages;
    int attempts = 0;

    bool passed() const;
    /// First failing stage, or nullptr.
    const StageResult* failure() const;
};

void to_json(Json& j, const Exemplar& e);
void to_json(Json& j, const StageResult& s);
void to_json(Json& j, const ConformanceReport& r);

/// Stage names in the order they run.
const std::vector<std::string>& conformance_stages();

struct ConformanceSuite {
    std::vector<Json> golden_states;  // checked in addition to fuzzed ones
    int fuzz_playouts = 20;           // random reference playouts, from initial(seed + i)
    std::uint64_t seed = 0;
    double tolerance = 1e-9;
    int step_cap = 10'000;
};

/// States visited by the suite: golden states first, then every state of the
/// fuzz playouts, deduplicated.
std::vector<Json> suite_states(const JsonWorldModel& reference, const ConformanceSuite& suite);

/// Runs the six stages in order and stops at the first failing one.
ConformanceReport validate_model(const JsonWorldModel& candidate, const JsonWorldModel& reference,
                                 const ConformanceSuite& suite = {});

using CandidateGenerator =
    std::function<std::shared_ptr<const JsonWorldModel>(const std::vector<ConformanceReport>& history)>;

struct ReflexionResult {
    std::shared_ptr<const JsonWorldModel> model; // null when no attempt passed
    std::vector<ConformanceReport> reports;
};

/// Requests candidates until one passes or `max_attempts` are used. Each
/// call sees the reports so far, so it can repair what failed.
ReflexionResult reflexion_loop(const CandidateGenerator& generator, const JsonWorldModel& reference,
                               int max_attempts = 3, const ConformanceSuite& suite = {});

} // namespace pianist::gateway
