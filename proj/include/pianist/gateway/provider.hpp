#pragma once

// Text proposal providers. A provider turns a (system, user) prompt pair into
// k candidate completions: live over a chat-completions endpoint, replayed
// from a fixture file, or scripted for tests.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pianist/worldmodel/types.hpp"

namespace pianist::gateway {

PIANIST_DECLARE_ERROR(ProviderFailure);
PIANIST_DECLARE_ERROR(FixtureMiss);
PIANIST_DECLARE_ERROR(KExceeded);

enum class ProviderKind { Live, Replay, Scripted };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Scripted;
    std::string endpoint;   // Live: full URL of the chat-completions route
    std::string model_name;
    std::string api_key_env = "LLM_API_KEY";
    int max_actions = 4;
    int timeout_ms = 30'000;
    double temperature = 0.7;
    std::optional<std::string> record_path;  // append every answered prompt here
    std::optional<std::string> fixture_path; // Replay source
    // Scripted responses. "cycle" hands them out in order; "by_prompt" maps a
    // user prompt (exact text) to its responses and cycles for the rest.
    std::string script_mode = "cycle";
    std::vector<std::string> script;
    std::map<std::string, std::vector<std::string>> script_by_prompt;
    // Replay falls through to this provider on a miss (used to author fixtures).
    std::shared_ptr<ProviderConfig> fallback;

    void validate() const;
};

void to_json(Json& j, const ProviderConfig& config);
void from_json(const Json& j, ProviderConfig& config);

/// Stable digest of a prompt: BLAKE2b-128 over canonical {"k","system","user"}.
std::string prompt_digest(const std::string& system, const std::string& user, int k);

class ProposalProvider {
public:
    virtual ~ProposalProvider() = default;

    /// Exactly k responses. Throws KExceeded when k > max_actions().
    virtual std::vector<std::string> generate_k_responses(const std::string& system,
                                                          const std::string& user, int k) = 0;
    virtual int max_actions() const = 0;

    /// One completion for a decision prompt; greedy where the backend allows.
    virtual std::string generate_decision(const std::string& system, const std::string& user)
    {
        return generate_k_responses(system, user, 1).front();
    }
};

class ScriptedProvider final : public ProposalProvider {
public:
    explicit ScriptedProvider(ProviderConfig config);

    std::vector<std::string> generate_k_responses(const std::string& system,
                                                  const std::string& user, int k) override;
    int max_actions() const override { return config_.max_actions; }

private:
    ProviderConfig config_;
    std::mutex mutex_;
    std::size_t cursor_ = 0;
};

struct FixtureRecord {
    std::string digest;
    std::string system;
    std::string user;
    int k = 0;
    std::vector<std::string> responses;
};

void to_json(Json& j, const FixtureRecord& record);
void from_json(const Json& j, FixtureRecord& record);

/// Appends one fixture line to a JSON Lines file.
void append_fixture(const std::string& path, const FixtureRecord& record);

class ReplayProvider final : public ProposalProvider {
public:
    /// Loads the fixture file; `fallback` answers misses when given.
    ReplayProvider(ProviderConfig config, std::shared_ptr<ProposalProvider> fallback = nullptr);

    std::vector<std::string> generate_k_responses(const std::string& system,
                                                  const std::string& user, int k) override;
    int max_actions() const override { return config_.max_actions; }

    std::size_t size() const;

private:
    ProviderConfig config_;
    std::shared_ptr<ProposalProvider> fallback_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, FixtureRecord> records_;
};

class LiveProvider final : public ProposalProvider {
public:
    explicit LiveProvider(ProviderConfig config);

    std::vector<std::string> generate_k_responses(const std::string& system,
                                                  const std::string& user, int k) override;
    int max_actions() const override { return config_.max_actions; }
    std::string generate_decision(const std::string& system, const std::string& user) override;

    /// One chat completion at the given temperature.
    std::string complete(const std::string& system, const std::string& user, double temperature);

private:
    ProviderConfig config_;
    std::string api_key_;
    std::string base_; // scheme://host[:port]
    std::string path_;
    std::mutex record_mutex_;
};

std::shared_ptr<ProposalProvider> make_provider(const ProviderConfig& config);

} // namespace pianist::gateway
