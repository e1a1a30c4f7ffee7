#include "pianist/gateway/provider.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>

#include <httplib.h>

#include "pianist/worldmodel/canonical.hpp"

namespace pianist::gateway {
namespace {

const char* kind_name(ProviderKind kind)
{
    switch (kind) {
    case ProviderKind::Live: return "live";
    case ProviderKind::Replay: return "replay";
    case ProviderKind::Scripted: return "scripted";
    }
    return "?";
}

void check_k(int k, int max_actions)
{
    if (k < 1)
        throw KExceeded("k must be positive");
    if (k > max_actions)
        throw KExceeded("k = " + std::to_string(k) + " exceeds max_actions = " +
                        std::to_string(max_actions));
}

} // namespace

void ProviderConfig::validate() const
{
    if (max_actions < 1)
        throw BadConfig("max_actions must be at least 1");
    if (timeout_ms < 1)
        throw BadConfig("timeout must be positive");
    if (kind == ProviderKind::Live && (endpoint.empty() || api_key_env.empty()))
        throw BadConfig("live provider needs an endpoint and an api_key_env");
    if (kind == ProviderKind::Replay && !fixture_path)
        throw BadConfig("replay provider needs a fixture_path");
    if (script_mode != "cycle" && script_mode != "by_prompt")
        throw BadConfig("script_mode must be 'cycle' or 'by_prompt'");
    if (fallback)
        fallback->validate();
}

void to_json(Json& j, const ProviderConfig& c)
{
    j = Json{{"kind", kind_name(c.kind)},
             {"endpoint", c.endpoint},
             {"model_name", c.model_name},
             {"api_key_env", c.api_key_env},
             {"max_actions", c.max_actions},
             {"timeout_ms", c.timeout_ms},
             {"temperature", c.temperature},
             {"script_mode", c.script_mode},
             {"script", c.script},
             {"script_by_prompt", c.script_by_prompt}};
    if (c.record_path)
        j["record_path"] = *c.record_path;
    if (c.fixture_path)
        j["fixture_path"] = *c.fixture_path;
    if (c.fallback)
        j["fallback"] = *c.fallback;
}

void from_json(const Json& j, ProviderConfig& c)
{
    ProviderConfig out;
    auto kind = j.value("kind", std::string("scripted"));
    if (kind == "live")
        out.kind = ProviderKind::Live;
    else if (kind == "replay")
        out.kind = ProviderKind::Replay;
    else if (kind == "scripted")
        out.kind = ProviderKind::Scripted;
    else
        throw BadConfig("unknown provider kind '" + kind + "'");
    out.endpoint = j.value("endpoint", out.endpoint);
    out.model_name = j.value("model_name", out.model_name);
    out.api_key_env = j.value("api_key_env", out.api_key_env);
    out.max_actions = j.value("max_actions", out.max_actions);
    out.timeout_ms = j.value("timeout_ms", out.timeout_ms);
    out.temperature = j.value("temperature", out.temperature);
    if (j.contains("record_path"))
        out.record_path = j.at("record_path").get<std::string>();
    if (j.contains("fixture_path"))
        out.fixture_path = j.at("fixture_path").get<std::string>();
    out.script_mode = j.value("script_mode", out.script_mode);
    out.script = j.value("script", out.script);
    out.script_by_prompt = j.value("script_by_prompt", out.script_by_prompt);
    if (j.contains("fallback"))
        out.fallback = std::make_shared<ProviderConfig>(j.at("fallback").get<ProviderConfig>());
    out.validate();
    c = std::move(out);
}

std::string prompt_digest(const std::string& system, const std::string& user, int k)
{
    return digest128_hex(canonical_dump(Json{{"k", k}, {"system", system}, {"user", user}}));
}

// Scripted -------------------------------------------------------------------

ScriptedProvider::ScriptedProvider(ProviderConfig config) : config_(std::move(config))
{
    config_.validate();
}

std::vector<std::string> ScriptedProvider::generate_k_responses(const std::string&,
                                                                const std::string& user, int k)
{
    check_k(k, config_.max_actions);
    std::lock_guard lock(mutex_);
    if (config_.script_mode == "by_prompt") {
        if (auto it = config_.script_by_prompt.find(user); it != config_.script_by_prompt.end()) {
            if (it->second.size() < static_cast<std::size_t>(k))
                throw ProviderFailure("scripted prompt has fewer than k responses");
            return {it->second.begin(), it->second.begin() + k};
        }
    }
    if (config_.script.empty())
        throw ProviderFailure("scripted provider has no responses");
    std::vector<std::string> out;
    for (int i = 0; i < k; ++i)
        out.push_back(config_.script[cursor_++ % config_.script.size()]);
    return out;
}

// Replay ---------------------------------------------------------------------

void to_json(Json& j, const FixtureRecord& r)
{
    j = Json{{"digest", r.digest},
             {"system", r.system},
             {"user", r.user},
             {"k", r.k},
             {"responses", r.responses}};
}

void from_json(const Json& j, FixtureRecord& r)
{
    r.system = j.at("system").get<std::string>();
    r.user = j.at("user").get<std::string>();
    r.k = j.at("k").get<int>();
    r.responses = j.at("responses").get<std::vector<std::string>>();
    r.digest = j.value("digest", prompt_digest(r.system, r.user, r.k));
}

void append_fixture(const std::string& path, const FixtureRecord& record)
{
    std::ofstream out(path, std::ios::app);
    if (!out)
        throw ProviderFailure("cannot open fixture file " + path);
    out << canonical_dump(Json(record)) << '\n';
}

ReplayProvider::ReplayProvider(ProviderConfig config, std::shared_ptr<ProposalProvider> fallback)
    : config_(std::move(config)), fallback_(std::move(fallback))
{
    config_.validate();
    if (!config_.fixture_path)
        throw BadConfig("replay provider needs a fixture_path");
    std::ifstream in(*config_.fixture_path);
    if (!in) {
        if (!fallback_)
            throw ProviderFailure("cannot open fixture file " + *config_.fixture_path);
        return;
    }
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            auto record = Json::parse(line).get<FixtureRecord>();
            if (record.digest != prompt_digest(record.system, record.user, record.k))
                throw ProviderFailure("digest does not match the stored prompt");
            records_[record.digest] = std::move(record);
        } catch (const Json::exception& e) {
            throw ProviderFailure(*config_.fixture_path + ":" + std::to_string(number) + ": " +
                                  e.what());
        }
    }
}

std::size_t ReplayProvider::size() const
{
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::vector<std::string> ReplayProvider::generate_k_responses(const std::string& system,
                                                              const std::string& user, int k)
{
    check_k(k, config_.max_actions);
    const auto digest = prompt_digest(system, user, k);
    {
        std::lock_guard lock(mutex_);
        if (auto it = records_.find(digest); it != records_.end()) {
            if (it->second.responses.size() < static_cast<std::size_t>(k))
                throw FixtureMiss("fixture " + digest + " has fewer than k responses");
            return {it->second.responses.begin(), it->second.responses.begin() + k};
        }
    }
    if (!fallback_)
        throw FixtureMiss("no fixture for prompt digest " + digest);

    auto responses = fallback_->generate_k_responses(system, user, k);
    FixtureRecord record{digest, system, user, k, responses};
    std::lock_guard lock(mutex_);
    if (config_.record_path)
        append_fixture(*config_.record_path, record);
    records_[digest] = std::move(record);
    return responses;
}

// Live -----------------------------------------------------------------------

LiveProvider::LiveProvider(ProviderConfig config) : config_(std::move(config))
{
    config_.validate();
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url))
        throw BadConfig("endpoint must be an http(s) URL: " + config_.endpoint);
    base_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : "/v1/chat/completions";
    if (const char* key = std::getenv(config_.api_key_env.c_str()))
        api_key_ = key;
}

std::string LiveProvider::complete(const std::string& system, const std::string& user,
                                   double temperature)
{
    if (api_key_.empty())
        throw ProviderFailure("environment variable " + config_.api_key_env + " is not set");
    httplib::Client client(base_);
    const auto seconds = config_.timeout_ms / 1000;
    const auto micros = (config_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    Json body{{"model", config_.model_name},
              {"messages",
               {{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}}},
              {"temperature", temperature},
              {"n", 1}};
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    auto response = client.Post(path_, headers, body.dump(), "application/json");
    if (!response)
        throw ProviderFailure("request to " + base_ + path_ +
                              " failed: " + httplib::to_string(response.error()));
    if (response->status != 200)
        throw ProviderFailure("endpoint returned HTTP " + std::to_string(response->status));
    try {
        auto reply = Json::parse(response->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
        throw ProviderFailure(std::string("malformed completion: ") + e.what());
    }
}

std::vector<std::string> LiveProvider::generate_k_responses(const std::string& system,
                                                            const std::string& user, int k)
{
    check_k(k, config_.max_actions);
    std::vector<std::string> out;
    for (int i = 0; i < k; ++i)
        out.push_back(complete(system, user, config_.temperature));
    if (config_.record_path) {
        std::lock_guard lock(record_mutex_);
        append_fixture(*config_.record_path,
                       {prompt_digest(system, user, k), system, user, k, out});
    }
    return out;
}

std::string LiveProvider::generate_decision(const std::string& system, const std::string& user)
{
    auto text = complete(system, user, 0.0);
    if (config_.record_path) {
        std::lock_guard lock(record_mutex_);
        append_fixture(*config_.record_path, {prompt_digest(system, user, 1), system, user, 1, {text}});
    }
    return text;
}

std::shared_ptr<ProposalProvider> make_provider(const ProviderConfig& config)
{
    config.validate();
    switch (config.kind) {
    case ProviderKind::Live: return std::make_shared<LiveProvider>(config);
    case ProviderKind::Scripted: return std::make_shared<ScriptedProvider>(config);
    case ProviderKind::Replay: {
        std::shared_ptr<ProposalProvider> fallback;
        if (config.fallback)
            fallback = make_provider(*config.fallback);
        return std::make_shared<ReplayProvider>(config, fallback);
    }
    }
    throw BadConfig("unknown provider kind");
}

} // namespace pianist::gateway
