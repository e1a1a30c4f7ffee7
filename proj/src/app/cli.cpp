#include "pianist/app/cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pianist/app/server.hpp"
#include "pianist/gateway/conformance.hpp"
#include "pianist/gateway/host.hpp"
#include "pianist/worldmodel/canonical.hpp"

namespace pianist::app {
namespace {

struct ConfigFile {
    Json json;
    std::string dir;

    /// Game settings live under "game" or at the top level.
    Json game() const { return json.at("game").is_object() ? json.at("game") : json; }
};

ConfigFile load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw BadConfig("cannot open config '" + path + "'");
    try {
        auto dir = std::filesystem::path(path).parent_path().string();
        return {Json::parse(in), dir.empty() ? "." : dir};
    } catch (const Json::exception& e) {
        throw BadConfig("config '" + path + "' is not valid JSON: " + e.what());
    }
}

std::vector<arena::AgentSpec> agent_specs(const Json& config)
{
    if (config.contains("agents"))
        return config.at("agents").get<std::vector<arena::AgentSpec>>();
    if (config.contains("agent"))
        return {config.at("agent").get<arena::AgentSpec>()};
    throw BadConfig("config lists no agents");
}

void write_json(const Json& j, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw arena::IoFailure("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

// arena ------------------------------------------------------------------------

struct ArenaArgs {
    std::string config;
    std::optional<int> games;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallel;
    std::string out;
    std::string summary;
};

int cmd_arena(const ArenaArgs& a, std::ostream& out)
{
    const auto cfg = load_config(a.config);
    auto setup = make_game(cfg.game(), cfg.dir);
    const auto specs = agent_specs(cfg.json);
    if (static_cast<int>(specs.size()) != setup.env->info().players)
        throw BadConfig("arena needs one agent per player");
    std::vector<arena::Seat> seats;
    for (const auto& spec : specs)
        seats.push_back({spec.id, setup.make_agent(spec)});

    arena::SeriesSpec series;
    series.n_games = a.games.value_or(cfg.json.value("games", 1));
    series.base_seed = a.seed.value_or(cfg.json.value("seed", std::uint64_t{0}));
    series.parallel = a.parallel.value_or(cfg.json.value("parallel", 1));
    series.alternate_seats = cfg.json.value("alternate_seats", true);
    series.match = setup.match;
    auto result = arena::run_series(*setup.env, seats, series);

    out << arena::format_table(result.stats);
    if (!a.out.empty())
        arena::write_trace(result.records, a.out);
    if (!a.summary.empty())
        write_json(Json(result.stats), a.summary);
    return 0;
}

// play -------------------------------------------------------------------------

struct PlayArgs {
    std::string config;
    int seat = 0;
    std::uint64_t seed = 0;
};

void show(const Json& view, std::ostream& out)
{
    out << "observation: " << view.at("observation").dump() << '\n';
    if (view.value("free_text", false))
        out << "your move (free text): " << std::flush;
    else
        out << "legal: " << view.at("legal_actions").dump() << "\nyour move: " << std::flush;
}

int cmd_play(const PlayArgs& a, std::istream& in, std::ostream& out)
{
    const auto cfg = load_config(a.config);
    SessionOptions options;
    options.base_dir = cfg.dir;
    SessionService service(options);
    Json request{{"game", cfg.game()}, {"human_seat", a.seat}, {"seed", a.seed},
                 {"agent", cfg.json.contains("agent") ? cfg.json.at("agent") : cfg.json.at("agents").at(0)}};
    auto view = service.create(request);
    const auto id = view.at("session_id").get<std::string>();
    std::string line;
    while (view.at("status") != "finished") {
        show(view, out);
        if (!std::getline(in, line)) {
            out << "\nno more input\n";
            return 2;
        }
        Json action = line;
        if (!view.value("free_text", false)) {
            try {
                action = Json::parse(line);
            } catch (const Json::exception&) {
            }
        }
        try {
            view = service.act(id, Json{{"action", action}});
        } catch (const IllegalAction& e) {
            out << "illegal: " << e.what() << '\n';
        }
    }
    out << "observation: " << view.at("observation").dump() << '\n';
    out << "result: " << view.at("result").dump() << '\n';
    return 0;
}

// validate ---------------------------------------------------------------------

struct ValidateArgs {
    std::vector<std::string> commands;
    std::string reference;
    int attempts = 1;
    int fuzz = 20;
    std::uint64_t seed = 0;
    int timeout_ms = 10'000;
    std::string report;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out)
{
    const auto cfg = load_config(a.reference);
    const auto setup = make_game(cfg.game(), cfg.dir);
    gateway::ConformanceSuite suite;
    suite.fuzz_playouts = a.fuzz;
    suite.seed = a.seed;

    auto generator = [&](const std::vector<gateway::ConformanceReport>& history) {
        const auto i = std::min(history.size(), a.commands.size() - 1);
        return std::shared_ptr<const JsonWorldModel>(gateway::host_model({a.commands[i], a.timeout_ms}));
    };
    auto result = gateway::reflexion_loop(generator, *setup.env, a.attempts, suite);
    for (const auto& r : result.reports) {
        const auto* failed = r.failure();
        out << "attempt " << r.attempts << ": "
            << (r.passed() ? std::string("pass") : "fail at " + (failed ? failed->name : std::string("?")))
            << '\n';
    }
    if (!a.report.empty())
        write_json(Json(result.reports), a.report);
    return result.model ? 0 : 2;
}

// serve ------------------------------------------------------------------------

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    bool async = false;
    std::string base_dir = ".";
};

HttpServer* g_server = nullptr;

int cmd_serve(const ServeArgs& a, std::ostream& out)
{
    SessionOptions options;
    options.async = a.async;
    options.base_dir = a.base_dir;
    SessionService service(options);
    HttpServer server(service);
    const int port = server.bind(a.host, a.port);
    out << "listening on " << a.host << ':' << port << '\n' << std::flush;
    g_server = &server;
    auto stop = [](int) {
        if (g_server)
            g_server->stop();
    };
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);
    server.listen();
    g_server = nullptr;
    return 0;
}

// trace ------------------------------------------------------------------------

int cmd_trace(const std::string& path, bool events, std::ostream& out)
{
    const auto records = arena::read_trace(path);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        out << "game " << i << ": " << r.game << " seed " << r.seed << " seats";
        for (const auto& s : r.seats)
            out << ' ' << s;
        out << " -> " << Json(r.outcome).dump() << " rewards " << Json(r.final_rewards).dump() << '\n';
        if (!events)
            continue;
        for (const auto& e : r.events) {
            out << "  " << e.step_index << ' ';
            if (!e.actor)
                out << "end\n";
            else
                out << (e.actor->is_environment() ? std::string("env") : "p" + std::to_string(e.actor->index()))
                    << ' ' << canonical_dump(e.action) << ' ' << Json(e.rewards).dump() << '\n';
        }
    }
    out << records.size() << " game(s)\n";
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Search agents, world-model hosting and match tooling"};
    app.require_subcommand(1);

    ArenaArgs arena_args;
    auto* arena_cmd = app.add_subcommand("arena", "Play a series of matches between configured agents");
    arena_cmd->add_option("config", arena_args.config, "Arena config (JSON)")->required();
    arena_cmd->add_option("--games", arena_args.games, "Number of games");
    arena_cmd->add_option("--seed", arena_args.seed, "Base seed; game i uses seed + i");
    arena_cmd->add_option("--parallel", arena_args.parallel, "Worker threads");
    arena_cmd->add_option("--out", arena_args.out, "Write the JSON Lines trace here");
    arena_cmd->add_option("--summary", arena_args.summary, "Write summary statistics (JSON) here");

    PlayArgs play_args;
    auto* play_cmd = app.add_subcommand("play", "Play against a configured agent in the terminal");
    play_cmd->add_option("config", play_args.config, "Game config (JSON) with an 'agent'")->required();
    play_cmd->add_option("--seat", play_args.seat, "Your player seat");
    play_cmd->add_option("--seed", play_args.seed, "Game seed");

    ValidateArgs validate_args;
    auto* validate_cmd = app.add_subcommand("validate", "Check a hosted world model against a reference");
    validate_cmd->add_option("--command", validate_args.commands,
                             "Host command; repeat to supply one per attempt (the last one is reused)")
        ->required();
    validate_cmd->add_option("--reference", validate_args.reference, "Reference game config (JSON)")->required();
    validate_cmd->add_option("--attempts", validate_args.attempts, "Maximum attempts")->check(CLI::PositiveNumber);
    validate_cmd->add_option("--fuzz", validate_args.fuzz, "Random playouts in the suite")->check(CLI::NonNegativeNumber);
    validate_cmd->add_option("--seed", validate_args.seed, "Suite seed");
    validate_cmd->add_option("--timeout-ms", validate_args.timeout_ms, "Per-response host timeout")
        ->check(CLI::PositiveNumber);
    validate_cmd->add_option("--report", validate_args.report, "Write every attempt's report (JSON) here");

    ServeArgs serve_args;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the session API over HTTP");
    serve_cmd->add_option("--host", serve_args.host, "Bind address");
    serve_cmd->add_option("--port", serve_args.port, "Port (0 picks a free one)");
    serve_cmd->add_flag("--async", serve_args.async, "Run agent moves in the background");
    serve_cmd->add_option("--base-dir", serve_args.base_dir, "Directory relative game paths resolve against");

    std::string trace_path;
    bool trace_events = false;
    auto* trace_cmd = app.add_subcommand("trace", "Summarise a trace file");
    trace_cmd->add_option("file", trace_path, "JSON Lines trace")->required();
    trace_cmd->add_flag("--events", trace_events, "Print every event");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return 1;
    }

    try {
        if (*arena_cmd)
            return cmd_arena(arena_args, out);
        if (*play_cmd)
            return cmd_play(play_args, in, out);
        if (*validate_cmd)
            return cmd_validate(validate_args, out);
        if (*serve_cmd)
            return cmd_serve(serve_args, out);
        if (*trace_cmd)
            return cmd_trace(trace_path, trace_events, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace pianist::app
