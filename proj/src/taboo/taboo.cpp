#include "pianist/taboo/taboo.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>

#include <boost/container_hash/hash.hpp>


namespace pianist::taboo {
namespace {

std::string lower(std::string text)
{
    for (auto& c : text)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return text;
}

std::string trim(const std::string& text)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

Json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw LexiconMissing("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw LexiconMissing(path + ": " + e.what());
    }
}

const ActorId kClueMaster = ActorId::player(0);
const ActorId kGuesser = ActorId::player(1);

} // namespace

std::vector<std::string> tokenize(const std::string& text)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty())
        tokens.push_back(std::move(current));
    return tokens;
}

bool detect_taboo(const std::string& statement, const std::vector<std::string>& taboo_words)
{
    std::set<std::string> banned;
    for (const auto& w : taboo_words)
        banned.insert(lower(w));
    for (const auto& token : tokenize(statement))
        if (banned.count(token))
            return true;
    return false;
}

// Lexicon --------------------------------------------------------------------

Lexicon::Lexicon(std::string id, std::vector<std::string> words,
                 const std::vector<std::tuple<std::string, std::string, double>>& associations)
    : id_(std::move(id)), words_(std::move(words)), associations_(associations)
{
    for (std::size_t i = 0; i < words_.size(); ++i) {
        words_[i] = lower(words_[i]);
        if (!index_.emplace(words_[i], i).second)
            throw BadConfig("duplicate lexicon word '" + words_[i] + "'");
    }
    std::map<std::pair<std::string, std::size_t>, double> weights;
    // Every word is associated with its own token unless stated otherwise.
    for (std::size_t i = 0; i < words_.size(); ++i)
        weights[{words_[i], i}] = 1.0;
    for (const auto& [token, word, weight] : associations) {
        auto it = index_.find(lower(word));
        if (it == index_.end())
            throw BadConfig("association targets unknown word '" + word + "'");
        weights[{lower(token), it->second}] = weight;
    }
    for (const auto& [key, weight] : weights)
        by_token_[key.first].emplace_back(key.second, weight);
}

Lexicon Lexicon::load(const std::string& path)
{
    auto j = read_json_file(path);
    // Files without an id are named after their stem.
    if (!j.contains("id"))
        j["id"] = std::filesystem::path(path).stem().string();
    try {
        return j.get<Lexicon>();
    } catch (const Json::exception& e) {
        throw LexiconMissing(path + ": " + e.what());
    }
}

std::size_t Lexicon::rank_of(const std::string& word) const
{
    auto it = index_.find(word);
    if (it == index_.end())
        throw LexiconMissing("'" + word + "' is not in lexicon " + id_);
    return it->second;
}

std::vector<double> Lexicon::scores(const std::vector<std::string>& statements) const
{
    std::vector<double> out(words_.size(), 0.0);
    for (const auto& statement : statements)
        for (const auto& token : tokenize(statement))
            if (auto it = by_token_.find(token); it != by_token_.end())
                for (const auto& [word, weight] : it->second)
                    out[word] += weight;
    return out;
}

void to_json(Json& j, const Lexicon& lexicon)
{
    Json associations = Json::array();
    for (const auto& [token, word, weight] : lexicon.associations())
        associations.push_back(Json::array({token, word, weight}));
    j = Json{{"id", lexicon.id()}, {"words", lexicon.words()}, {"associations", associations}};
}

void from_json(const Json& j, Lexicon& lexicon)
{
    std::vector<std::tuple<std::string, std::string, double>> rows;
    for (const auto& row : j.at("associations")) {
        if (!row.is_array() || row.size() != 3)
            throw BadConfig("association rows are [token, word, weight]");
        rows.emplace_back(row[0].get<std::string>(), row[1].get<std::string>(),
                          row[2].get<double>());
    }
    lexicon = Lexicon(j.value("id", std::string()), j.at("words").get<std::vector<std::string>>(),
                      rows);
}

std::vector<RankedGuess> oracle_guess(const std::vector<std::string>& statements,
                                      const std::vector<std::string>& guesses,
                                      const Lexicon& lexicon, int k)
{
    if (lexicon.words().empty())
        throw LexiconMissing("lexicon has no words");
    const auto scores = lexicon.scores(statements);
    std::set<std::string> seen;
    for (const auto& g : guesses)
        seen.insert(lower(g));
    std::vector<RankedGuess> ranked;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (!seen.count(lexicon.words()[i]))
            ranked.push_back({lexicon.words()[i], scores[i]});
    std::sort(ranked.begin(), ranked.end(), [](const RankedGuess& a, const RankedGuess& b) {
        return a.score != b.score ? a.score > b.score : a.word < b.word;
    });
    if (k >= 0 && ranked.size() > static_cast<std::size_t>(k))
        ranked.resize(static_cast<std::size_t>(k));
    return ranked;
}

// Episodes and states ----------------------------------------------------------

void TabooEpisode::validate() const
{
    if (clue_word.empty() || lower(clue_word) != clue_word)
        throw BadConfig("clue word must be a non-empty lowercase token");
    for (const auto& w : taboo_words)
        if (w.empty() || lower(w) != w)
            throw BadConfig("taboo words must be non-empty lowercase tokens");
    if (std::find(taboo_words.begin(), taboo_words.end(), clue_word) != taboo_words.end())
        throw BadConfig("clue word cannot be taboo");
}

TabooEpisode TabooEpisode::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw BadConfig("cannot open episode " + path);
    return Json::parse(in).get<TabooEpisode>();
}

void to_json(Json& j, const TabooEpisode& e)
{
    j = Json{{"clue_word", e.clue_word}, {"taboo_words", e.taboo_words}, {"lexicon_id", e.lexicon_id}};
}

void from_json(const Json& j, TabooEpisode& e)
{
    TabooEpisode out;
    out.clue_word = j.at("clue_word").get<std::string>();
    out.taboo_words = j.at("taboo_words").get<std::vector<std::string>>();
    out.lexicon_id = j.at("lexicon_id").get<std::string>();
    std::sort(out.taboo_words.begin(), out.taboo_words.end());
    out.validate();
    e = std::move(out);
}

void to_json(Json& j, const TabooState& s)
{
    j = Json{{"episode", s.episode},
             {"statements", s.statements},
             {"guesses", s.guesses},
             {"taboo_used", s.taboo_used},
             {"game_over", s.game_over}};
}

void from_json(const Json& j, TabooState& s)
{
    TabooState out;
    // Guesser realisations leave taboo words unknown, so validate loosely.
    const auto& e = j.at("episode");
    out.episode.clue_word = e.at("clue_word").get<std::string>();
    out.episode.taboo_words = e.at("taboo_words").get<std::vector<std::string>>();
    out.episode.lexicon_id = e.at("lexicon_id").get<std::string>();
    out.statements = j.at("statements").get<std::vector<std::string>>();
    out.guesses = j.at("guesses").get<std::vector<std::string>>();
    out.taboo_used = j.at("taboo_used").get<bool>();
    out.game_over = j.at("game_over").get<bool>();
    s = std::move(out);
}

void to_json(Json& j, const TabooObservation& o)
{
    j = Json{{"role", o.role == Role::ClueMaster ? "clue_master" : "guesser"},
             {"statements", o.statements},
             {"guesses", o.guesses},
             {"game_over", o.game_over},
             {"taboo_used", o.taboo_used},
             {"solved", o.solved},
             {"guesses_remaining", o.guesses_remaining},
             {"lexicon_id", o.lexicon_id}};
    if (o.clue_word)
        j["clue_word"] = *o.clue_word;
    if (o.taboo_words)
        j["taboo_words"] = *o.taboo_words;
}

void from_json(const Json& j, TabooObservation& o)
{
    TabooObservation out;
    auto role = j.at("role").get<std::string>();
    if (role == "clue_master")
        out.role = Role::ClueMaster;
    else if (role == "guesser")
        out.role = Role::Guesser;
    else
        throw Inconsistent("unknown role '" + role + "'");
    out.statements = j.at("statements").get<std::vector<std::string>>();
    out.guesses = j.at("guesses").get<std::vector<std::string>>();
    out.game_over = j.at("game_over").get<bool>();
    out.taboo_used = j.at("taboo_used").get<bool>();
    out.solved = j.at("solved").get<bool>();
    out.guesses_remaining = j.at("guesses_remaining").get<int>();
    out.lexicon_id = j.at("lexicon_id").get<std::string>();
    if (j.contains("clue_word"))
        out.clue_word = j.at("clue_word").get<std::string>();
    if (j.contains("taboo_words"))
        out.taboo_words = j.at("taboo_words").get<std::vector<std::string>>();
    o = std::move(out);
}

int taboo_score(const TabooState& s, Scoring scoring)
{
    if (!s.game_over)
        throw NotTerminal("the game is still running");
    if (s.taboo_used || !s.solved())
        return 0;
    const int guesses = static_cast<int>(s.guesses.size());
    const int score =
        scoring == Scoring::IncorrectGuesses ? kMaxScore - (guesses - 1) : kMaxScore - guesses;
    return std::clamp(score, 0, kMaxScore);
}

void TabooConfig::validate() const
{
    if (proposals < 1 || guess_options < 1)
        throw BadConfig("proposal counts must be positive");
}

void to_json(Json& j, const TabooConfig& c)
{
    j = Json{{"proposals", c.proposals},
             {"guess_options", c.guess_options},
             {"scoring", c.scoring == Scoring::Literal ? "literal" : "incorrect_guesses"},
             {"guesser_top1", c.guesser_top1}};
}

void from_json(const Json& j, TabooConfig& c)
{
    TabooConfig out;
    out.proposals = j.value("proposals", out.proposals);
    out.guess_options = j.value("guess_options", out.guess_options);
    out.guesser_top1 = j.value("guesser_top1", out.guesser_top1);
    auto scoring = j.value("scoring", std::string("incorrect_guesses"));
    if (scoring == "literal")
        out.scoring = Scoring::Literal;
    else if (scoring != "incorrect_guesses")
        throw BadConfig("unknown scoring '" + scoring + "'");
    out.validate();
    c = out;
}

Prompt clue_master_prompt(const TabooState& s)
{
    Prompt p;
    p.system = "You are the clue master in a cooperative game of Taboo. Your teammate must guess "
               "a secret word from your statements. Never use any of the taboo words, or your "
               "team scores 0.";
    std::string taboo;
    for (const auto& w : s.episode.taboo_words)
        taboo += (taboo.empty() ? "" : ", ") + w;
    std::string transcript;
    for (std::size_t i = 0; i < s.statements.size(); ++i) {
        transcript += "Clue master: " + s.statements[i] + "\n";
        if (i < s.guesses.size())
            transcript += "Guesser: " + s.guesses[i] + "\n";
    }
    if (transcript.empty())
        transcript = "(nothing yet)\n";
    p.user = "Clue word: " + s.episode.clue_word + "\nTaboo words: " + taboo +
             "\nConversation so far:\n" + transcript +
             "Write your next statement as one sentence. Do not use the clue word or any taboo "
             "word.";
    return p;
}

// Model ----------------------------------------------------------------------

TabooModel::TabooModel(TabooConfig config, std::shared_ptr<const Lexicon> lexicon,
                       std::shared_ptr<gateway::ProposalProvider> proposer, TabooEpisode episode)
    : config_(config),
      lexicon_(std::move(lexicon)),
      proposer_(std::move(proposer)),
      episode_(std::move(episode))
{
    config_.validate();
    episode_.validate();
    if (!lexicon_)
        throw LexiconMissing("no lexicon supplied");
    if (lexicon_->id() != episode_.lexicon_id)
        throw LexiconMissing("episode wants lexicon '" + episode_.lexicon_id + "', have '" +
                             lexicon_->id() + "'");
    if (!proposer_)
        throw BadConfig("no proposal provider supplied");
    if (config_.proposals > proposer_->max_actions())
        throw gateway::KExceeded("proposals exceed the provider's max_actions");
    info_ = {"taboo", 2, 1.0, std::pair{0.0, static_cast<double>(kMaxScore)}};
}

TabooState TabooModel::initial(std::uint64_t) const { return {episode_, {}, {}, false, false}; }

Enumeration<std::string> TabooModel::enumerate(const TabooState& s) const
{
    if (s.game_over)
        return {};
    if (s.statements.size() == s.guesses.size())
        return {kClueMaster, proposals(s)};
    std::vector<std::string> words;
    for (auto& g : oracle_guess(s.statements, s.guesses, *lexicon_, config_.guess_options))
        words.push_back(std::move(g.word));
    if (words.empty())
        throw Inconsistent("lexicon has no unguessed word left");
    return {kGuesser, std::move(words)};
}

std::vector<std::string> TabooModel::proposals(const TabooState& s) const
{
    const auto prompt = clue_master_prompt(s);
    const auto key = gateway::prompt_digest(prompt.system, prompt.user, config_.proposals);
    {
        std::lock_guard lock(memo_mutex_);
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;
    }
    auto raw = proposer_->generate_k_responses(prompt.system, prompt.user, config_.proposals);
    std::vector<std::string> out;
    for (auto& text : raw) {
        auto t = trim(text);
        if (!t.empty() && std::find(out.begin(), out.end(), t) == out.end())
            out.push_back(std::move(t));
    }
    if (out.empty())
        throw EmptyProposal("provider returned no usable statement");
    std::lock_guard lock(memo_mutex_);
    memo_.emplace(key, out);
    return out;
}

Step<TabooState> TabooModel::transition(const TabooState& s, const std::string& action,
                                        ActorId actor) const
{
    if (s.game_over)
        throw IllegalAction("game is over");
    const ActorId due = s.statements.size() == s.guesses.size() ? kClueMaster : kGuesser;
    if (actor != due)
        throw WrongActor(to_string(actor) + " acted but " + to_string(due) + " is due");

    TabooState next = s;
    if (actor == kClueMaster) {
        auto statement = trim(action);
        if (statement.empty())
            throw IllegalAction("empty statement");
        if (detect_taboo(statement, s.episode.taboo_words))
            next.taboo_used = next.game_over = true;
        next.statements.push_back(std::move(statement));
    } else {
        auto guess = lower(trim(action));
        auto tokens = tokenize(guess);
        if (tokens.size() != 1 || tokens.front() != guess)
            throw IllegalAction("a guess must be a single word, got '" + action + "'");
        next.guesses.push_back(std::move(guess));
        if (next.solved() || static_cast<int>(next.guesses.size()) >= kMaxGuesses)
            next.game_over = true;
    }
    Rewards rewards = banked(next);
    return {std::move(next), std::move(rewards)};
}

TabooObservation TabooModel::partition(const TabooState& s, ActorId actor) const
{
    if (actor != kClueMaster && actor != kGuesser)
        throw WrongActor("Taboo observations exist for players 0 and 1 only");
    TabooObservation o;
    o.role = actor == kClueMaster ? Role::ClueMaster : Role::Guesser;
    o.statements = s.statements;
    o.guesses = s.guesses;
    o.game_over = s.game_over;
    o.taboo_used = s.taboo_used;
    o.solved = s.solved();
    o.guesses_remaining = kMaxGuesses - static_cast<int>(s.guesses.size());
    o.lexicon_id = s.episode.lexicon_id;
    if (o.role == Role::ClueMaster) {
        o.clue_word = s.episode.clue_word;
        o.taboo_words = s.episode.taboo_words;
    }
    return o;
}

TabooState TabooModel::realize(const TabooObservation& o) const
{
    if (o.lexicon_id != lexicon_->id())
        throw Inconsistent("observation uses lexicon '" + o.lexicon_id + "'");
    if (o.statements.size() < o.guesses.size() || o.statements.size() > o.guesses.size() + 1)
        throw Inconsistent("statements and guesses are out of step");
    if (o.guesses_remaining != kMaxGuesses - static_cast<int>(o.guesses.size()))
        throw Inconsistent("guesses_remaining does not match the guesses");

    TabooState s;
    s.statements = o.statements;
    s.guesses = o.guesses;
    s.taboo_used = o.taboo_used;
    s.game_over = o.game_over;
    s.episode.lexicon_id = o.lexicon_id;
    if (o.role == Role::ClueMaster) {
        if (!o.clue_word || !o.taboo_words)
            throw Inconsistent("clue-master view without the episode");
        s.episode.clue_word = *o.clue_word;
        s.episode.taboo_words = *o.taboo_words;
        return s;
    }
    if (o.solved) {
        if (o.guesses.empty())
            throw Inconsistent("solved without a guess");
        s.episode.clue_word = o.guesses.back();
        return s;
    }
    // Most strongly associated word not yet guessed; ties go to the more
    // frequent word.
    const auto scores = lexicon_->scores(o.statements);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& word = lexicon_->words()[i];
        if (std::find(o.guesses.begin(), o.guesses.end(), word) != o.guesses.end())
            continue;
        if (!best || scores[i] > scores[*best])
            best = i;
    }
    if (!best)
        throw Inconsistent("no lexicon word is consistent with the transcript");
    s.episode.clue_word = lexicon_->words()[*best];
    return s;
}

Evaluation TabooModel::evaluate(const TabooState& s) const
{
    if (s.game_over) {
        const double score = taboo_score(s, config_.scoring);
        return {{score, score}};
    }
    // Assume the guesser works down the oracle ranking after the next clue.
    auto ranking = oracle_guess(s.statements, s.guesses, *lexicon_, -1);
    std::size_t rank = ranking.size();
    for (std::size_t i = 0; i < ranking.size(); ++i)
        if (ranking[i].word == s.episode.clue_word)
            rank = i;
    const int used = static_cast<int>(s.guesses.size());
    double value = 0.0;
    if (static_cast<int>(rank) < kMaxGuesses - used) {
        const int total_guesses = used + static_cast<int>(rank) + 1;
        value = config_.scoring == Scoring::IncorrectGuesses ? kMaxScore - (total_guesses - 1)
                                                             : kMaxScore - total_guesses;
        value = std::clamp(value, 0.0, double(kMaxScore));
    }
    return {{value, value}, Json{{"clue_rank", rank}}};
}

Rewards TabooModel::banked(const TabooState& s) const
{
    if (!s.game_over)
        return zero_rewards(2);
    const double score = taboo_score(s, config_.scoring);
    return {score, score};
}

std::optional<std::vector<double>> TabooModel::fixed_policy(const TabooState& s, ActorId actor,
                                                            const std::vector<std::string>& actions) const
{
    if (actor != kGuesser)
        return std::nullopt;
    const auto scores = lexicon_->scores(s.statements);
    std::vector<double> weights;
    for (const auto& a : actions)
        weights.push_back(lexicon_->contains(a) ? scores[lexicon_->rank_of(a)] : 0.0);
    if (config_.guesser_top1) {
        // The oracle's first pick: highest score, then alphabetical.
        std::size_t best = 0;
        for (std::size_t i = 1; i < actions.size(); ++i)
            if (weights[i] > weights[best] || (weights[i] == weights[best] && actions[i] < actions[best]))
                best = i;
        std::vector<double> one(actions.size(), 0.0);
        one[best] = 1.0;
        return one;
    }
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0.0; }))
        std::fill(weights.begin(), weights.end(), 1.0);
    return weights;
}

} // namespace pianist::taboo

std::size_t std::hash<pianist::taboo::TabooState>::operator()(const pianist::taboo::TabooState& s) const
{
    std::size_t seed = 0;
    boost::hash_combine(seed, s.episode.clue_word);
    boost::hash_range(seed, s.episode.taboo_words.begin(), s.episode.taboo_words.end());
    boost::hash_combine(seed, s.episode.lexicon_id);
    boost::hash_combine(seed, s.statements.size());
    boost::hash_range(seed, s.statements.begin(), s.statements.end());
    boost::hash_range(seed, s.guesses.begin(), s.guesses.end());
    boost::hash_combine(seed, s.taboo_used);
    boost::hash_combine(seed, s.game_over);
    return seed;
}

std::size_t
std::hash<pianist::taboo::TabooObservation>::operator()(const pianist::taboo::TabooObservation& o) const
{
    std::size_t seed = 0;
    boost::hash_combine(seed, static_cast<int>(o.role));
    boost::hash_combine(seed, o.statements.size());
    boost::hash_range(seed, o.statements.begin(), o.statements.end());
    boost::hash_range(seed, o.guesses.begin(), o.guesses.end());
    boost::hash_combine(seed, o.game_over);
    boost::hash_combine(seed, o.taboo_used);
    boost::hash_combine(seed, o.clue_word.value_or(""));
    return seed;
}
