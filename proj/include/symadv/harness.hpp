#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "symadv/errors.hpp"
#include "symadv/pacman/agent.hpp"
#include "symadv/pacman/game.hpp"
#include "symadv/pacman/layout.hpp"
#include "symadv/random.hpp"

namespace symadv {

struct ExperimentConfig {
    std::string layout_path;
    std::string layout_text;  // used when layout_path is empty
    std::string ghosts;       // roster; empty = all random
    pacman::Variant variant = pacman::Variant::mcts;
    int games = 10;
    int horizon = 10;
    std::uint64_t iterations = 100;
    /// Multiplies iterations, for equal-time comparisons.
    double iteration_multiplier = 1.0;
    int samples = 100;
    int safe_depth = 3;
    double uct_c = 0.005;
    int draw_limit = 300;
    std::uint64_t seed = 1;
    std::uint64_t model_cap = 200000;
    double terminal_weight = 1.0;
    std::string out;    // report prefix: <out>.csv and <out>.json
    std::string trace;  // optional JSON-lines search trace
    int jobs = 1;

    void validate() const {
        if (layout_path.empty() && layout_text.empty()) throw ValidationError("no layout given");
        if (games < 1) throw ValidationError("games must be >= 1");
        if (!(iteration_multiplier > 0.0)) throw ValidationError("iteration multiplier must be positive");
        if (draw_limit < 1) throw ValidationError("draw limit must be >= 1");
        if (jobs < 1) throw ValidationError("jobs must be >= 1");
        agent().validate();
    }

    std::uint64_t effective_iterations() const {
        return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(iterations) * iteration_multiplier)));
    }

    pacman::AgentConfig agent() const {
        pacman::AgentConfig a;
        a.variant = variant;
        a.horizon = horizon;
        a.iterations = effective_iterations();
        a.samples = samples;
        a.safe_depth = safe_depth;
        a.uct_c = uct_c;
        a.model_cap = model_cap;
        a.terminal_weight = terminal_weight;
        return a;
    }
};

inline nlohmann::json config_json(const ExperimentConfig& c) {
    return {{"layout", c.layout_path},       {"ghosts", c.ghosts},         {"variant", pacman::variant_name(c.variant)},
            {"games", c.games},              {"horizon", c.horizon},       {"iterations", c.iterations},
            {"iteration_multiplier", c.iteration_multiplier},             {"samples", c.samples},
            {"safe_depth", c.safe_depth},    {"uct_c", c.uct_c},           {"draw_limit", c.draw_limit},
            {"seed", c.seed},                {"model_cap", c.model_cap},   {"terminal_weight", c.terminal_weight}};
}

enum class GameOutcome { win, loss, draw };

inline const char* outcome_name(GameOutcome o) {
    switch (o) {
        case GameOutcome::win: return "win";
        case GameOutcome::loss: return "loss";
        case GameOutcome::draw: return "draw";
    }
    return "?";
}

struct GameResult {
    int index = 0;
    std::uint64_t seed = 0;
    GameOutcome outcome = GameOutcome::draw;
    int food_eaten = 0;
    int score = 0;
    int steps = 0;
    double move_ms = 0.0;  // mean wall-clock per move
    pacman::AgentCounters counters;
    std::vector<std::string> log;
};

struct Aggregates {
    int games = 0;
    int wins = 0;
    int losses = 0;
    int draws = 0;
    double win_rate = 0.0;
    double loss_rate = 0.0;
    double draw_rate = 0.0;
    double mean_food = 0.0;
    double mean_score = 0.0;
    double se_score = 0.0;
    double mean_move_ms = 0.0;

    bool operator==(const Aggregates&) const = default;
};

inline Aggregates aggregate(const std::vector<GameResult>& rs) {
    Aggregates a;
    a.games = static_cast<int>(rs.size());
    if (rs.empty()) return a;
    double sum_sq = 0.0, moves_ms = 0.0;
    long total_steps = 0;
    for (const auto& r : rs) {
        a.wins += r.outcome == GameOutcome::win;
        a.losses += r.outcome == GameOutcome::loss;
        a.draws += r.outcome == GameOutcome::draw;
        a.mean_food += r.food_eaten;
        a.mean_score += r.score;
        sum_sq += static_cast<double>(r.score) * r.score;
        moves_ms += r.move_ms * r.steps;
        total_steps += r.steps;
    }
    const double n = a.games;
    a.win_rate = a.wins / n;
    a.loss_rate = a.losses / n;
    a.draw_rate = a.draws / n;
    a.mean_food /= n;
    a.mean_score /= n;
    if (a.games > 1) a.se_score = std::sqrt(std::max(0.0, (sum_sq - n * a.mean_score * a.mean_score) / (n - 1)) / n);
    a.mean_move_ms = total_steps ? moves_ms / static_cast<double>(total_steps) : 0.0;
    return a;
}

inline nlohmann::json aggregates_json(const Aggregates& a) {
    return {{"games", a.games},         {"wins", a.wins},           {"losses", a.losses},
            {"draws", a.draws},         {"win_rate", a.win_rate},   {"loss_rate", a.loss_rate},
            {"draw_rate", a.draw_rate}, {"mean_food", a.mean_food}, {"mean_score", a.mean_score},
            {"se_score", a.se_score},   {"mean_move_ms", a.mean_move_ms}};
}

inline Aggregates aggregates_from_json(const nlohmann::json& j) {
    Aggregates a;
    a.games = j.at("games").get<int>();
    a.wins = j.at("wins").get<int>();
    a.losses = j.at("losses").get<int>();
    a.draws = j.at("draws").get<int>();
    a.win_rate = j.at("win_rate").get<double>();
    a.loss_rate = j.at("loss_rate").get<double>();
    a.draw_rate = j.at("draw_rate").get<double>();
    a.mean_food = j.at("mean_food").get<double>();
    a.mean_score = j.at("mean_score").get<double>();
    a.se_score = j.at("se_score").get<double>();
    a.mean_move_ms = j.at("mean_move_ms").get<double>();
    return a;
}

inline nlohmann::json counters_json(const pacman::AgentCounters& c) {
    return {{"searches", c.searches},
            {"selection_queries", c.selection_queries},
            {"selection_calls", c.selection_calls},
            {"selection_fallbacks", c.selection_fallbacks},
            {"qbf_sat_calls", c.qbf_sat_calls},
            {"simulation_searches", c.simulation_searches},
            {"simulation_fallbacks", c.simulation_fallbacks},
            {"cached_models", c.cached_models},
            {"rollouts", c.rollouts.simulations},
            {"rollout_samples", c.rollouts.samples},
            {"sampler_draws", c.rollouts.sampler_draws},
            {"sampler_no_model", c.rollouts.sampler_no_model},
            {"rejection_tries", c.rollouts.rejection_tries},
            {"zero_samples", c.rollouts.zero_samples}};
}

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<GameResult> games;
    Aggregates aggregates;
    pacman::AgentCounters counters;
};

inline pacman::Game load_game(const ExperimentConfig& cfg) {
    std::string text = cfg.layout_text;
    if (!cfg.layout_path.empty()) {
        std::ifstream in(cfg.layout_path);
        if (!in) throw ValidationError("cannot read layout " + cfg.layout_path);
        std::ostringstream os;
        os << in.rdbuf();
        text = os.str();
    }
    auto layout = std::make_shared<pacman::GridLayout>(pacman::parse_layout(text));
    pacman::GameRules rules;
    rules.draw_limit = cfg.draw_limit;
    return pacman::Game(layout, pacman::parse_ghost_roster(cfg.ghosts), rules);
}

/// Plays one game. Environment draws and per-move search seeds both derive
/// from `seed`, so a game replays exactly.
inline GameResult play_game(const pacman::Game& game, const ExperimentConfig& cfg, int index, std::uint64_t seed,
                            const std::function<void(const std::string&)>& trace_line = {}) {
    using namespace pacman;
    GameResult r;
    r.index = index;
    r.seed = seed;
    PacmanAgent agent(game, cfg.agent());
    Rng env(derive_seed(seed, 0));
    GameState s = game.initial_state();
    const int food0 = s.food_left();
    int score = 0;
    double total_ms = 0.0;
    while (!s.terminal()) {
        const auto t0 = std::chrono::steady_clock::now();
        TraceSink sink;
        if (trace_line) {
            sink = [&](const TraceRecord& rec) {
                trace_line("{\"game\":" + std::to_string(index) + ",\"move\":" + std::to_string(s.step) + "," +
                           format_trace_line(rec).substr(1));
            };
        }
        auto d = agent.decide(s, derive_seed(seed, static_cast<std::uint64_t>(s.step) + 1), sink);
        total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        for (auto& line : d.log) r.log.push_back("move " + std::to_string(s.step) + ": " + line);
        auto [next, delta] = game.step(s, d.action, env);
        score += delta;
        s = std::move(next);
    }
    if (score != s.score) throw ContractViolation("score bookkeeping mismatch");
    r.outcome = s.status == Status::won ? GameOutcome::win : s.status == Status::lost ? GameOutcome::loss : GameOutcome::draw;
    r.food_eaten = food0 - s.food_left();
    r.score = s.score;
    r.steps = s.step;
    r.move_ms = s.step ? total_ms / s.step : 0.0;
    r.counters = agent.counters();
    return r;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::function<void(const GameResult&)>& on_game = {}) {
    cfg.validate();
    const pacman::Game game = load_game(cfg);
    ExperimentReport rep;
    rep.config = cfg;
    rep.games.resize(static_cast<std::size_t>(cfg.games));

    std::ofstream trace;
    std::mutex mu;
    if (!cfg.trace.empty()) {
        trace.open(cfg.trace);
        if (!trace) throw std::runtime_error("cannot write trace " + cfg.trace);
    }
    std::function<void(const std::string&)> trace_line;
    if (trace.is_open()) {
        trace_line = [&](const std::string& l) {
            std::lock_guard lock(mu);
            trace << l << '\n';
        };
    }

    std::atomic<int> next{0};
    std::exception_ptr error;
    auto worker = [&] {
        for (int i = next++; i < cfg.games; i = next++) {
            try {
                auto r = play_game(game, cfg, i, derive_seed(cfg.seed, static_cast<std::uint64_t>(i)), trace_line);
                std::lock_guard lock(mu);
                if (on_game) on_game(r);
                rep.games[static_cast<std::size_t>(i)] = std::move(r);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    const int jobs = std::min(cfg.jobs, cfg.games);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    rep.aggregates = aggregate(rep.games);
    for (const auto& g : rep.games) rep.counters.add(g.counters);
    return rep;
}

inline std::string report_csv(const ExperimentReport& rep) {
    std::ostringstream os;
    os << "game,seed,outcome,food_eaten,score,steps,selection_calls,selection_fallbacks,simulation_searches,sampler_draws,"
          "sampler_no_model\n";
    for (const auto& g : rep.games)
        os << g.index << ',' << g.seed << ',' << outcome_name(g.outcome) << ',' << g.food_eaten << ',' << g.score << ','
           << g.steps << ',' << g.counters.selection_calls << ',' << g.counters.selection_fallbacks << ','
           << g.counters.simulation_searches << ',' << g.counters.rollouts.sampler_draws << ','
           << g.counters.rollouts.sampler_no_model << '\n';
    return os.str();
}

inline nlohmann::json report_json(const ExperimentReport& rep) {
    nlohmann::json games = nlohmann::json::array();
    for (const auto& g : rep.games)
        games.push_back({{"game", g.index}, {"move_ms", g.move_ms}, {"log", g.log}});
    return {{"config", config_json(rep.config)},
            {"seed", rep.config.seed},
            {"aggregates", aggregates_json(rep.aggregates)},
            {"counters", counters_json(rep.counters)},
            {"games", std::move(games)}};
}

/// Writes to a temporary sibling, then renames over `path`.
inline void write_atomically(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

inline void emit_report(const ExperimentReport& rep, const std::string& prefix) {
    write_atomically(prefix + ".csv", report_csv(rep));
    write_atomically(prefix + ".json", report_json(rep).dump(2) + "\n");
}

}  // namespace symadv
