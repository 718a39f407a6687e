#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "symadv/pacman/agent.hpp"
#include "symadv/pacman/game.hpp"
#include "symadv/pacman/json.hpp"
#include "symadv/pacman/layout.hpp"
#include "symadv/random.hpp"

namespace symadv {

/// Request failure with a machine-readable code and an HTTP status.
struct SessionError : std::runtime_error {
    std::string code;
    int status;
    nlohmann::json detail;
    SessionError(std::string code_, int status_, const std::string& msg, nlohmann::json detail_ = nlohmann::json::object())
        : std::runtime_error(msg), code(std::move(code_)), status(status_), detail(std::move(detail_)) {}

    nlohmann::json payload() const {
        nlohmann::json e = detail;
        e["code"] = code;
        e["message"] = what();
        return {{"error", e}};
    }
};

enum class SessionMode { human, agent, step };

inline const char* mode_name(SessionMode m) {
    switch (m) {
        case SessionMode::human: return "human";
        case SessionMode::agent: return "agent";
        case SessionMode::step: return "step";
    }
    return "?";
}

inline SessionMode parse_mode(const std::string& s) {
    for (SessionMode m : {SessionMode::human, SessionMode::agent, SessionMode::step})
        if (s == mode_name(m)) return m;
    throw SessionError("bad_request", 400, "unknown mode '" + s + "'");
}

inline nlohmann::json direction_list(const std::vector<Action>& acts) {
    nlohmann::json out = nlohmann::json::array();
    for (Action a : acts) out.push_back(pacman::dir_name(a));
    return out;
}

class SessionManager {
public:
    explicit SessionManager(std::uint64_t master_seed = 1, std::string layout_dir = {})
        : master_seed_(master_seed), layout_dir_(std::move(layout_dir)) {}

    /// Request fields: layout (text) or layout_file (name under the layout
    /// directory), ghosts, mode, seed, draw_limit, agent {variant, horizon,
    /// iterations, samples, safe_depth, uct_c, terminal_weight}.
    nlohmann::json create_session(const nlohmann::json& req) {
        using namespace pacman;
        std::string text;
        if (req.contains("layout")) {
            text = get<std::string>(req, "layout");
        } else if (req.contains("layout_file")) {
            text = read_layout_file(get<std::string>(req, "layout_file"));
        } else {
            throw SessionError("bad_request", 400, "layout or layout_file required");
        }
        std::shared_ptr<GridLayout> layout;
        try {
            layout = std::make_shared<GridLayout>(parse_layout(text));
        } catch (const LayoutError& e) {
            throw SessionError("layout_error", 400, e.what(), {{"line", e.line}});
        }
        auto s = std::make_shared<Session>();
        try {
            GameRules rules;
            rules.draw_limit = req.value("draw_limit", rules.draw_limit);
            s->game = std::make_unique<Game>(layout, parse_ghost_roster(req.value("ghosts", std::string{})), rules);
            s->mode = parse_mode(req.value("mode", std::string("human")));
            AgentConfig ac;
            ac.variant = Variant::both;
            ac.horizon = 6;
            ac.iterations = 50;
            ac.samples = 20;
            ac.safe_depth = 2;
            if (req.contains("agent")) {
                const auto& a = req.at("agent");
                if (a.contains("variant")) ac.variant = parse_variant(a.at("variant").get<std::string>());
                ac.horizon = a.value("horizon", ac.horizon);
                ac.iterations = a.value("iterations", ac.iterations);
                ac.samples = a.value("samples", ac.samples);
                ac.safe_depth = a.value("safe_depth", ac.safe_depth);
                ac.uct_c = a.value("uct_c", ac.uct_c);
                ac.terminal_weight = a.value("terminal_weight", ac.terminal_weight);
            }
            s->agent = std::make_unique<PacmanAgent>(*s->game, ac);
        } catch (const SessionError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw SessionError("bad_request", 400, e.what());
        } catch (const ValidationError& e) {
            throw SessionError("validation_error", 400, e.what());
        }
        s->state = s->game->initial_state();
        {
            std::lock_guard lock(mu_);
            ++counter_;
            s->id = "s" + std::to_string(counter_);
            s->seed = req.contains("seed") ? req.at("seed").get<std::uint64_t>() : derive_seed(master_seed_, counter_);
            sessions_[s->id] = s;
        }
        s->rng.seed(derive_seed(s->seed, 0));
        s->food0 = s->state.food_left();
        std::lock_guard lock(s->state_mu);
        auto out = snapshot(*s);
        out["layout"] = layout_json(*layout);
        out["agent"] = {{"variant", variant_name(ac_of(*s).variant)}, {"horizon", ac_of(*s).horizon},
                        {"iterations", ac_of(*s).iterations}, {"samples", ac_of(*s).samples},
                        {"safe_depth", ac_of(*s).safe_depth}, {"uct_c", ac_of(*s).uct_c}};
        return out;
    }

    nlohmann::json get_state(const std::string& id) {
        auto s = find(id);
        std::lock_guard lock(s->state_mu);
        auto out = snapshot(*s);
        out["log"] = s->log;
        return out;
    }

    /// Resolves one game step with a human move.
    nlohmann::json post_move(const std::string& id, const std::string& direction) {
        auto s = find(id);
        std::lock_guard busy(s->resolve_mu);
        if (s->mode == SessionMode::agent) throw SessionError("wrong_mode", 409, "session is in agent mode");
        check_ongoing(*s);
        int move;
        try {
            move = pacman::parse_dir(direction);
        } catch (const ValidationError& e) {
            throw SessionError("bad_request", 400, e.what());
        }
        const auto legal = s->game->pacman_moves(s->state);
        if (std::find(legal.begin(), legal.end(), move) == legal.end())
            throw SessionError("illegal_move", 400, std::string("illegal move ") + pacman::dir_name(move),
                               {{"legal", direction_list(legal)}});
        const int delta = resolve(*s, move, "human");
        std::lock_guard lock(s->state_mu);
        auto out = snapshot(*s);
        out["delta"] = delta;
        return out;
    }

    /// One receding-horizon search from the current state; the recommended
    /// move is applied.
    nlohmann::json agent_step(const std::string& id) {
        auto s = find(id);
        std::lock_guard busy(s->resolve_mu);
        if (s->mode == SessionMode::human) throw SessionError("wrong_mode", 409, "session is in human mode");
        check_ongoing(*s);
        const auto overlay = s->agent->safe_actions(s->state);
        const auto d = s->agent->decide(s->state, derive_seed(s->seed, static_cast<std::uint64_t>(s->state.step) + 1));
        nlohmann::json root = nlohmann::json::array();
        for (const auto& ra : d.root_actions)
            root.push_back({{"action", pacman::dir_name(ra.action)}, {"visits", ra.visits}, {"value", ra.value}});
        const int delta = resolve(*s, d.action, "agent");
        std::lock_guard lock(s->state_mu);
        auto out = snapshot(*s);
        out["delta"] = delta;
        out["action"] = pacman::dir_name(d.action);
        out["root"] = std::move(root);
        out["root_visits"] = d.root_visits;
        out["overlay"] = direction_list(overlay.actions);
        out["overlay_fallback"] = overlay.fallback;
        return out;
    }

    /// Safe-action set of the current state (selection advice at the safe depth).
    nlohmann::json overlay(const std::string& id) {
        auto s = find(id);
        std::lock_guard busy(s->resolve_mu);
        const auto o = s->agent->safe_actions(s->state);
        std::lock_guard lock(s->state_mu);
        return {{"id", s->id}, {"version", s->version}, {"overlay", direction_list(o.actions)}, {"fallback", o.fallback}};
    }

    /// Blocks until the session version exceeds `after` or the timeout
    /// passes; returns the snapshot in the first case.
    std::optional<nlohmann::json> wait_state(const std::string& id, std::uint64_t after, std::chrono::milliseconds timeout) {
        auto s = find(id);
        std::unique_lock lock(s->state_mu);
        const bool ok = s->cv.wait_for(lock, timeout, [&] { return s->version > after || closing_; });
        if (!ok || s->version <= after) return std::nullopt;
        return snapshot(*s);
    }

    void shutdown() {
        closing_ = true;
        std::lock_guard lock(mu_);
        for (auto& [id, s] : sessions_) s->cv.notify_all();
    }
    bool closing() const { return closing_; }

private:
    struct Session {
        std::string id;
        std::uint64_t seed = 0;
        std::unique_ptr<pacman::Game> game;
        std::unique_ptr<pacman::PacmanAgent> agent;
        pacman::GameState state;
        SessionMode mode = SessionMode::human;
        Rng rng;
        int food0 = 0;
        std::uint64_t version = 0;
        nlohmann::json log = nlohmann::json::array();
        std::mutex resolve_mu;  // one move resolution at a time
        std::mutex state_mu;    // guards state, version and log for readers
        std::condition_variable cv;
    };

    std::uint64_t master_seed_;
    std::string layout_dir_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t counter_ = 0;
    std::atomic<bool> closing_{false};

    static const pacman::AgentConfig& ac_of(const Session& s) { return s.agent->config(); }

    template <class T>
    static T get(const nlohmann::json& j, const char* key) {
        try {
            return j.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw SessionError("bad_request", 400, std::string("field '") + key + "' missing or mistyped");
        }
    }

    std::string read_layout_file(const std::string& name) const {
        namespace fs = std::filesystem;
        if (layout_dir_.empty() || name.find("..") != std::string::npos || name.find('/') != std::string::npos)
            throw SessionError("bad_request", 400, "unknown layout file '" + name + "'");
        std::ifstream in(fs::path(layout_dir_) / name);
        if (!in) throw SessionError("not_found", 404, "unknown layout file '" + name + "'");
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    }

    std::shared_ptr<Session> find(const std::string& id) {
        std::lock_guard lock(mu_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) throw SessionError("not_found", 404, "no session '" + id + "'");
        return it->second;
    }

    static void check_ongoing(const Session& s) {
        if (s.state.terminal())
            throw SessionError("game_over", 409, std::string("game is ") + pacman::status_name(s.state.status));
    }

    int resolve(Session& s, int move, const char* who) {
        auto [next, delta] = s.game->step(s.state, move, s.rng);
        std::lock_guard lock(s.state_mu);
        s.state = std::move(next);
        ++s.version;
        s.log.push_back({{"version", s.version}, {"by", who}, {"action", pacman::dir_name(move)}, {"delta", delta}});
        s.cv.notify_all();
        return delta;
    }

    static nlohmann::json snapshot(const Session& s) {
        using namespace pacman;
        nlohmann::json out = {{"id", s.id},
                              {"version", s.version},
                              {"mode", mode_name(s.mode)},
                              {"state", state_json(s.game->layout(), s.state)},
                              {"legal", s.state.terminal() ? nlohmann::json::array() : direction_list(s.game->pacman_moves(s.state))}};
        if (s.state.terminal()) {
            const auto st = s.state.status;
            out["result"] = {{"outcome", st == Status::won ? "win" : st == Status::lost ? "loss" : "draw"},
                             {"food_eaten", s.food0 - s.state.food_left()},
                             {"score", s.state.score},
                             {"steps", s.state.step}};
        }
        return out;
    }
};

}  // namespace symadv
