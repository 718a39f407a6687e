#pragma once

#include <algorithm>
#include <deque>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "symadv/advice.hpp"
#include "symadv/errors.hpp"
#include "symadv/mdp.hpp"
#include "symadv/pacman/encoding.hpp"
#include "symadv/pacman/game.hpp"

namespace symadv::pacman {

/// Copy of the game with draws disabled, as seen by the search.
inline Game search_game(const Game& game) {
    GameRules r = game.rules();
    r.draw_limit = 0;
    return Game(game.layout_ptr(), game.ghost_models(), r);
}

/// Pac-Man as a decision model. Step rewards are expected score deltas;
/// finished games absorb under kStop with reward 0. The terminal reward is
/// terminal_eval scaled by `terminal_weight`.
class PacmanModel {
public:
    using State = GameState;

    explicit PacmanModel(const Game& game, double terminal_weight = 1.0)
        : game_(search_game(game)), terminal_weight_(terminal_weight) {
        if (!(terminal_weight > 0.0)) throw ValidationError("terminal weight must be positive");
    }

    double terminal_weight() const { return terminal_weight_; }

    const Game& game() const { return game_; }

    std::vector<Action> actions(const State& s) const {
        if (s.terminal()) return {kStop};
        return game_.pacman_moves(s);
    }

    std::vector<Outcome<State>> transitions(const State& s, Action a) const {
        if (s.terminal()) {
            if (a != kStop) throw ValidationError("finished game only allows stop");
            return {{s, 1.0}};
        }
        std::vector<Outcome<State>> out;
        for (auto& o : game_.outcomes(s, a)) out.push_back({std::move(o.state), o.prob});
        return out;
    }

    double reward(const State& s, Action a) const {
        if (s.terminal()) return 0.0;
        return game_.expected_delta(s, a);
    }

    double terminal_reward(const State& s) const { return terminal_weight_ * game_.terminal_eval(s); }

    State sample_next(const State& s, Action a, Rng& rng) const {
        if (s.terminal()) return s;
        return game_.step(s, a, rng).first;
    }

    RewardBounds reward_bounds() const {
        const auto& r = game_.rules();
        RewardBounds b;
        b.step_min = std::min(0.0, static_cast<double>(r.step_reward - (game_.layout().ghosts.empty() ? 0 : r.loss_penalty)));
        b.step_max = std::max(0.0, static_cast<double>(r.step_reward + (game_.layout().food_count() > 0 ? r.food_reward + r.win_reward : 0)));
        b.terminal_min = 0.0;
        b.terminal_max = terminal_weight_;
        return b;
    }

private:
    Game game_;
    double terminal_weight_;
};

/// Safety: no state of the path is lost. With `cnf_root` set the advice
/// also carries the game CNF rooted there.
inline Advice<GameState> safety_advice(const Game& game, int horizon, std::optional<GameState> cnf_root = std::nullopt,
                                       CnfReductions red = {}) {
    Advice<GameState> adv;
    adv.horizon = horizon;
    adv.state_based = true;
    adv.evaluate = [](const BasicPath<GameState>& p) {
        return std::none_of(p.states.begin(), p.states.end(), [](const GameState& s) { return s.status == Status::lost; });
    };
    if (cnf_root) adv.cnf = encode_game_cnf(search_game(game), *cnf_root, horizon, true, red).cnf;
    return adv;
}

/// Explicit finite MDP of the states reachable from `start` (within
/// `horizon` steps when it is non-negative; states on that frontier get
/// reward-0 self-loops). Score and step are dropped from states; illegal
/// moves lead to an absorbing sink.
struct PacmanMdp {
    Mdp mdp;
    std::vector<GameState> states;
    std::unordered_map<GameState, StateId> index;
    StateId sink = -1;

    static GameState canonical(GameState s) {
        s.score = 0;
        s.step = 0;
        return s;
    }
    StateId id_of(const GameState& s) const {
        const auto it = index.find(canonical(s));
        if (it == index.end()) throw ValidationError("state not in the explicit model");
        return it->second;
    }
};

inline PacmanMdp as_mdp(const Game& game, const GameState& start, int horizon = -1, std::size_t cap = kDefaultNodeCap,
                        double illegal_reward = -1000.0) {
    const Game g = search_game(game);
    PacmanMdp out;
    std::deque<StateId> queue;
    std::vector<int> depth;
    int cur_depth = 0;
    auto intern = [&](const GameState& raw) {
        GameState s = PacmanMdp::canonical(raw);
        const auto it = out.index.find(s);
        if (it != out.index.end()) return it->second;
        if (out.states.size() >= cap) throw CapacityError("as_mdp: more than " + std::to_string(cap) + " states");
        const auto id = static_cast<StateId>(out.states.size());
        out.index.emplace(s, id);
        out.states.push_back(std::move(s));
        depth.push_back(out.states.size() == 1 ? 0 : cur_depth + 1);
        queue.push_back(id);
        return id;
    };
    struct Row {
        std::vector<std::pair<StateId, double>> dist;
        double reward;
    };
    std::vector<std::vector<Row>> rows;
    intern(start);
    while (!queue.empty()) {
        const StateId id = queue.front();
        queue.pop_front();
        const GameState s = out.states[static_cast<std::size_t>(id)];
        cur_depth = depth[static_cast<std::size_t>(id)];
        const bool frontier = horizon >= 0 && cur_depth >= horizon;
        std::vector<Row> r(kNumDirs);
        for (int a = 0; a < kNumDirs; ++a) {
            if (s.terminal() || frontier) {
                r[static_cast<std::size_t>(a)] = {{{id, 1.0}}, 0.0};
                continue;
            }
            if (g.layout().neighbor(s.pacman, a) < 0) {
                r[static_cast<std::size_t>(a)] = {{{-1, 1.0}}, illegal_reward};
                continue;
            }
            std::vector<std::pair<StateId, double>> dist;
            for (const auto& o : g.outcomes(s, a)) {
                const StateId t = intern(o.state);
                auto hit = std::find_if(dist.begin(), dist.end(), [t](const auto& e) { return e.first == t; });
                if (hit == dist.end()) dist.emplace_back(t, o.prob);
                else hit->second += o.prob;
            }
            r[static_cast<std::size_t>(a)] = {std::move(dist), g.expected_delta(s, a)};
        }
        if (rows.size() <= static_cast<std::size_t>(id)) rows.resize(static_cast<std::size_t>(id) + 1);
        rows[static_cast<std::size_t>(id)] = std::move(r);
    }
    out.sink = static_cast<StateId>(out.states.size());
    const int n = out.sink + 1;
    out.mdp = Mdp(static_cast<std::size_t>(n), kNumDirs);
    for (StateId s = 0; s < out.sink; ++s) {
        for (int a = 0; a < kNumDirs; ++a) {
            auto row = rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
            std::vector<Outcome<StateId>> dist;
            for (const auto& [t, p] : row.dist) dist.push_back({t < 0 ? out.sink : t, p});
            out.mdp.set_transition(s, a, std::move(dist), row.reward);
        }
        out.mdp.set_terminal_reward(s, g.terminal_eval(out.states[static_cast<std::size_t>(s)]));
    }
    for (int a = 0; a < kNumDirs; ++a) out.mdp.set_transition(out.sink, a, {{out.sink, 1.0}}, 0.0);
    out.mdp.set_terminal_reward(out.sink, 0.0);
    return out;
}

}  // namespace symadv::pacman
