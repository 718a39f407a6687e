#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "symadv/errors.hpp"
#include "symadv/pacman/layout.hpp"
#include "symadv/random.hpp"

namespace symadv::pacman {

enum class Status { ongoing, won, lost, draw };

inline const char* status_name(Status s) {
    switch (s) {
        case Status::ongoing: return "ongoing";
        case Status::won: return "won";
        case Status::lost: return "lost";
        case Status::draw: return "draw";
    }
    return "?";
}

enum class GhostKind { random, directional };

struct GhostModel {
    GhostKind kind = GhostKind::random;
    double bias = 0.9;  // directional only
};

/// Parses "random,directional" or "2xrandom+1xdirectional".
inline std::vector<GhostModel> parse_ghost_roster(const std::string& spec) {
    std::vector<GhostModel> out;
    std::string tok;
    auto flush = [&] {
        if (tok.empty()) return;
        int count = 1;
        std::string kind = tok;
        const auto x = tok.find('x');
        if (x != std::string::npos && x > 0 && std::all_of(tok.begin(), tok.begin() + static_cast<std::ptrdiff_t>(x), ::isdigit)) {
            count = std::stoi(tok.substr(0, x));
            kind = tok.substr(x + 1);
        }
        GhostModel g;
        if (kind == "random") g.kind = GhostKind::random;
        else if (kind == "directional") g.kind = GhostKind::directional;
        else throw ValidationError("unknown ghost kind '" + kind + "'");
        for (int i = 0; i < count; ++i) out.push_back(g);
        tok.clear();
    };
    for (char c : spec) {
        if (c == ',' || c == '+') flush();
        else if (c != ' ') tok += c;
    }
    flush();
    return out;
}

struct GhostState {
    int cell = -1;
    int last_dir = kNoDir;
    bool operator==(const GhostState&) const = default;
};

struct GameState {
    int pacman = -1;
    std::vector<GhostState> ghosts;
    std::vector<bool> food;
    int score = 0;
    int step = 0;
    Status status = Status::ongoing;

    bool operator==(const GameState&) const = default;
    bool terminal() const { return status != Status::ongoing; }
    int food_left() const {
        int n = 0;
        for (bool f : food) n += f;
        return n;
    }
};

struct GameRules {
    int step_reward = -1;
    int food_reward = 10;
    int win_reward = 500;
    int loss_penalty = 500;
    int draw_limit = 300;  // 0 disables draws
    double terminal_base = 0.5;
    double terminal_food = 0.3;
    double terminal_ghost = 0.2;
};

/// Rules engine over a shared layout.
class Game {
public:
    Game(std::shared_ptr<const GridLayout> layout, std::vector<GhostModel> ghosts, GameRules rules = {})
        : layout_(std::move(layout)), ghost_models_(std::move(ghosts)), rules_(rules) {
        if (!layout_) throw ValidationError("game: no layout");
        if (ghost_models_.size() < layout_->ghosts.size())
            ghost_models_.resize(layout_->ghosts.size(), GhostModel{});
        if (ghost_models_.size() > layout_->ghosts.size())
            throw ValidationError("game: roster lists " + std::to_string(ghost_models_.size()) + " ghosts but the layout has " +
                                  std::to_string(layout_->ghosts.size()));
        for (const auto& g : ghost_models_)
            if (!(g.bias > 0.0 && g.bias <= 1.0)) throw ValidationError("game: ghost bias must lie in (0, 1]");
        bool can_move = false;
        for (int d = 0; d < kNumDirs; ++d) can_move = can_move || layout_->neighbor(layout_->pacman, d) >= 0;
        if (!can_move) throw ValidationError("game: Pac-Man starts enclosed");
    }

    const GridLayout& layout() const { return *layout_; }
    std::shared_ptr<const GridLayout> layout_ptr() const { return layout_; }
    const std::vector<GhostModel>& ghost_models() const { return ghost_models_; }
    const GameRules& rules() const { return rules_; }

    GameState initial_state() const {
        GameState s;
        s.pacman = layout_->pacman;
        for (int c : layout_->ghosts) s.ghosts.push_back({c, kNoDir});
        s.food = layout_->food;
        if (s.food_left() == 0) s.status = Status::won;
        for (const auto& g : s.ghosts)
            if (g.cell == s.pacman) s.status = Status::lost;
        return s;
    }

    std::vector<int> pacman_moves(const GameState& s) const {
        std::vector<int> out;
        for (int d = 0; d < kNumDirs; ++d)
            if (layout_->neighbor(s.pacman, d) >= 0) out.push_back(d);
        return out;
    }

    /// Non-wall, non-reverse moves; the reverse alone when nothing else is open.
    std::vector<int> ghost_moves(int cell, int last_dir) const {
        std::vector<int> out;
        const int rev = reverse_dir(last_dir);
        for (int d = 0; d < kNumDirs; ++d)
            if (d != rev && layout_->neighbor(cell, d) >= 0) out.push_back(d);
        if (out.empty() && rev != kNoDir && layout_->neighbor(cell, rev) >= 0) out.push_back(rev);
        return out;
    }
    std::vector<int> ghost_moves(const GameState& s, std::size_t g) const {
        return ghost_moves(s.ghosts[g].cell, s.ghosts[g].last_dir);
    }

    /// Move distribution of ghost g toward Pac-Man's (already moved) cell.
    std::vector<std::pair<int, double>> ghost_distribution(const GhostState& gs, std::size_t g, int pacman_cell) const {
        const auto moves = ghost_moves(gs.cell, gs.last_dir);
        std::vector<std::pair<int, double>> out;
        if (moves.empty()) return out;
        const double u = 1.0 / static_cast<double>(moves.size());
        const auto& model = ghost_models_[g];
        if (model.kind == GhostKind::random) {
            for (int d : moves) out.emplace_back(d, u);
            return out;
        }
        int best = kUnreachable;
        for (int d : moves) best = std::min(best, layout_->manhattan(layout_->neighbor(gs.cell, d), pacman_cell));
        int n_best = 0;
        for (int d : moves) n_best += layout_->manhattan(layout_->neighbor(gs.cell, d), pacman_cell) == best;
        for (int d : moves) {
            const bool is_best = layout_->manhattan(layout_->neighbor(gs.cell, d), pacman_cell) == best;
            out.emplace_back(d, (is_best ? model.bias / n_best : 0.0) + (1.0 - model.bias) * u);
        }
        return out;
    }

    /// Resolves one step with the ghost moves given in index order. A ghost
    /// that is frozen (contact already happened) ignores its entry. Returns
    /// the score delta.
    int apply(GameState& s, int move, const std::function<int(const GameState&, std::size_t)>& ghost_move) const {
        if (s.terminal()) throw ValidationError("step on a finished game");
        const int target = layout_->neighbor(s.pacman, move);
        if (move < 0 || move >= kNumDirs || target < 0) throw ValidationError(std::string("illegal move ") + dir_name(move));
        int delta = rules_.step_reward;
        s.pacman = target;
        s.step += 1;
        bool contact = std::any_of(s.ghosts.begin(), s.ghosts.end(), [&](const GhostState& g) { return g.cell == target; });
        if (!contact && s.food[static_cast<std::size_t>(target)]) {
            s.food[static_cast<std::size_t>(target)] = false;
            delta += rules_.food_reward;
            if (s.food_left() == 0) {
                s.status = Status::won;
                delta += rules_.win_reward;
            }
        }
        if (!contact && s.status == Status::ongoing) {
            for (std::size_t g = 0; g < s.ghosts.size(); ++g) {
                const int d = ghost_move(s, g);
                if (d == kNoDir) continue;  // enclosed ghost stays put
                auto& gs = s.ghosts[g];
                gs.cell = layout_->neighbor(gs.cell, d);
                if (gs.cell < 0) throw ValidationError("ghost move into a wall");
                gs.last_dir = d;
                if (gs.cell == s.pacman) {
                    contact = true;
                    break;
                }
            }
        }
        if (contact) {
            s.status = Status::lost;
            delta -= rules_.loss_penalty;
        }
        s.score += delta;
        if (s.status == Status::ongoing && rules_.draw_limit > 0 && s.step >= rules_.draw_limit) s.status = Status::draw;
        return delta;
    }

    std::pair<GameState, int> step(const GameState& s, int move, Rng& rng) const {
        GameState n = s;
        const int delta = apply(n, move, [&](const GameState& cur, std::size_t g) {
            const auto dist = ghost_distribution(cur.ghosts[g], g, cur.pacman);
            if (dist.empty()) return static_cast<int>(kNoDir);
            const double u = uniform01(rng);
            double acc = 0.0;
            for (const auto& [d, p] : dist) {
                acc += p;
                if (u < acc) return d;
            }
            return dist.back().first;
        });
        return {std::move(n), delta};
    }

    /// Deterministic step with explicit ghost moves (one entry per ghost;
    /// entries of frozen ghosts are ignored).
    std::pair<GameState, int> step_with_moves(const GameState& s, int move, const std::vector<int>& moves) const {
        if (moves.size() != s.ghosts.size()) throw ValidationError("step_with_moves: one move per ghost required");
        GameState n = s;
        const int delta = apply(n, move, [&](const GameState& cur, std::size_t g) {
            const auto legal = ghost_moves(cur, g);
            if (legal.empty()) return static_cast<int>(kNoDir);
            if (std::find(legal.begin(), legal.end(), moves[g]) == legal.end())
                throw ValidationError("step_with_moves: illegal ghost move");
            return moves[g];
        });
        return {std::move(n), delta};
    }

    struct StepOutcome {
        GameState state;
        double prob;
        int delta;
    };

    /// All distinct results of `move` with their probabilities.
    std::vector<StepOutcome> outcomes(const GameState& s, int move) const {
        std::vector<StepOutcome> out;
        // enumerate joint ghost choices lazily: only ghosts that actually move
        // branch, so frozen ghosts do not multiply outcomes
        std::function<void(GameState, double, int, std::size_t)> rec;
        const int target = layout_->neighbor(s.pacman, move);
        if (s.terminal()) throw ValidationError("outcomes of a finished game");
        if (move < 0 || move >= kNumDirs || target < 0) throw ValidationError(std::string("illegal move ") + dir_name(move));

        // Pac-Man part, deterministic
        GameState base = s;
        int delta = rules_.step_reward;
        base.pacman = target;
        base.step += 1;
        bool contact = std::any_of(base.ghosts.begin(), base.ghosts.end(), [&](const GhostState& g) { return g.cell == target; });
        if (!contact && base.food[static_cast<std::size_t>(target)]) {
            base.food[static_cast<std::size_t>(target)] = false;
            delta += rules_.food_reward;
            if (base.food_left() == 0) {
                base.status = Status::won;
                delta += rules_.win_reward;
            }
        }
        auto finish = [&](GameState st, double p, int d, bool hit) {
            if (hit) {
                st.status = Status::lost;
                d -= rules_.loss_penalty;
            }
            st.score += d;
            if (st.status == Status::ongoing && rules_.draw_limit > 0 && st.step >= rules_.draw_limit) st.status = Status::draw;
            out.push_back({std::move(st), p, d});
        };
        if (contact || base.status != Status::ongoing) {
            finish(std::move(base), 1.0, delta, contact);
            return out;
        }
        rec = [&](GameState st, double p, int d, std::size_t g) {
            if (g == st.ghosts.size()) {
                finish(std::move(st), p, d, false);
                return;
            }
            const auto dist = ghost_distribution(st.ghosts[g], g, st.pacman);
            if (dist.empty()) {
                rec(std::move(st), p, d, g + 1);
                return;
            }
            for (const auto& [dir, q] : dist) {
                if (q <= 0.0) continue;
                GameState n = st;
                n.ghosts[g].cell = layout_->neighbor(n.ghosts[g].cell, dir);
                n.ghosts[g].last_dir = dir;
                if (n.ghosts[g].cell == n.pacman)
                    finish(std::move(n), p * q, d, true);
                else
                    rec(std::move(n), p * q, d, g + 1);
            }
        };
        rec(std::move(base), 1.0, delta, 0);
        return out;
    }

    /// Expected score delta of `move`, in closed form.
    double expected_delta(const GameState& s, int move) const {
        const int target = layout_->neighbor(s.pacman, move);
        if (target < 0) throw ValidationError(std::string("illegal move ") + dir_name(move));
        double d = rules_.step_reward;
        for (const auto& g : s.ghosts)
            if (g.cell == target) return d - rules_.loss_penalty;
        if (s.food[static_cast<std::size_t>(target)]) {
            d += rules_.food_reward;
            if (s.food_left() == 1) return d + rules_.win_reward;
        }
        double survive = 1.0;
        for (std::size_t g = 0; g < s.ghosts.size(); ++g)
            for (const auto& [dir, q] : ghost_distribution(s.ghosts[g], g, target))
                if (layout_->neighbor(s.ghosts[g].cell, dir) == target) survive *= 1.0 - q;
        return d - rules_.loss_penalty * (1.0 - survive);
    }

    /// Heuristic value of a cut-off state in [0, 1].
    double terminal_eval(const GameState& s) const {
        if (s.status == Status::won) return 1.0;
        if (s.status == Status::lost) return 0.0;
        int d_food = kUnreachable;
        bool any_food = false;
        for (int c = 0; c < layout_->num_cells(); ++c)
            if (s.food[static_cast<std::size_t>(c)]) {
                any_food = true;
                d_food = std::min(d_food, layout_->distance(s.pacman, c));
            }
        int d_ghost = kUnreachable;
        for (const auto& g : s.ghosts) d_ghost = std::min(d_ghost, layout_->distance(s.pacman, g.cell));
        double v = rules_.terminal_base;
        if (!any_food) v += rules_.terminal_food;
        else if (d_food != kUnreachable) v += rules_.terminal_food / (1.0 + d_food);
        if (d_ghost != kUnreachable) v -= rules_.terminal_ghost / (1.0 + d_ghost);
        return std::clamp(v, 0.0, 1.0);
    }

private:
    std::shared_ptr<const GridLayout> layout_;
    std::vector<GhostModel> ghost_models_;
    GameRules rules_;
};

}  // namespace symadv::pacman

template <>
struct std::hash<symadv::pacman::GameState> {
    std::size_t operator()(const symadv::pacman::GameState& s) const noexcept {
        std::size_t h = std::hash<int>{}(s.pacman) * 0x9e3779b97f4a7c15ULL;
        for (const auto& g : s.ghosts) h = (h ^ static_cast<std::size_t>(g.cell * 8 + g.last_dir + 1)) * 0x100000001b3ULL;
        h ^= std::hash<std::vector<bool>>{}(s.food) + static_cast<std::size_t>(s.status) * 31 + static_cast<std::size_t>(s.step);
        return h;
    }
};
