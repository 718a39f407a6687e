#pragma once

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <vector>

#include "symadv/cnf.hpp"
#include "symadv/errors.hpp"
#include "symadv/mdp.hpp"
#include "symadv/pacman/game.hpp"
#include "symadv/path_encoding.hpp"
#include "symadv/random.hpp"
#include "symadv/solver.hpp"

namespace symadv::pacman {

struct CnfReductions {
    /// Ghosts whose Manhattan distance to Pac-Man exceeds factor * horizon
    /// cannot reach him within the horizon and are left out. 0 keeps all.
    double ghost_distance_factor = 2.0;
};

struct StepMoves {
    int pacman = kStop;
    std::vector<int> ghosts;  // one per ghost of the game; kNoDir = stay / not encoded
};

/// Game rules (and optionally safety) as CNF over `horizon` steps from
/// `root`. Models of the rules-only formula are in bijection with the
/// length-H paths of PacmanModel from root as long as no path eats the last
/// pill: food is not encoded, so a won state does not absorb in the CNF.
struct GameCnf {
    AdviceCnf<GameState> cnf;
    std::vector<std::size_t> encoded_ghosts;
    std::vector<std::size_t> dropped_ghosts;
    std::function<std::vector<StepMoves>(const Assignment&)> moves;
};

namespace detail {

class GameVars {
public:
    static constexpr int kLastNone = 4;
    static constexpr int kStay = 4;

    GameVars(const Game& game, const GameState& root, int H, std::vector<std::size_t> ghosts, CnfFormula& f)
        : H_(H), cells_(game.layout().num_cells()), ghosts_(std::move(ghosts)) {
        const auto& L = game.layout();
        false_var_ = f.new_var();
        f.add_unit(-false_var_);
        const std::size_t G = ghosts_.size();
        P_.assign(static_cast<std::size_t>(H + 1), std::vector<int>(static_cast<std::size_t>(cells_), 0));
        Gp_.assign(static_cast<std::size_t>(H + 1), std::vector<std::vector<int>>(G, std::vector<int>(static_cast<std::size_t>(cells_), 0)));
        Ld_.assign(static_cast<std::size_t>(H + 1), std::vector<std::vector<int>>(G, std::vector<int>(5, 0)));
        D_.assign(static_cast<std::size_t>(H + 1), 0);
        A_.assign(static_cast<std::size_t>(H), std::vector<int>(5, 0));
        M_.assign(static_cast<std::size_t>(H), std::vector<std::vector<int>>(G, std::vector<int>(5, 0)));
        for (int t = 0; t <= H; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            for (int c = 0; c < cells_; ++c)
                if (!L.wall[static_cast<std::size_t>(c)] && L.distance(root.pacman, c) <= t) P_[ts][static_cast<std::size_t>(c)] = f.new_var();
            for (std::size_t j = 0; j < G; ++j) {
                const int start = root.ghosts[ghosts_[j]].cell;
                for (int c = 0; c < cells_; ++c)
                    if (!L.wall[static_cast<std::size_t>(c)] && L.distance(start, c) <= t) Gp_[ts][j][static_cast<std::size_t>(c)] = f.new_var();
                for (int l = 0; l < 5; ++l) Ld_[ts][j][static_cast<std::size_t>(l)] = f.new_var();
            }
            D_[ts] = f.new_var();
            if (t == H) break;
            for (int a = 0; a < 5; ++a) A_[ts][static_cast<std::size_t>(a)] = f.new_var();
            for (std::size_t j = 0; j < G; ++j)
                for (int m = 0; m < 5; ++m) M_[ts][j][static_cast<std::size_t>(m)] = f.new_var();
        }
    }

    int false_var() const { return false_var_; }
    int P(int t, int c) const { return or_false(P_[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)]); }
    int G(int t, std::size_t j, int c) const { return or_false(Gp_[static_cast<std::size_t>(t)][j][static_cast<std::size_t>(c)]); }
    bool has_P(int t, int c) const { return P_[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] != 0; }
    bool has_G(int t, std::size_t j, int c) const { return Gp_[static_cast<std::size_t>(t)][j][static_cast<std::size_t>(c)] != 0; }
    int L(int t, std::size_t j, int l) const { return Ld_[static_cast<std::size_t>(t)][j][static_cast<std::size_t>(l == kNoDir ? kLastNone : l)]; }
    int D(int t) const { return D_[static_cast<std::size_t>(t)]; }
    int A(int t, int a) const { return A_[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)]; }
    int M(int t, std::size_t j, int m) const { return M_[static_cast<std::size_t>(t)][j][static_cast<std::size_t>(m == kNoDir ? kStay : m)]; }

    std::vector<int> P_block(int t) const { return nonzero(P_[static_cast<std::size_t>(t)]); }
    std::vector<int> G_block(int t, std::size_t j) const { return nonzero(Gp_[static_cast<std::size_t>(t)][j]); }
    std::vector<int> L_block(int t, std::size_t j) const { return Ld_[static_cast<std::size_t>(t)][j]; }
    std::vector<int> A_block(int t) const { return A_[static_cast<std::size_t>(t)]; }
    std::vector<int> M_block(int t, std::size_t j) const { return M_[static_cast<std::size_t>(t)][j]; }

    int horizon() const { return H_; }
    int cells() const { return cells_; }
    std::size_t num_ghosts() const { return ghosts_.size(); }
    std::size_t ghost_index(std::size_t j) const { return ghosts_[j]; }

private:
    int H_;
    int cells_;
    std::vector<std::size_t> ghosts_;
    int false_var_ = 0;
    std::vector<std::vector<int>> P_;
    std::vector<std::vector<std::vector<int>>> Gp_;
    std::vector<std::vector<std::vector<int>>> Ld_;
    std::vector<int> D_;
    std::vector<std::vector<int>> A_;
    std::vector<std::vector<std::vector<int>>> M_;

    int or_false(int v) const { return v ? v : false_var_; }
    static std::vector<int> nonzero(const std::vector<int>& xs) {
        std::vector<int> out;
        for (int v : xs)
            if (v) out.push_back(v);
        return out;
    }
};

// E <-> (X and Y share a cell); X one-hot over its block.
inline void add_equal_cell(CnfFormula& f, const GameVars& V, int E, int tx, int ty, std::size_t j) {
    for (int c = 0; c < V.cells(); ++c) {
        if (!V.has_P(tx, c)) continue;
        if (V.has_G(ty, j, c)) {
            f.add_clause({-V.P(tx, c), -V.G(ty, j, c), E});
            f.add_clause({-E, -V.P(tx, c), V.G(ty, j, c)});
        } else {
            f.add_clause({-E, -V.P(tx, c)});
        }
    }
}

}  // namespace detail

inline GameCnf encode_game_cnf(const Game& game, const GameState& root, int horizon, bool safety = true,
                               CnfReductions red = {}) {
    if (horizon < 0) throw ValidationError("encode_game_cnf: negative horizon");
    if (root.status == Status::won || root.status == Status::draw)
        throw ValidationError("encode_game_cnf: root must be ongoing or lost");
    const auto& Lay = game.layout();
    GameCnf out;
    for (std::size_t g = 0; g < root.ghosts.size(); ++g) {
        const bool far = red.ghost_distance_factor > 0.0 &&
                         Lay.manhattan(root.pacman, root.ghosts[g].cell) > red.ghost_distance_factor * horizon;
        (far ? out.dropped_ghosts : out.encoded_ghosts).push_back(g);
    }

    CnfFormula f;
    detail::GameVars V(game, root, horizon, out.encoded_ghosts, f);
    const std::size_t G = V.num_ghosts();

    // root
    f.add_unit(V.P(0, root.pacman));
    for (std::size_t j = 0; j < G; ++j) {
        const auto& gs = root.ghosts[out.encoded_ghosts[j]];
        f.add_unit(V.G(0, j, gs.cell));
        f.add_unit(V.L(0, j, gs.last_dir));
    }
    f.add_unit(root.status == Status::lost ? V.D(0) : -V.D(0));

    for (int t = 0; t <= horizon; ++t) {
        f.add_exactly_one(V.P_block(t));
        for (std::size_t j = 0; j < G; ++j) {
            f.add_exactly_one(V.G_block(t, j));
            f.add_exactly_one(V.L_block(t, j));
        }
        if (safety) f.add_unit(-V.D(t));
        if (t == horizon) break;

        // Pac-Man
        f.add_exactly_one(V.A_block(t));
        f.add_clause({-V.D(t), V.A(t, kStop)});
        f.add_clause({V.D(t), -V.A(t, kStop)});
        for (int c = 0; c < V.cells(); ++c) {
            if (!V.has_P(t, c)) continue;
            for (int d = 0; d < kNumDirs; ++d) {
                const int nb = Lay.neighbor(c, d);
                if (nb < 0) f.add_clause({-V.P(t, c), -V.A(t, d)});
                else f.add_clause({-V.P(t, c), -V.A(t, d), V.P(t + 1, nb)});
            }
            f.add_clause({-V.P(t, c), -V.A(t, kStop), V.P(t + 1, c)});
        }

        // contact right after Pac-Man's move: X <-> !D_t and some C_j
        std::vector<int> C(G);
        for (std::size_t j = 0; j < G; ++j) {
            C[j] = f.new_var();
            detail::add_equal_cell(f, V, C[j], t + 1, t, j);
        }
        const int X = f.new_var();
        {
            std::vector<Lit> any{-X};
            for (int c : C) {
                f.add_clause({V.D(t), -c, X});
                any.push_back(c);
            }
            f.add_clause(any);
            f.add_clause({-X, -V.D(t)});
        }
        // F_0 <-> D_t or X
        int F = f.new_var();
        f.add_clause({-F, V.D(t), X});
        f.add_clause({F, -V.D(t)});
        f.add_clause({F, -X});

        for (std::size_t j = 0; j < G; ++j) {
            f.add_exactly_one(V.M_block(t, j));
            f.add_clause({-F, V.M(t, j, kNoDir)});
            for (int c = 0; c < V.cells(); ++c) {
                if (!V.has_G(t, j, c)) continue;
                for (int l = -1; l < kNumDirs; ++l) {
                    const auto legal = game.ghost_moves(c, l);
                    if (legal.empty()) {
                        f.add_clause({-V.G(t, j, c), -V.L(t, j, l), V.M(t, j, kNoDir)});
                        continue;
                    }
                    f.add_clause({F, -V.G(t, j, c), -V.L(t, j, l), -V.M(t, j, kNoDir)});
                    for (int d = 0; d < kNumDirs; ++d)
                        if (std::find(legal.begin(), legal.end(), d) == legal.end())
                            f.add_clause({-V.G(t, j, c), -V.L(t, j, l), -V.M(t, j, d)});
                }
                for (int d = 0; d < kNumDirs; ++d) {
                    const int nb = Lay.neighbor(c, d);
                    if (nb < 0) f.add_clause({-V.G(t, j, c), -V.M(t, j, d)});
                    else f.add_clause({-V.G(t, j, c), -V.M(t, j, d), V.G(t + 1, j, nb)});
                }
                f.add_clause({-V.G(t, j, c), -V.M(t, j, kNoDir), V.G(t + 1, j, c)});
            }
            for (int d = 0; d < kNumDirs; ++d) f.add_clause({-V.M(t, j, d), V.L(t + 1, j, d)});
            for (int l = -1; l < kNumDirs; ++l)
                f.add_clause({-V.M(t, j, kNoDir), -V.L(t, j, l), V.L(t + 1, j, l)});

            // K <-> !F and ghost j now on Pac-Man's cell
            const int E = f.new_var();
            detail::add_equal_cell(f, V, E, t + 1, t + 1, j);
            const int K = f.new_var();
            f.add_clause({-K, -F});
            f.add_clause({-K, E});
            f.add_clause({K, F, -E});
            const int F2 = f.new_var();  // F2 <-> F or K
            f.add_clause({-F2, F, K});
            f.add_clause({F2, -F});
            f.add_clause({F2, -K});
            F = F2;
        }
        // D_{t+1} <-> F (dead before, or contact during this step)
        f.add_clause({-V.D(t + 1), F});
        f.add_clause({V.D(t + 1), -F});
    }

    if (!solve(f)) throw EncodingError(safety ? "encode_game_cnf: no safe path" : "encode_game_cnf: rules admit no path");

    auto vars = std::make_shared<detail::GameVars>(V);
    auto encoded = out.encoded_ghosts;
    const std::size_t num_ghosts = root.ghosts.size();

    auto& enc = out.cnf.encoding;
    enc.root = root;
    enc.horizon = horizon;
    enc.encode = [vars, encoded](const BasicPath<GameState>& p) {
        std::vector<Lit> lits;
        const auto& V = *vars;
        for (std::size_t t = 0; t < p.states.size(); ++t) {
            const auto ti = static_cast<int>(t);
            const auto& s = p.states[t];
            lits.push_back(V.P(ti, s.pacman));
            // ghosts freeze on a win, which the CNF does not model: from the
            // winning step on only Pac-Man is pinned down
            if (s.status == Status::won) break;
            for (std::size_t j = 0; j < encoded.size(); ++j) {
                const auto& gs = s.ghosts[encoded[j]];
                lits.push_back(V.G(ti, j, gs.cell));
                lits.push_back(V.L(ti, j, gs.last_dir));
            }
            if (t >= p.actions.size()) break;
            lits.push_back(V.A(ti, p.actions[t]));
            const auto& n = p.states[t + 1];
            if (n.status == Status::won) continue;
            for (std::size_t j = 0; j < encoded.size(); ++j) {
                const auto& a = s.ghosts[encoded[j]];
                const auto& b = n.ghosts[encoded[j]];
                lits.push_back(V.M(ti, j, a == b ? kNoDir : b.last_dir));
            }
        }
        return lits;
    };
    out.moves = [vars, encoded, num_ghosts](const Assignment& m) {
        const auto& V = *vars;
        std::vector<StepMoves> steps;
        for (int t = 0; t < V.horizon(); ++t) {
            StepMoves sm;
            sm.ghosts.assign(num_ghosts, kNoDir);
            for (int a = 0; a <= kStop; ++a)
                if (m[static_cast<std::size_t>(V.A(t, a))]) sm.pacman = a;
            for (std::size_t j = 0; j < encoded.size(); ++j)
                for (int d = 0; d < kNumDirs; ++d)
                    if (m[static_cast<std::size_t>(V.M(t, j, d))]) sm.ghosts[encoded[j]] = d;
            steps.push_back(std::move(sm));
        }
        return steps;
    };
    const Game game_copy = game;
    const bool has_dropped = !out.dropped_ghosts.empty();
    auto moves_fn = out.moves;
    enc.decode = [game_copy, root, moves_fn, has_dropped](const Assignment& m) {
        if (has_dropped) throw ContractViolation("decode: some ghosts are not encoded; replay with a random source instead");
        BasicPath<GameState> p(root);
        for (const auto& sm : moves_fn(m)) {
            const auto& cur = p.last();
            if (cur.terminal()) {
                p.push(kStop, cur);
                continue;
            }
            auto [next, delta] = game_copy.step_with_moves(cur, sm.pacman, sm.ghosts);
            (void)delta;
            p.push(sm.pacman, std::move(next));
        }
        return p;
    };
    for (int t = 0; t < horizon; ++t) {
        for (int v : V.A_block(t)) enc.support.push_back(v);
        for (std::size_t j = 0; j < G; ++j)
            for (int v : V.M_block(t, j)) enc.support.push_back(v);
    }
    out.cnf.formula = std::move(f);
    return out;
}

/// Continues `prefix` with the moves of steps prefix.length() .. H-1 taken
/// from a model; ghosts left out of the encoding draw from their own model.
inline BasicPath<GameState> replay_moves(const Game& game, const BasicPath<GameState>& prefix,
                                         const std::vector<StepMoves>& moves, const std::vector<std::size_t>& dropped,
                                         Rng& rng) {
    BasicPath<GameState> p = prefix;
    for (std::size_t t = prefix.length(); t < moves.size(); ++t) {
        const auto& cur = p.last();
        if (cur.terminal()) {
            p.push(kStop, cur);
            continue;
        }
        auto sm = moves[t];
        const int target = game.layout().neighbor(cur.pacman, sm.pacman);
        for (std::size_t g : dropped) {
            const auto dist = game.ghost_distribution(cur.ghosts[g], g, target);
            if (dist.empty()) continue;
            const double u = uniform01(rng);
            double acc = 0.0;
            sm.ghosts[g] = dist.back().first;
            for (const auto& [d, q] : dist) {
                acc += q;
                if (u < acc) {
                    sm.ghosts[g] = d;
                    break;
                }
            }
        }
        // frozen ghosts keep a placeholder that step_with_moves ignores
        for (std::size_t g = 0; g < cur.ghosts.size(); ++g)
            if (sm.ghosts[g] == kNoDir) {
                const auto legal = game.ghost_moves(cur, g);
                if (!legal.empty()) sm.ghosts[g] = legal.front();
            }
        auto [next, delta] = game.step_with_moves(cur, sm.pacman, sm.ghosts);
        (void)delta;
        p.push(sm.pacman, std::move(next));
    }
    return p;
}

}  // namespace symadv::pacman
