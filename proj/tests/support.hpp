#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "symadv/advice.hpp"
#include "symadv/mdp.hpp"
#include "symadv/pacman/game.hpp"
#include "symadv/pacman/layout.hpp"
#include "symadv/random.hpp"

namespace testsupport {

using namespace symadv;

/// Random MDP. Rewards and probabilities come from small grids so ties in
/// the argmax sets actually happen.
inline Mdp random_mdp(Rng& rng, int num_states, int num_actions, int max_support = 3) {
    Mdp m(static_cast<std::size_t>(num_states), static_cast<std::size_t>(num_actions));
    for (int s = 0; s < num_states; ++s) {
        m.set_terminal_reward(s, static_cast<double>(random_index(rng, 5)) / 4.0);
        for (int a = 0; a < num_actions; ++a) {
            const int k = 1 + static_cast<int>(random_index(rng, static_cast<std::uint64_t>(std::min(num_states, max_support))));
            std::vector<StateId> pool(static_cast<std::size_t>(num_states));
            for (int i = 0; i < num_states; ++i) pool[static_cast<std::size_t>(i)] = i;
            for (int i = 0; i < k; ++i)
                std::swap(pool[static_cast<std::size_t>(i)],
                          pool[static_cast<std::size_t>(i) + random_index(rng, static_cast<std::uint64_t>(num_states - i))]);
            std::vector<double> w(static_cast<std::size_t>(k));
            double total = 0.0;
            for (auto& x : w) total += (x = 1.0 + static_cast<double>(random_index(rng, 4)));
            std::vector<Outcome<StateId>> dist;
            for (int i = 0; i < k; ++i) dist.push_back({pool[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(i)] / total});
            m.set_transition(s, a, std::move(dist), static_cast<double>(random_index(rng, 5)) / 4.0);
        }
    }
    m.validate();
    return m;
}

/// Value and argmax sets obtained by evaluating every depth-indexed
/// deterministic strategy (state, remaining depth) -> action.
struct BruteForce {
    std::vector<std::vector<double>> value;                   // [depth][state]
    std::vector<std::vector<std::vector<Action>>> opt;        // [depth][state]
};

inline double strategy_count(const Mdp& m, int horizon) {
    return std::pow(static_cast<double>(m.num_actions()), static_cast<double>(m.num_states()) * horizon);
}

inline BruteForce brute_force(const Mdp& m, int horizon) {
    const std::size_t S = m.num_states(), A = m.num_actions();
    const std::size_t slots = S * static_cast<std::size_t>(horizon);
    const auto H = static_cast<std::size_t>(horizon);
    // best[k][s][a]: best value over strategies that play a at (s, k)
    std::vector<std::vector<std::vector<double>>> best(
        H + 1, std::vector<std::vector<double>>(S, std::vector<double>(A, -std::numeric_limits<double>::infinity())));
    std::vector<std::size_t> sigma(slots, 0);
    std::vector<std::vector<double>> w(H + 1, std::vector<double>(S));
    for (std::size_t s = 0; s < S; ++s) w[0][s] = m.terminal_reward(static_cast<StateId>(s));
    while (true) {
        for (std::size_t k = 1; k <= H; ++k)
            for (std::size_t s = 0; s < S; ++s) {
                const auto a = static_cast<Action>(sigma[(k - 1) * S + s]);
                double v = m.reward(static_cast<StateId>(s), a);
                for (const auto& o : m.transitions(static_cast<StateId>(s), a)) v += o.prob * w[k - 1][static_cast<std::size_t>(o.state)];
                w[k][s] = v;
                auto& b = best[k][s][static_cast<std::size_t>(a)];
                b = std::max(b, v);
            }
        std::size_t i = 0;
        while (i < slots && ++sigma[i] == A) sigma[i++] = 0;
        if (i == slots) break;
    }
    BruteForce out;
    out.value.assign(H + 1, std::vector<double>(S));
    out.opt.assign(H + 1, std::vector<std::vector<Action>>(S));
    out.value[0] = w[0];
    for (std::size_t k = 1; k <= H; ++k)
        for (std::size_t s = 0; s < S; ++s) {
            const double top = *std::max_element(best[k][s].begin(), best[k][s].end());
            out.value[k][s] = top;
            for (std::size_t a = 0; a < A; ++a)
                if (nearly_equal(best[k][s][a], top)) out.opt[k][s].push_back(static_cast<Action>(a));
        }
    return out;
}

/// Fixed 4-state, 2-action MDP whose H = 3 path rewards already lie in
/// [0, 1], so search values and exact values share a scale.
inline Mdp four_state_mdp() {
    Mdp m(4, 2);
    m.set_transition(0, 0, {{1, 0.5}, {2, 0.5}}, 0.10);
    m.set_transition(0, 1, {{3, 1.0}}, 0.20);
    m.set_transition(1, 0, {{1, 1.0}}, 0.25);
    m.set_transition(1, 1, {{0, 1.0}}, 0.00);
    m.set_transition(2, 0, {{3, 0.7}, {2, 0.3}}, 0.05);
    m.set_transition(2, 1, {{1, 1.0}}, 0.15);
    m.set_transition(3, 0, {{3, 1.0}}, 0.00);
    m.set_transition(3, 1, {{0, 0.5}, {2, 0.5}}, 0.10);
    m.set_terminal_reward(0, 0.10);
    m.set_terminal_reward(1, 0.25);
    m.set_terminal_reward(2, 0.00);
    m.set_terminal_reward(3, 0.05);
    m.validate();
    return m;
}

/// Advice "no visited state belongs to `bad`".
inline Advice<StateId> avoid_states(int horizon, std::vector<StateId> bad) {
    Advice<StateId> adv;
    adv.horizon = horizon;
    adv.state_based = true;
    adv.evaluate = [bad](const Path& p) {
        for (StateId s : p.states)
            if (std::find(bad.begin(), bad.end(), s) != bad.end()) return false;
        return true;
    };
    return adv;
}

inline std::shared_ptr<pacman::GridLayout> layout(const std::string& text) {
    return std::make_shared<pacman::GridLayout>(pacman::parse_layout(text));
}

inline pacman::Game game_of(const std::string& text, std::vector<pacman::GhostModel> ghosts = {},
                            pacman::GameRules rules = {}) {
    return pacman::Game(layout(text), std::move(ghosts), rules);
}

/// Open 3x3 interior; Pac-Man top left, one ghost bottom right, food in the middle row.
inline const char* kOpen3 =
    "%%%%%\n"
    "%P  %\n"
    "%...%\n"
    "%  G%\n"
    "%%%%%\n";

/// A loop corridor with one directional ghost.
inline const char* kLoop =
    "%%%%%%%\n"
    "%P....%\n"
    "%.%%%.%\n"
    "%....G%\n"
    "%%%%%%%\n";

/// Straight corridor: Pac-Man, pill, ghost.
inline const char* kCorridor = "%%%%%%%\n%P. G %\n%%%%%%%\n";

/// Pac-Man between two ghosts in a corridor, an escape only through a
/// ghost-reachable junction.
inline const char* kPincer =
    "%%%%%%%%%\n"
    "%.......%\n"
    "%.%%%%%.%\n"
    "%.G.P.G.%\n"
    "%.%%%%%.%\n"
    "%.......%\n"
    "%%%%%%%%%\n";

inline const char* kTiny =
    "%%%%%\n"
    "%P..%\n"
    "%.%.%\n"
    "%...%\n"
    "%%%%%\n";

}  // namespace testsupport
