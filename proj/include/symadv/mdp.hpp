#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <deque>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "symadv/errors.hpp"
#include "symadv/random.hpp"

namespace symadv {

using StateId = int;
using Action = int;

/// Distributions are accepted when their mass is within this of 1.
inline constexpr double kProbabilityTolerance = 1e-9;
/// Two Bellman values closer than this (relative to magnitude) are ties.
inline constexpr double kTieTolerance = 1e-9;

inline bool nearly_equal(double a, double b, double tol = kTieTolerance) {
    return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

template <class S>
struct Outcome {
    S state;
    double prob;
};

/// Per-step and terminal reward ranges of a model, used for normalization.
struct RewardBounds {
    double step_min = 0.0;
    double step_max = 0.0;
    double terminal_min = 0.0;
    double terminal_max = 0.0;
};

/// Anything MCTS and the advice machinery can search: a (possibly lazy) MDP
/// with per-state action sets.
template <class M>
concept DecisionModel = requires(const M& m, const typename M::State& s, Action a) {
    typename M::State;
    requires std::equality_comparable<typename M::State>;
    { m.actions(s) } -> std::convertible_to<std::vector<Action>>;
    { m.transitions(s, a) } -> std::convertible_to<std::vector<Outcome<typename M::State>>>;
    { m.reward(s, a) } -> std::convertible_to<double>;
    { m.terminal_reward(s) } -> std::convertible_to<double>;
    { m.reward_bounds() } -> std::same_as<RewardBounds>;
};

/// A model whose states are the integers [0, num_states()).
template <class M>
concept FiniteModel = DecisionModel<M> && std::same_as<typename M::State, StateId> &&
                      requires(const M& m) {
                          { m.num_states() } -> std::convertible_to<std::size_t>;
                      };

// ---------------------------------------------------------------------------
// Paths

template <class S>
struct BasicPath {
    std::vector<S> states;
    std::vector<Action> actions;

    BasicPath() = default;
    explicit BasicPath(S s0) { states.push_back(std::move(s0)); }

    std::size_t length() const { return actions.size(); }
    const S& first() const { return states.front(); }
    const S& last() const { return states.back(); }

    void push(Action a, S s) {
        actions.push_back(a);
        states.push_back(std::move(s));
    }
    void pop() {
        actions.pop_back();
        states.pop_back();
    }
    BasicPath extended(Action a, S s) const {
        BasicPath p = *this;
        p.push(a, std::move(s));
        return p;
    }
    /// p|t: the first t steps.
    BasicPath prefix(std::size_t t) const {
        BasicPath p;
        p.states.assign(states.begin(), states.begin() + static_cast<std::ptrdiff_t>(t + 1));
        p.actions.assign(actions.begin(), actions.begin() + static_cast<std::ptrdiff_t>(t));
        return p;
    }
    bool has_prefix(const BasicPath& q) const {
        if (q.length() > length()) return false;
        return std::equal(q.states.begin(), q.states.end(), states.begin()) &&
               std::equal(q.actions.begin(), q.actions.end(), actions.begin());
    }

    friend bool operator==(const BasicPath&, const BasicPath&) = default;
};

using Path = BasicPath<StateId>;

template <class S, class Hash = std::hash<S>>
struct PathHash {
    std::size_t operator()(const BasicPath<S>& p) const {
        std::size_t h = 0x51ed270b27a1f9c3ULL;
        Hash hs;
        for (std::size_t i = 0; i < p.states.size(); ++i) {
            h = (h ^ hs(p.states[i])) * 0x100000001b3ULL;
            if (i < p.actions.size()) h = (h ^ static_cast<std::size_t>(p.actions[i] + 7)) * 0x100000001b3ULL;
        }
        return h;
    }
};

// ---------------------------------------------------------------------------
// Explicit MDP

/// Explicit finite MDP. Every action is available in every state; a model
/// with illegal actions routes them to a sink state.
class Mdp {
public:
    using State = StateId;

    Mdp() = default;
    Mdp(std::size_t num_states, std::size_t num_actions)
        : num_states_(num_states),
          num_actions_(num_actions),
          dist_(num_states * num_actions),
          reward_(num_states * num_actions, 0.0),
          terminal_(num_states, 0.0) {
        all_actions_.resize(num_actions);
        for (std::size_t a = 0; a < num_actions; ++a) all_actions_[a] = static_cast<Action>(a);
    }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    /// Replaces the distribution of (s, a). Zero-probability entries are dropped.
    void set_transition(State s, Action a, std::vector<Outcome<State>> dist, double reward) {
        check_pair(s, a);
        std::erase_if(dist, [](const Outcome<State>& o) { return o.prob == 0.0; });
        dist_[index(s, a)] = std::move(dist);
        reward_[index(s, a)] = reward;
    }
    void set_reward(State s, Action a, double reward) {
        check_pair(s, a);
        reward_[index(s, a)] = reward;
    }
    void set_terminal_reward(State s, double r) {
        check_state(s);
        terminal_[static_cast<std::size_t>(s)] = r;
    }

    const std::vector<Action>& actions(State) const { return all_actions_; }
    const std::vector<Outcome<State>>& transitions(State s, Action a) const {
        return dist_[index(s, a)];
    }
    double reward(State s, Action a) const { return reward_[index(s, a)]; }
    double terminal_reward(State s) const { return terminal_[static_cast<std::size_t>(s)]; }

    double probability(State s, Action a, State next) const {
        double p = 0.0;
        for (const auto& o : transitions(s, a))
            if (o.state == next) p += o.prob;
        return p;
    }

    RewardBounds reward_bounds() const {
        RewardBounds b;
        if (num_states_ == 0) return b;
        b.step_min = *std::min_element(reward_.begin(), reward_.end());
        b.step_max = *std::max_element(reward_.begin(), reward_.end());
        b.terminal_min = *std::min_element(terminal_.begin(), terminal_.end());
        b.terminal_max = *std::max_element(terminal_.begin(), terminal_.end());
        return b;
    }

    /// Throws ValidationError unless every (s, a) carries a proper distribution.
    void validate() const {
        if (num_states_ == 0 || num_actions_ == 0) throw ValidationError("mdp has no states or no actions");
        for (std::size_t s = 0; s < num_states_; ++s) {
            for (std::size_t a = 0; a < num_actions_; ++a) {
                const auto& d = dist_[s * num_actions_ + a];
                if (d.empty())
                    throw ValidationError("no transition for state " + std::to_string(s) + ", action " +
                                          std::to_string(a));
                double mass = 0.0;
                for (const auto& o : d) {
                    if (o.prob < 0.0 || !std::isfinite(o.prob))
                        throw ValidationError("negative probability at state " + std::to_string(s));
                    if (o.state < 0 || static_cast<std::size_t>(o.state) >= num_states_)
                        throw ValidationError("successor out of range at state " + std::to_string(s));
                    mass += o.prob;
                }
                if (std::abs(mass - 1.0) > kProbabilityTolerance)
                    throw ValidationError("distribution of state " + std::to_string(s) + ", action " +
                                          std::to_string(a) + " sums to " + std::to_string(mass));
            }
        }
    }

    // Optional names, used by the text format.
    std::vector<std::string> state_names;
    std::vector<std::string> action_names;

private:
    std::size_t index(State s, Action a) const {
        return static_cast<std::size_t>(s) * num_actions_ + static_cast<std::size_t>(a);
    }
    void check_state(State s) const {
        if (s < 0 || static_cast<std::size_t>(s) >= num_states_)
            throw ValidationError("state " + std::to_string(s) + " out of range");
    }
    void check_pair(State s, Action a) const {
        check_state(s);
        if (a < 0 || static_cast<std::size_t>(a) >= num_actions_)
            throw ValidationError("action " + std::to_string(a) + " out of range");
    }

    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::vector<Outcome<State>>> dist_;
    std::vector<double> reward_;
    std::vector<double> terminal_;
    std::vector<Action> all_actions_;
};

// ---------------------------------------------------------------------------
// Paths and rewards

template <DecisionModel M>
bool is_valid_path(const M& model, const BasicPath<typename M::State>& p) {
    if (p.states.size() != p.actions.size() + 1) return false;
    for (std::size_t t = 0; t < p.length(); ++t) {
        const auto acts = model.actions(p.states[t]);
        if (std::find(acts.begin(), acts.end(), p.actions[t]) == acts.end()) return false;
        bool found = false;
        for (const auto& o : model.transitions(p.states[t], p.actions[t]))
            if (o.prob > 0.0 && o.state == p.states[t + 1]) found = true;
        if (!found) return false;
    }
    return true;
}

/// Sum of step rewards along p plus the terminal reward of last(p).
template <DecisionModel M>
double path_reward(const M& model, const BasicPath<typename M::State>& p) {
    if (!is_valid_path(model, p)) throw ValidationError("path violates the transition support");
    double total = 0.0;
    for (std::size_t t = 0; t < p.length(); ++t) total += model.reward(p.states[t], p.actions[t]);
    return total + model.terminal_reward(p.last());
}

template <class S>
std::size_t sample_outcome_index(const std::vector<Outcome<S>>& dist, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        acc += dist[i].prob;
        if (u < acc) return i;
    }
    // rounding: fall back to the last outcome with positive mass
    for (std::size_t i = dist.size(); i-- > 0;)
        if (dist[i].prob > 0.0) return i;
    return 0;
}

/// Draws s' ~ P(s, a); one uniform draw per call.
template <DecisionModel M>
typename M::State sample_successor(const M& model, const typename M::State& s, Action a, Rng& rng) {
    const auto dist = model.transitions(s, a);
    return dist[sample_outcome_index(dist, rng)].state;
}

// ---------------------------------------------------------------------------
// Finite-horizon value iteration

struct HorizonValues {
    int horizon = 0;
    std::vector<std::vector<double>> value;                 // [depth][state]
    std::vector<std::vector<std::vector<Action>>> optimal;  // [depth][state], empty at depth 0

    double at(StateId s, int depth) const { return value[static_cast<std::size_t>(depth)][static_cast<std::size_t>(s)]; }
    const std::vector<Action>& opt_actions(StateId s, int depth) const {
        return optimal[static_cast<std::size_t>(depth)][static_cast<std::size_t>(s)];
    }
};

/// Q-value of (s, a) against a depth-i value table.
template <FiniteModel M>
double bellman_q(const M& model, StateId s, Action a, const std::vector<double>& next) {
    double q = model.reward(s, a);
    for (const auto& o : model.transitions(s, a)) q += o.prob * next[static_cast<std::size_t>(o.state)];
    return q;
}

/// Val^i and opt^i for i = 0..horizon. opt sets are full argmax sets in
/// canonical (ascending) action order.
template <FiniteModel M>
HorizonValues value_iteration(const M& model, int horizon) {
    if (horizon < 0) throw ValidationError("horizon must be non-negative");
    const std::size_t n = model.num_states();
    HorizonValues hv;
    hv.horizon = horizon;
    hv.value.assign(static_cast<std::size_t>(horizon) + 1, std::vector<double>(n));
    hv.optimal.assign(static_cast<std::size_t>(horizon) + 1, std::vector<std::vector<Action>>(n));
    for (std::size_t s = 0; s < n; ++s) hv.value[0][s] = model.terminal_reward(static_cast<StateId>(s));

    std::vector<double> q;
    for (int i = 1; i <= horizon; ++i) {
        const auto& prev = hv.value[static_cast<std::size_t>(i - 1)];
        for (std::size_t s = 0; s < n; ++s) {
            const auto sid = static_cast<StateId>(s);
            std::vector<Action> acts = model.actions(sid);
            std::sort(acts.begin(), acts.end());
            if (acts.empty()) throw ValidationError("state without actions in value iteration");
            q.resize(acts.size());
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < acts.size(); ++k) {
                q[k] = bellman_q(model, sid, acts[k], prev);
                best = std::max(best, q[k]);
            }
            auto& opt = hv.optimal[static_cast<std::size_t>(i)][s];
            for (std::size_t k = 0; k < acts.size(); ++k)
                if (nearly_equal(q[k], best)) opt.push_back(acts[k]);
            hv.value[static_cast<std::size_t>(i)][s] = best;
        }
    }
    return hv;
}

// ---------------------------------------------------------------------------
// Unfolding

/// Tree-shaped MDP T(M, s0, H); state i of `mdp` is the path `paths[i]`.
struct Unfolding {
    Mdp mdp;
    std::vector<Path> paths;
    std::vector<int> depth;
    int horizon = 0;
    StateId root() const { return 0; }
};

inline constexpr std::size_t kDefaultNodeCap = 200000;

/// Unfolds mdp from s0 to depth H. Depth-H leaves self-loop with reward 0 and
/// keep R_T(last(p)). Node ids are assigned breadth first.
inline Unfolding unfold(const Mdp& mdp, StateId s0, int horizon, std::size_t node_cap = kDefaultNodeCap) {
    if (s0 < 0 || static_cast<std::size_t>(s0) >= mdp.num_states()) throw ValidationError("unfold: bad root state");
    if (horizon < 0) throw ValidationError("unfold: negative horizon");

    struct Edge {
        std::vector<Outcome<StateId>> dist;
        double reward;
    };
    std::vector<Path> paths{Path(s0)};
    std::vector<int> depth{0};
    std::vector<std::vector<Edge>> edges;  // per node, per action

    for (std::size_t node = 0; node < paths.size(); ++node) {
        std::vector<Edge> out(mdp.num_actions());
        const int d = depth[node];
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const auto act = static_cast<Action>(a);
            if (d == horizon) {
                out[a] = Edge{{{static_cast<StateId>(node), 1.0}}, 0.0};
                continue;
            }
            const StateId last = paths[node].last();
            Edge e{{}, mdp.reward(last, act)};
            for (const auto& o : mdp.transitions(last, act)) {
                if (paths.size() >= node_cap) throw CapacityError("unfolding exceeds node cap");
                e.dist.push_back({static_cast<StateId>(paths.size()), o.prob});
                paths.push_back(paths[node].extended(act, o.state));
                depth.push_back(d + 1);
            }
            out[a] = std::move(e);
        }
        edges.push_back(std::move(out));
    }

    Unfolding u;
    u.horizon = horizon;
    u.mdp = Mdp(paths.size(), mdp.num_actions());
    for (std::size_t node = 0; node < paths.size(); ++node) {
        const auto id = static_cast<StateId>(node);
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            u.mdp.set_transition(id, static_cast<Action>(a), edges[node][a].dist, edges[node][a].reward);
        u.mdp.set_terminal_reward(id, mdp.terminal_reward(paths[node].last()));
    }
    u.paths = std::move(paths);
    u.depth = std::move(depth);
    return u;
}

// ---------------------------------------------------------------------------
// Aperiodic transformation

/// M_alpha: P(s,a)(s) = alpha + (1-alpha) P(s,a)(s), other entries scaled by
/// (1-alpha); rewards unchanged.
inline Mdp aperiodic_transform(const Mdp& mdp, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    Mdp out(mdp.num_states(), mdp.num_actions());
    out.state_names = mdp.state_names;
    out.action_names = mdp.action_names;
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        const auto sid = static_cast<StateId>(s);
        out.set_terminal_reward(sid, mdp.terminal_reward(sid));
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const auto act = static_cast<Action>(a);
            std::vector<Outcome<StateId>> d;
            bool has_self = false;
            for (const auto& o : mdp.transitions(sid, act)) {
                if (o.state == sid) {
                    d.push_back({sid, alpha + (1.0 - alpha) * o.prob});
                    has_self = true;
                } else {
                    d.push_back({o.state, (1.0 - alpha) * o.prob});
                }
            }
            if (!has_self) d.push_back({sid, alpha});
            out.set_transition(sid, act, std::move(d), mdp.reward(sid, act));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reward normalization

/// Affine map raw -> (raw - offset) / scale applied to whole-path rewards.
/// Step rewards are divided by scale; the offset lands on the terminal reward,
/// which every path carries exactly once.
struct RewardNormalization {
    double offset = 0.0;
    double scale = 1.0;

    double apply(double raw_total) const { return (raw_total - offset) / scale; }
    double invert(double normalized) const { return normalized * scale + offset; }
    double step(double raw_step) const { return raw_step / scale; }
    double terminal(double raw_terminal) const { return (raw_terminal - offset) / scale; }

    bool is_identity() const { return offset == 0.0 && scale == 1.0; }

    /// Conservative interval bounds over every path of length at most H.
    static RewardNormalization from_bounds(const RewardBounds& b, int horizon) {
        const double h = static_cast<double>(horizon);
        const double lo = std::min(0.0, h * b.step_min) + b.terminal_min;
        const double hi = std::max(0.0, h * b.step_max) + b.terminal_max;
        if (lo >= 0.0 && hi <= 1.0) return {0.0, 1.0};
        if (hi - lo <= 0.0) return {lo - 0.5, 1.0};
        return {lo, hi - lo};
    }
};

inline std::pair<Mdp, RewardNormalization> normalize_rewards(const Mdp& mdp, int horizon) {
    if (horizon < 0) throw ValidationError("normalize_rewards: negative horizon");
    const auto norm = RewardNormalization::from_bounds(mdp.reward_bounds(), horizon);
    Mdp out = mdp;
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        const auto sid = static_cast<StateId>(s);
        out.set_terminal_reward(sid, norm.terminal(mdp.terminal_reward(sid)));
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            out.set_reward(sid, static_cast<Action>(a), norm.step(mdp.reward(sid, static_cast<Action>(a))));
    }
    return {std::move(out), norm};
}

// ---------------------------------------------------------------------------
// Text format
//
//   state <id>
//   terminal <id> <r>
//   edge <s> <a> <s'> <prob> <reward>
//
// Ids are arbitrary tokens; '#' starts a comment. All edges of one (s, a)
// must carry the same reward.

inline Mdp parse_mdp_text(std::istream& in) {
    std::map<std::string, int> state_ids, action_ids;
    std::vector<std::string> state_names, action_names;
    struct EdgeLine {
        int s, a, t;
        double p, r;
        int line;
    };
    std::vector<EdgeLine> edges;
    std::vector<std::pair<int, double>> terminals;

    auto intern = [](std::map<std::string, int>& ids, std::vector<std::string>& names, const std::string& tok) {
        auto [it, inserted] = ids.emplace(tok, static_cast<int>(names.size()));
        if (inserted) names.push_back(tok);
        return it->second;
    };

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        auto fail = [&](const std::string& why) {
            throw ValidationError("mdp text line " + std::to_string(lineno) + ": " + why);
        };
        if (kw == "state") {
            std::string id;
            if (!(ls >> id)) fail("expected state id");
            intern(state_ids, state_names, id);
        } else if (kw == "terminal") {
            std::string id;
            double r;
            if (!(ls >> id >> r)) fail("expected: terminal <id> <reward>");
            terminals.emplace_back(intern(state_ids, state_names, id), r);
        } else if (kw == "edge") {
            std::string s, a, t;
            double p, r;
            if (!(ls >> s >> a >> t >> p >> r)) fail("expected: edge <s> <a> <s'> <prob> <reward>");
            edges.push_back({intern(state_ids, state_names, s), intern(action_ids, action_names, a),
                             intern(state_ids, state_names, t), p, r, lineno});
        } else {
            fail("unknown keyword '" + kw + "'");
        }
        std::string extra;
        if (ls >> extra) fail("trailing token '" + extra + "'");
    }

    Mdp mdp(state_names.size(), action_names.size());
    std::vector<std::vector<Outcome<StateId>>> dists(state_names.size() * action_names.size());
    std::vector<std::optional<double>> rewards(dists.size());
    for (const auto& e : edges) {
        const std::size_t k = static_cast<std::size_t>(e.s) * action_names.size() + static_cast<std::size_t>(e.a);
        if (rewards[k] && *rewards[k] != e.r)
            throw ValidationError("mdp text line " + std::to_string(e.line) + ": inconsistent reward for (" +
                                  state_names[static_cast<std::size_t>(e.s)] + ", " +
                                  action_names[static_cast<std::size_t>(e.a)] + ")");
        rewards[k] = e.r;
        dists[k].push_back({e.t, e.p});
    }
    for (std::size_t s = 0; s < state_names.size(); ++s)
        for (std::size_t a = 0; a < action_names.size(); ++a) {
            const std::size_t k = s * action_names.size() + a;
            mdp.set_transition(static_cast<StateId>(s), static_cast<Action>(a), dists[k], rewards[k].value_or(0.0));
        }
    for (const auto& [s, r] : terminals) mdp.set_terminal_reward(s, r);
    mdp.state_names = std::move(state_names);
    mdp.action_names = std::move(action_names);
    mdp.validate();
    return mdp;
}

inline Mdp parse_mdp_text(const std::string& text) {
    std::istringstream in(text);
    return parse_mdp_text(in);
}

inline void write_mdp_text(std::ostream& out, const Mdp& mdp) {
    auto sname = [&](std::size_t s) {
        return s < mdp.state_names.size() ? mdp.state_names[s] : "s" + std::to_string(s);
    };
    auto aname = [&](std::size_t a) {
        return a < mdp.action_names.size() ? mdp.action_names[a] : "a" + std::to_string(a);
    };
    std::ostringstream num;
    num.precision(17);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) out << "state " << sname(s) << '\n';
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        num.str("");
        num << mdp.terminal_reward(static_cast<StateId>(s));
        out << "terminal " << sname(s) << ' ' << num.str() << '\n';
    }
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            for (const auto& o : mdp.transitions(static_cast<StateId>(s), static_cast<Action>(a))) {
                num.str("");
                num << o.prob << ' ' << mdp.reward(static_cast<StateId>(s), static_cast<Action>(a));
                out << "edge " << sname(s) << ' ' << aname(a) << ' ' << sname(static_cast<std::size_t>(o.state))
                    << ' ' << num.str() << '\n';
            }
}

}  // namespace symadv
