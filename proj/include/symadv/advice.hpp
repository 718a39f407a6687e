#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "symadv/errors.hpp"
#include "symadv/mdp.hpp"
#include "symadv/path_encoding.hpp"
#include "symadv/solver.hpp"

namespace symadv {

/// A decidable property of length-`horizon` paths.
template <class S>
struct Advice {
    int horizon = 0;
    std::function<bool(const BasicPath<S>&)> evaluate;
    /// Whether p.q satisfies the advice depends only on last(p) and q once p
    /// itself is a satisfiable prefix (true for safety). Enables memoization.
    bool state_based = false;
    /// Optional CNF form rooted at a fixed start state.
    std::optional<AdviceCnf<S>> cnf;

    static Advice top(int h) { return {h, [](const BasicPath<S>&) { return true; }, true, std::nullopt}; }
    static Advice bottom(int h) { return {h, [](const BasicPath<S>&) { return false; }, true, std::nullopt}; }
};

/// Explicit tree of all paths of length <= horizon extending a root prefix.
/// Node ids are breadth first; per node, branches follow the canonical
/// action order and children follow the model's outcome order.
template <class S>
struct PathTree {
    struct Branch {
        Action action = 0;
        double reward = 0.0;
        std::vector<std::pair<std::size_t, double>> children;  // node id, probability
    };
    int horizon = 0;
    std::vector<BasicPath<S>> paths;
    std::vector<std::size_t> parent;
    std::vector<std::vector<Branch>> branches;  // empty at depth horizon

    std::size_t size() const { return paths.size(); }
    int depth(std::size_t node) const { return static_cast<int>(paths[node].length()); }
    bool is_leaf(std::size_t node) const { return depth(node) >= horizon; }
};

template <DecisionModel M>
PathTree<typename M::State> build_path_tree(const M& model, const BasicPath<typename M::State>& root, int horizon,
                                            std::size_t node_cap = kDefaultNodeCap) {
    using S = typename M::State;
    if (static_cast<int>(root.length()) > horizon) throw ValidationError("path tree: root longer than horizon");
    PathTree<S> t;
    t.horizon = horizon;
    t.paths.push_back(root);
    t.parent.push_back(SIZE_MAX);
    for (std::size_t node = 0; node < t.paths.size(); ++node) {
        std::vector<typename PathTree<S>::Branch> out;
        if (static_cast<int>(t.paths[node].length()) < horizon) {
            const S last = t.paths[node].last();
            std::vector<Action> acts = model.actions(last);
            std::sort(acts.begin(), acts.end());
            for (Action a : acts) {
                typename PathTree<S>::Branch b;
                b.action = a;
                b.reward = model.reward(last, a);
                for (const auto& o : model.transitions(last, a)) {
                    if (t.paths.size() >= node_cap) throw CapacityError("path tree exceeds node cap");
                    b.children.emplace_back(t.paths.size(), o.prob);
                    t.paths.push_back(t.paths[node].extended(a, o.state));
                    t.parent.push_back(node);
                }
                out.push_back(std::move(b));
            }
        }
        t.branches.push_back(std::move(out));
    }
    return t;
}

/// sat[n]: some length-H extension of node n satisfies the advice.
template <class S>
std::vector<bool> satisfiable_nodes(const PathTree<S>& t, const Advice<S>& adv) {
    std::vector<bool> sat(t.size(), false);
    for (std::size_t n = t.size(); n-- > 0;) {
        if (t.is_leaf(n)) {
            sat[n] = adv.evaluate(t.paths[n]);
            continue;
        }
        for (const auto& b : t.branches[n])
            for (const auto& [c, p] : b.children) sat[n] = sat[n] || sat[c];
    }
    return sat;
}

/// Backward induction: win[n] and, per node, the actions whose every
/// successor is winning.
template <class S>
struct Attractor {
    std::vector<bool> win;
    std::vector<std::vector<Action>> kept;
};

template <class S>
Attractor<S> compute_attractor(const PathTree<S>& t, const Advice<S>& adv) {
    Attractor<S> r;
    r.win.assign(t.size(), false);
    r.kept.assign(t.size(), {});
    for (std::size_t n = t.size(); n-- > 0;) {
        if (t.is_leaf(n)) {
            r.win[n] = adv.evaluate(t.paths[n]);
            continue;
        }
        for (const auto& b : t.branches[n]) {
            const bool all = std::all_of(b.children.begin(), b.children.end(), [&](const auto& c) { return r.win[c.first]; });
            if (all) r.kept[n].push_back(b.action);
        }
        r.win[n] = !r.kept[n].empty();
    }
    return r;
}

// ---------------------------------------------------------------------------
// sigma / tau

template <class S>
struct SigmaTau {
    std::vector<Action> actions;                       // sigma(p), canonical order
    std::map<Action, std::vector<S>> successors;       // tau(p, a) for a in sigma(p)
    bool via_cnf = false;
};

template <DecisionModel M>
SigmaTau<typename M::State> sigma_tau_of_advice(const Advice<typename M::State>& adv, const M& model,
                                                const BasicPath<typename M::State>& p,
                                                std::size_t node_cap = kDefaultNodeCap) {
    using S = typename M::State;
    SigmaTau<S> out;
    std::vector<Action> acts = model.actions(p.last());
    std::sort(acts.begin(), acts.end());
    if (static_cast<int>(p.length()) >= adv.horizon) {
        for (Action a : acts) {
            out.actions.push_back(a);
            for (const auto& o : model.transitions(p.last(), a)) out.successors[a].push_back(o.state);
        }
        return out;
    }
    try {
        const auto t = build_path_tree(model, p, adv.horizon, node_cap);
        const auto sat = satisfiable_nodes(t, adv);
        for (const auto& b : t.branches[0]) {
            std::vector<S> succ;
            for (const auto& [c, prob] : b.children)
                if (sat[c]) succ.push_back(t.paths[c].last());
            if (!succ.empty()) {
                out.actions.push_back(b.action);
                out.successors[b.action] = std::move(succ);
            }
        }
        return out;
    } catch (const CapacityError&) {
        if (!adv.cnf) throw CapacityError("sigma/tau: unfolding exceeds node cap and the advice has no CNF form");
    }
    out.via_cnf = true;
    DpllSolver solver(adv.cnf->formula);
    for (Action a : acts) {
        std::vector<S> succ;
        for (const auto& o : model.transitions(p.last(), a)) {
            const auto lits = adv.cnf->encoding.encode(p.extended(a, o.state));
            if (solver.solve(lits)) succ.push_back(o.state);
        }
        if (!succ.empty()) {
            out.actions.push_back(a);
            out.successors[a] = std::move(succ);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Strategies

template <class S>
struct NondetStrategy {
    /// sigma(p) on every compatible path shorter than the horizon.
    std::unordered_map<BasicPath<S>, std::vector<Action>, PathHash<S>> player;
    int horizon = 0;

    const std::vector<Action>* at(const BasicPath<S>& p) const {
        auto it = player.find(p);
        return it == player.end() ? nullptr : &it->second;
    }
    /// tau(p, a): for an extracted strategy every successor is allowed.
    template <DecisionModel M>
    std::vector<S> environment(const M& model, const BasicPath<S>& p, Action a) const {
        std::vector<S> out;
        for (const auto& o : model.transitions(p.last(), a)) out.push_back(o.state);
        return out;
    }
};

/// Greatest strongly enforceable sub-advice of `adv` from s0, as a strategy;
/// none when it cannot be enforced from s0.
template <DecisionModel M>
std::optional<NondetStrategy<typename M::State>> extract_strongly_enforceable(const Advice<typename M::State>& adv,
                                                                              const M& model,
                                                                              const typename M::State& s0,
                                                                              std::size_t node_cap = kDefaultNodeCap) {
    using S = typename M::State;
    if (adv.horizon < 1) throw ValidationError("extract: horizon must be >= 1");
    const auto t = build_path_tree(model, BasicPath<S>(s0), adv.horizon, node_cap);
    const auto att = compute_attractor(t, adv);
    if (!att.win[0]) return std::nullopt;
    NondetStrategy<S> st;
    st.horizon = adv.horizon;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const std::size_t n = stack.back();
        stack.pop_back();
        if (t.is_leaf(n)) continue;
        st.player.emplace(t.paths[n], att.kept[n]);
        for (const auto& b : t.branches[n])
            if (std::binary_search(att.kept[n].begin(), att.kept[n].end(), b.action))
                for (const auto& [c, p] : b.children) stack.push_back(c);
    }
    return st;
}

/// The advice "p is compatible with the strategy".
template <class S>
Advice<S> advice_from_strategy(const NondetStrategy<S>& st) {
    Advice<S> adv;
    adv.horizon = st.horizon;
    adv.evaluate = [st](const BasicPath<S>& p) {
        for (std::size_t t = 0; t < p.length(); ++t) {
            const auto* acts = st.at(p.prefix(t));
            if (!acts || !std::binary_search(acts->begin(), acts->end(), p.actions[t])) return false;
        }
        return true;
    };
    return adv;
}

/// True iff some nondeterministic strategy produces exactly the advice's
/// path set and never dead-ends on a compatible prefix.
template <DecisionModel M>
bool verify_strong_enforceability(const Advice<typename M::State>& adv, const M& model, const typename M::State& s0,
                                  std::size_t node_cap = kDefaultNodeCap) {
    using S = typename M::State;
    const auto t = build_path_tree(model, BasicPath<S>(s0), adv.horizon, node_cap);
    const auto att = compute_attractor(t, adv);
    if (!att.win[0]) return false;
    std::size_t sat_leaves = 0;
    for (std::size_t n = 0; n < t.size(); ++n)
        if (t.is_leaf(n) && att.win[n]) ++sat_leaves;
    std::size_t reached = 0;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const std::size_t n = stack.back();
        stack.pop_back();
        if (t.is_leaf(n)) {
            ++reached;
            continue;
        }
        for (const auto& b : t.branches[n])
            if (std::binary_search(att.kept[n].begin(), att.kept[n].end(), b.action))
                for (const auto& [c, p] : b.children) stack.push_back(c);
    }
    return reached == sat_leaves;
}

// ---------------------------------------------------------------------------
// Pruned MDP

/// The unfolding restricted to advice-compatible paths. States are numbered
/// breadth first; `unfolding_node[s]` maps back to the unfolding.
class PrunedMdp {
public:
    using State = StateId;

    std::size_t num_states() const { return actions_.size(); }
    const std::vector<Action>& actions(State s) const { return actions_[static_cast<std::size_t>(s)]; }
    const std::vector<Outcome<State>>& transitions(State s, Action a) const {
        const auto& acts = actions_[static_cast<std::size_t>(s)];
        const auto it = std::lower_bound(acts.begin(), acts.end(), a);
        if (it == acts.end() || *it != a) throw ValidationError("pruned mdp: action not available");
        return trans_[static_cast<std::size_t>(s)][static_cast<std::size_t>(it - acts.begin())];
    }
    double reward(State s, Action a) const {
        const auto& acts = actions_[static_cast<std::size_t>(s)];
        const auto it = std::lower_bound(acts.begin(), acts.end(), a);
        if (it == acts.end() || *it != a) throw ValidationError("pruned mdp: action not available");
        return rewards_[static_cast<std::size_t>(s)][static_cast<std::size_t>(it - acts.begin())];
    }
    double terminal_reward(State s) const { return terminal_[static_cast<std::size_t>(s)]; }
    RewardBounds reward_bounds() const {
        RewardBounds b{0, 0, 0, 0};
        bool first = true;
        for (std::size_t s = 0; s < actions_.size(); ++s)
            for (double r : rewards_[s]) {
                b.step_min = first ? r : std::min(b.step_min, r);
                b.step_max = first ? r : std::max(b.step_max, r);
                first = false;
            }
        for (std::size_t s = 0; s < terminal_.size(); ++s) {
            b.terminal_min = s ? std::min(b.terminal_min, terminal_[s]) : terminal_[s];
            b.terminal_max = s ? std::max(b.terminal_max, terminal_[s]) : terminal_[s];
        }
        return b;
    }

    std::vector<StateId> unfolding_node;
    std::size_t renormalized = 0;  // distributions that lost mass and were rescaled

private:
    friend PrunedMdp prune(const Unfolding&, const Advice<StateId>&);
    std::vector<std::vector<Action>> actions_;
    std::vector<std::vector<std::vector<Outcome<State>>>> trans_;
    std::vector<std::vector<double>> rewards_;
    std::vector<double> terminal_;
};

/// The pruned unfolding: drops every action and successor that no
/// satisfying path goes through; distributions that lost mass are rescaled.
inline PrunedMdp prune(const Unfolding& u, const Advice<StateId>& adv) {
    const std::size_t n = u.paths.size();
    std::vector<bool> sat(n, false);
    for (std::size_t node = n; node-- > 0;) {
        if (u.depth[node] >= u.horizon) {
            sat[node] = adv.evaluate(u.paths[node]);
            continue;
        }
        for (Action a : u.mdp.actions(static_cast<StateId>(node)))
            for (const auto& o : u.mdp.transitions(static_cast<StateId>(node), a))
                if (sat[static_cast<std::size_t>(o.state)]) sat[node] = true;
    }
    if (!sat[0]) throw ValidationError("prune: advice is unsatisfiable from the root");

    std::vector<StateId> id(n, -1);
    PrunedMdp out;
    for (std::size_t node = 0; node < n; ++node)
        if (sat[node]) {
            id[node] = static_cast<StateId>(out.unfolding_node.size());
            out.unfolding_node.push_back(static_cast<StateId>(node));
        }
    const std::size_t k = out.unfolding_node.size();
    out.actions_.resize(k);
    out.trans_.resize(k);
    out.rewards_.resize(k);
    out.terminal_.resize(k);
    for (std::size_t s = 0; s < k; ++s) {
        const auto node = out.unfolding_node[s];
        out.terminal_[s] = u.mdp.terminal_reward(node);
        const bool leaf = u.depth[static_cast<std::size_t>(node)] >= u.horizon;
        for (Action a : u.mdp.actions(node)) {
            const auto& dist = u.mdp.transitions(node, a);
            std::vector<Outcome<StateId>> kept;
            double mass = 0.0;
            for (const auto& o : dist)
                if (leaf || sat[static_cast<std::size_t>(o.state)]) {
                    kept.push_back({leaf ? static_cast<StateId>(s) : id[static_cast<std::size_t>(o.state)], o.prob});
                    mass += o.prob;
                }
            if (kept.empty()) continue;
            if (kept.size() != dist.size()) {
                for (auto& o : kept) o.prob /= mass;
                ++out.renormalized;
            }
            out.actions_[s].push_back(a);
            out.trans_[s].push_back(std::move(kept));
            out.rewards_[s].push_back(u.mdp.reward(node, a));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Optimality assumption

struct OptimalityVerdict {
    bool all_optimal = true;   // every optimal action along optimal plays is allowed
    bool some_optimal = true;  // some optimal strategy stays inside the advice
};

/// Checks both readings of the optimality assumption from every state in
/// `starts` (all states when empty).
inline OptimalityVerdict optimality_verdicts(const Advice<StateId>& adv, const Mdp& mdp, std::vector<StateId> starts = {},
                                             std::size_t node_cap = kDefaultNodeCap) {
    if (starts.empty())
        for (std::size_t s = 0; s < mdp.num_states(); ++s) starts.push_back(static_cast<StateId>(s));
    const int H = adv.horizon;
    OptimalityVerdict v;
    for (StateId s0 : starts) {
        const Unfolding u = unfold(mdp, s0, H, node_cap);
        const auto hv = value_iteration(u.mdp, H);
        const std::size_t n = u.paths.size();
        std::vector<bool> sat(n, false);
        for (std::size_t node = n; node-- > 0;) {
            if (u.depth[node] >= H) {
                sat[node] = adv.evaluate(u.paths[node]);
                continue;
            }
            for (Action a : u.mdp.actions(static_cast<StateId>(node)))
                for (const auto& o : u.mdp.transitions(static_cast<StateId>(node), a))
                    if (sat[static_cast<std::size_t>(o.state)]) sat[node] = true;
        }
        auto allowed = [&](std::size_t node, Action a) {
            for (const auto& o : u.mdp.transitions(static_cast<StateId>(node), a))
                if (sat[static_cast<std::size_t>(o.state)]) return true;
            return false;
        };
        auto opt = [&](std::size_t node) -> const std::vector<Action>& {
            return hv.opt_actions(static_cast<StateId>(node), H - u.depth[node]);
        };

        // all-optimal: along every optimal play, opt(p) is inside sigma(p)
        std::vector<std::size_t> stack{0};
        while (!stack.empty() && v.all_optimal) {
            const std::size_t node = stack.back();
            stack.pop_back();
            if (u.depth[node] >= H) continue;
            for (Action a : opt(node)) {
                if (!allowed(node, a)) {
                    v.all_optimal = false;
                    break;
                }
                for (const auto& o : u.mdp.transitions(static_cast<StateId>(node), a))
                    stack.push_back(static_cast<std::size_t>(o.state));
            }
        }

        // some-optimal: good(p) iff some allowed optimal action leads only to good nodes
        std::vector<bool> good(n, false);
        for (std::size_t node = n; node-- > 0;) {
            if (u.depth[node] >= H) {
                good[node] = true;
                continue;
            }
            for (Action a : opt(node)) {
                if (!allowed(node, a)) continue;
                bool ok = true;
                for (const auto& o : u.mdp.transitions(static_cast<StateId>(node), a))
                    ok = ok && good[static_cast<std::size_t>(o.state)];
                if (ok) {
                    good[node] = true;
                    break;
                }
            }
        }
        v.some_optimal = v.some_optimal && good[0];
    }
    return v;
}

inline bool check_optimality_assumption(const Advice<StateId>& adv, const Mdp& mdp, std::vector<StateId> starts = {},
                                        std::size_t node_cap = kDefaultNodeCap) {
    return optimality_verdicts(adv, mdp, std::move(starts), node_cap).all_optimal;
}

}  // namespace symadv
