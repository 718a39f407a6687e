#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "symadv/errors.hpp"
#include "symadv/mdp.hpp"
#include "symadv/random.hpp"

namespace symadv {

/// Successor draw used by search and rollouts. Models may provide a cheaper
/// `sample_next(s, a, rng)` with the same distribution as transitions(s, a).
template <DecisionModel M>
typename M::State draw_successor(const M& model, const typename M::State& s, Action a, Rng& rng) {
    if constexpr (requires { { model.sample_next(s, a, rng) } -> std::convertible_to<typename M::State>; })
        return model.sample_next(s, a, rng);
    else
        return sample_successor(model, s, a, rng);
}

enum class Recommendation { by_value, by_visits };

struct MctsConfig {
    int horizon = 10;
    std::uint64_t iterations = 100;
    double uct_c = 1.0 / std::sqrt(2.0);
    int samples = 1;  // rollouts averaged per simulation
    int rollout_retry_bound = 20;
    std::uint64_t seed = 0;
    Recommendation recommend = Recommendation::by_value;
    /// Overrides the interval normalization derived from the model's bounds.
    std::optional<RewardNormalization> normalization;

    void validate() const {
        if (horizon < 0) throw ValidationError("mcts: horizon must be non-negative");
        if (iterations < 1) throw ValidationError("mcts: iterations must be positive");
        if (!(uct_c > 0.0)) throw ValidationError("mcts: uct constant must be positive");
        if (samples < 1) throw ValidationError("mcts: samples per simulation must be >= 1");
        if (rollout_retry_bound < 1) throw ValidationError("mcts: rollout retry bound must be >= 1");
    }
};

template <DecisionModel M>
RewardNormalization effective_normalization(const M& model, const MctsConfig& cfg) {
    if (cfg.normalization) return *cfg.normalization;
    return RewardNormalization::from_bounds(model.reward_bounds(), cfg.horizon);
}

// ---------------------------------------------------------------------------
// Tree

template <class S>
struct ActionEdge {
    Action action = 0;
    std::uint64_t visits = 0;
    double total = 0.0;
    std::vector<std::size_t> children;  // node ids, in order of creation

    double value() const { return visits ? total / static_cast<double>(visits) : 0.0; }
};

template <class S>
struct SearchNode {
    S state;
    std::size_t parent = SIZE_MAX;
    std::size_t parent_edge = SIZE_MAX;  // index into parent's edges
    int depth = 0;
    std::uint64_t visits = 0;
    double total = 0.0;
    double simulation = 0.0;  // value drawn when the node entered the tree
    std::vector<ActionEdge<S>> edges;  // the (filtered) action set, canonical order

    double value() const { return visits ? total / static_cast<double>(visits) : 0.0; }
};

template <class S>
class SearchTree {
public:
    std::vector<SearchNode<S>> nodes;

    const SearchNode<S>& root() const { return nodes.front(); }
    bool empty() const { return nodes.empty(); }

    BasicPath<S> path_to(std::size_t id) const {
        std::vector<std::size_t> chain;
        for (std::size_t n = id; n != SIZE_MAX; n = nodes[n].parent) chain.push_back(n);
        std::reverse(chain.begin(), chain.end());
        BasicPath<S> p(nodes[chain.front()].state);
        for (std::size_t i = 1; i < chain.size(); ++i) {
            const auto& child = nodes[chain[i]];
            p.push(nodes[child.parent].edges[child.parent_edge].action, child.state);
        }
        return p;
    }
};

template <class S>
using SelectionFilter = std::function<std::vector<Action>(const BasicPath<S>&)>;

/// Simulation phase contract: a value in [0, 1] for the node's path.
template <class S>
using SimulationPolicy = std::function<double(const BasicPath<S>&, Rng&)>;

struct TraceRecord {
    std::uint64_t iteration = 0;
    std::vector<std::pair<Action, std::size_t>> steps;  // action, child position under that action
    double leaf_value = 0.0;
    std::uint64_t root_visits = 0;
    double root_value = 0.0;
};

using TraceSink = std::function<void(const TraceRecord&)>;

/// One JSON object per line: {"iter":..,"path":[[a,k],..],"leaf":..,"root_n":..,"root_v":..}
inline std::string format_trace_line(const TraceRecord& r) {
    std::ostringstream os;
    os.precision(10);
    os << "{\"iter\":" << r.iteration << ",\"path\":[";
    for (std::size_t i = 0; i < r.steps.size(); ++i)
        os << (i ? "," : "") << '[' << r.steps[i].first << ',' << r.steps[i].second << ']';
    os << "],\"leaf\":" << r.leaf_value << ",\"root_n\":" << r.root_visits << ",\"root_v\":" << r.root_value << '}';
    return os.str();
}

struct RootActionStats {
    Action action = 0;
    std::uint64_t visits = 0;
    double value = 0.0;
};

template <class S>
struct SearchResult {
    Action recommended = 0;
    Action by_value = 0;
    Action by_visits = 0;
    std::vector<RootActionStats> root_actions;
    std::uint64_t root_visits = 0;
    double root_value = 0.0;
    RewardNormalization normalization;
    SearchTree<S> tree;
};

// ---------------------------------------------------------------------------
// Phases

/// UCT choice among node.edges: unexplored edges first in canonical order,
/// otherwise argmax V(p,a) + C sqrt(ln N(p) / N(p,a)); ties go to the
/// earlier action.
template <class S>
std::size_t select_action(const SearchNode<S>& node, double uct_c) {
    if (node.edges.empty()) throw ContractViolation("selection reached a node with an empty action set");
    for (std::size_t i = 0; i < node.edges.size(); ++i)
        if (node.edges[i].visits == 0) return i;
    const double log_n = std::log(static_cast<double>(std::max<std::uint64_t>(node.visits, 1)));
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.edges.size(); ++i) {
        const auto& e = node.edges[i];
        const double score = e.value() + uct_c * std::sqrt(log_n / static_cast<double>(e.visits));
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

/// Selection step from an in-tree node: the UCT action and a freshly sampled
/// successor state.
template <DecisionModel M>
std::pair<std::size_t, typename M::State> select_descend(const M& model, const SearchNode<typename M::State>& node,
                                                         const MctsConfig& cfg, Rng& rng) {
    const std::size_t ei = select_action(node, cfg.uct_c);
    return {ei, draw_successor(model, node.state, node.edges[ei].action, rng)};
}

/// Folds one iteration's value into every node and edge along `steps`.
/// steps[k] = (node id at depth k, edge index taken); leaf_value is the value
/// of the node reached after the last step. Rewards are already normalized.
template <class S>
void backpropagate(SearchTree<S>& tree, const std::vector<std::pair<std::size_t, std::size_t>>& steps,
                   const std::vector<double>& step_rewards, double leaf_value) {
    double acc = leaf_value;
    for (std::size_t k = steps.size(); k-- > 0;) {
        acc += step_rewards[k];
        auto& node = tree.nodes[steps[k].first];
        auto& edge = node.edges[steps[k].second];
        node.visits += 1;
        node.total += acc;
        edge.visits += 1;
        edge.total += acc;
    }
}

/// Checks the bookkeeping identities on every internal node:
/// N(p) = 1 + sum_a N(p,a), N(p,a) = sum_s N(p.as),
/// total(p) = sim(p) + sum_a total(p,a) and
/// total(p,a) = sum_s [N(p.as) R(p,a) + total(p.as)].
/// Returns an empty string when all hold, else a description of the first
/// violation.
template <DecisionModel M>
std::string audit_tree(const M& model, const SearchTree<typename M::State>& tree, const RewardNormalization& norm,
                       int horizon, double tol = 1e-6) {
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        const auto& n = tree.nodes[id];
        if (n.depth >= horizon || n.visits == 0) continue;
        std::uint64_t edge_visits = 0;
        double edge_total = 0.0;
        for (const auto& e : n.edges) {
            edge_visits += e.visits;
            edge_total += e.total;
            std::uint64_t child_visits = 0;
            double child_total = 0.0;
            const double r = norm.step(model.reward(n.state, e.action));
            for (std::size_t c : e.children) {
                child_visits += tree.nodes[c].visits;
                child_total += static_cast<double>(tree.nodes[c].visits) * r + tree.nodes[c].total;
            }
            if (child_visits != e.visits) return "node " + std::to_string(id) + ": N(p,a) != sum of child visits";
            if (std::abs(child_total - e.total) > tol) return "node " + std::to_string(id) + ": total(p,a) mismatch";
        }
        if (n.visits != 1 + edge_visits) return "node " + std::to_string(id) + ": N(p) != 1 + sum N(p,a)";
        if (std::abs(n.total - (n.simulation + edge_total)) > tol)
            return "node " + std::to_string(id) + ": total(p) mismatch";
    }
    return {};
}

// ---------------------------------------------------------------------------
// Search

namespace detail {

template <DecisionModel M>
std::vector<ActionEdge<typename M::State>> make_edges(const M& model, const BasicPath<typename M::State>& path,
                                                      const SelectionFilter<typename M::State>& filter) {
    std::vector<Action> legal = model.actions(path.last());
    std::sort(legal.begin(), legal.end());
    std::vector<Action> chosen;
    if (filter) {
        std::vector<Action> allowed = filter(path);
        std::sort(allowed.begin(), allowed.end());
        std::set_intersection(legal.begin(), legal.end(), allowed.begin(), allowed.end(), std::back_inserter(chosen));
        if (chosen.empty())
            throw ContractViolation("selection filter returned no legal action at depth " +
                                    std::to_string(path.length()) + " (advice not strongly enforceable)");
    } else {
        chosen = std::move(legal);
    }
    std::vector<ActionEdge<typename M::State>> edges(chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) edges[i].action = chosen[i];
    return edges;
}

inline double checked_simulation_value(double v) {
    if (!(v >= -1e-9 && v <= 1.0 + 1e-9))
        throw ContractViolation("simulation value " + std::to_string(v) + " outside [0, 1]");
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace detail

/// MCTS over the finite-horizon unfolding of `model` from s0. Runs exactly
/// cfg.iterations iterations; the first one simulates the root.
template <DecisionModel M>
SearchResult<typename M::State> mcts_search(const M& model, const typename M::State& s0, const MctsConfig& cfg,
                                            const SelectionFilter<typename M::State>& filter,
                                            const SimulationPolicy<typename M::State>& simulate,
                                            const TraceSink& trace = {}) {
    using S = typename M::State;
    cfg.validate();
    const RewardNormalization norm = effective_normalization(model, cfg);
    Rng rng(cfg.seed);

    SearchResult<S> result;
    result.normalization = norm;
    SearchTree<S>& tree = result.tree;

    auto new_node = [&](S state, std::size_t parent, std::size_t parent_edge, int depth) {
        SearchNode<S> n;
        n.state = std::move(state);
        n.parent = parent;
        n.parent_edge = parent_edge;
        n.depth = depth;
        tree.nodes.push_back(std::move(n));
        const std::size_t id = tree.nodes.size() - 1;
        if (depth < cfg.horizon) {
            auto edges = detail::make_edges(model, tree.path_to(id), filter);
            tree.nodes[id].edges = std::move(edges);
        }
        return id;
    };

    // Value of a node entering the tree: exact terminal value at depth H,
    // otherwise the simulation policy.
    auto first_value = [&](std::size_t id) {
        auto& n = tree.nodes[id];
        double v;
        if (n.depth >= cfg.horizon)
            v = norm.terminal(model.terminal_reward(n.state));
        else
            v = detail::checked_simulation_value(simulate(tree.path_to(id), rng));
        auto& m = tree.nodes[id];
        m.visits = 1;
        m.total = v;
        m.simulation = v;
        return v;
    };

    std::vector<std::pair<std::size_t, std::size_t>> steps;
    std::vector<double> rewards;
    TraceRecord rec;

    for (std::uint64_t it = 1; it <= cfg.iterations; ++it) {
        steps.clear();
        rewards.clear();
        double leaf_value;
        std::size_t final_node = 0;
        if (tree.empty()) {
            leaf_value = first_value(new_node(s0, SIZE_MAX, SIZE_MAX, 0));
        } else {
            std::size_t cur = 0;
            while (true) {
                if (tree.nodes[cur].depth >= cfg.horizon) {
                    auto& leaf = tree.nodes[cur];
                    leaf_value = norm.terminal(model.terminal_reward(leaf.state));
                    leaf.visits += 1;
                    leaf.total += leaf_value;
                    final_node = cur;
                    break;
                }
                auto [ei, next] = select_descend(model, tree.nodes[cur], cfg, rng);
                const Action a = tree.nodes[cur].edges[ei].action;
                steps.emplace_back(cur, ei);
                rewards.push_back(norm.step(model.reward(tree.nodes[cur].state, a)));

                std::size_t child = SIZE_MAX;
                for (std::size_t c : tree.nodes[cur].edges[ei].children)
                    if (tree.nodes[c].state == next) {
                        child = c;
                        break;
                    }
                if (child != SIZE_MAX) {
                    cur = child;
                    continue;
                }
                const int depth = tree.nodes[cur].depth + 1;
                child = new_node(std::move(next), cur, ei, depth);
                tree.nodes[cur].edges[ei].children.push_back(child);
                leaf_value = first_value(child);
                final_node = child;
                break;
            }
            backpropagate(tree, steps, rewards, leaf_value);
        }
#ifndef NDEBUG
        if (tree.nodes[0].visits != it) throw ContractViolation("mcts: root visit count drifted");
#endif
        if (trace) {
            rec.iteration = it;
            rec.steps.clear();
            for (std::size_t k = 0; k < steps.size(); ++k) {
                const auto& edge = tree.nodes[steps[k].first].edges[steps[k].second];
                const std::size_t target = k + 1 < steps.size() ? steps[k + 1].first : final_node;
                const auto pos = std::find(edge.children.begin(), edge.children.end(), target) - edge.children.begin();
                rec.steps.emplace_back(edge.action, static_cast<std::size_t>(pos));
            }
            rec.leaf_value = leaf_value;
            rec.root_visits = tree.nodes[0].visits;
            rec.root_value = tree.nodes[0].value();
            trace(rec);
        }
    }

    const auto& root = tree.nodes[0];
    result.root_visits = root.visits;
    result.root_value = root.value();
    for (const auto& e : root.edges) result.root_actions.push_back({e.action, e.visits, e.value()});

    // value argmax, ties by visits then canonical order; symmetric for visits
    auto pick = [&](bool value_first) {
        const RootActionStats* best = nullptr;
        for (const auto& r : result.root_actions) {
            if (r.visits == 0) continue;
            if (!best) {
                best = &r;
                continue;
            }
            const bool tie_v = nearly_equal(r.value, best->value, 1e-12);
            const bool better_v = r.value > best->value && !tie_v;
            if (value_first) {
                if (better_v || (tie_v && r.visits > best->visits)) best = &r;
            } else {
                if (r.visits > best->visits || (r.visits == best->visits && better_v)) best = &r;
            }
        }
        if (!best) return result.root_actions.empty() ? Action{0} : result.root_actions.front().action;
        return best->action;
    };
    result.by_value = pick(true);
    result.by_visits = pick(false);
    result.recommended = cfg.recommend == Recommendation::by_value ? result.by_value : result.by_visits;
    return result;
}

}  // namespace symadv
