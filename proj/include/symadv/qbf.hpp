#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "symadv/advice.hpp"
#include "symadv/cnf.hpp"
#include "symadv/errors.hpp"
#include "symadv/mdp.hpp"
#include "symadv/path_encoding.hpp"
#include "symadv/solver.hpp"

namespace symadv {

struct QbfResult {
    std::vector<Action> actions;  // canonical order
    int depth = 0;                // rounds actually evaluated
    bool clipped = false;         // requested depth exceeded the remaining horizon
    std::uint64_t sat_calls = 0;
};

/// Evaluates  forall s1 exists a1 forall s2 ... s_d : p.a0.s1...s_d |= A
/// by AND/OR expansion over the model's supports. A shorter-than-horizon
/// leaf satisfies A when some extension does (one SAT call on the
/// prefix-constrained CNF). Reuse one evaluator for many queries on the same
/// CNF to share the solver and the memo table.
template <DecisionModel M>
class QbfEvaluator {
public:
    using S = typename M::State;

    QbfEvaluator(const M& model, const AdviceCnf<S>& cnf, bool state_based = false)
        : model_(model), cnf_(cnf), solver_(cnf.formula), state_based_(state_based) {}

    QbfResult enforceable_actions(const BasicPath<S>& prefix, int depth) {
        if (depth < 1) throw ValidationError("qbf: depth must be >= 1");
        QbfResult r;
        const int remaining = cnf_.encoding.horizon - static_cast<int>(prefix.length());
        if (remaining < 1) throw ValidationError("qbf: prefix already has full length");
        r.depth = std::min(depth, remaining);
        r.clipped = depth > remaining;
        const std::uint64_t before = sat_calls_;
        if (leaf_ok(prefix)) {
            std::vector<Action> acts = model_.actions(prefix.last());
            std::sort(acts.begin(), acts.end());
            for (Action a : acts)
                if (forall_successors(prefix, a, r.depth)) r.actions.push_back(a);
        }
        r.sat_calls = sat_calls_ - before;
        return r;
    }

    std::uint64_t sat_calls() const { return sat_calls_; }

private:
    const M& model_;
    const AdviceCnf<S>& cnf_;
    DpllSolver solver_;
    bool state_based_;
    std::uint64_t sat_calls_ = 0;
    std::map<std::tuple<std::size_t, std::size_t, int>, std::vector<std::pair<S, bool>>> memo_;

    bool leaf_ok(const BasicPath<S>& q) {
        ++sat_calls_;
        const auto lits = cnf_.encoding.encode(q);
        return solver_.solve(lits);
    }

    // every successor s of (last(q), a) satisfies the remaining d-1 rounds
    bool forall_successors(const BasicPath<S>& q_in, Action a, int d) {
        BasicPath<S> q = q_in;
        for (const auto& o : model_.transitions(q.last(), a)) {
            q.push(a, o.state);
            const bool ok = holds(q, d - 1);
            q.pop();
            if (!ok) return false;
        }
        return true;
    }

    // q satisfies: exists a forall s ... for d more rounds
    bool holds(const BasicPath<S>& q, int d) {
        if (!leaf_ok(q)) return false;
        if (d == 0) return true;
        std::vector<std::pair<S, bool>>* bucket = nullptr;
        if (state_based_) {
            const auto key = std::make_tuple(std::hash<S>{}(q.last()), q.length(), d);
            bucket = &memo_[key];
            for (const auto& [s, v] : *bucket)
                if (s == q.last()) return v;
        }
        std::vector<Action> acts = model_.actions(q.last());
        std::sort(acts.begin(), acts.end());
        bool result = false;
        for (Action a : acts)
            if (forall_successors(q, a, d)) {
                result = true;
                break;
            }
        if (bucket) bucket->emplace_back(q.last(), result);
        return result;
    }
};

template <DecisionModel M>
QbfResult qbf_enforceable_actions(const M& model, const AdviceCnf<typename M::State>& cnf,
                                  const BasicPath<typename M::State>& prefix, int depth, bool state_based = false) {
    QbfEvaluator<M> ev(model, cnf, state_based);
    return ev.enforceable_actions(prefix, depth);
}

// ---------------------------------------------------------------------------
// Clause advice over the explicit-MDP encoding

/// Advice given by extra clauses over the variables of encode_paths(mdp, s0,
/// H). The predicate checks the clauses against the path's literals, so it
/// never consults the solver.
inline Advice<StateId> clause_advice(const Mdp& mdp, StateId s0, int horizon, const std::vector<std::vector<Lit>>& clauses) {
    auto [rules, enc] = encode_paths(mdp, s0, horizon);
    CnfFormula f = rules;
    for (const auto& c : clauses) f.add_clause(c);
    Advice<StateId> adv;
    adv.horizon = horizon;
    auto encode = enc.encode;
    adv.evaluate = [encode, clauses](const Path& p) {
        const auto lits = encode(p);
        for (const auto& c : clauses) {
            bool sat = false;
            for (Lit l : c) {
                if (l > 0 && std::find(lits.begin(), lits.end(), l) != lits.end()) sat = true;
                // a negative literal holds unless its variable is set by the path
                if (l < 0 && std::find(lits.begin(), lits.end(), -l) == lits.end()) sat = true;
                if (sat) break;
            }
            if (!sat) return false;
        }
        return true;
    };
    adv.cnf = AdviceCnf<StateId>{std::move(f), std::move(enc)};
    return adv;
}

// ---------------------------------------------------------------------------
// Prenex export

struct QuantifierBlock {
    char kind;  // 'a' or 'e'
    std::vector<int> vars;
};

struct PrenexQuery {
    std::vector<QuantifierBlock> prefix;
    CnfFormula matrix;
};

/// The enforceability query for a0 at prefix p over the explicit-MDP encoding,
/// as a prenex formula. State blocks p.length()+1 .. p.length()+depth are
/// universal and alternate with existential action blocks. The universal
/// player may pick assignments that are not legal successors; the rules of
/// such a block (exactly-one plus support) are therefore not asserted.
/// Instead an innermost existential z may be set only if some clause of
/// some universal block's rules is falsified, and every advice clause and
/// every later rule is weakened by z. The player's own one-hot constraints
/// stay hard.
inline PrenexQuery enforceability_query(const Mdp& mdp, StateId s0, int horizon, const std::vector<std::vector<Lit>>& advice_clauses,
                               const Path& p, Action a0, int depth) {
    MdpEncodingLayout L{static_cast<int>(mdp.num_states()), static_cast<int>(mdp.num_actions()), horizon};
    const int i = static_cast<int>(p.length());
    if (depth < 1 || i + depth > horizon) throw ValidationError("enforceability_query: depth out of range");
    if (p.first() != s0) throw ValidationError("enforceability_query: prefix does not start at s0");

    CnfFormula m(L.num_vars());
    auto state_block = [&](int t) {
        std::vector<Lit> xs;
        for (int s = 0; s < L.num_states; ++s) xs.push_back(L.state_var(t, s));
        return xs;
    };
    auto action_block = [&](int t) {
        std::vector<Lit> ys;
        for (int a = 0; a < L.num_actions; ++a) ys.push_back(L.action_var(t, a));
        return ys;
    };
    // rules clauses whose satisfaction is the environment's responsibility at step t
    auto env_rules = [&](int t) {
        CnfFormula tmp(L.num_vars());
        tmp.add_exactly_one(state_block(t));
        for (int s = 0; s < L.num_states; ++s)
            for (int a = 0; a < L.num_actions; ++a) {
                std::vector<Lit> c{-L.state_var(t - 1, s), -L.action_var(t - 1, a)};
                for (const auto& o : mdp.transitions(s, a)) c.push_back(L.state_var(t, o.state));
                tmp.add_clause(c);
            }
        return tmp.clauses();
    };

    // fixed prefix and a0
    for (int t = 0; t <= i; ++t) {
        m.add_exactly_one(state_block(t));
        m.add_unit(L.state_var(t, p.states[static_cast<std::size_t>(t)]));
    }
    for (int t = 0; t < i; ++t) m.add_unit(L.action_var(t, p.actions[static_cast<std::size_t>(t)]));
    m.add_unit(L.action_var(i, a0));
    for (int t = 0; t < horizon; ++t) m.add_exactly_one(action_block(t));

    const int z = m.new_var();
    std::vector<Lit> z_reasons{-z};
    for (int t = i + 1; t <= i + depth; ++t)
        for (const auto& c : env_rules(t)) {
            const int g = m.new_var();  // g -> clause c is falsified
            for (Lit l : c) m.add_clause({-g, -l});
            z_reasons.push_back(g);
        }
    m.add_clause(z_reasons);
    for (int t = i + depth + 1; t <= horizon; ++t)
        for (auto c : env_rules(t)) {
            c.push_back(z);
            m.add_clause(c);
        }
    for (auto c : advice_clauses) {
        c.push_back(z);
        m.add_clause(c);
    }

    PrenexQuery q;
    std::vector<int> outer;
    for (int t = 0; t <= i; ++t)
        for (int v : state_block(t)) outer.push_back(v);
    for (int t = 0; t <= i; ++t)
        for (int v : action_block(t)) outer.push_back(v);
    q.prefix.push_back({'e', outer});
    for (int t = i + 1; t <= i + depth; ++t) {
        q.prefix.push_back({'a', state_block(t)});
        if (t < horizon) q.prefix.push_back({'e', action_block(t)});
    }
    std::vector<bool> seen(static_cast<std::size_t>(m.num_vars()) + 1, false);
    for (const auto& b : q.prefix)
        for (int v : b.vars) seen[static_cast<std::size_t>(v)] = true;
    std::vector<int> inner;
    for (int v = 1; v <= m.num_vars(); ++v)
        if (!seen[static_cast<std::size_t>(v)]) inner.push_back(v);
    if (q.prefix.back().kind == 'e')
        q.prefix.back().vars.insert(q.prefix.back().vars.end(), inner.begin(), inner.end());
    else
        q.prefix.push_back({'e', inner});
    q.matrix = std::move(m);
    return q;
}

inline void write_qdimacs(std::ostream& out, const PrenexQuery& q) {
    out << "p cnf " << q.matrix.num_vars() << ' ' << q.matrix.num_clauses() << '\n';
    for (const auto& b : q.prefix) {
        if (b.vars.empty()) continue;
        out << b.kind;
        for (int v : b.vars) out << ' ' << v;
        out << " 0\n";
    }
    for (const auto& c : q.matrix.clauses()) {
        for (Lit l : c) out << l << ' ';
        out << "0\n";
    }
}

}  // namespace symadv
