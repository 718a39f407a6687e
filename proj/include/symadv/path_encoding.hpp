#pragma once

#include <functional>
#include <vector>

#include "symadv/cnf.hpp"
#include "symadv/errors.hpp"
#include "symadv/mdp.hpp"
#include "symadv/solver.hpp"

namespace symadv {

/// Bridge between assignments of a path CNF and length-`horizon` paths from
/// `root`. `encode` maps any prefix (starting at root) to the literals fixing
/// it; `decode` maps a model to its full path. `support` is a set of
/// variables whose values determine the whole model.
template <class S>
struct BasicPathEncoding {
    S root{};
    int horizon = 0;
    std::function<std::vector<Lit>(const BasicPath<S>&)> encode;
    std::function<BasicPath<S>(const Assignment&)> decode;
    std::vector<int> support;
};

using PathEncoding = BasicPathEncoding<StateId>;

/// A CNF whose models are exactly the advice-satisfying paths, with its
/// decoding bridge.
template <class S>
struct AdviceCnf {
    CnfFormula formula;
    BasicPathEncoding<S> encoding;
};

/// Adds unit clauses fixing p. Models of the result are the extensions of p.
template <class S>
CnfFormula constrain_prefix(const CnfFormula& cnf, const BasicPathEncoding<S>& enc, const BasicPath<S>& p) {
    if (static_cast<int>(p.length()) > enc.horizon) throw ValidationError("constrain_prefix: prefix longer than horizon");
    CnfFormula out = cnf;
    for (Lit l : enc.encode(p)) out.add_unit(l);
    return out;
}

/// Variable layout of the explicit-MDP encoding: one-hot state blocks for
/// t = 0..H, one-hot action blocks for t = 0..H-1, timestep-major.
struct MdpEncodingLayout {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;

    int state_var(int t, StateId s) const { return 1 + t * (num_states + num_actions) + s; }
    int action_var(int t, Action a) const { return 1 + t * (num_states + num_actions) + num_states + a; }
    int num_vars() const { return horizon * (num_states + num_actions) + num_states; }
};

/// Rules CNF of an explicit MDP: models are in bijection with the length-H
/// paths from s0.
inline std::pair<CnfFormula, PathEncoding> encode_paths(const Mdp& mdp, StateId s0, int horizon) {
    if (horizon < 0) throw ValidationError("encode_paths: negative horizon");
    if (s0 < 0 || static_cast<std::size_t>(s0) >= mdp.num_states()) throw ValidationError("encode_paths: bad s0");
    MdpEncodingLayout L{static_cast<int>(mdp.num_states()), static_cast<int>(mdp.num_actions()), horizon};
    CnfFormula f(L.num_vars());

    f.add_unit(L.state_var(0, s0));
    for (int t = 0; t <= horizon; ++t) {
        std::vector<Lit> xs;
        for (int s = 0; s < L.num_states; ++s) xs.push_back(L.state_var(t, s));
        f.add_exactly_one(xs);
        if (t == horizon) break;
        std::vector<Lit> ys;
        for (int a = 0; a < L.num_actions; ++a) ys.push_back(L.action_var(t, a));
        f.add_exactly_one(ys);
        for (int s = 0; s < L.num_states; ++s)
            for (int a = 0; a < L.num_actions; ++a) {
                std::vector<Lit> c{-L.state_var(t, s), -L.action_var(t, a)};
                for (const auto& o : mdp.transitions(s, a)) c.push_back(L.state_var(t + 1, o.state));
                f.add_clause(c);
            }
    }
    if (!solve(f)) throw EncodingError("encode_paths: rules admit no path");

    PathEncoding enc;
    enc.root = s0;
    enc.horizon = horizon;
    enc.encode = [L](const Path& p) {
        std::vector<Lit> lits;
        for (std::size_t t = 0; t < p.states.size(); ++t) {
            lits.push_back(L.state_var(static_cast<int>(t), p.states[t]));
            if (t < p.actions.size()) lits.push_back(L.action_var(static_cast<int>(t), p.actions[t]));
        }
        return lits;
    };
    enc.decode = [L](const Assignment& m) {
        auto state_at = [&](int t) {
            for (int s = 0; s < L.num_states; ++s)
                if (m[static_cast<std::size_t>(L.state_var(t, s))]) return s;
            throw EncodingError("decode: no state set");
        };
        Path p(state_at(0));
        for (int t = 0; t < L.horizon; ++t) {
            Action act = -1;
            for (int a = 0; a < L.num_actions; ++a)
                if (m[static_cast<std::size_t>(L.action_var(t, a))]) act = a;
            if (act < 0) throw EncodingError("decode: no action set");
            p.push(act, state_at(t + 1));
        }
        return p;
    };
    for (int v = 1; v <= L.num_vars(); ++v) enc.support.push_back(v);
    return {std::move(f), std::move(enc)};
}

}  // namespace symadv
