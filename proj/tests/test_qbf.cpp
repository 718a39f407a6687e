#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "symadv/pacman/model.hpp"
#include "symadv/qbf.hpp"

using namespace symadv;

namespace {

std::vector<std::vector<Lit>> random_clauses(Rng& rng, const Mdp& m, int H, int count) {
    MdpEncodingLayout L{static_cast<int>(m.num_states()), static_cast<int>(m.num_actions()), H};
    std::vector<std::vector<Lit>> out;
    for (int k = 0; k < count; ++k) {
        std::vector<Lit> c;
        for (int j = 0; j < 2; ++j) {
            const int t = 1 + static_cast<int>(random_index(rng, static_cast<std::uint64_t>(H)));
            const int v = random_bit(rng) ? L.state_var(t, static_cast<StateId>(random_index(rng, m.num_states())))
                                          : L.action_var(t - 1, static_cast<Action>(random_index(rng, m.num_actions())));
            c.push_back(random_bit(rng) ? v : -v);
        }
        out.push_back(c);
    }
    return out;
}

// Expansion of the quantifier prefix; the innermost existential block goes
// to the SAT solver.
bool qbf_true(const PrenexQuery& q, std::size_t block, std::vector<Lit>& fixed) {
    if (block + 1 == q.prefix.size()) {
        DpllSolver s(q.matrix);
        return s.solve(fixed);
    }
    const auto& vars = q.prefix[block].vars;
    const bool universal = q.prefix[block].kind == 'a';
    for (std::uint64_t bits = 0; bits < (1ull << vars.size()); ++bits) {
        for (std::size_t i = 0; i < vars.size(); ++i) fixed.push_back((bits >> i) & 1u ? vars[i] : -vars[i]);
        const bool r = qbf_true(q, block + 1, fixed);
        fixed.resize(fixed.size() - vars.size());
        if (universal && !r) return false;
        if (!universal && r) return true;
    }
    return universal;
}

}  // namespace

TEST(Qbf, FullDepthMatchesAttractor) {
    Rng rng(61);
    for (int k = 0; k < 10; ++k) {
        const Mdp m = testsupport::random_mdp(rng, 4, 2);
        const int H = 3;
        const auto adv = clause_advice(m, 0, H, random_clauses(rng, m, H, 3));
        const auto t = build_path_tree(m, Path(0), H);
        const auto att = compute_attractor(t, adv);
        QbfEvaluator<Mdp> ev(m, *adv.cnf);
        for (std::size_t n = 0; n < t.size(); ++n) {
            if (t.is_leaf(n)) continue;
            const auto r = ev.enforceable_actions(t.paths[n], H - t.depth(n));
            EXPECT_EQ(r.actions, att.kept[n]) << "mdp " << k << " node " << n;
            EXPECT_FALSE(r.clipped);
        }
    }
}

TEST(Qbf, DepthOneNeedsEverySuccessorSatisfiable) {
    Rng rng(62);
    for (int k = 0; k < 10; ++k) {
        const Mdp m = testsupport::random_mdp(rng, 4, 2);
        const int H = 3;
        const auto adv = clause_advice(m, 0, H, random_clauses(rng, m, H, 3));
        const auto t = build_path_tree(m, Path(0), H);
        const auto sat = satisfiable_nodes(t, adv);
        std::vector<Action> expect;
        if (sat[0])
            for (const auto& b : t.branches[0])
                if (std::all_of(b.children.begin(), b.children.end(), [&](const auto& c) { return sat[c.first]; }))
                    expect.push_back(b.action);
        EXPECT_EQ(qbf_enforceable_actions(m, *adv.cnf, Path(0), 1).actions, expect);
    }
}

TEST(Qbf, StateBasedMemoAgrees) {
    Rng rng(63);
    const Mdp m = testsupport::random_mdp(rng, 4, 2);
    const int H = 4;
    // state-only advice is state based
    const auto adv = clause_advice(m, 0, H, {{-MdpEncodingLayout{4, 2, H}.state_var(2, 3)}, {-MdpEncodingLayout{4, 2, H}.state_var(4, 3)}});
    QbfEvaluator<Mdp> plain(m, *adv.cnf, false), memo(m, *adv.cnf, true);
    const auto a = plain.enforceable_actions(Path(0), H);
    const auto b = memo.enforceable_actions(Path(0), H);
    EXPECT_EQ(a.actions, b.actions);
    EXPECT_LE(b.sat_calls, a.sat_calls);
}

TEST(Qbf, ClippingAndErrors) {
    const Mdp m = testsupport::four_state_mdp();
    const auto adv = clause_advice(m, 0, 2, {});
    QbfEvaluator<Mdp> ev(m, *adv.cnf);
    const auto r = ev.enforceable_actions(Path(0), 5);
    EXPECT_TRUE(r.clipped);
    EXPECT_EQ(r.depth, 2);
    EXPECT_EQ(r.actions, (std::vector<Action>{0, 1}));
    EXPECT_THROW(ev.enforceable_actions(Path(0), 0), ValidationError);
    Path full(0);
    full.push(1, 3);
    full.push(0, 3);
    EXPECT_THROW(ev.enforceable_actions(full, 1), ValidationError);
}

TEST(Qbf, ClauseAdvicePredicateMatchesCnf) {
    Rng rng(64);
    for (int k = 0; k < 10; ++k) {
        const Mdp m = testsupport::random_mdp(rng, 4, 2);
        const int H = 3;
        const auto adv = clause_advice(m, 0, H, random_clauses(rng, m, H, 4));
        const Unfolding u = unfold(m, 0, H);
        DpllSolver s(adv.cnf->formula);
        for (std::size_t n = 0; n < u.paths.size(); ++n)
            if (u.depth[n] == H) {
                EXPECT_EQ(adv.evaluate(u.paths[n]), s.solve(adv.cnf->encoding.encode(u.paths[n])));
            }
    }
}

TEST(Qbf, PincerHasNoEnforceableMove) {
    using namespace symadv::pacman;
    const Game g = testsupport::game_of(testsupport::kPincer, parse_ghost_roster("random,random"));
    const PacmanModel model(g);
    const auto s0 = g.initial_state();
    const auto adv = safety_advice(g, 2, s0, CnfReductions{0.0});
    ASSERT_TRUE(adv.cnf);
    QbfEvaluator<PacmanModel> ev(model, *adv.cnf, true);
    EXPECT_TRUE(ev.enforceable_actions(BasicPath<GameState>(s0), 2).actions.empty());
    // one round only asks each successor to stay satisfiable
    const auto one = ev.enforceable_actions(BasicPath<GameState>(s0), 1);
    const auto att = compute_attractor(build_path_tree(model, BasicPath<GameState>(s0), 2), safety_advice(g, 2));
    EXPECT_TRUE(att.kept[0].empty());
    EXPECT_TRUE(one.actions.empty());
}

TEST(Qdimacs, EnforceabilityQueryAgreesWithEvaluator) {
    Rng rng(65);
    for (int k = 0; k < 6; ++k) {
        Mdp m = testsupport::random_mdp(rng, 3, 2, 2);
        const int H = 2;
        const auto clauses = random_clauses(rng, m, H, 2);
        const auto adv = clause_advice(m, 0, H, clauses);
        QbfEvaluator<Mdp> ev(m, *adv.cnf);
        std::vector<std::pair<Path, int>> queries{{Path(0), 1}, {Path(0), 2}};
        for (const auto& o : m.transitions(0, 1)) queries.push_back({Path(0).extended(1, o.state), 1});
        for (const auto& [p, depth] : queries) {
            const auto acts = ev.enforceable_actions(p, depth).actions;
            for (Action a0 : {0, 1}) {
                const auto q = enforceability_query(m, 0, H, clauses, p, a0, depth);
                std::vector<Lit> fixed;
                const bool holds = qbf_true(q, 0, fixed);
                EXPECT_EQ(holds, std::binary_search(acts.begin(), acts.end(), a0))
                    << "mdp " << k << " |p| " << p.length() << " depth " << depth << " a" << a0;
            }
        }
    }
}

TEST(Qdimacs, Format) {
    const Mdp m = testsupport::four_state_mdp();
    const auto q = enforceability_query(m, 0, 2, {{-MdpEncodingLayout{4, 2, 2}.state_var(2, 3)}}, Path(0), 0, 2);
    std::ostringstream os;
    write_qdimacs(os, q);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "p cnf " + std::to_string(q.matrix.num_vars()) + " " + std::to_string(q.matrix.num_clauses()));
    std::string kinds;
    std::size_t clauses = 0;
    std::vector<bool> bound(static_cast<std::size_t>(q.matrix.num_vars()) + 1, false);
    while (std::getline(in, line)) {
        ASSERT_EQ(line.substr(line.size() - 1), "0");
        if (line[0] == 'a' || line[0] == 'e') {
            kinds += line[0];
            std::istringstream ls(line.substr(1));
            int v;
            while (ls >> v && v) {
                EXPECT_FALSE(bound[static_cast<std::size_t>(v)]);
                bound[static_cast<std::size_t>(v)] = true;
            }
        } else {
            ++clauses;
        }
    }
    EXPECT_EQ(kinds, "eaeae");
    EXPECT_EQ(clauses, q.matrix.num_clauses());
    EXPECT_TRUE(std::all_of(bound.begin() + 1, bound.end(), [](bool b) { return b; }));
    EXPECT_THROW(enforceability_query(m, 0, 2, {}, Path(0), 0, 3), ValidationError);
    EXPECT_THROW(enforceability_query(m, 1, 2, {}, Path(0), 0, 1), ValidationError);
}
