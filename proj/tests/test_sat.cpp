#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "symadv/cnf.hpp"
#include "symadv/path_encoding.hpp"
#include "symadv/solver.hpp"

using namespace symadv;

namespace {

CnfFormula random_3cnf(Rng& rng, int vars, int clauses) {
    CnfFormula f(vars);
    for (int c = 0; c < clauses; ++c) {
        std::vector<Lit> cl;
        for (int k = 0; k < 3; ++k) {
            const int v = 1 + static_cast<int>(random_index(rng, static_cast<std::uint64_t>(vars)));
            cl.push_back(random_bit(rng) ? v : -v);
        }
        f.add_clause(cl);
    }
    return f;
}

std::uint64_t truth_table_count(const CnfFormula& f) {
    const int n = f.num_vars();
    std::uint64_t count = 0;
    Assignment a(static_cast<std::size_t>(n) + 1, false);
    for (std::uint64_t bits = 0; bits < (1ull << n); ++bits) {
        for (int v = 1; v <= n; ++v) a[static_cast<std::size_t>(v)] = (bits >> (v - 1)) & 1u;
        count += satisfies(f, a);
    }
    return count;
}

}  // namespace

TEST(Cnf, AddClauseNormalizes) {
    CnfFormula f(3);
    f.add_clause({2, 1, 2});
    f.add_clause({1, -1});  // tautology dropped
    ASSERT_EQ(f.num_clauses(), 1u);
    EXPECT_EQ(f.clauses()[0], (std::vector<Lit>{1, 2}));
    EXPECT_THROW(f.add_clause({}), ValidationError);
    EXPECT_THROW(f.add_clause({4}), ValidationError);
    EXPECT_THROW(f.add_clause({0}), ValidationError);
}

TEST(Solver, SmallSatisfiable) {
    CnfFormula f(3);
    f.add_clause({1, 2});
    f.add_clause({-1, 2});
    f.add_clause({-2, 3});
    const auto m = solve(f);
    ASSERT_TRUE(m);
    EXPECT_TRUE(satisfies(f, *m));
    EXPECT_TRUE((*m)[2]);
    EXPECT_TRUE((*m)[3]);
    EXPECT_EQ(count_models(f, 100).count, 2u);
}

TEST(Solver, SmallUnsatisfiable) {
    CnfFormula f(2);
    f.add_clause({1, 2});
    f.add_clause({1, -2});
    f.add_clause({-1, 2});
    f.add_clause({-1, -2});
    EXPECT_FALSE(solve(f));
    EXPECT_EQ(count_models(f, 10).count, 0u);
    auto all = enumerate_models(f, 10);
    ASSERT_TRUE(all);
    EXPECT_TRUE(all->empty());
}

TEST(Solver, Assumptions) {
    CnfFormula f(2);
    f.add_clause({1, 2});
    const std::vector<Lit> neg1{-1};
    const std::vector<Lit> both{-1, -2};
    EXPECT_EQ(count_models(f, 10, neg1).count, 1u);
    DpllSolver s(f);
    EXPECT_FALSE(s.solve(both));
    EXPECT_TRUE(s.solve(neg1));
    EXPECT_TRUE(s.model()[2]);
}

TEST(Solver, RandomThreeCnfAgainstTruthTable) {
    Rng rng(1234);
    int sat = 0;
    for (int k = 0; k < 100; ++k) {
        const int n = 6 + static_cast<int>(random_index(rng, 5));
        const CnfFormula f = random_3cnf(rng, n, 2 * n + static_cast<int>(random_index(rng, static_cast<std::uint64_t>(3 * n))));
        const std::uint64_t truth = truth_table_count(f);
        const auto m = solve(f);
        EXPECT_EQ(m.has_value(), truth > 0) << "formula " << k;
        if (m) {
            EXPECT_TRUE(satisfies(f, *m));
            ++sat;
        }
        EXPECT_EQ(count_models(f, 1u << 12).count, truth) << "formula " << k;
        const auto all = enumerate_models(f, 1u << 12);
        ASSERT_TRUE(all);
        for (const auto& a : *all) EXPECT_TRUE(satisfies(f, a));
    }
    EXPECT_GT(sat, 10);
    EXPECT_LT(sat, 100);
}

TEST(Solver, CountCap) {
    CnfFormula f(5);
    f.add_clause({1, 2, 3, 4, 5});
    EXPECT_EQ(count_models(f, 100).count, 31u);
    const auto capped = count_models(f, 10);
    EXPECT_TRUE(capped.over_cap);
    EXPECT_EQ(capped.count, 11u);
    EXPECT_FALSE(enumerate_models(f, 10));
    EXPECT_THROW(count_models(f, 0), ValidationError);
}

TEST(Solver, Deterministic) {
    Rng rng(5);
    const CnfFormula f = random_3cnf(rng, 20, 80);
    DpllSolver a(f), b(f);
    const bool ra = a.solve(), rb = b.solve();
    EXPECT_EQ(ra, rb);
    EXPECT_EQ(a.decisions(), b.decisions());
    if (ra) {
        EXPECT_EQ(a.model(), b.model());
    }
}

TEST(Solver, BadVariableOrder) {
    CnfFormula f(3);
    EXPECT_THROW(DpllSolver(f, {1, 1}), ValidationError);
    EXPECT_THROW(DpllSolver(f, {4}), ValidationError);
    f.add_clause({1, 2});
    DpllSolver s(f, {3, 2});
    EXPECT_TRUE(s.solve());
}

TEST(Cnf, ExactlyOneAndXor) {
    CnfFormula f(4);
    f.add_exactly_one({1, 2, 3, 4});
    EXPECT_EQ(count_models(f, 100).count, 4u);

    CnfFormula x(4);
    x.add_xor({1, 2, 3, 4}, true);
    EXPECT_EQ(count_models(x, 100).count, 8u);
    const auto all = enumerate_models(x, 100);
    for (const auto& a : *all) EXPECT_EQ((a[1] + a[2] + a[3] + a[4]) % 2, 1);

    CnfFormula e(1);
    e.add_xor({}, true);
    EXPECT_FALSE(solve(e));
    CnfFormula ok(1);
    ok.add_xor({}, false);
    EXPECT_TRUE(solve(ok));
}

TEST(Cnf, Append) {
    CnfFormula a(2), b(3);
    a.add_clause({1});
    b.add_clause({-3});
    a.append(b);
    EXPECT_EQ(a.num_vars(), 3);
    EXPECT_EQ(a.num_clauses(), 2u);
}

TEST(Dimacs, RoundTrip) {
    Rng rng(9);
    const CnfFormula f = random_3cnf(rng, 12, 30);
    std::ostringstream os;
    write_dimacs(os, f);
    const CnfFormula g = read_dimacs(os.str());
    EXPECT_EQ(g.num_vars(), f.num_vars());
    EXPECT_EQ(g.clauses(), f.clauses());
}

TEST(Dimacs, CommentsAndMultilineClauses) {
    const auto f = read_dimacs("c hello\np cnf 3 2\n1 -2\n 0 3 0\n");
    ASSERT_EQ(f.num_clauses(), 2u);
    EXPECT_EQ(f.clauses()[0], (std::vector<Lit>{-2, 1}));
}

TEST(Dimacs, Errors) {
    EXPECT_THROW(read_dimacs("1 2 0\n"), ValidationError);
    EXPECT_THROW(read_dimacs("p cnf 2 1\n1 3 0\n"), ValidationError);
    EXPECT_THROW(read_dimacs("p dnf 2 1\n"), ValidationError);
    EXPECT_THROW(read_dimacs("p cnf 2 1\n1 x 0\n"), ValidationError);
    EXPECT_THROW(read_dimacs(""), ValidationError);
    try {
        read_dimacs("p cnf 2 1\n\n1 3 0\n");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(PathEncoding, ModelsArePaths) {
    Rng rng(31);
    for (int k = 0; k < 10; ++k) {
        const Mdp m = testsupport::random_mdp(rng, 4, 2);
        const int H = 3;
        auto [f, enc] = encode_paths(m, 0, H);
        const Unfolding u = unfold(m, 0, H);
        std::size_t leaves = 0;
        for (std::size_t n = 0; n < u.paths.size(); ++n) leaves += u.depth[n] == H;
        const auto all = enumerate_models(f, 100000);
        ASSERT_TRUE(all);
        EXPECT_EQ(all->size(), leaves);
        for (const auto& a : *all) {
            const Path p = enc.decode(a);
            EXPECT_EQ(static_cast<int>(p.length()), H);
            EXPECT_TRUE(is_valid_path(m, p));
            const auto lits = enc.encode(p);
            EXPECT_TRUE(std::all_of(lits.begin(), lits.end(), [&](Lit l) { return lit_true(a, l); }));
        }
    }
}

TEST(PathEncoding, ConstrainPrefixCountsExtensions) {
    Rng rng(32);
    const Mdp m = testsupport::random_mdp(rng, 4, 2);
    const int H = 3;
    auto [f, enc] = encode_paths(m, 0, H);
    const Unfolding u = unfold(m, 0, H);
    for (std::size_t n = 0; n < u.paths.size(); ++n) {
        if (u.depth[n] >= H) continue;
        std::size_t ext = 0;
        for (std::size_t l = 0; l < u.paths.size(); ++l) ext += u.depth[l] == H && u.paths[l].has_prefix(u.paths[n]);
        EXPECT_EQ(count_models(constrain_prefix(f, enc, u.paths[n]), 100000).count, ext);
    }
    Path too_long(0);
    for (int t = 0; t < 4; ++t) too_long.push(0, m.transitions(too_long.last(), 0)[0].state);
    EXPECT_THROW(constrain_prefix(f, enc, too_long), ValidationError);
}

TEST(PathEncoding, LayoutIndices) {
    MdpEncodingLayout L{3, 2, 2};
    EXPECT_EQ(L.state_var(0, 0), 1);
    EXPECT_EQ(L.action_var(0, 1), 5);
    EXPECT_EQ(L.state_var(1, 2), 8);
    EXPECT_EQ(L.num_vars(), 13);
}
