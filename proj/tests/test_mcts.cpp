#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "symadv/mcts.hpp"
#include "symadv/rollout.hpp"

using namespace symadv;
using testsupport::four_state_mdp;

namespace {

// root action 1 earns 1, action 0 earns 0; one step
Mdp dominant_mdp() {
    Mdp m(2, 2);
    m.set_transition(0, 0, {{1, 1.0}}, 0.0);
    m.set_transition(0, 1, {{1, 1.0}}, 1.0);
    m.set_transition(1, 0, {{1, 1.0}}, 0.0);
    m.set_transition(1, 1, {{1, 1.0}}, 0.0);
    m.validate();
    return m;
}

SearchNode<StateId> node_with(std::vector<std::tuple<Action, std::uint64_t, double>> edges, std::uint64_t visits) {
    SearchNode<StateId> n;
    n.visits = visits;
    for (auto [a, v, value] : edges) {
        ActionEdge<StateId> e;
        e.action = a;
        e.visits = v;
        e.total = value * static_cast<double>(v);
        n.edges.push_back(e);
    }
    return n;
}

}  // namespace

TEST(Mcts, DominantActionWins) {
    const Mdp m = dominant_mdp();
    MctsConfig c;
    c.horizon = 1;
    c.iterations = 200;
    const auto r = mcts_search(m, 0, c, {}, default_rollout_policy(m, c));
    EXPECT_EQ(r.recommended, 1);
    EXPECT_EQ(r.by_visits, 1);
    EXPECT_EQ(r.root_visits, 200u);
}

TEST(Mcts, UctPrefersLessVisitedArm) {
    // V=0.5,N=10 vs V=0.4,N=2 with N(p)=13 and C=1
    const auto n = node_with({{0, 10, 0.5}, {1, 2, 0.4}}, 13);
    EXPECT_EQ(select_action(n, 1.0), 1u);
    EXPECT_EQ(select_action(n, 0.01), 0u);
}

TEST(Mcts, UnvisitedEdgeFirst) {
    const auto n = node_with({{0, 5, 0.9}, {2, 0, 0.0}, {3, 0, 0.0}}, 6);
    EXPECT_EQ(select_action(n, 1.0), 1u);
}

TEST(Mcts, EmptyEdgeSetIsContractViolation) {
    SearchNode<StateId> n;
    EXPECT_THROW(select_action(n, 1.0), ContractViolation);
}

TEST(Mcts, FilterRemovesAction) {
    const Mdp m = dominant_mdp();
    MctsConfig c;
    c.horizon = 1;
    c.iterations = 50;
    SelectionFilter<StateId> only0 = [](const Path&) { return std::vector<Action>{0}; };
    const auto r = mcts_search(m, 0, c, only0, default_rollout_policy(m, c));
    ASSERT_EQ(r.root_actions.size(), 1u);
    EXPECT_EQ(r.recommended, 0);
}

TEST(Mcts, EmptyFilterIsContractViolation) {
    const Mdp m = dominant_mdp();
    MctsConfig c;
    c.horizon = 2;
    c.iterations = 10;
    SelectionFilter<StateId> none = [](const Path&) { return std::vector<Action>{}; };
    EXPECT_THROW(mcts_search(m, 0, c, none, default_rollout_policy(m, c)), ContractViolation);
}

TEST(Mcts, BackpropagateSums) {
    SearchTree<StateId> t;
    t.nodes.resize(3);
    t.nodes[0].edges.resize(1);
    t.nodes[1].edges.resize(2);
    backpropagate(t, {{0, 0}, {1, 1}}, {0.25, 0.5}, 0.125);
    EXPECT_EQ(t.nodes[0].visits, 1u);
    EXPECT_DOUBLE_EQ(t.nodes[0].total, 0.875);
    EXPECT_DOUBLE_EQ(t.nodes[0].edges[0].total, 0.875);
    EXPECT_DOUBLE_EQ(t.nodes[1].total, 0.625);
    EXPECT_DOUBLE_EQ(t.nodes[1].edges[1].total, 0.625);
    EXPECT_EQ(t.nodes[1].edges[0].visits, 0u);
    backpropagate(t, {{0, 0}}, {0.0}, 0.0);
    EXPECT_EQ(t.nodes[0].visits, 2u);
    EXPECT_DOUBLE_EQ(t.nodes[0].value(), 0.4375);
}

TEST(Mcts, TreeBookkeepingHolds) {
    Rng rng(11);
    for (int k = 0; k < 10; ++k) {
        const Mdp m = testsupport::random_mdp(rng, 5, 3);
        MctsConfig c;
        c.horizon = 4;
        c.iterations = 500;
        c.seed = static_cast<std::uint64_t>(k);
        const auto r = mcts_search(m, 0, c, {}, default_rollout_policy(m, c));
        EXPECT_EQ(audit_tree(m, r.tree, r.normalization, c.horizon), "");
        EXPECT_EQ(r.root_visits, c.iterations);
        for (const auto& n : r.tree.nodes) EXPECT_LE(n.depth, c.horizon);
    }
}

TEST(Mcts, SameSeedSameTree) {
    const Mdp m = four_state_mdp();
    MctsConfig c;
    c.horizon = 3;
    c.iterations = 300;
    c.seed = 42;
    std::vector<std::string> ta, tb;
    auto a = mcts_search(m, 0, c, {}, default_rollout_policy(m, c), [&](const TraceRecord& r) { ta.push_back(format_trace_line(r)); });
    auto b = mcts_search(m, 0, c, {}, default_rollout_policy(m, c), [&](const TraceRecord& r) { tb.push_back(format_trace_line(r)); });
    EXPECT_EQ(ta, tb);
    EXPECT_EQ(ta.size(), 300u);
    ASSERT_EQ(a.tree.nodes.size(), b.tree.nodes.size());
    for (std::size_t i = 0; i < a.tree.nodes.size(); ++i) EXPECT_EQ(a.tree.nodes[i].total, b.tree.nodes[i].total);
    EXPECT_EQ(ta.front().rfind("{\"iter\":1,\"path\":[]", 0), 0u);
}

TEST(Mcts, ConvergesOnFourStateMdp) {
    const Mdp m = four_state_mdp();
    const auto hv = value_iteration(m, 3);
    ASSERT_EQ(hv.opt_actions(0, 3), std::vector<Action>{0});
    MctsConfig c;
    c.horizon = 3;
    c.iterations = 5000;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        c.seed = seed;
        const auto r = mcts_search(m, 0, c, {}, default_rollout_policy(m, c));
        EXPECT_EQ(r.recommended, 0);
        EXPECT_NEAR(r.root_value, hv.at(0, 3), 0.03);
    }
}

TEST(Mcts, InvalidConfig) {
    const Mdp m = dominant_mdp();
    MctsConfig c;
    c.iterations = 0;
    EXPECT_THROW(mcts_search(m, 0, c, {}, [](const Path&, Rng&) { return 0.0; }), ValidationError);
    c.iterations = 5;
    c.horizon = 2;
    EXPECT_THROW(mcts_search(m, 0, c, {}, [](const Path&, Rng&) { return 1.5; }), ContractViolation);
}

TEST(Rollout, BottomAdviceGivesZero) {
    const Mdp m = four_state_mdp();
    MctsConfig c;
    c.horizon = 3;
    c.samples = 5;
    const auto bottom = Advice<StateId>::bottom(3);
    auto stats = std::make_shared<RolloutStats>();
    auto sim = default_rollout_policy(m, c, {&bottom, {}, {}}, stats);
    Rng rng(1);
    EXPECT_EQ(sim(Path(0), rng), 0.0);
    EXPECT_EQ(stats->zero_samples, 5u);
    EXPECT_EQ(stats->rejection_tries, 5u * static_cast<std::uint64_t>(c.rollout_retry_bound));
}

TEST(Rollout, TopAdviceMatchesUniformMean) {
    // two paths: reward 1 or 0 with equal chance
    Mdp m(3, 2);
    m.set_transition(0, 0, {{1, 1.0}}, 1.0);
    m.set_transition(0, 1, {{2, 1.0}}, 0.0);
    for (StateId s : {1, 2}) {
        m.set_transition(s, 0, {{s, 1.0}}, 0.0);
        m.set_transition(s, 1, {{s, 1.0}}, 0.0);
    }
    m.validate();
    MctsConfig c;
    c.horizon = 1;
    c.samples = 10000;
    const auto top = Advice<StateId>::top(1);
    auto sim = default_rollout_policy(m, c, {&top, {}, {}});
    Rng rng(5);
    EXPECT_NEAR(sim(Path(0), rng), 0.5, 0.02);
}

TEST(Rollout, DeterministicChainValue) {
    Mdp m(1, 1);
    m.set_transition(0, 0, {{0, 1.0}}, 0.25);
    m.set_terminal_reward(0, 0.25);
    MctsConfig c;
    c.horizon = 3;
    auto sim = default_rollout_policy(m, c);
    Rng rng(0);
    // raw total 1.0 is already in [0, 1]
    EXPECT_DOUBLE_EQ(sim(Path(0), rng), 1.0);
    Path p(0);
    p.push(0, 0);
    EXPECT_DOUBLE_EQ(sim(p, rng), 0.75);
}

TEST(Rollout, ActionFilterRestricts) {
    const Mdp m = dominant_mdp();
    MctsConfig c;
    c.horizon = 1;
    c.samples = 50;
    RolloutOptions<StateId> o;
    o.action_filter = [](const Path&) { return std::vector<Action>{1}; };
    auto sim = default_rollout_policy(m, c, o);
    Rng rng(2);
    EXPECT_DOUBLE_EQ(sim(Path(0), rng), 1.0);
    o.action_filter = [](const Path&) { return std::vector<Action>{}; };
    auto bad = default_rollout_policy(m, c, o);
    EXPECT_THROW(bad(Path(0), rng), ContractViolation);
}

TEST(Hoeffding, RootPayoffTail) {
    // n * mean root payoff stays within the Hoeffding margin of its mean
    const Mdp m = four_state_mdp();
    MctsConfig c;
    c.horizon = 3;
    c.iterations = 200;
    const double delta = 0.1;
    std::vector<double> xs;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        c.seed = seed;
        xs.push_back(mcts_search(m, 0, c, {}, default_rollout_policy(m, c)).root_value);
    }
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    const double n = static_cast<double>(c.iterations);
    const double margin = std::sqrt(n * std::log(1.0 / delta) / 2.0);
    int over = 0;
    for (double x : xs) over += n * x >= n * mean + margin;
    EXPECT_LE(over / static_cast<double>(xs.size()), delta);
}
