#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "symadv/advice.hpp"
#include "symadv/mcts.hpp"
#include "symadv/sampler.hpp"

namespace symadv {

template <class S>
struct RolloutOptions {
    /// Simulation advice; rollouts are conditioned on it when present.
    const Advice<S>* advice = nullptr;
    /// Advice-conditioned draw of a full path extending the given prefix.
    std::function<PathSample<S>(const BasicPath<S>&, Rng&)> sampler;
    /// Restricts uniform action choice; must stay non-empty.
    std::function<std::vector<Action>(const BasicPath<S>&)> action_filter;
};

struct RolloutStats {
    std::uint64_t simulations = 0;
    std::uint64_t samples = 0;
    std::uint64_t sampler_draws = 0;
    std::uint64_t sampler_no_model = 0;
    std::uint64_t sampler_fail = 0;
    std::uint64_t rejection_tries = 0;
    std::uint64_t zero_samples = 0;  // samples that contributed the value 0
};

namespace detail {

template <DecisionModel M>
double suffix_value(const M& model, const BasicPath<typename M::State>& p, std::size_t from, const RewardNormalization& norm) {
    double v = 0.0;
    for (std::size_t t = from; t < p.length(); ++t) v += norm.step(model.reward(p.states[t], p.actions[t]));
    return v + norm.terminal(model.terminal_reward(p.last()));
}

}  // namespace detail

/// Averages cfg.samples rollouts from last(p) to depth H. Without advice
/// actions are uniform; with advice each sample comes from the sampler when
/// one is given, otherwise from up to cfg.rollout_retry_bound uniform
/// rollouts of which the first satisfying one is kept. A sample with no
/// accepted path counts 0.
template <DecisionModel M>
SimulationPolicy<typename M::State> default_rollout_policy(const M& model, const MctsConfig& cfg,
                                                           RolloutOptions<typename M::State> opts = {},
                                                           std::shared_ptr<RolloutStats> stats = nullptr) {
    using S = typename M::State;
    cfg.validate();
    const RewardNormalization norm = effective_normalization(model, cfg);
    const int H = cfg.horizon;
    if (!stats) stats = std::make_shared<RolloutStats>();

    auto pick_action = [&model, opts](const BasicPath<S>& q, Rng& rng) {
        std::vector<Action> acts = model.actions(q.last());
        std::sort(acts.begin(), acts.end());
        if (opts.action_filter) {
            std::vector<Action> allowed = opts.action_filter(q);
            std::sort(allowed.begin(), allowed.end());
            std::vector<Action> both;
            std::set_intersection(acts.begin(), acts.end(), allowed.begin(), allowed.end(), std::back_inserter(both));
            acts = std::move(both);
        }
        if (acts.empty()) throw ContractViolation("rollout action filter left no action");
        return acts[static_cast<std::size_t>(random_index(rng, acts.size()))];
    };

    // uniform rollout; returns the completed path
    auto rollout = [&model, H, pick_action](const BasicPath<S>& p, Rng& rng) {
        BasicPath<S> q = p;
        while (static_cast<int>(q.length()) < H) {
            const Action a = pick_action(q, rng);
            q.push(a, draw_successor(model, q.last(), a, rng));
        }
        return q;
    };

    return [&model, norm, H, opts, stats, rollout, pick_action, cfg](const BasicPath<S>& p, Rng& rng) {
        ++stats->simulations;
        double sum = 0.0;
        for (int k = 0; k < cfg.samples; ++k) {
            ++stats->samples;
            if (!opts.advice) {
                if (!opts.action_filter) {
                    // no path bookkeeping needed
                    S s = p.last();
                    double v = 0.0;
                    for (int d = static_cast<int>(p.length()); d < H; ++d) {
                        std::vector<Action> acts = model.actions(s);
                        std::sort(acts.begin(), acts.end());
                        const Action a = acts[static_cast<std::size_t>(random_index(rng, acts.size()))];
                        v += norm.step(model.reward(s, a));
                        s = draw_successor(model, s, a, rng);
                    }
                    sum += v + norm.terminal(model.terminal_reward(s));
                } else {
                    sum += detail::suffix_value(model, rollout(p, rng), p.length(), norm);
                }
                continue;
            }
            bool use_rejection = !opts.sampler;
            if (opts.sampler) {
                ++stats->sampler_draws;
                const auto r = opts.sampler(p, rng);
                if (r.status == SampleStatus::ok) {
                    sum += detail::suffix_value(model, r.path, p.length(), norm);
                    continue;
                }
                if (r.status == SampleStatus::no_model) {
                    ++stats->sampler_no_model;
                    ++stats->zero_samples;
                    continue;
                }
                ++stats->sampler_fail;
                use_rejection = true;
            }
            if (use_rejection) {
                bool accepted = false;
                for (int t = 0; t < cfg.rollout_retry_bound && !accepted; ++t) {
                    ++stats->rejection_tries;
                    const auto q = rollout(p, rng);
                    if (opts.advice->evaluate(q)) {
                        sum += detail::suffix_value(model, q, p.length(), norm);
                        accepted = true;
                    }
                }
                if (!accepted) ++stats->zero_samples;
            }
        }
        return sum / static_cast<double>(cfg.samples);
    };
}

}  // namespace symadv
