#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "symadv/errors.hpp"
#include "symadv/mdp.hpp"
#include "symadv/random.hpp"

namespace symadv {

struct ArmStats {
    std::uint64_t plays = 0;
    double mean = 0.0;  // exact running average of observed payoffs

    void observe(double payoff) {
        ++plays;
        mean += (payoff - mean) / static_cast<double>(plays);
    }
};

struct BanditConfig {
    double cp = 1.0 / std::sqrt(2.0);
    std::size_t arms = 1;
};

/// UCB1 with bias 2 Cp sqrt(ln t / t_a). Unplayed arms come first; ties among
/// the best scores are broken uniformly with `tie_rng`.
inline std::size_t ucb1_select(std::span<const ArmStats> stats, std::uint64_t t, const BanditConfig& cfg,
                               Rng& tie_rng) {
    if (stats.empty()) throw ValidationError("ucb1_select: no arms");
    if (!(cfg.cp > 0.0)) throw ValidationError("ucb1_select: Cp must be positive");

    std::vector<std::size_t> best;
    for (std::size_t a = 0; a < stats.size(); ++a)
        if (stats[a].plays == 0) best.push_back(a);
    if (best.empty()) {
        const double log_t = std::log(static_cast<double>(std::max<std::uint64_t>(t, 1)));
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < stats.size(); ++a) {
            const double score =
                stats[a].mean + 2.0 * cfg.cp * std::sqrt(log_t / static_cast<double>(stats[a].plays));
            if (best.empty() || (score > top && !nearly_equal(score, top, 1e-12))) {
                top = score;
                best.assign(1, a);
            } else if (nearly_equal(score, top, 1e-12)) {
                best.push_back(a);
            }
        }
    }
    if (best.size() == 1) return best.front();
    return best[random_index(tie_rng, best.size())];
}

/// A stationary arm: its expected payoff and a sampler over [0, 1].
struct BanditArm {
    double mean = 0.0;
    std::function<double(Rng&)> draw;

    static BanditArm bernoulli(double p) {
        return {p, [p](Rng& rng) { return uniform01(rng) < p ? 1.0 : 0.0; }};
    }
};

struct BanditRun {
    std::vector<double> regret;                            // pseudo-regret after each step 1..n
    std::vector<std::uint64_t> plays;                      // final per-arm play counts
    std::vector<std::vector<std::uint64_t>> plays_at;      // per checkpoint, per arm
    std::vector<std::uint64_t> checkpoints;
    double average_payoff = 0.0;                           // running average X_n
};

/// Plays UCB1 for n steps. Regret is measured against the best fixed arm's
/// expectation: t mu* - sum_a T_a(t) mu_a.
inline BanditRun run_bandit(const std::vector<BanditArm>& arms, std::uint64_t n, const BanditConfig& cfg, Rng& rng,
                            std::vector<std::uint64_t> checkpoints = {}) {
    if (arms.empty()) throw ValidationError("run_bandit: no arms");
    double best_mean = -std::numeric_limits<double>::infinity();
    for (const auto& a : arms) best_mean = std::max(best_mean, a.mean);

    std::vector<ArmStats> stats(arms.size());
    BanditRun run;
    run.regret.reserve(n);
    run.checkpoints = std::move(checkpoints);
    std::sort(run.checkpoints.begin(), run.checkpoints.end());
    std::size_t next_cp = 0;
    double expected_gain = 0.0;
    double payoff_sum = 0.0;

    for (std::uint64_t t = 1; t <= n; ++t) {
        const std::size_t a = ucb1_select(stats, t - 1, cfg, rng);
        const double x = arms[a].draw(rng);
        stats[a].observe(x);
        payoff_sum += x;
        expected_gain += arms[a].mean;
        run.regret.push_back(static_cast<double>(t) * best_mean - expected_gain);
        while (next_cp < run.checkpoints.size() && run.checkpoints[next_cp] == t) {
            std::vector<std::uint64_t> snap;
            for (const auto& s : stats) snap.push_back(s.plays);
            run.plays_at.push_back(std::move(snap));
            ++next_cp;
        }
    }
    for (const auto& s : stats) run.plays.push_back(s.plays);
    run.average_payoff = n > 0 ? payoff_sum / static_cast<double>(n) : 0.0;
    return run;
}

}  // namespace symadv
