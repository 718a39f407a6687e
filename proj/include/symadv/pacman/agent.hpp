#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "symadv/mcts.hpp"
#include "symadv/pacman/encoding.hpp"
#include "symadv/pacman/model.hpp"
#include "symadv/qbf.hpp"
#include "symadv/rollout.hpp"
#include "symadv/sampler.hpp"

namespace symadv::pacman {

enum class Variant { mcts, selection, simulation, both };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::mcts: return "mcts";
        case Variant::selection: return "mcts+selection";
        case Variant::simulation: return "mcts+simulation";
        case Variant::both: return "mcts+both";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    for (Variant v : {Variant::mcts, Variant::selection, Variant::simulation, Variant::both})
        if (s == variant_name(v)) return v;
    throw ValidationError("unknown variant '" + s + "' (expected mcts, mcts+selection, mcts+simulation or mcts+both)");
}

inline bool uses_selection(Variant v) { return v == Variant::selection || v == Variant::both; }
inline bool uses_simulation(Variant v) { return v == Variant::simulation || v == Variant::both; }

struct AgentConfig {
    Variant variant = Variant::mcts;
    int horizon = 10;
    std::uint64_t iterations = 100;
    int samples = 100;
    int safe_depth = 3;
    /// Rewards are normalized over the whole horizon, so useful values are
    /// small; see README.
    double uct_c = 0.005;
    std::uint64_t model_cap = 200000;
    /// Scale of the cut-off heuristic relative to score points.
    double terminal_weight = 1.0;
    CnfReductions reductions;

    void validate() const {
        if (horizon < 1) throw ValidationError("horizon must be >= 1");
        if (iterations < 1) throw ValidationError("iterations must be >= 1");
        if (samples < 1) throw ValidationError("samples must be >= 1");
        if (safe_depth < 1) throw ValidationError("safe depth must be >= 1");
        if (!(uct_c > 0.0)) throw ValidationError("uct constant must be positive");
        if (model_cap < 1) throw ValidationError("model cap must be >= 1");
        if (!(terminal_weight > 0.0)) throw ValidationError("terminal weight must be positive");
    }
};

struct AgentCounters {
    std::uint64_t searches = 0;
    std::uint64_t selection_queries = 0;    // distinct states evaluated by the QBF
    std::uint64_t selection_calls = 0;      // filter calls, memo hits included
    std::uint64_t selection_fallbacks = 0;  // filter calls answered with every legal move
    std::uint64_t qbf_sat_calls = 0;
    std::uint64_t simulation_searches = 0;  // searches that sampled from the advice CNF
    std::uint64_t simulation_fallbacks = 0; // searches where the advice CNF was unusable
    std::uint64_t cached_models = 0;
    RolloutStats rollouts;

    void add(const AgentCounters& o) {
        searches += o.searches;
        selection_queries += o.selection_queries;
        selection_calls += o.selection_calls;
        selection_fallbacks += o.selection_fallbacks;
        qbf_sat_calls += o.qbf_sat_calls;
        simulation_searches += o.simulation_searches;
        simulation_fallbacks += o.simulation_fallbacks;
        cached_models += o.cached_models;
        rollouts.simulations += o.rollouts.simulations;
        rollouts.samples += o.rollouts.samples;
        rollouts.sampler_draws += o.rollouts.sampler_draws;
        rollouts.sampler_no_model += o.rollouts.sampler_no_model;
        rollouts.sampler_fail += o.rollouts.sampler_fail;
        rollouts.rejection_tries += o.rollouts.rejection_tries;
        rollouts.zero_samples += o.rollouts.zero_samples;
    }
};

struct SafeActions {
    std::vector<Action> actions;
    bool fallback = false;  // safety not enforceable; every legal move returned
};

struct AgentDecision {
    Action action = 0;
    std::vector<RootActionStats> root_actions;
    std::uint64_t root_visits = 0;
    double root_value = 0.0;
    std::vector<Action> overlay;
    bool overlay_fallback = false;
    std::vector<std::string> log;
};

/// Receding-horizon MCTS player with optional safety advice for selection
/// (QBF at the safe depth) and simulation (uniform safe-path sampling).
class PacmanAgent {
public:
    PacmanAgent(const Game& game, AgentConfig cfg) : model_(game, cfg.terminal_weight), cfg_(cfg) { cfg_.validate(); }

    const AgentConfig& config() const { return cfg_; }
    const PacmanModel& model() const { return model_; }
    const AgentCounters& counters() const { return counters_; }

    /// Moves from `s` after which Pac-Man can stay safe for safe_depth steps
    /// whatever the ghosts do. Results are cached per state.
    SafeActions safe_actions(const GameState& s) {
        ++counters_.selection_calls;
        if (s.terminal()) return {{kStop}, false};
        const GameState key = PacmanMdp::canonical(s);
        auto it = memo_.find(key);
        if (it == memo_.end()) it = memo_.emplace(key, compute_safe(key)).first;
        if (it->second.fallback) ++counters_.selection_fallbacks;
        return it->second;
    }

    AgentDecision decide(const GameState& s, std::uint64_t seed, const TraceSink& trace = {}) {
        if (s.terminal()) throw ValidationError("agent: game is over");
        AgentDecision out;
        ++counters_.searches;
        MctsConfig mc;
        mc.horizon = cfg_.horizon;
        mc.iterations = cfg_.iterations;
        mc.uct_c = cfg_.uct_c;
        mc.samples = cfg_.samples;
        mc.seed = seed;

        SelectionFilter<GameState> filter;
        if (uses_selection(cfg_.variant)) {
            const auto root = safe_actions(s);
            out.overlay = root.actions;
            out.overlay_fallback = root.fallback;
            if (root.fallback) out.log.push_back("selection: safety not enforceable, using all moves");
            filter = [this](const BasicPath<GameState>& p) { return safe_actions(p.last()).actions; };
        }

        auto stats = std::make_shared<RolloutStats>();
        RolloutOptions<GameState> opts;
        const Advice<GameState> safety = safety_advice(model_.game(), cfg_.horizon);
        std::optional<GameCnf> gc;
        std::optional<ModelCache<GameState>> cache;
        if (uses_simulation(cfg_.variant)) {
            try {
                gc.emplace(encode_game_cnf(model_.game(), s, cfg_.horizon, true, cfg_.reductions));
                opts.advice = &safety;
                try {
                    cache.emplace(gc->cnf, cfg_.model_cap);
                    counters_.cached_models += cache->size();
                    ++counters_.simulation_searches;
                    const Game& game = model_.game();
                    const GameCnf& cnf = *gc;
                    const ModelCache<GameState>& mcache = *cache;
                    opts.sampler = [&game, &cnf, &mcache](const BasicPath<GameState>& prefix, Rng& rng) {
                        PathSample<GameState> r;
                        const Assignment* m = mcache.pick(prefix, rng);
                        if (!m) {
                            r.status = SampleStatus::no_model;
                            return r;
                        }
                        r.path = replay_moves(game, prefix, cnf.moves(*m), cnf.dropped_ghosts, rng);
                        r.status = SampleStatus::ok;
                        return r;
                    };
                } catch (const CapacityError&) {
                    // too many safe paths to cache: rejection sampling against the predicate
                    ++counters_.simulation_fallbacks;
                    out.log.push_back("simulation: model cap exceeded, using rejection sampling");
                }
            } catch (const EncodingError&) {
                ++counters_.simulation_fallbacks;
                opts.advice = nullptr;
                out.log.push_back("simulation: no safe path, using uniform rollouts");
            }
        }
        const auto simulate = default_rollout_policy(model_, mc, opts, stats);
        const auto res = mcts_search(model_, s, mc, filter, simulate, trace);
        AgentCounters add;
        add.rollouts = *stats;
        counters_.add(add);

        out.action = res.recommended;
        out.root_actions = res.root_actions;
        out.root_visits = res.root_visits;
        out.root_value = res.root_value;
        return out;
    }

private:
    PacmanModel model_;
    AgentConfig cfg_;
    AgentCounters counters_;
    std::unordered_map<GameState, SafeActions> memo_;

    SafeActions compute_safe(const GameState& s) {
        ++counters_.selection_queries;
        std::vector<Action> legal = model_.actions(s);
        std::sort(legal.begin(), legal.end());
        try {
            const auto gc = encode_game_cnf(model_.game(), s, cfg_.safe_depth, true, cfg_.reductions);
            QbfEvaluator<PacmanModel> q(model_, gc.cnf, true);
            auto r = q.enforceable_actions(BasicPath<GameState>(s), cfg_.safe_depth);
            counters_.qbf_sat_calls += r.sat_calls;
            if (!r.actions.empty()) return {std::move(r.actions), false};
        } catch (const EncodingError&) {
        }
        return {std::move(legal), true};
    }
};

}  // namespace symadv::pacman
