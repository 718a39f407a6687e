#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "symadv/advice.hpp"
#include "symadv/cnf.hpp"
#include "symadv/errors.hpp"
#include "symadv/path_encoding.hpp"
#include "symadv/random.hpp"
#include "symadv/solver.hpp"

namespace symadv {

enum class SamplerMode { exact, xor_hash };

struct SamplerConfig {
    double epsilon = 0.3;
    double delta = 0.1;
    SamplerMode mode = SamplerMode::exact;
    /// Optional positive weight of a model; uniform when empty.
    std::function<double(const Assignment&)> weight;
    /// Upper bound on weight / min weight used to scale rejection in hash mode.
    double weight_bound = 1.0;
    std::uint64_t exact_cap = 100000;
    int pivot = 64;
    int max_weight_rejections = 10000;

    void validate() const {
        if (!(epsilon > 0.0)) throw ValidationError("sampler: epsilon must be positive");
        if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("sampler: delta must lie in (0, 1)");
        if (exact_cap < 1) throw ValidationError("sampler: cap must be >= 1");
        if (pivot < 2) throw ValidationError("sampler: pivot must be >= 2");
        if (!(weight_bound >= 1.0)) throw ValidationError("sampler: weight bound must be >= 1");
    }
};

enum class SampleStatus { ok, fail, no_model };

struct SampleResult {
    SampleStatus status = SampleStatus::fail;
    Assignment model;
};

namespace detail {

inline std::size_t weighted_pick(const std::vector<Assignment>& models, const std::function<double(const Assignment&)>& w,
                                 Rng& rng) {
    if (!w) return static_cast<std::size_t>(random_index(rng, models.size()));
    std::vector<double> cum;
    double acc = 0.0;
    for (const auto& m : models) {
        const double x = w(m);
        if (!(x > 0.0)) throw ValidationError("sampler: weights must be positive");
        acc += x;
        cum.push_back(acc);
    }
    const double u = uniform01(rng) * acc;
    return static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
}

}  // namespace detail

/// Near-uniform sampler over the models of one formula by random parity
/// constraints on `support`. The hash size m is fixed at construction so
/// repeated draws only pay for cell enumeration.
class XorSampler {
public:
    XorSampler(const CnfFormula& f, std::vector<int> support, const SamplerConfig& cfg, Rng& rng,
               std::vector<Lit> assumptions = {})
        : base_(f), support_(std::move(support)), cfg_(cfg), assumptions_(std::move(assumptions)) {
        cfg_.validate();
        if (support_.empty())
            for (int v = 1; v <= f.num_vars(); ++v) support_.push_back(v);
        DpllSolver s(base_);
        if (!s.solve(assumptions_)) {
            unsat_ = true;
            return;
        }
        // smallest m whose random cell holds at most pivot/2 models
        const std::uint64_t target = static_cast<std::uint64_t>(cfg_.pivot / 2);
        m_ = 0;
        while (m_ <= static_cast<int>(support_.size())) {
            const auto n = cell(rng, m_, target + 1).size();
            if (n <= target) break;
            ++m_;
        }
        // tries so that the failure probability stays below delta when the
        // per-try acceptance is about 1/4
        tries_ = static_cast<int>(std::ceil(std::log(cfg_.delta) / std::log(0.75))) + 1;
    }

    bool unsat() const { return unsat_; }
    int hash_size() const { return m_; }
    int tries() const { return tries_; }

    SampleResult draw(Rng& rng) const {
        if (unsat_) return {SampleStatus::no_model, {}};
        const auto pivot = static_cast<std::uint64_t>(cfg_.pivot);
        for (int w = 0; w < cfg_.max_weight_rejections; ++w) {
            std::optional<Assignment> z;
            for (int t = 0; t < tries_ && !z; ++t) {
                auto c = cell(rng, m_, pivot + 1);
                if (c.empty() || c.size() > pivot) continue;
                if (uniform01(rng) * static_cast<double>(pivot) >= static_cast<double>(c.size())) continue;
                z = std::move(c[static_cast<std::size_t>(random_index(rng, c.size()))]);
            }
            if (!z) return {SampleStatus::fail, {}};
            if (!cfg_.weight) return {SampleStatus::ok, std::move(*z)};
            const double acc = cfg_.weight(*z) / cfg_.weight_bound;
            if (acc > 1.0 + 1e-12) throw ValidationError("sampler: weight exceeds the declared bound");
            if (uniform01(rng) < acc) return {SampleStatus::ok, std::move(*z)};
        }
        return {SampleStatus::fail, {}};
    }

private:
    CnfFormula base_;
    std::vector<int> support_;
    SamplerConfig cfg_;
    std::vector<Lit> assumptions_;
    bool unsat_ = false;
    int m_ = 0;
    int tries_ = 1;

    std::vector<Assignment> cell(Rng& rng, int m, std::uint64_t cap) const {
        CnfFormula f = base_;
        for (int i = 0; i < m; ++i) {
            std::vector<int> vars;
            for (int v : support_)
                if (random_bit(rng)) vars.push_back(v);
            f.add_xor(vars, random_bit(rng));
        }
        DpllSolver s(f);
        std::vector<Assignment> out;
        s.enumerate(assumptions_, cap, [&](const Assignment& a) {
            out.emplace_back(a.begin(), a.begin() + base_.num_vars() + 1);
            return true;
        });
        return out;
    }
};

/// One model of `f` (restricted to `assumptions`), drawn uniformly or by
/// cfg.weight. Exact mode enumerates up to cfg.exact_cap models and falls
/// back to hashing beyond it.
inline SampleResult sample_model(const CnfFormula& f, const SamplerConfig& cfg, Rng& rng, std::vector<int> support = {},
                                 std::vector<Lit> assumptions = {}) {
    cfg.validate();
    if (cfg.mode == SamplerMode::exact) {
        auto models = enumerate_models(f, cfg.exact_cap, assumptions);
        if (models) {
            if (models->empty()) return {SampleStatus::no_model, {}};
            return {SampleStatus::ok, std::move((*models)[detail::weighted_pick(*models, cfg.weight, rng)])};
        }
    }
    XorSampler xs(f, std::move(support), cfg, rng, std::move(assumptions));
    return xs.draw(rng);
}

// ---------------------------------------------------------------------------
// Paths

enum class PathWeighting { uniform_paths, weighted };

template <class S>
struct PathSample {
    SampleStatus status = SampleStatus::fail;
    BasicPath<S> path{S{}};
};

namespace detail {

template <class S>
PathSample<S> checked_path(const AdviceCnf<S>& cnf, const Advice<S>* adv, const BasicPath<S>& prefix, const Assignment& m) {
    PathSample<S> out;
    out.path = cnf.encoding.decode(m);
    if (!out.path.has_prefix(prefix)) throw ContractViolation("sampled path does not extend the prefix");
    if (adv && adv->evaluate && !adv->evaluate(out.path))
        throw ContractViolation("sampled path violates the advice predicate");
    out.status = SampleStatus::ok;
    return out;
}

}  // namespace detail

/// A length-H path of the advice CNF extending `prefix`. In weighted mode
/// the draw is reweighted by `path_weight` via rejection; path_weight must
/// not exceed cfg.weight_bound.
template <class S>
PathSample<S> sample_advice_path(const AdviceCnf<S>& cnf, const BasicPath<S>& prefix, PathWeighting weighting,
                                 const std::function<double(const BasicPath<S>&)>& path_weight,
                                 const SamplerConfig& cfg, Rng& rng, const Advice<S>* adv = nullptr) {
    SamplerConfig c = cfg;
    if (weighting == PathWeighting::weighted) {
        if (!path_weight) throw ValidationError("weighted path sampling needs a weight function");
        const auto& dec = cnf.encoding.decode;
        c.weight = [dec, path_weight](const Assignment& m) { return path_weight(dec(m)); };
    } else {
        c.weight = nullptr;
    }
    const auto lits = cnf.encoding.encode(prefix);
    auto r = sample_model(cnf.formula, c, rng, cnf.encoding.support, lits);
    if (r.status != SampleStatus::ok) return {r.status, BasicPath<S>(prefix.first())};
    return detail::checked_path(cnf, adv, prefix, r.model);
}

/// All models of one advice CNF, enumerated once and filtered per prefix.
/// Draws are exactly uniform over the models extending the prefix.
template <class S>
class ModelCache {
public:
    ModelCache(const AdviceCnf<S>& cnf, std::uint64_t cap) : cnf_(cnf) {
        auto models = enumerate_models(cnf.formula, cap);
        if (!models) throw CapacityError("model cache: more than " + std::to_string(cap) + " models");
        models_ = std::move(*models);
    }

    std::size_t size() const { return models_.size(); }

    PathSample<S> sample(const BasicPath<S>& prefix, Rng& rng, const Advice<S>* adv = nullptr) const {
        const Assignment* m = pick(prefix, rng);
        if (!m) return {SampleStatus::no_model, BasicPath<S>(prefix.first())};
        return detail::checked_path(cnf_, adv, prefix, *m);
    }

    /// Uniformly chosen model extending `prefix`, or null when there is none.
    const Assignment* pick(const BasicPath<S>& prefix, Rng& rng) const {
        const auto lits = cnf_.encoding.encode(prefix);
        std::vector<std::size_t> hits;
        for (std::size_t i = 0; i < models_.size(); ++i) {
            const auto& m = models_[i];
            if (std::all_of(lits.begin(), lits.end(), [&](Lit l) { return lit_true(m, l); })) hits.push_back(i);
        }
        if (hits.empty()) return nullptr;
        return &models_[hits[static_cast<std::size_t>(random_index(rng, hits.size()))]];
    }

private:
    AdviceCnf<S> cnf_;
    std::vector<Assignment> models_;
};

}  // namespace symadv
