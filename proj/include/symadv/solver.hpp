#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "symadv/cnf.hpp"

namespace symadv {

/// DPLL with two watched literals and chronological backtracking. Decisions
/// follow a static variable order (ascending index unless given) and try
/// `true` first, so every run is deterministic.
class DpllSolver {
public:
    explicit DpllSolver(const CnfFormula& f, std::vector<int> order = {}) : n_(f.num_vars()) {
        if (order.empty()) {
            order.resize(static_cast<std::size_t>(n_));
            for (int v = 1; v <= n_; ++v) order[static_cast<std::size_t>(v - 1)] = v;
        } else {
            std::vector<bool> seen(static_cast<std::size_t>(n_) + 1, false);
            for (int v : order) {
                if (v < 1 || v > n_ || seen[static_cast<std::size_t>(v)]) throw ValidationError("solver: bad variable order");
                seen[static_cast<std::size_t>(v)] = true;
            }
            for (int v = 1; v <= n_; ++v)
                if (!seen[static_cast<std::size_t>(v)]) order.push_back(v);
        }
        order_ = std::move(order);
        watches_.resize(2 * static_cast<std::size_t>(n_) + 2);
        val_.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (const auto& c : f.clauses()) {
            if (c.size() == 1) {
                units_.push_back(c[0]);
                continue;
            }
            const auto id = clauses_.size();
            clauses_.push_back(c);
            watches_[widx(c[0])].push_back(id);
            watches_[widx(c[1])].push_back(id);
        }
    }

    int num_vars() const { return n_; }

    /// Satisfiability under extra unit assumptions.
    bool solve(std::span<const Lit> assumptions = {}) {
        bool found = false;
        run(assumptions, [&](const std::vector<signed char>&) {
            found = true;
            return false;
        });
        return found;
    }

    /// The model found by the last successful solve().
    const Assignment& model() const { return model_; }

    /// Calls `on_model` for every model (full assignments) under the
    /// assumptions until it returns false or `cap` models were seen. Returns
    /// the number of models visited.
    std::uint64_t enumerate(std::span<const Lit> assumptions, std::uint64_t cap,
                            const std::function<bool(const Assignment&)>& on_model) {
        std::uint64_t count = 0;
        run(assumptions, [&](const std::vector<signed char>&) {
            ++count;
            const bool more = on_model ? on_model(model_) : true;
            return more && count < cap;
        });
        return count;
    }

    std::uint64_t decisions() const { return decisions_; }

private:
    struct Level {
        std::size_t trail_start;
        std::size_t order_pos;
        Lit decision;
        bool flipped;
    };

    int n_;
    std::vector<int> order_;
    std::vector<std::vector<Lit>> clauses_;
    std::vector<Lit> units_;
    std::vector<std::vector<std::size_t>> watches_;
    std::vector<signed char> val_;  // 0 unassigned, 1 true, -1 false
    std::vector<Lit> trail_;
    std::size_t qhead_ = 0;
    std::vector<Level> levels_;
    Assignment model_;
    std::uint64_t decisions_ = 0;

    std::size_t widx(Lit l) const { return 2 * static_cast<std::size_t>(var_of(l)) + (l < 0 ? 1 : 0); }
    signed char value(Lit l) const {
        const signed char v = val_[static_cast<std::size_t>(var_of(l))];
        return l > 0 ? v : static_cast<signed char>(-v);
    }
    bool assign(Lit l) {
        const signed char v = value(l);
        if (v == 1) return true;
        if (v == -1) return false;
        val_[static_cast<std::size_t>(var_of(l))] = l > 0 ? 1 : -1;
        trail_.push_back(l);
        return true;
    }

    // Unit propagation from qhead_; false on conflict.
    bool propagate() {
        while (qhead_ < trail_.size()) {
            const Lit p = trail_[qhead_++];
            const Lit falsified = -p;
            auto& ws = watches_[widx(falsified)];
            std::size_t keep = 0;
            bool conflict = false;
            for (std::size_t i = 0; i < ws.size(); ++i) {
                const std::size_t cid = ws[i];
                if (conflict) {
                    ws[keep++] = cid;
                    continue;
                }
                auto& c = clauses_[cid];
                if (c[0] == falsified) std::swap(c[0], c[1]);
                if (value(c[0]) == 1) {
                    ws[keep++] = cid;
                    continue;
                }
                bool moved = false;
                for (std::size_t k = 2; k < c.size(); ++k) {
                    if (value(c[k]) != -1) {
                        std::swap(c[1], c[k]);
                        watches_[widx(c[1])].push_back(cid);
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                ws[keep++] = cid;
                if (!assign(c[0])) conflict = true;
            }
            ws.resize(keep);
            if (conflict) return false;
        }
        return true;
    }

    void undo_to(std::size_t trail_size) {
        while (trail_.size() > trail_size) {
            val_[static_cast<std::size_t>(var_of(trail_.back()))] = 0;
            trail_.pop_back();
        }
        qhead_ = std::min(qhead_, trail_size);
    }

    // Flip the deepest unflipped decision; false when the space is exhausted.
    bool backtrack() {
        while (!levels_.empty()) {
            Level lv = levels_.back();
            levels_.pop_back();
            undo_to(lv.trail_start);
            if (lv.flipped) continue;
            lv.flipped = true;
            lv.decision = -lv.decision;
            levels_.push_back(lv);
            assign(lv.decision);
            if (propagate()) return true;
        }
        return false;
    }

    template <class OnModel>
    void run(std::span<const Lit> assumptions, OnModel&& on_model) {
        undo_to(0);
        levels_.clear();
        qhead_ = 0;
        bool ok = true;
        for (Lit l : units_) ok = ok && assign(l);
        for (Lit l : assumptions) {
            if (l == 0 || var_of(l) > n_) throw ValidationError("solver: assumption out of range");
            ok = ok && assign(l);
        }
        if (!ok || !propagate()) {
            undo_to(0);
            return;
        }
        std::size_t pos = 0;
        while (true) {
            while (pos < order_.size() && val_[static_cast<std::size_t>(order_[pos])] != 0) ++pos;
            if (pos == order_.size()) {
                model_.assign(static_cast<std::size_t>(n_) + 1, false);
                for (int v = 1; v <= n_; ++v) model_[static_cast<std::size_t>(v)] = val_[static_cast<std::size_t>(v)] == 1;
                if (!on_model(val_) || !backtrack()) break;
                pos = levels_.empty() ? 0 : levels_.back().order_pos;
                continue;
            }
            ++decisions_;
            levels_.push_back({trail_.size(), pos, order_[pos], false});
            assign(order_[pos]);
            if (!propagate()) {
                if (!backtrack()) break;
                pos = levels_.back().order_pos;
            }
        }
        undo_to(0);
        levels_.clear();
    }
};

inline std::optional<Assignment> solve(const CnfFormula& f, std::span<const Lit> assumptions = {}) {
    DpllSolver s(f);
    if (!s.solve(assumptions)) return std::nullopt;
    return s.model();
}

struct ModelCount {
    std::uint64_t count = 0;
    bool over_cap = false;
};

/// Exact count when at most `cap`, otherwise over_cap with count = cap + 1.
inline ModelCount count_models(const CnfFormula& f, std::uint64_t cap, std::span<const Lit> assumptions = {}) {
    if (cap < 1) throw ValidationError("count_models: cap must be >= 1");
    DpllSolver s(f);
    const std::uint64_t n = s.enumerate(assumptions, cap + 1, {});
    return {std::min(n, cap + 1), n > cap};
}

/// All models, or nullopt when more than `cap` exist.
inline std::optional<std::vector<Assignment>> enumerate_models(const CnfFormula& f, std::uint64_t cap,
                                                               std::span<const Lit> assumptions = {}) {
    DpllSolver s(f);
    std::vector<Assignment> out;
    const std::uint64_t n = s.enumerate(assumptions, cap + 1, [&](const Assignment& m) {
        out.push_back(m);
        return true;
    });
    if (n > cap) return std::nullopt;
    return out;
}

}  // namespace symadv
