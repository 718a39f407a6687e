#pragma once

#include <algorithm>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "symadv/errors.hpp"

namespace symadv {

/// DIMACS-style literal: +v or -v for variable v >= 1.
using Lit = int;

inline int var_of(Lit l) { return l < 0 ? -l : l; }

class CnfFormula {
public:
    CnfFormula() = default;
    explicit CnfFormula(int num_vars) : num_vars_(num_vars) {
        if (num_vars < 0) throw ValidationError("cnf: negative variable count");
    }

    int num_vars() const { return num_vars_; }
    const std::vector<std::vector<Lit>>& clauses() const { return clauses_; }
    std::size_t num_clauses() const { return clauses_.size(); }

    int new_var() { return ++num_vars_; }
    int new_vars(int n) {
        const int first = num_vars_ + 1;
        num_vars_ += n;
        return first;
    }

    void add_clause(std::vector<Lit> clause) {
        if (clause.empty()) throw ValidationError("cnf: empty clause");
        for (Lit l : clause)
            if (l == 0 || var_of(l) > num_vars_) throw ValidationError("cnf: literal " + std::to_string(l) + " out of range");
        std::sort(clause.begin(), clause.end());
        clause.erase(std::unique(clause.begin(), clause.end()), clause.end());
        for (std::size_t i = 0; i + 1 < clause.size(); ++i)
            if (clause[i] == -clause[i + 1]) return;  // tautology
        clauses_.push_back(std::move(clause));
    }
    void add_unit(Lit l) { add_clause({l}); }

    void add_at_most_one(const std::vector<Lit>& lits) {
        for (std::size_t i = 0; i < lits.size(); ++i)
            for (std::size_t j = i + 1; j < lits.size(); ++j) add_clause({-lits[i], -lits[j]});
    }
    void add_exactly_one(const std::vector<Lit>& lits) {
        if (lits.empty()) throw ValidationError("cnf: exactly-one over no literals");
        add_clause(lits);
        add_at_most_one(lits);
    }

    /// XOR(vars) == parity, Tseitin-chained through fresh variables. The new
    /// variables are functions of `vars`, so model counts are unchanged.
    void add_xor(const std::vector<int>& vars, bool parity) {
        if (vars.empty()) {
            if (parity) {  // 0 == 1: force a contradiction
                const int v = new_var();
                add_unit(v);
                add_unit(-v);
            }
            return;
        }
        int acc = vars.front();
        for (std::size_t i = 1; i < vars.size(); ++i) {
            const int x = vars[i];
            const int t = new_var();  // t <-> acc xor x
            add_clause({-t, acc, x});
            add_clause({-t, -acc, -x});
            add_clause({t, -acc, x});
            add_clause({t, acc, -x});
            acc = t;
        }
        add_unit(parity ? acc : -acc);
    }

    void append(const CnfFormula& other) {
        num_vars_ = std::max(num_vars_, other.num_vars_);
        for (const auto& c : other.clauses_) clauses_.push_back(c);
    }

private:
    int num_vars_ = 0;
    std::vector<std::vector<Lit>> clauses_;
};

/// A full assignment, indexed by variable (entry 0 unused).
using Assignment = std::vector<bool>;

inline bool lit_true(const Assignment& a, Lit l) { return l > 0 ? a[static_cast<std::size_t>(l)] : !a[static_cast<std::size_t>(-l)]; }

inline bool satisfies(const CnfFormula& f, const Assignment& a) {
    for (const auto& c : f.clauses())
        if (std::none_of(c.begin(), c.end(), [&](Lit l) { return lit_true(a, l); })) return false;
    return true;
}

inline CnfFormula read_dimacs(std::istream& in) {
    std::string line;
    int line_no = 0;
    bool header = false;
    int declared_clauses = 0;
    CnfFormula f;
    std::vector<Lit> pending;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first) || first[0] == 'c' || first[0] == '%') continue;
        if (first == "p") {
            std::string fmt;
            int nv = -1;
            if (!(ls >> fmt >> nv >> declared_clauses) || fmt != "cnf" || nv < 0 || declared_clauses < 0)
                throw ValidationError("dimacs line " + std::to_string(line_no) + ": bad header");
            f = CnfFormula(nv);
            header = true;
            continue;
        }
        if (!header) throw ValidationError("dimacs line " + std::to_string(line_no) + ": clause before header");
        ls.clear();
        ls.str(line);
        long v;
        while (ls >> v) {
            if (v == 0) {
                if (pending.empty()) throw ValidationError("dimacs line " + std::to_string(line_no) + ": empty clause");
                f.add_clause(pending);
                pending.clear();
            } else {
                if (std::labs(v) > f.num_vars())
                    throw ValidationError("dimacs line " + std::to_string(line_no) + ": literal out of range");
                pending.push_back(static_cast<Lit>(v));
            }
        }
        if (!ls.eof()) throw ValidationError("dimacs line " + std::to_string(line_no) + ": non-integer token");
    }
    if (!header) throw ValidationError("dimacs: missing header");
    if (!pending.empty()) f.add_clause(pending);
    return f;
}

inline CnfFormula read_dimacs(const std::string& text) {
    std::istringstream in(text);
    return read_dimacs(in);
}

inline void write_dimacs(std::ostream& out, const CnfFormula& f) {
    out << "p cnf " << f.num_vars() << ' ' << f.num_clauses() << '\n';
    for (const auto& c : f.clauses()) {
        for (Lit l : c) out << l << ' ';
        out << "0\n";
    }
}

}  // namespace symadv
