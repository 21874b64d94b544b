// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <map>
#include <optional>
#include <stdexcept>

namespace distinv::test {

namespace {

// Splits p = coeff * v + rest; throws if p is not affine in v with a
// constant coefficient.
std::pair<Rat, Polynomial> split_on(const Polynomial& p, const VarId& v) {
    Rat coeff = 0;
    Polynomial rest;
    for (const auto& [mono, c] : p.terms()) {
        bool has_v = false;
        for (const auto& [var, e] : mono) {
            if (var == v) {
                if (e != 1 || mono.size() != 1) {
                    throw std::invalid_argument("fm oracle: system is not affine");
                }
                has_v = true;
            }
        }
        if (has_v) {
            coeff = c;
        } else {
            ring::Polynomial term = Polynomial::constant(c);
            for (const auto& [var, e] : mono) {
                for (int q = 0; q < e; ++q) {
                    term = term * Polynomial::var(var);
                }
            }
            rest += term;
        }
    }
    return {coeff, rest};
}

// Positive scaling to a canonical representative so duplicates produced by
// the elimination collapse; keeps the growth of the method in check.
Ineq normalized(Ineq c) {
    const auto& ts = c.p.terms();
    if (!ts.empty()) {
        Rat lead = ts.begin()->second;
        if (lead < 0) {
            lead = -lead;
        }
        c.p = c.p * (Rat(1) / lead);
    }
    return c;
}

// Drops satisfied constant rows, merges duplicates (strict wins) and
// reports infeasibility (nullopt) on a violated constant row.
std::optional<std::vector<Ineq>> compact(std::vector<Ineq> rows) {
    std::map<std::string, size_t> seen;
    std::vector<Ineq> out;
    for (auto& c : rows) {
        if (c.p.is_zero() || c.p.is_constant()) {
            Rat v = c.p.is_zero() ? Rat(0) : c.p.eval({});
            if (c.strict ? v <= 0 : v < 0) {
                return std::nullopt;
            }
            continue;
        }
        Ineq n = normalized(std::move(c));
        std::string key = n.p.str();
        auto [it, fresh] = seen.emplace(std::move(key), out.size());
        if (fresh) {
            out.push_back(std::move(n));
        } else {
            out[it->second].strict = out[it->second].strict || n.strict;
        }
    }
    return out;
}

}  // namespace

bool fm_feasible(std::vector<Ineq> system, std::vector<VarId> vars) {
    while (!vars.empty()) {
        auto reduced = compact(std::move(system));
        if (!reduced) {
            return false;
        }
        system = std::move(*reduced);

        // eliminate the variable producing the fewest new rows
        size_t best = 0;
        long best_cost = -1;
        for (size_t i = 0; i < vars.size(); ++i) {
            long lo = 0, up = 0;
            for (const auto& c : system) {
                Rat coeff = split_on(c.p, vars[i]).first;
                lo += coeff > 0;
                up += coeff < 0;
            }
            long cost = lo * up - lo - up;
            if (best_cost < 0 || cost < best_cost) {
                best = i;
                best_cost = cost;
            }
        }
        VarId v = vars[best];
        vars.erase(vars.begin() + long(best));

        std::vector<Ineq> lower;  // coeff > 0:  v >= -rest/coeff  (or >)
        std::vector<Ineq> upper;  // coeff < 0:  v <= -rest/coeff  (or <)
        std::vector<Ineq> rest;
        for (auto& c : system) {
            auto [coeff, r] = split_on(c.p, v);
            if (coeff == 0) {
                rest.push_back(std::move(c));
            } else if (coeff > 0) {
                lower.push_back({r * (Rat(1) / coeff), c.strict});
            } else {
                upper.push_back({r * (Rat(-1) / coeff), c.strict});
            }
        }
        // each pair lower <= v <= upper becomes upper_bound - lower_bound >= 0
        for (const auto& lo : lower) {
            for (const auto& up : upper) {
                // lo:  v + lo.p >= 0   =>  v >= -lo.p
                // up: -v + up.p >= 0   =>  v <=  up.p
                rest.push_back({up.p + lo.p, lo.strict || up.strict});
            }
        }
        system = std::move(rest);
    }
    for (const auto& c : system) {
        if (!c.p.is_constant() && !c.p.is_zero()) {
            throw std::invalid_argument("fm oracle: leftover variables");
        }
        Rat v = c.p.is_zero() ? Rat(0) : c.p.eval({});
        if (c.strict ? v <= 0 : v < 0) {
            return false;
        }
    }
    return true;
}

bool entails(const std::vector<Polynomial>& rows, const Polynomial& cons,
             const std::vector<VarId>& vars) {
    std::vector<Ineq> sys;
    for (const auto& r : rows) {
        sys.push_back({r, false});
    }
    sys.push_back({-cons, true});  // cons < 0
    return !fm_feasible(std::move(sys), vars);
}

Rat random_rat(Rng& rng, int lo, int hi, int den) {
    std::uniform_int_distribution<int> num_d(lo, hi);
    std::uniform_int_distribution<int> den_d(1, den);
    Rat r(num_d(rng), den_d(rng));
    r.canonicalize();
    return r;
}

Polynomial random_affine(Rng& rng, const std::vector<VarId>& vars, int lo, int hi, int den) {
    Polynomial p = Polynomial::constant(random_rat(rng, lo, hi, den));
    for (const VarId& v : vars) {
        p += Polynomial::var(v) * random_rat(rng, lo, hi, den);
    }
    return p;
}

model::Mdp random_mdp(Rng& rng, int n, int max_actions) {
    model::Mdp m;
    for (int s = 0; s < n; ++s) {
        m.states.push_back("s" + std::to_string(s));
    }
    std::uniform_int_distribution<int> act_d(1, max_actions);
    std::uniform_int_distribution<int> w_d(0, 5);
    int n_actions = max_actions;
    for (int a = 0; a < n_actions; ++a) {
        m.actions.push_back("a" + std::to_string(a));
    }
    m.avail.resize(size_t(n));
    m.delta.resize(size_t(n));
    for (int s = 0; s < n; ++s) {
        int k = act_d(rng);
        for (int a = 0; a < k; ++a) {
            m.avail[size_t(s)].push_back(a);
            // random nonnegative weights, at least one positive, normalized
            std::vector<Rat> row(static_cast<size_t>(n));
            Rat total = 0;
            for (int t = 0; t < n; ++t) {
                row[size_t(t)] = w_d(rng);
                total += row[size_t(t)];
            }
            if (total == 0) {
                row[size_t(s)] = 1;
                total = 1;
            }
            for (auto& w : row) {
                w /= total;
            }
            m.delta[size_t(s)].push_back(std::move(row));
        }
    }
    m.validate();
    return m;
}

model::StateDist random_dist(Rng& rng, int n) {
    std::uniform_int_distribution<int> w_d(0, 7);
    model::StateDist mu;
    mu.p.resize(size_t(n));
    Rat total = 0;
    for (auto& w : mu.p) {
        w = w_d(rng);
        total += w;
    }
    if (total == 0) {
        mu.p[0] = 1;
        total = 1;
    }
    for (auto& w : mu.p) {
        w /= total;
    }
    mu.validate();
    return mu;
}

certificate::MemorylessStrategy random_strategy(Rng& rng, const model::Mdp& m) {
    std::uniform_int_distribution<int> w_d(0, 5);
    certificate::MemorylessStrategy strat;
    strat.probs.resize(size_t(m.num_states()));
    for (int s = 0; s < m.num_states(); ++s) {
        size_t k = m.avail[size_t(s)].size();
        std::vector<Rat> row(k);
        Rat total = 0;
        for (auto& w : row) {
            w = w_d(rng);
            total += w;
        }
        if (total == 0) {
            row[0] = 1;
            total = 1;
        }
        for (auto& w : row) {
            w /= total;
        }
        strat.probs[size_t(s)] = std::move(row);
    }
    strat.validate(m);
    return strat;
}

}  // namespace distinv::test
