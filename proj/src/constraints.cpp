// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "distinv/constraints.hpp"

#include <set>
#include <sstream>

namespace distinv::constraints {

using model::InitialSpec;
using model::StrategyMode;
using ring::VarKind;

namespace {

Polynomial affine_to_poly(const model::AffineExpr& e) {
    Polynomial p = Polynomial::constant(e.constant);
    for (size_t i = 0; i < e.coeffs.size(); ++i) {
        if (e.coeffs[i] != 0) {
            p += Polynomial::var(VarId::state(int(i))) * e.coeffs[i];
        }
    }
    return p;
}

Polynomial affine_template(const VarId& constant_var,
                           const std::function<VarId(int)>& coeff_var, int n,
                           const std::vector<Polynomial>& x) {
    Polynomial p = Polynomial::var(constant_var);
    for (int i = 0; i < n; ++i) {
        p += Polynomial::var(coeff_var(i)) * x[i];
    }
    return p;
}

}  // namespace

TemplateSet make_templates(const SynthesisProblem& prob) {
    const Mdp& m = prob.mdp;
    int n = m.num_states();
    TemplateSet tpl;
    tpl.mode = prob.mode;
    tpl.n_inv = prob.invariant_size;

    std::vector<Polynomial> x;
    for (int i = 0; i < n; ++i) {
        x.push_back(Polynomial::var(VarId::state(i)));
    }

    for (int i = 0; i < tpl.n_inv; ++i) {
        tpl.invariant.push_back(affine_template(
            VarId::inv_coeff(i, 0), [i](int j) { return VarId::inv_coeff(i, j + 1); }, n, x));
        for (int j = 0; j <= n; ++j) {
            tpl.variables.push_back(VarId::inv_coeff(i, j));
        }
    }

    if (prob.mode == StrategyMode::Memoryless) {
        tpl.prob.resize(n);
        for (int s = 0; s < n; ++s) {
            for (int a : m.avail[s]) {
                if (m.multi_action(s)) {
                    tpl.prob[s].push_back(Polynomial::var(VarId::strat_prob(s, a)));
                    tpl.variables.push_back(VarId::strat_prob(s, a));
                } else {
                    tpl.prob[s].push_back(Polynomial::constant(1));
                }
            }
        }
    } else {
        tpl.numer.resize(n);
        tpl.denom.resize(n);
        for (int s = 0; s < n; ++s) {
            if (!m.multi_action(s)) {
                continue;
            }
            for (int a : m.avail[s]) {
                tpl.numer[s].push_back(affine_template(
                    VarId::numer_coeff(s, a, 0),
                    [s, a](int k) { return VarId::numer_coeff(s, a, k + 1); }, n, x));
                for (int k = 0; k <= n; ++k) {
                    tpl.variables.push_back(VarId::numer_coeff(s, a, k));
                }
            }
            tpl.denom[s] = affine_template(
                VarId::denom_coeff(s, 0), [s](int k) { return VarId::denom_coeff(s, k + 1); }, n,
                x);
            for (int k = 0; k <= n; ++k) {
                tpl.variables.push_back(VarId::denom_coeff(s, k));
            }
        }
    }

    if (prob.initial.kind != InitialSpec::Kind::Fixed) {
        for (int s = 0; s < n; ++s) {
            tpl.initial_vars.push_back(VarId::initial_prob(s));
            tpl.variables.push_back(VarId::initial_prob(s));
        }
    }
    std::sort(tpl.variables.begin(), tpl.variables.end());
    return tpl;
}

std::vector<Polynomial> step_apply(const Mdp& m,
                                   const std::function<Polynomial(int, int)>& prob,
                                   const std::vector<Polynomial>& x) {
    int n = m.num_states();
    std::vector<Polynomial> next(n);
    for (int k = 0; k < n; ++k) {
        for (size_t a = 0; a < m.avail[k].size(); ++a) {
            Polynomial mass = prob(k, int(a)) * x[k];
            for (int i = 0; i < n; ++i) {
                const Rat& d = m.delta[k][a][i];
                if (d != 0) {
                    next[i] += mass * d;
                }
            }
        }
    }
    return next;
}

std::vector<Polynomial> step_symbolic(const Mdp& m, const TemplateSet& tpl) {
    if (tpl.mode != StrategyMode::Memoryless) {
        throw std::invalid_argument(
            "step_symbolic yields plain polynomials only for memoryless strategies; "
            "distribution strategies go through clear_denominators");
    }
    std::vector<Polynomial> x;
    for (int i = 0; i < m.num_states(); ++i) {
        x.push_back(Polynomial::var(VarId::state(i)));
    }
    return step_apply(m, [&](int s, int k) { return tpl.prob[s][k]; }, x);
}

Polynomial clear_denominators(const Polynomial& conjunct, const Mdp& m, const TemplateSet& tpl) {
    int n = m.num_states();
    std::vector<int> multi;
    for (int s = 0; s < n; ++s) {
        if (m.multi_action(s)) {
            multi.push_back(s);
        }
    }
    // D(x) and, per multi-action state, the product of all other denominators.
    Polynomial d_all = Polynomial::constant(1);
    for (int s : multi) {
        d_all = d_all * tpl.denom[s];
    }
    std::map<int, Polynomial> d_without;
    for (int s : multi) {
        Polynomial p = Polynomial::constant(1);
        for (int t : multi) {
            if (t != s) {
                p = p * tpl.denom[t];
            }
        }
        d_without[s] = p;
    }

    // Cleared one-step mass: D(x) * step_i(x) expanded without fractions.
    std::vector<Polynomial> cleared(n);
    for (int k = 0; k < n; ++k) {
        Polynomial xk = Polynomial::var(VarId::state(k));
        for (size_t ai = 0; ai < m.avail[k].size(); ++ai) {
            Polynomial weight =
                m.multi_action(k) ? tpl.numer[k][ai] * d_without.at(k) : d_all;
            Polynomial mass = weight * xk;
            for (int i = 0; i < n; ++i) {
                const Rat& d = m.delta[k][ai][i];
                if (d != 0) {
                    cleared[i] += mass * d;
                }
            }
        }
    }

    // Apply the affine conjunct to the cleared step.
    std::set<VarId> xs;
    for (int i = 0; i < n; ++i) {
        xs.insert(VarId::state(i));
    }
    if (conjunct.degree_in(xs) > 1) {
        throw std::invalid_argument("invariant conjunct is not affine in the state variables");
    }
    Polynomial result;
    for (const auto& [mono, coeff] : conjunct.collect(xs)) {
        if (mono.empty()) {
            result += coeff * d_all;
        } else {
            result += coeff * cleared[mono.front().first.i];
        }
    }
    return result;
}

namespace {

struct Builder {
    const SynthesisProblem& prob;
    const TemplateSet& tpl;
    bool strengthen;
    ConstraintSystem sys;
    std::vector<Polynomial> x;
    std::vector<Polynomial> antecedent_base;
    std::vector<Polynomial> safe_rows;  // normalized H conjuncts over x

    Builder(const SynthesisProblem& p, const TemplateSet& t, bool str)
        : prob(p), tpl(t), strengthen(str) {
        int n = p.mdp.num_states();
        sys.handelman_degree = p.handelman_degree;
        for (int i = 0; i < n; ++i) {
            sys.state_vars.push_back(VarId::state(i));
            x.push_back(Polynomial::var(VarId::state(i)));
        }
        for (const auto& inv : tpl.invariant) {
            antecedent_base.push_back(inv);
        }
        Polynomial sum;
        for (const auto& xi : x) {
            antecedent_base.push_back(xi);
            sum += xi;
        }
        antecedent_base.push_back(sum - Polynomial::constant(1));
        antecedent_base.push_back(Polynomial::constant(1) - sum);
        antecedent_base.push_back(Polynomial::constant(1));
        for (const auto& h : model::normalize(p.safe.conjuncts)) {
            safe_rows.push_back(affine_to_poly(h.expr));
        }
    }

    std::vector<Polynomial> antecedent(bool with_safe) const {
        std::vector<Polynomial> rows = antecedent_base;
        if (with_safe) {
            rows.insert(rows.end(), safe_rows.begin(), safe_rows.end());
        }
        return rows;
    }

    void ground(Polynomial p, GroundRel rel, std::string label) {
        sys.ground.push_back({std::move(p), rel, std::move(label)});
    }

    /// Simplex ground constraints for a vector of entry polynomials.
    void ground_simplex(const std::vector<Polynomial>& entries, const std::string& tag) {
        Polynomial sum;
        for (size_t i = 0; i < entries.size(); ++i) {
            ground(entries[i], GroundRel::Geq, tag + "-nonneg[" + std::to_string(i) + "]");
            sum += entries[i];
        }
        ground(sum - Polynomial::constant(1), GroundRel::Eq, tag + "-sum");
    }

    std::vector<Polynomial> initial_entries() const {
        std::vector<Polynomial> mu0;
        if (prob.initial.kind == InitialSpec::Kind::Fixed) {
            for (const auto& v : prob.initial.fixed->p) {
                mu0.push_back(Polynomial::constant(v));
            }
        } else {
            for (const auto& v : tpl.initial_vars) {
                mu0.push_back(Polynomial::var(v));
            }
        }
        return mu0;
    }

    Polynomial at(const Polynomial& over_x, const std::vector<Polynomial>& point) const {
        std::map<VarId, Polynomial> sigma;
        for (size_t i = 0; i < point.size(); ++i) {
            sigma[VarId::state(int(i))] = point[i];
        }
        return over_x.substitute(sigma);
    }

    void add_initial_spec_constraints(const std::vector<Polynomial>& mu0) {
        if (prob.initial.kind == InitialSpec::Kind::Fixed) {
            return;
        }
        ground_simplex(mu0, "init");
        if (prob.initial.kind == InitialSpec::Kind::Constrained) {
            int i = 0;
            for (const auto& c : model::normalize(prob.initial.constraints)) {
                ground(at(affine_to_poly(c.expr), mu0), GroundRel::Geq,
                       "init-constraint[" + std::to_string(i++) + "]");
            }
        }
    }

    void add_strategy_constraints() {
        const Mdp& m = prob.mdp;
        if (prob.mode == StrategyMode::Memoryless) {
            for (int s = 0; s < m.num_states(); ++s) {
                if (!m.multi_action(s)) {
                    continue;
                }
                Polynomial sum;
                for (size_t k = 0; k < m.avail[s].size(); ++k) {
                    ground(tpl.prob[s][k], GroundRel::Geq,
                           "strat[" + m.states[s] + "," + m.actions[m.avail[s][k]] + "]");
                    sum += tpl.prob[s][k];
                }
                ground(sum - Polynomial::constant(1), GroundRel::Eq,
                       "strat-row[" + m.states[s] + "]");
            }
        } else {
            auto rows = antecedent(false);
            for (int s = 0; s < m.num_states(); ++s) {
                if (!m.multi_action(s)) {
                    continue;
                }
                Polynomial sum;
                for (size_t k = 0; k < m.avail[s].size(); ++k) {
                    sys.implications.push_back(
                        {Implication::Route::Farkas,
                         "strat-num[" + m.states[s] + "," + m.actions[m.avail[s][k]] + "]", rows,
                         tpl.numer[s][k]});
                    sum += tpl.numer[s][k];
                }
                sys.implications.push_back({Implication::Route::Farkas,
                                            "strat-den[" + m.states[s] + "]", rows,
                                            tpl.denom[s] - Polynomial::constant(1)});
                sys.implications.push_back({Implication::Route::Farkas,
                                            "strat-total-ub[" + m.states[s] + "]", rows,
                                            tpl.denom[s] - sum});
                sys.implications.push_back({Implication::Route::Farkas,
                                            "strat-total-lb[" + m.states[s] + "]", rows,
                                            sum - tpl.denom[s]});
            }
        }
    }

    void add_unroll_prefix() {
        const Mdp& m = prob.mdp;
        int n = m.num_states();
        int u = prob.unroll;
        std::vector<Polynomial> mu = initial_entries();
        for (int t = 0; t < u; ++t) {
            // mu_t stays in the simplex and in H
            ground_simplex(mu, "unroll-dist[" + std::to_string(t) + "]");
            int hi = 0;
            for (const auto& h : safe_rows) {
                ground(at(h, mu), GroundRel::Geq,
                       "unroll-safe[" + std::to_string(t) + "," + std::to_string(hi++) + "]");
            }
            // one-step strategy variables for step t
            for (int s = 0; s < n; ++s) {
                if (!m.multi_action(s)) {
                    continue;
                }
                Polynomial sum;
                for (int a : m.avail[s]) {
                    Polynomial q = Polynomial::var(VarId::unroll_prob(t, s, a));
                    ground(q, GroundRel::Geq,
                           "unroll-strat[" + std::to_string(t) + "," + m.states[s] + "," +
                               m.actions[a] + "]");
                    sum += q;
                }
                ground(sum - Polynomial::constant(1), GroundRel::Eq,
                       "unroll-strat-row[" + std::to_string(t) + "," + m.states[s] + "]");
            }
            auto prob_fn = [&](int s, int k) {
                return m.multi_action(s)
                           ? Polynomial::var(VarId::unroll_prob(t, s, m.avail[s][k]))
                           : Polynomial::constant(1);
            };
            std::vector<Polynomial> next = step_apply(m, prob_fn, mu);
            std::vector<Polynomial> mu_next;
            for (int i = 0; i < n; ++i) {
                mu_next.push_back(Polynomial::var(VarId::unroll_dist(t + 1, i)));
                ground(mu_next[i] - next[i], GroundRel::Eq,
                       "unroll-step[" + std::to_string(t) + "," + m.states[i] + "]");
            }
            mu = std::move(mu_next);
        }
        ground_simplex(mu, "unroll-dist[" + std::to_string(u) + "]");
        // invariant membership is required at the end of the unrolled prefix
        for (int i = 0; i < tpl.n_inv; ++i) {
            ground(at(tpl.invariant[i], mu), GroundRel::Geq, "initial[" + std::to_string(i) + "]");
        }
    }

    void add_initial_constraints() {
        std::vector<Polynomial> mu0 = initial_entries();
        add_initial_spec_constraints(mu0);
        if (prob.unroll > 0) {
            add_unroll_prefix();
            return;
        }
        for (int i = 0; i < tpl.n_inv; ++i) {
            ground(at(tpl.invariant[i], mu0), GroundRel::Geq,
                   "initial[" + std::to_string(i) + "]");
        }
    }

    void add_inductiveness() {
        auto rows = antecedent(strengthen);
        if (prob.mode == StrategyMode::Memoryless) {
            std::vector<Polynomial> next = step_symbolic(prob.mdp, tpl);
            for (int i = 0; i < tpl.n_inv; ++i) {
                sys.implications.push_back({Implication::Route::Farkas,
                                            "inductive[" + std::to_string(i) + "]", rows,
                                            at(tpl.invariant[i], next)});
            }
        } else {
            for (int i = 0; i < tpl.n_inv; ++i) {
                sys.implications.push_back({Implication::Route::Handelman,
                                            "inductive[" + std::to_string(i) + "]", rows,
                                            clear_denominators(tpl.invariant[i], prob.mdp, tpl)});
            }
        }
    }

    void add_safety() {
        auto rows = antecedent(false);
        for (size_t i = 0; i < safe_rows.size(); ++i) {
            sys.implications.push_back({Implication::Route::Farkas,
                                        "safe[" + std::to_string(i) + "]", rows, safe_rows[i]});
        }
    }

    // Redundant cuts: any certificate keeps the induced orbit inside H, so
    // H(mu_t) holds for every t. Adding the first few steps as ground
    // constraints preserves satisfiability exactly and lets the solver
    // refute infeasible strategy regions without touching the multipliers.
    void add_orbit_cuts() {
        if (prob.mode != StrategyMode::Memoryless || prob.unroll > 0) {
            return;
        }
        const Mdp& m = prob.mdp;
        std::vector<Polynomial> mu = initial_entries();
        for (int t = 1; t <= m.num_states(); ++t) {
            mu = step_apply(m, [&](int s, int k) { return tpl.prob[s][k]; }, mu);
            for (size_t hi = 0; hi < safe_rows.size(); ++hi) {
                Polynomial cut = at(safe_rows[hi], mu);
                // keep concrete cuts only when they refute the problem outright
                if (cut.vars().empty() && cut.eval({}) >= 0) {
                    continue;
                }
                ground(std::move(cut), GroundRel::Geq,
                       "orbit[" + std::to_string(t) + "," + std::to_string(hi) + "]");
            }
        }
    }

    void add_hints() {
        if (prob.hints.empty()) {
            return;
        }
        // all template-kind variables of the system, by canonical name
        std::map<std::string, VarId> by_name;
        auto note = [&](const Polynomial& p) {
            for (const auto& v : p.vars()) {
                if (v.kind == VarKind::Template) {
                    by_name.emplace(ring::var_name(v), v);
                }
            }
        };
        for (const auto& g : sys.ground) {
            note(g.poly);
        }
        for (const auto& imp : sys.implications) {
            for (const auto& row : imp.antecedent) {
                note(row);
            }
            note(imp.consequent);
        }
        for (const auto& [name, value] : prob.hints) {
            auto it = by_name.find(name);
            if (it == by_name.end()) {
                throw ParseError("hint references unknown template variable: " + name);
            }
            ground(Polynomial::var(it->second) - Polynomial::constant(value), GroundRel::Eq,
                   "hint[" + name + "]");
        }
    }
};

}  // namespace

ConstraintSystem build_system(const SynthesisProblem& prob, const TemplateSet& tpl,
                              bool strengthen) {
    if (tpl.n_inv != prob.invariant_size || tpl.mode != prob.mode) {
        throw std::invalid_argument("template set does not match the synthesis problem");
    }
    Builder b(prob, tpl, strengthen);
    b.add_strategy_constraints();
    b.add_initial_constraints();
    b.add_inductiveness();
    b.add_safety();
    b.add_orbit_cuts();
    b.add_hints();
    return b.sys;
}

std::string ConstraintSystem::dump(const ring::Namer& namer) const {
    std::ostringstream out;
    for (const auto& g : ground) {
        out << g.label << ": " << g.poly.str(namer) << (g.rel == GroundRel::Eq ? " = 0" : " >= 0")
            << "\n";
    }
    for (const auto& imp : implications) {
        out << imp.label << " ["
            << (imp.route == Implication::Route::Farkas ? "farkas" : "handelman") << "]: ";
        bool first = true;
        for (const auto& row : imp.antecedent) {
            if (!first) {
                out << " /\\ ";
            }
            first = false;
            out << row.str(namer) << " >= 0";
        }
        out << " ==> " << imp.consequent.str(namer) << " >= 0\n";
    }
    return out.str();
}

std::string ConstraintSystem::dump() const {
    return dump(ring::var_name);
}

}  // namespace distinv::constraints
