// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "distinv/synth.hpp"

#include <chrono>
#include <optional>

namespace distinv::synth {

using certificate::Certificate;
using certificate::DistStrategy;
using certificate::MemorylessStrategy;
using constraints::TemplateSet;
using model::AffineExpr;
using model::AffineInequality;
using model::InitialSpec;
using model::Mdp;
using model::Rel;
using model::StateDist;
using model::StrategyMode;
using ring::Polynomial;
using ring::VarId;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Rat model_at(const std::map<VarId, Rat>& model, const VarId& v) {
    auto it = model.find(v);
    // variables absent from the system are unconstrained; 0 is a valid choice
    return it == model.end() ? Rat(0) : it->second;
}

}  // namespace

Certificate extract_certificate(const SynthesisProblem& prob, const TemplateSet& tpl,
                                const std::map<VarId, Rat>& model) {
    const Mdp& m = prob.mdp;
    int n = m.num_states();
    Certificate cert;
    for (int i = 0; i < tpl.n_inv; ++i) {
        AffineInequality c;
        c.rel = Rel::Geq;
        c.expr.constant = model_at(model, VarId::inv_coeff(i, 0));
        for (int j = 0; j < n; ++j) {
            c.expr.coeffs.push_back(model_at(model, VarId::inv_coeff(i, j + 1)));
        }
        cert.invariant.push_back(std::move(c));
    }

    bool any_multi = false;
    for (int s = 0; s < n; ++s) {
        any_multi = any_multi || m.multi_action(s);
    }
    if (any_multi && prob.mode == StrategyMode::Memoryless) {
        MemorylessStrategy strat;
        strat.probs.resize(size_t(n));
        for (int s = 0; s < n; ++s) {
            for (int a : m.avail[s]) {
                strat.probs[size_t(s)].push_back(
                    m.multi_action(s) ? model_at(model, VarId::strat_prob(s, a)) : Rat(1));
            }
        }
        strat.validate(m);
        cert.strategy = std::move(strat);
    } else if (any_multi) {
        DistStrategy strat;
        strat.num.resize(size_t(n));
        strat.den.resize(size_t(n));
        for (int s = 0; s < n; ++s) {
            if (!m.multi_action(s)) {
                continue;
            }
            for (int a : m.avail[s]) {
                AffineExpr e;
                e.constant = model_at(model, VarId::numer_coeff(s, a, 0));
                for (int j = 0; j < n; ++j) {
                    e.coeffs.push_back(model_at(model, VarId::numer_coeff(s, a, j + 1)));
                }
                strat.num[size_t(s)].push_back(std::move(e));
            }
            AffineExpr d;
            d.constant = model_at(model, VarId::denom_coeff(s, 0));
            for (int j = 0; j < n; ++j) {
                d.coeffs.push_back(model_at(model, VarId::denom_coeff(s, j + 1)));
            }
            strat.den[size_t(s)] = std::move(d);
        }
        strat.validate(m);
        cert.strategy = std::move(strat);
    }

    if (prob.initial.kind == InitialSpec::Kind::Fixed) {
        cert.initial = *prob.initial.fixed;
    } else {
        for (int s = 0; s < n; ++s) {
            cert.initial.p.push_back(model_at(model, VarId::initial_prob(s)));
        }
        cert.initial.validate();
    }
    return cert;
}

namespace {

using Restriction = std::vector<constraints::GroundConstraint>;

// Pin the leading invariant conjuncts to the rows of H. Whenever any
// certificate exists, conjoining H to it yields another certificate, so
// searching with an H prefix first loses nothing beyond template size.
Restriction pin_safe_rows(const SynthesisProblem& prob) {
    Restriction r;
    int n = prob.mdp.num_states();
    auto rows = model::normalize(prob.safe.conjuncts);
    int count = std::min<int>(prob.invariant_size, int(rows.size()));
    for (int i = 0; i < count; ++i) {
        Polynomial diff = Polynomial::var(VarId::inv_coeff(i, 0)) -
                          Polynomial::constant(rows[size_t(i)].expr.constant);
        r.push_back({diff, constraints::GroundRel::Eq, "pin-safe[" + std::to_string(i) + ",0]"});
        for (int j = 0; j < n; ++j) {
            Polynomial d = Polynomial::var(VarId::inv_coeff(i, j + 1)) -
                           Polynomial::constant(rows[size_t(i)].expr.coeffs[size_t(j)]);
            r.push_back({d, constraints::GroundRel::Eq,
                         "pin-safe[" + std::to_string(i) + "," + std::to_string(j + 1) + "]"});
        }
    }
    return r;
}

// Deterministic strategies as ground equalities; one restriction per
// strategy. The restricted systems collapse to linear ones under presolve.
std::vector<Restriction> pure_strategies(const SynthesisProblem& prob) {
    const Mdp& m = prob.mdp;
    std::vector<int> multi;
    long combos = 1;
    for (int s = 0; s < m.num_states(); ++s) {
        if (m.multi_action(s)) {
            multi.push_back(s);
            combos *= long(m.avail[s].size());
        }
    }
    std::vector<Restriction> out;
    if (multi.empty() || combos > 64) {
        return out;
    }
    for (long pick = 0; pick < combos; ++pick) {
        Restriction r;
        long rest = pick;
        for (int s : multi) {
            long n_a = long(m.avail[s].size());
            long chosen = rest % n_a;
            rest /= n_a;
            for (long k = 0; k < n_a; ++k) {
                int a = m.avail[s][size_t(k)];
                r.push_back({Polynomial::var(VarId::strat_prob(s, a)) -
                                 Polynomial::constant(k == chosen ? 1 : 0),
                             constraints::GroundRel::Eq,
                             "pure[" + m.states[s] + "," + m.actions[a] + "]"});
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

// Sound restrictions of the full system, cheapest first. A Sat answer from
// any of them is genuine; Unsat from a restriction proves nothing and is
// discarded.
std::optional<solver::SolveOutcome> try_restrictions(
    const SynthesisProblem& prob, const constraints::ConstraintSystem& sys,
    const Options& opt) {
    if (!prob.hints.empty()) {
        return std::nullopt;  // the caller pinned variables already
    }
    bool any_multi = false;
    for (int s = 0; s < prob.mdp.num_states(); ++s) {
        any_multi = any_multi || prob.mdp.multi_action(s);
    }
    if (!any_multi) {
        return std::nullopt;  // pure chains solve fastest unrestricted
    }
    std::vector<Restriction> attempts;
    Restriction pin = pin_safe_rows(prob);
    std::vector<Restriction> pure =
        prob.mode == StrategyMode::Memoryless ? pure_strategies(prob)
                                              : std::vector<Restriction>{};
    for (const auto& p : pure) {
        Restriction both = p;
        both.insert(both.end(), pin.begin(), pin.end());
        attempts.push_back(std::move(both));
    }
    if (!pin.empty()) {
        attempts.push_back(pin);
    }
    attempts.insert(attempts.end(), pure.begin(), pure.end());
    if (attempts.empty()) {
        return std::nullopt;
    }
    solver::SolverConfig cfg = opt.solver;
    cfg.timeout_secs = std::max(
        5.0, std::min(20.0, opt.solver.timeout_secs / double(2 * attempts.size())));
    for (const auto& attempt : attempts) {
        constraints::ConstraintSystem restricted = sys;
        restricted.ground.insert(restricted.ground.end(), attempt.begin(), attempt.end());
        qelim::ExistentialSystem esys = qelim::eliminate_all(restricted, prob.handelman_degree);
        solver::SolveOutcome outcome = solver::solve(esys, cfg);
        if (outcome.sat()) {
            return outcome;
        }
    }
    return std::nullopt;
}

}  // namespace

Result synthesize(const SynthesisProblem& prob, const Options& opt) {
    Result res;
    auto t0 = std::chrono::steady_clock::now();
    TemplateSet tpl = constraints::make_templates(prob);
    constraints::ConstraintSystem sys = constraints::build_system(prob, tpl, opt.strengthen);
    qelim::ExistentialSystem esys = qelim::eliminate_all(sys, prob.handelman_degree);
    res.num_variables = int(esys.variables.size());
    res.num_constraints = int(esys.constraints.size());
    res.smt_script = solver::emit_smt(solver::presolve(esys).sys, opt.solver.logic);
    res.build_secs = seconds_since(t0);

    auto t1 = std::chrono::steady_clock::now();
    solver::SolveOutcome outcome;
    std::string note;
    if (auto restricted = try_restrictions(prob, sys, opt)) {
        outcome = std::move(*restricted);
        note = "solution found under a sound search-space restriction";
    }
    if (!outcome.sat()) {
        outcome = solver::solve(esys, opt.solver);
    }
    res.solve_secs = seconds_since(t1);
    res.kind = outcome.kind;
    res.detail = note.empty() ? outcome.detail : note;
    if (outcome.sat()) {
        res.cert = extract_certificate(prob, tpl, outcome.model);
    }
    return res;
}

Result synthesize_fixpoint(const SynthesisProblem& prob, const Options& opt) {
    if (prob.mode != StrategyMode::Memoryless) {
        throw std::invalid_argument("fixpoint synthesis supports memoryless strategies only");
    }
    const Mdp& m = prob.mdp;
    int n = m.num_states();

    Result res;
    auto t0 = std::chrono::steady_clock::now();
    constraints::ConstraintSystem sys;
    auto ground = [&](Polynomial p, constraints::GroundRel rel, std::string label) {
        sys.ground.push_back({std::move(p), rel, std::move(label)});
    };

    // mu: fixed constants or existential entries on the simplex
    std::vector<Polynomial> mu;
    if (prob.initial.kind == InitialSpec::Kind::Fixed) {
        for (const auto& v : prob.initial.fixed->p) {
            mu.push_back(Polynomial::constant(v));
        }
    } else {
        Polynomial sum;
        for (int s = 0; s < n; ++s) {
            mu.push_back(Polynomial::var(VarId::initial_prob(s)));
            ground(mu.back(), constraints::GroundRel::Geq,
                   "fix-nonneg[" + std::to_string(s) + "]");
            sum += mu.back();
        }
        ground(sum - Polynomial::constant(1), constraints::GroundRel::Eq, "fix-sum");
    }
    if (prob.initial.kind == InitialSpec::Kind::Constrained) {
        int i = 0;
        for (const auto& c : model::normalize(prob.initial.constraints)) {
            Polynomial p = Polynomial::constant(c.expr.constant);
            for (int s = 0; s < n; ++s) {
                p += mu[size_t(s)] * c.expr.coeffs[size_t(s)];
            }
            ground(std::move(p), constraints::GroundRel::Geq,
                   "fix-init-constraint[" + std::to_string(i++) + "]");
        }
    }

    // the constant stream sits at mu, so mu itself must lie in H
    {
        int i = 0;
        for (const auto& c : model::normalize(prob.safe.conjuncts)) {
            Polynomial p = Polynomial::constant(c.expr.constant);
            for (int s = 0; s < n; ++s) {
                p += mu[size_t(s)] * c.expr.coeffs[size_t(s)];
            }
            ground(std::move(p), constraints::GroundRel::Geq,
                   "fix-safe[" + std::to_string(i++) + "]");
        }
    }

    // one-step strategy variables
    for (int s = 0; s < n; ++s) {
        if (!m.multi_action(s)) {
            continue;
        }
        Polynomial sum;
        for (int a : m.avail[s]) {
            Polynomial p = Polynomial::var(VarId::strat_prob(s, a));
            ground(p, constraints::GroundRel::Geq,
                   "fix-strat[" + m.states[s] + "," + m.actions[a] + "]");
            sum += p;
        }
        ground(sum - Polynomial::constant(1), constraints::GroundRel::Eq,
               "fix-strat-row[" + m.states[s] + "]");
    }

    // mu = step(mu): bilinear in (mu, p) but purely existential
    auto prob_fn = [&](int s, int k) {
        return m.multi_action(s) ? Polynomial::var(VarId::strat_prob(s, m.avail[s][k]))
                                 : Polynomial::constant(1);
    };
    std::vector<Polynomial> next = constraints::step_apply(m, prob_fn, mu);
    for (int i = 0; i < n; ++i) {
        ground(next[size_t(i)] - mu[size_t(i)], constraints::GroundRel::Eq,
               "fix-step[" + m.states[i] + "]");
    }

    qelim::ExistentialSystem esys = qelim::eliminate_all(sys, prob.handelman_degree);
    res.num_variables = int(esys.variables.size());
    res.num_constraints = int(esys.constraints.size());
    res.smt_script = solver::emit_smt(solver::presolve(esys).sys, opt.solver.logic);
    res.build_secs = seconds_since(t0);

    auto t1 = std::chrono::steady_clock::now();
    solver::SolveOutcome outcome = solver::solve(esys, opt.solver);
    res.solve_secs = seconds_since(t1);
    res.kind = outcome.kind;
    res.detail = outcome.detail;
    if (!outcome.sat()) {
        return res;
    }

    Certificate cert;
    StateDist point;
    for (int s = 0; s < n; ++s) {
        point.p.push_back(prob.initial.kind == InitialSpec::Kind::Fixed
                              ? prob.initial.fixed->p[size_t(s)]
                              : model_at(outcome.model, VarId::initial_prob(s)));
    }
    point.validate();
    // point invariant: x = mu, one equality conjunct per state
    for (int s = 0; s < n; ++s) {
        AffineInequality c;
        c.rel = Rel::Eq;
        c.expr.constant = -point.p[size_t(s)];
        c.expr.coeffs.assign(size_t(n), Rat(0));
        c.expr.coeffs[size_t(s)] = 1;
        cert.invariant.push_back(std::move(c));
    }
    bool any_multi = false;
    for (int s = 0; s < n; ++s) {
        any_multi = any_multi || m.multi_action(s);
    }
    if (any_multi) {
        MemorylessStrategy strat;
        strat.probs.resize(size_t(n));
        for (int s = 0; s < n; ++s) {
            for (int a : m.avail[s]) {
                strat.probs[size_t(s)].push_back(
                    m.multi_action(s) ? model_at(outcome.model, VarId::strat_prob(s, a))
                                      : Rat(1));
            }
        }
        strat.validate(m);
        cert.strategy = std::move(strat);
    }
    cert.initial = std::move(point);
    res.cert = std::move(cert);
    return res;
}

}  // namespace distinv::synth
