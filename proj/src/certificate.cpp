// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "distinv/certificate.hpp"

#include <sstream>

#include <json.hpp>

namespace distinv::certificate {

using model::Rel;
using nlohmann::json;
using nlohmann::ordered_json;
using ring::Polynomial;
using ring::VarId;

void MemorylessStrategy::validate(const Mdp& m) const {
    if (int(probs.size()) != m.num_states()) {
        throw ParseError("strategy rows do not match the number of states");
    }
    for (int s = 0; s < m.num_states(); ++s) {
        if (probs[s].size() != m.avail[s].size()) {
            throw ParseError("strategy row of state " + m.states[s] +
                             " does not match its available actions");
        }
        Rat sum = 0;
        for (const auto& p : probs[s]) {
            if (p < 0 || p > 1) {
                throw ParseError("strategy probability outside [0,1] in state " + m.states[s]);
            }
            sum += p;
        }
        if (sum != 1) {
            throw ParseError("strategy row of state " + m.states[s] + " sums to " +
                             rat_str(sum) + ", expected 1");
        }
    }
}

void DistStrategy::validate(const Mdp& m) const {
    if (int(num.size()) != m.num_states() || int(den.size()) != m.num_states()) {
        throw ParseError("distribution strategy rows do not match the number of states");
    }
    for (int s = 0; s < m.num_states(); ++s) {
        if (!m.multi_action(s)) {
            if (!num[s].empty() || den[s].has_value()) {
                throw ParseError("distribution strategy defined at single-action state " +
                                 m.states[s]);
            }
            continue;
        }
        if (num[s].size() != m.avail[s].size() || !den[s].has_value()) {
            throw ParseError("distribution strategy incomplete at state " + m.states[s]);
        }
        for (const auto& e : num[s]) {
            if (e.coeffs.size() != size_t(m.num_states())) {
                throw ParseError("numerator dimension mismatch at state " + m.states[s]);
            }
        }
        if (den[s]->coeffs.size() != size_t(m.num_states())) {
            throw ParseError("denominator dimension mismatch at state " + m.states[s]);
        }
    }
}

// ---------------------------------------------------------------------------
// serialization

namespace {

Rat rat_of(const json& j) {
    if (j.is_string()) {
        return parse_rat(j.get<std::string>());
    }
    if (j.is_number_integer() || j.is_number_unsigned()) {
        return Rat(mpz_class(j.dump()));
    }
    if (j.is_number_float()) {
        return parse_rat(j.dump());
    }
    throw ParseError("expected rational value, got " + j.dump());
}

AffineExpr affine_of(const json& j, const Mdp& m) {
    AffineExpr e;
    e.constant = j.contains("const") ? rat_of(j.at("const")) : Rat(0);
    e.coeffs.assign(m.states.size(), Rat(0));
    if (j.contains("coeffs")) {
        for (const auto& [state, coeff] : j.at("coeffs").items()) {
            int si = m.state_index(state);
            if (si < 0) {
                throw ParseError("unknown state in coefficient map: " + state);
            }
            e.coeffs[si] = rat_of(coeff);
        }
    }
    return e;
}

ordered_json affine_json(const AffineExpr& e, const Mdp& m) {
    ordered_json coeffs = ordered_json::object();
    for (size_t i = 0; i < e.coeffs.size(); ++i) {
        if (e.coeffs[i] != 0) {
            coeffs[m.states[i]] = rat_str(e.coeffs[i]);
        }
    }
    return ordered_json{{"coeffs", std::move(coeffs)}, {"const", rat_str(e.constant)}};
}

Polynomial poly_of(const AffineExpr& e) {
    Polynomial p = Polynomial::constant(e.constant);
    for (size_t i = 0; i < e.coeffs.size(); ++i) {
        if (e.coeffs[i] != 0) {
            p += Polynomial::var(VarId::state(int(i))) * e.coeffs[i];
        }
    }
    return p;
}

}  // namespace

Certificate parse_certificate(const std::string& text, const Mdp& m) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("certificate syntax error: ") + e.what());
    }
    Certificate cert;
    if (!j.contains("invariant") || !j.at("invariant").is_array()) {
        throw ParseError("certificate misses \"invariant\" array");
    }
    for (const auto& c : j.at("invariant")) {
        AffineInequality ineq;
        ineq.expr = affine_of(c, m);
        std::string rel = c.value("rel", ">=");
        if (rel == ">=") {
            ineq.rel = Rel::Geq;
        } else if (rel == "=") {
            ineq.rel = Rel::Eq;
        } else {
            throw ParseError("unknown relation in invariant: " + rel);
        }
        cert.invariant.push_back(std::move(ineq));
    }
    if (j.contains("strategy")) {
        const json& s = j.at("strategy");
        if (s.contains("memoryless")) {
            MemorylessStrategy strat;
            strat.probs.resize(m.num_states());
            for (int si = 0; si < m.num_states(); ++si) {
                strat.probs[si].assign(m.avail[si].size(), Rat(0));
                if (m.avail[si].size() == 1) {
                    strat.probs[si][0] = 1;
                }
            }
            for (const auto& [state, row] : s.at("memoryless").items()) {
                int si = m.state_index(state);
                if (si < 0) {
                    throw ParseError("unknown state in strategy: " + state);
                }
                strat.probs[si].assign(m.avail[si].size(), Rat(0));
                for (const auto& [action, prob] : row.items()) {
                    int ai = m.action_index(action);
                    int k = ai < 0 ? -1 : m.avail_index(si, ai);
                    if (k < 0) {
                        throw ParseError("action " + action + " unavailable in state " + state);
                    }
                    strat.probs[si][k] = rat_of(prob);
                }
            }
            strat.validate(m);
            cert.strategy = std::move(strat);
        } else if (s.contains("dist")) {
            DistStrategy strat;
            strat.num.resize(m.num_states());
            strat.den.resize(m.num_states());
            for (const auto& [state, entry] : s.at("dist").items()) {
                int si = m.state_index(state);
                if (si < 0) {
                    throw ParseError("unknown state in strategy: " + state);
                }
                strat.den[si] = affine_of(entry.at("den"), m);
                strat.num[si].assign(m.avail[si].size(), AffineExpr{});
                for (const auto& [action, e] : entry.at("num").items()) {
                    int ai = m.action_index(action);
                    int k = ai < 0 ? -1 : m.avail_index(si, ai);
                    if (k < 0) {
                        throw ParseError("action " + action + " unavailable in state " + state);
                    }
                    strat.num[si][k] = affine_of(e, m);
                }
            }
            strat.validate(m);
            cert.strategy = std::move(strat);
        } else {
            throw ParseError("strategy must contain \"memoryless\" or \"dist\"");
        }
    }
    if (!j.contains("initial")) {
        throw ParseError("certificate misses \"initial\"");
    }
    cert.initial.p.assign(m.states.size(), Rat(0));
    for (const auto& [state, prob] : j.at("initial").items()) {
        int si = m.state_index(state);
        if (si < 0) {
            throw ParseError("unknown state in initial distribution: " + state);
        }
        cert.initial.p[si] = rat_of(prob);
    }
    cert.initial.validate();
    return cert;
}

std::string print_certificate(const Certificate& cert, const Mdp& m) {
    ordered_json j;
    ordered_json inv = ordered_json::array();
    for (const auto& c : cert.invariant) {
        ordered_json e = affine_json(c.expr, m);
        e["rel"] = c.rel == Rel::Geq ? ">=" : "=";
        inv.push_back(std::move(e));
    }
    j["invariant"] = std::move(inv);
    if (const auto* mem = std::get_if<MemorylessStrategy>(&cert.strategy)) {
        ordered_json rows = ordered_json::object();
        for (int s = 0; s < m.num_states(); ++s) {
            if (!m.multi_action(s)) {
                continue;
            }
            ordered_json row = ordered_json::object();
            for (size_t k = 0; k < m.avail[s].size(); ++k) {
                row[m.actions[m.avail[s][k]]] = rat_str(mem->probs[s][k]);
            }
            rows[m.states[s]] = std::move(row);
        }
        j["strategy"] = ordered_json{{"memoryless", std::move(rows)}};
    } else if (const auto* dist = std::get_if<DistStrategy>(&cert.strategy)) {
        ordered_json rows = ordered_json::object();
        for (int s = 0; s < m.num_states(); ++s) {
            if (!m.multi_action(s)) {
                continue;
            }
            ordered_json nums = ordered_json::object();
            for (size_t k = 0; k < m.avail[s].size(); ++k) {
                nums[m.actions[m.avail[s][k]]] = affine_json(dist->num[s][k], m);
            }
            rows[m.states[s]] =
                ordered_json{{"den", affine_json(*dist->den[s], m)}, {"num", std::move(nums)}};
        }
        j["strategy"] = ordered_json{{"dist", std::move(rows)}};
    }
    ordered_json init = ordered_json::object();
    for (size_t i = 0; i < cert.initial.p.size(); ++i) {
        if (cert.initial.p[i] != 0) {
            init[m.states[i]] = rat_str(cert.initial.p[i]);
        }
    }
    j["initial"] = std::move(init);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// checker

namespace {

// One entailment query: antecedent rows (each >= 0 or = 0 over the state
// variables) entail `consequent rel 0`. Decided by asserting the negation.
struct Entailment {
    std::vector<std::pair<Polynomial, Rel>> antecedent;
    Polynomial consequent;
    Rel rel = Rel::Geq;
    std::string label;
};

std::string negation_script(const Entailment& q, int n, const std::string& logic) {
    std::ostringstream out;
    out << "(set-option :produce-models true)\n";
    out << "(set-logic " << logic << ")\n";
    for (int i = 0; i < n; ++i) {
        out << "(declare-const " << ring::var_name(VarId::state(i)) << " Real)\n";
    }
    for (const auto& [p, rel] : q.antecedent) {
        out << "(assert (" << (rel == Rel::Eq ? "=" : ">=") << " " << solver::smt_poly(p)
            << " 0))\n";
    }
    if (q.rel == Rel::Geq) {
        out << "(assert (< " << solver::smt_poly(q.consequent) << " 0))\n";
    } else {
        out << "(assert (not (= " << solver::smt_poly(q.consequent) << " 0)))\n";
    }
    out << "(check-sat)\n(get-value (";
    for (int i = 0; i < n; ++i) {
        out << (i ? " " : "") << ring::var_name(VarId::state(i));
    }
    out << "))\n";
    return out.str();
}

Verdict decide(const Entailment& q, int n, const std::string& logic,
               const solver::SolverConfig& cfg) {
    Verdict v;
    solver::RawResult raw = solver::run_script(negation_script(q, n, logic), cfg);
    switch (raw.kind) {
        case solver::SolveOutcome::Kind::Unsat:
            v.kind = Verdict::Kind::Pass;
            return v;
        case solver::SolveOutcome::Kind::Sat:
            break;
        default:
            v.kind = Verdict::Kind::Inconclusive;
            v.detail = q.label + ": solver returned no verdict" +
                       (raw.detail.empty() ? "" : " (" + raw.detail + ")");
            return v;
    }
    StateDist witness;
    witness.p.assign(size_t(n), Rat(0));
    std::map<VarId, Rat> point;
    for (int i = 0; i < n; ++i) {
        auto it = raw.values.find(ring::var_name(VarId::state(i)));
        if (it == raw.values.end() || !it->second) {
            v.kind = Verdict::Kind::Inconclusive;
            v.detail = q.label + ": non-rational or missing witness value";
            return v;
        }
        witness.p[size_t(i)] = *it->second;
        point[VarId::state(i)] = *it->second;
    }
    // a Fail must be a genuine counterexample under exact arithmetic
    for (const auto& [p, rel] : q.antecedent) {
        Rat val = p.eval(point);
        if (rel == Rel::Eq ? val != 0 : val < 0) {
            v.kind = Verdict::Kind::Inconclusive;
            v.detail = q.label + ": witness failed exact antecedent check";
            return v;
        }
    }
    Rat c = q.consequent.eval(point);
    if (q.rel == Rel::Geq ? c >= 0 : c == 0) {
        v.kind = Verdict::Kind::Inconclusive;
        v.detail = q.label + ": witness does not violate the consequent";
        return v;
    }
    v.kind = Verdict::Kind::Fail;
    v.witness = std::move(witness);
    v.detail = q.label;
    return v;
}

Verdict combine(const std::vector<Verdict>& vs) {
    Verdict out;
    for (const auto& v : vs) {
        if (v.kind == Verdict::Kind::Fail) {
            return v;
        }
    }
    for (const auto& v : vs) {
        if (v.kind == Verdict::Kind::Inconclusive) {
            return v;
        }
    }
    return out;  // Pass
}

// invariant conjuncts + probability simplex, over x_0..x_{n-1}
std::vector<std::pair<Polynomial, Rel>> base_antecedent(
    const std::vector<AffineInequality>& invariant, int n) {
    std::vector<std::pair<Polynomial, Rel>> rows;
    for (const auto& c : invariant) {
        rows.emplace_back(poly_of(c.expr), c.rel);
    }
    Polynomial sum;
    for (int i = 0; i < n; ++i) {
        rows.emplace_back(Polynomial::var(VarId::state(i)), Rel::Geq);
        sum += Polynomial::var(VarId::state(i));
    }
    rows.emplace_back(sum - Polynomial::constant(1), Rel::Eq);
    return rows;
}

// step(x) under a concrete memoryless strategy (or the trivial one for a
// Markov chain): affine in x.
std::vector<Polynomial> concrete_step(const Mdp& m,
                                      const std::function<Rat(int, int)>& prob) {
    int n = m.num_states();
    std::vector<Polynomial> next;
    next.resize(size_t(n));
    for (int s = 0; s < n; ++s) {
        for (size_t k = 0; k < m.avail[s].size(); ++k) {
            Rat p = prob(s, int(k));
            if (p == 0) {
                continue;
            }
            for (int t = 0; t < n; ++t) {
                if (m.delta[s][k][t] != 0) {
                    next[size_t(t)] +=
                        Polynomial::var(VarId::state(s)) * (p * m.delta[s][k][t]);
                }
            }
        }
    }
    return next;
}

bool is_markov_chain(const Mdp& m) {
    for (int s = 0; s < m.num_states(); ++s) {
        if (m.multi_action(s)) {
            return false;
        }
    }
    return true;
}

}  // namespace

bool CheckReport::all_pass() const {
    return initial_membership.pass() && invariant_in_safe.pass() && strategy_wellformed.pass() &&
           inductiveness.pass() && simulation.pass();
}

static std::string verdict_str(const Verdict& v, const Mdp& m) {
    switch (v.kind) {
        case Verdict::Kind::Pass:
            return "Pass";
        case Verdict::Kind::Inconclusive:
            return "Inconclusive (" + v.detail + ")";
        case Verdict::Kind::Fail: {
            std::string s = "Fail (" + v.detail;
            if (v.witness) {
                s += "; witness";
                for (size_t i = 0; i < v.witness->p.size(); ++i) {
                    s += " " + m.states[i] + "=" + rat_str(v.witness->p[i]);
                }
            }
            return s + ")";
        }
    }
    return "?";
}

std::string CheckReport::str(const Mdp& m) const {
    std::ostringstream out;
    out << "initial-membership:   " << verdict_str(initial_membership, m) << "\n";
    out << "invariant-in-H:       " << verdict_str(invariant_in_safe, m) << "\n";
    out << "strategy-wellformed:  " << verdict_str(strategy_wellformed, m) << "\n";
    out << "inductiveness:        " << verdict_str(inductiveness, m) << "\n";
    out << "simulation (h=" << simulation_horizon << "):   " << verdict_str(simulation, m)
        << "\n";
    out << "verdict:              " << (all_pass() ? "CERTIFIED" : "NOT CERTIFIED") << "\n";
    return out.str();
}

std::string CheckReport::json() const {
    auto kind = [](const Verdict& v) {
        switch (v.kind) {
            case Verdict::Kind::Pass:
                return "pass";
            case Verdict::Kind::Fail:
                return "fail";
            default:
                return "inconclusive";
        }
    };
    auto entry = [&](const Verdict& v) {
        ordered_json e{{"verdict", kind(v)}};
        if (!v.detail.empty()) {
            e["detail"] = v.detail;
        }
        if (v.witness) {
            ordered_json w = ordered_json::array();
            for (const auto& p : v.witness->p) {
                w.push_back(rat_str(p));
            }
            e["witness"] = std::move(w);
        }
        return e;
    };
    ordered_json j;
    j["initial_membership"] = entry(initial_membership);
    j["invariant_in_safe"] = entry(invariant_in_safe);
    j["strategy_wellformed"] = entry(strategy_wellformed);
    j["inductiveness"] = entry(inductiveness);
    j["simulation_horizon"] = simulation_horizon;
    j["simulation"] = entry(simulation);
    j["all_pass"] = all_pass();
    return j.dump(2) + "\n";
}

CheckReport check(const Mdp& m, const SafeSet& safe, const Certificate& cert,
                  const solver::SolverConfig& cfg, int simulation_horizon) {
    CheckReport report;
    int n = m.num_states();
    for (const auto& c : cert.invariant) {
        if (c.expr.coeffs.size() != size_t(n)) {
            throw std::invalid_argument("invariant dimension mismatch");
        }
    }
    if (cert.initial.p.size() != size_t(n)) {
        throw std::invalid_argument("initial distribution dimension mismatch");
    }

    // 1. initial membership: exact evaluation, never touches a solver
    for (const auto& c : cert.invariant) {
        if (!c.holds(cert.initial)) {
            report.initial_membership.kind = Verdict::Kind::Fail;
            report.initial_membership.witness = cert.initial;
            report.initial_membership.detail = "initial distribution outside the invariant";
            break;
        }
    }

    auto base = base_antecedent(cert.invariant, n);

    // 2. invariant-in-H: one affine entailment per safe-set conjunct
    {
        std::vector<Verdict> vs;
        for (size_t i = 0; i < safe.conjuncts.size(); ++i) {
            Entailment q;
            q.antecedent = base;
            q.consequent = poly_of(safe.conjuncts[i].expr);
            q.rel = safe.conjuncts[i].rel;
            q.label = "safe[" + std::to_string(i) + "]";
            vs.push_back(decide(q, n, "QF_LRA", cfg));
        }
        report.invariant_in_safe = combine(vs);
    }

    // 3 + 4. strategy well-formedness and inductiveness
    if (std::holds_alternative<std::monostate>(cert.strategy)) {
        if (!is_markov_chain(m)) {
            report.strategy_wellformed.kind = Verdict::Kind::Inconclusive;
            report.strategy_wellformed.detail =
                "model has nondeterminism but the certificate carries no strategy";
        }
    } else if (const auto* mem = std::get_if<MemorylessStrategy>(&cert.strategy)) {
        mem->validate(m);  // throws on structural violations
    }

    if (const auto* dist = std::get_if<DistStrategy>(&cert.strategy)) {
        dist->validate(m);
        // wellformedness on I: num >= 0, den >= 1, numerators sum to den
        std::vector<Verdict> vs;
        for (int s = 0; s < n; ++s) {
            if (!m.multi_action(s)) {
                continue;
            }
            Polynomial den = poly_of(*dist->den[s]);
            Entailment q;
            q.antecedent = base;
            q.consequent = den - Polynomial::constant(1);
            q.label = "den(" + m.states[s] + ") >= 1 on I";
            vs.push_back(decide(q, n, "QF_LRA", cfg));
            Polynomial total;
            for (size_t k = 0; k < m.avail[s].size(); ++k) {
                Polynomial num = poly_of(dist->num[s][k]);
                total += num;
                Entailment qn;
                qn.antecedent = base;
                qn.consequent = num;
                qn.label = "num(" + m.states[s] + "," + m.actions[m.avail[s][k]] + ") >= 0 on I";
                vs.push_back(decide(qn, n, "QF_LRA", cfg));
            }
            Entailment qt;
            qt.antecedent = base;
            qt.consequent = total - den;
            qt.rel = Rel::Eq;
            qt.label = "sum num = den at " + m.states[s];
            vs.push_back(decide(qt, n, "QF_LRA", cfg));
        }
        report.strategy_wellformed = combine(vs);

        // inductiveness after clearing every denominator: D(x) = prod den(s).
        // den(s) >= 1 joins the antecedent, so D > 0 and signs are faithful.
        Polynomial big_d = Polynomial::constant(1);
        auto antecedent = base;
        for (int s = 0; s < n; ++s) {
            if (m.multi_action(s)) {
                Polynomial den = poly_of(*dist->den[s]);
                big_d = big_d * den;
                antecedent.emplace_back(den - Polynomial::constant(1), Rel::Geq);
            }
        }
        // cleared[t] = step(x)(t) * D(x), a polynomial in x
        std::vector<Polynomial> cleared;
        cleared.resize(size_t(n));
        for (int s = 0; s < n; ++s) {
            for (size_t k = 0; k < m.avail[s].size(); ++k) {
                // per-action mass, multiplied by D with den(s) swapped for num
                Polynomial mass;
                if (m.multi_action(s)) {
                    mass = poly_of(dist->num[s][k]);
                    for (int s2 = 0; s2 < n; ++s2) {
                        if (s2 != s && m.multi_action(s2)) {
                            mass = mass * poly_of(*dist->den[s2]);
                        }
                    }
                } else {
                    mass = big_d;
                }
                mass = mass * Polynomial::var(VarId::state(s));
                for (int t = 0; t < n; ++t) {
                    if (m.delta[s][k][t] != 0) {
                        cleared[size_t(t)] += mass * m.delta[s][k][t];
                    }
                }
            }
        }
        std::vector<Verdict> ind;
        for (size_t i = 0; i < cert.invariant.size(); ++i) {
            const auto& c = cert.invariant[i];
            Polynomial applied = big_d * c.expr.constant;
            for (int t = 0; t < n; ++t) {
                if (c.expr.coeffs[size_t(t)] != 0) {
                    applied += cleared[size_t(t)] * c.expr.coeffs[size_t(t)];
                }
            }
            Entailment q;
            q.antecedent = antecedent;
            q.consequent = applied;
            q.rel = c.rel;
            q.label = "inductive[" + std::to_string(i) + "]";
            ind.push_back(decide(q, n, "QF_NRA", cfg));
        }
        report.inductiveness = combine(ind);
    } else {
        // memoryless (or Markov chain): step is affine, QF_LRA only
        const auto* mem = std::get_if<MemorylessStrategy>(&cert.strategy);
        if (!mem && !is_markov_chain(m)) {
            report.inductiveness.kind = Verdict::Kind::Inconclusive;
            report.inductiveness.detail = "no strategy to check inductiveness under";
        } else {
            auto next = concrete_step(
                m, [&](int s, int k) { return mem ? mem->probs[s][size_t(k)] : Rat(1); });
            std::map<VarId, Polynomial> sigma;
            for (int i = 0; i < n; ++i) {
                sigma[VarId::state(i)] = next[size_t(i)];
            }
            std::vector<Verdict> ind;
            for (size_t i = 0; i < cert.invariant.size(); ++i) {
                const auto& c = cert.invariant[i];
                Entailment q;
                q.antecedent = base;
                q.consequent = poly_of(c.expr).substitute(sigma);
                q.rel = c.rel;
                q.label = "inductive[" + std::to_string(i) + "]";
                ind.push_back(decide(q, n, "QF_LRA", cfg));
            }
            report.inductiveness = combine(ind);
        }
    }

    // 5. simulation cross-check: the certified stream must stay in I and H
    report.simulation_horizon = simulation_horizon;
    try {
        auto stream = simulate(m, cert.strategy, cert.initial, simulation_horizon);
        for (size_t t = 0; t < stream.size(); ++t) {
            bool in_inv = true;
            for (const auto& c : cert.invariant) {
                in_inv = in_inv && c.holds(stream[t]);
            }
            if (!in_inv || !safe.member(stream[t])) {
                report.simulation.kind = Verdict::Kind::Fail;
                report.simulation.witness = stream[t];
                report.simulation.detail =
                    "stream leaves " + std::string(in_inv ? "H" : "I") + " at step " +
                    std::to_string(t);
                break;
            }
        }
    } catch (const SimulationError& e) {
        report.simulation.kind = Verdict::Kind::Fail;
        report.simulation.detail = e.what();
    }
    return report;
}

// ---------------------------------------------------------------------------
// simulator

namespace {

StateDist step_concrete(const Mdp& m, const std::function<Rat(int, int)>& prob,
                        const StateDist& mu) {
    int n = m.num_states();
    StateDist next;
    next.p.assign(size_t(n), Rat(0));
    for (int s = 0; s < n; ++s) {
        if (mu.p[size_t(s)] == 0) {
            continue;
        }
        for (size_t k = 0; k < m.avail[s].size(); ++k) {
            Rat p = prob(s, int(k));
            if (p == 0) {
                continue;
            }
            for (int t = 0; t < n; ++t) {
                next.p[size_t(t)] += mu.p[size_t(s)] * p * m.delta[s][k][t];
            }
        }
    }
    return next;
}

}  // namespace

std::vector<StateDist> simulate(const Mdp& m, const Strategy& strat, const StateDist& mu0,
                                int horizon) {
    mu0.validate();
    if (std::holds_alternative<std::monostate>(strat) && !is_markov_chain(m)) {
        throw SimulationError(0, "model has nondeterminism; a strategy is required");
    }
    if (const auto* mem = std::get_if<MemorylessStrategy>(&strat)) {
        mem->validate(m);
    }
    std::vector<StateDist> stream = {mu0};
    for (int t = 0; t < horizon; ++t) {
        const StateDist& mu = stream.back();
        StateDist next;
        if (const auto* dist = std::get_if<DistStrategy>(&strat)) {
            // evaluate the quotient strategy at mu and validate at use
            std::vector<std::vector<Rat>> probs(size_t(m.num_states()));
            for (int s = 0; s < m.num_states(); ++s) {
                if (!m.multi_action(s)) {
                    probs[size_t(s)] = {Rat(1)};
                    continue;
                }
                Rat den = dist->den[size_t(s)]->eval(mu);
                if (den < 1) {
                    throw SimulationError(
                        t, "denominator of state " + m.states[s] + " is " + rat_str(den) +
                               " < 1 at step " + std::to_string(t));
                }
                Rat total = 0;
                for (size_t k = 0; k < m.avail[s].size(); ++k) {
                    Rat num = dist->num[size_t(s)][k].eval(mu);
                    if (num < 0) {
                        throw SimulationError(
                            t, "numerator of (" + m.states[s] + "," +
                                   m.actions[m.avail[s][k]] + ") is " + rat_str(num) +
                                   " < 0 at step " + std::to_string(t));
                    }
                    probs[size_t(s)].push_back(num / den);
                    total += num;
                }
                if (total != den) {
                    throw SimulationError(
                        t, "numerators of state " + m.states[s] + " sum to " + rat_str(total) +
                               " but the denominator is " + rat_str(den) + " at step " +
                               std::to_string(t));
                }
            }
            next = step_concrete(m, [&](int s, int k) { return probs[size_t(s)][size_t(k)]; },
                                 mu);
        } else if (const auto* mem = std::get_if<MemorylessStrategy>(&strat)) {
            next = step_concrete(m, [&](int s, int k) { return mem->probs[s][size_t(k)]; }, mu);
        } else {
            next = step_concrete(m, [](int, int) { return Rat(1); }, mu);
        }
        next.validate();
        stream.push_back(std::move(next));
    }
    return stream;
}

std::vector<StateDist> simulate_sequence(const Mdp& m,
                                         const std::vector<MemorylessStrategy>& strats,
                                         const StateDist& mu0, int horizon) {
    if (strats.empty()) {
        throw std::invalid_argument("simulate_sequence: empty strategy sequence");
    }
    mu0.validate();
    std::vector<StateDist> stream = {mu0};
    for (int t = 0; t < horizon; ++t) {
        const MemorylessStrategy& pi = strats[size_t(t) % strats.size()];
        pi.validate(m);
        StateDist next =
            step_concrete(m, [&](int s, int k) { return pi.probs[s][size_t(k)]; },
                          stream.back());
        next.validate();
        stream.push_back(std::move(next));
    }
    return stream;
}

std::optional<std::pair<int, StateDist>> falsify_bounded(const Mdp& m, const SafeSet& safe,
                                                         const Strategy& strat,
                                                         const StateDist& mu0, int horizon) {
    auto stream = simulate(m, strat, mu0, horizon);
    for (size_t t = 0; t < stream.size(); ++t) {
        if (!safe.member(stream[t])) {
            return std::make_pair(int(t), stream[t]);
        }
    }
    return std::nullopt;
}

}  // namespace distinv::certificate
