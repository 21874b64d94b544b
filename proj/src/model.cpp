// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "distinv/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

namespace distinv::model {

using nlohmann::json;
using nlohmann::ordered_json;

int Mdp::state_index(std::string_view name) const {
    auto it = std::find(states.begin(), states.end(), name);
    return it == states.end() ? -1 : int(it - states.begin());
}

int Mdp::action_index(std::string_view name) const {
    auto it = std::find(actions.begin(), actions.end(), name);
    return it == actions.end() ? -1 : int(it - actions.begin());
}

int Mdp::avail_index(int s, int a) const {
    const auto& row = avail[s];
    auto it = std::find(row.begin(), row.end(), a);
    return it == row.end() ? -1 : int(it - row.begin());
}

int Mdp::num_state_action_pairs() const {
    int n = 0;
    for (const auto& row : avail) {
        n += int(row.size());
    }
    return n;
}

void Mdp::validate() const {
    std::set<std::string> seen;
    for (const auto& s : states) {
        if (!seen.insert(s).second) {
            throw ParseError("duplicate state name: " + s);
        }
    }
    seen.clear();
    for (const auto& a : actions) {
        if (!seen.insert(a).second) {
            throw ParseError("duplicate action name: " + a);
        }
    }
    if (states.empty()) {
        throw ParseError("model has no states");
    }
    if (avail.size() != states.size() || delta.size() != states.size()) {
        throw ParseError("avail/delta size mismatch");
    }
    for (int s = 0; s < num_states(); ++s) {
        if (avail[s].empty()) {
            throw ParseError("state has no available action: " + states[s]);
        }
        std::set<int> row_seen;
        for (int a : avail[s]) {
            if (a < 0 || a >= int(actions.size())) {
                throw ParseError("unknown action index in avail");
            }
            if (!row_seen.insert(a).second) {
                throw ParseError("duplicate action in avail of state " + states[s]);
            }
        }
        if (delta[s].size() != avail[s].size()) {
            throw ParseError("delta rows do not match avail for state " + states[s]);
        }
        for (size_t k = 0; k < delta[s].size(); ++k) {
            const auto& row = delta[s][k];
            if (row.size() != states.size()) {
                throw ParseError("delta row dimension mismatch for state " + states[s]);
            }
            Rat sum = 0;
            for (const auto& v : row) {
                if (v < 0) {
                    throw ParseError("negative transition probability in state " + states[s]);
                }
                sum += v;
            }
            if (sum != 1) {
                throw ParseError("row-sum is " + rat_str(sum) + ", expected 1 (state " +
                                 states[s] + ", action " + actions[avail[s][k]] + ")");
            }
        }
    }
}

void StateDist::validate() const {
    Rat sum = 0;
    for (const auto& v : p) {
        if (v < 0) {
            throw ParseError("negative probability in distribution");
        }
        sum += v;
    }
    if (sum != 1) {
        throw ParseError("distribution sums to " + rat_str(sum) + ", expected 1");
    }
}

Rat AffineExpr::eval(const StateDist& mu) const {
    if (coeffs.size() != mu.p.size()) {
        throw std::invalid_argument("affine expression dimension mismatch");
    }
    Rat r = constant;
    for (size_t i = 0; i < coeffs.size(); ++i) {
        r += coeffs[i] * mu.p[i];
    }
    return r;
}

bool AffineInequality::holds(const StateDist& mu) const {
    Rat v = expr.eval(mu);
    return rel == Rel::Geq ? v >= 0 : v == 0;
}

std::vector<AffineInequality> normalize(const std::vector<AffineInequality>& conjuncts) {
    std::vector<AffineInequality> out;
    for (const auto& c : conjuncts) {
        if (c.rel == Rel::Geq) {
            out.push_back(c);
        } else {
            AffineExpr neg{Rat(-c.expr.constant), {}};
            for (const auto& v : c.expr.coeffs) {
                neg.coeffs.push_back(Rat(-v));
            }
            out.push_back({c.expr, Rel::Geq});
            out.push_back({neg, Rel::Geq});
        }
    }
    return out;
}

bool SafeSet::member(const StateDist& mu) const {
    return std::all_of(conjuncts.begin(), conjuncts.end(),
                       [&](const AffineInequality& c) { return c.holds(mu); });
}

namespace {

[[noreturn]] void rethrow_with_position(const std::string& text, const json::parse_error& e) {
    // nlohmann reports a byte offset; turn it into line/column.
    size_t line = 1;
    size_t col = 1;
    size_t limit = std::min(text.size(), e.byte > 0 ? e.byte - 1 : 0);
    for (size_t i = 0; i < limit; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    std::ostringstream msg;
    msg << "syntax error at line " << line << ", column " << col << ": " << e.what();
    throw ParseError(msg.str());
}

Rat rat_from_json(const json& j) {
    if (j.is_string()) {
        return parse_rat(j.get<std::string>());
    }
    if (j.is_number_integer() || j.is_number_unsigned()) {
        return Rat(mpz_class(j.dump()));
    }
    if (j.is_number_float()) {
        // dump() prints the shortest decimal that round-trips; parse it exactly
        return parse_rat(j.dump());
    }
    throw ParseError("expected rational value, got " + j.dump());
}

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError(std::string("missing key: ") + key);
    }
    return *it;
}

Mdp mdp_from_json(const json& j) {
    Mdp m;
    for (const auto& s : require(j, "states")) {
        m.states.push_back(s.get<std::string>());
    }
    for (const auto& a : require(j, "actions")) {
        m.actions.push_back(a.get<std::string>());
    }
    const json& avail = require(j, "avail");
    const json& delta = require(j, "delta");
    m.avail.resize(m.states.size());
    m.delta.resize(m.states.size());
    for (size_t s = 0; s < m.states.size(); ++s) {
        auto it = avail.find(m.states[s]);
        if (it == avail.end()) {
            throw ParseError("avail missing state: " + m.states[s]);
        }
        for (const auto& a : *it) {
            int ai = m.action_index(a.get<std::string>());
            if (ai < 0) {
                throw ParseError("unknown action in avail: " + a.get<std::string>());
            }
            m.avail[s].push_back(ai);
        }
        auto dit = delta.find(m.states[s]);
        if (dit == delta.end()) {
            throw ParseError("delta missing state: " + m.states[s]);
        }
        for (const auto& [key, val] : dit->items()) {
            if (m.action_index(key) < 0) {
                throw ParseError("unknown action in delta: " + key);
            }
        }
        for (int ai : m.avail[s]) {
            auto row_it = dit->find(m.actions[ai]);
            if (row_it == dit->end()) {
                throw ParseError("delta missing row for state " + m.states[s] + ", action " +
                                 m.actions[ai]);
            }
            std::vector<Rat> row(m.states.size(), Rat(0));
            for (const auto& [target, prob] : row_it->items()) {
                int ti = m.state_index(target);
                if (ti < 0) {
                    throw ParseError("unknown state in delta row: " + target);
                }
                row[ti] = rat_from_json(prob);
            }
            m.delta[s].push_back(std::move(row));
        }
        if (dit->size() != m.avail[s].size()) {
            throw ParseError("delta defines a row for an unavailable action in state " +
                             m.states[s]);
        }
    }
    m.validate();
    return m;
}

AffineInequality ineq_from_json(const json& j, const Mdp& m) {
    AffineInequality c;
    c.expr.constant = j.contains("const") ? rat_from_json(j.at("const")) : Rat(0);
    c.expr.coeffs.assign(m.states.size(), Rat(0));
    for (const auto& [state, coeff] : require(j, "coeffs").items()) {
        int si = m.state_index(state);
        if (si < 0) {
            throw ParseError("unknown state in coefficient map: " + state);
        }
        c.expr.coeffs[si] = rat_from_json(coeff);
    }
    std::string rel = require(j, "rel").get<std::string>();
    if (rel == ">=") {
        c.rel = Rel::Geq;
    } else if (rel == "=") {
        c.rel = Rel::Eq;
    } else if (rel == ">" || rel == "<") {
        throw ParseError("strict inequalities are not supported; safe sets must use "
                         "non-strict affine constraints (rel \">=\" or \"=\")");
    } else {
        throw ParseError("unknown relation: " + rel + " (expected \">=\" or \"=\")");
    }
    return c;
}

StateDist dist_from_json(const json& j, const Mdp& m) {
    StateDist d;
    d.p.assign(m.states.size(), Rat(0));
    for (const auto& [state, prob] : j.items()) {
        int si = m.state_index(state);
        if (si < 0) {
            throw ParseError("unknown state in distribution: " + state);
        }
        d.p[si] = rat_from_json(prob);
    }
    d.validate();
    return d;
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        rethrow_with_position(text, e);
    }
}

ordered_json mdp_to_json(const Mdp& m) {
    ordered_json j;
    j["states"] = m.states;
    j["actions"] = m.actions;
    ordered_json avail = ordered_json::object();
    ordered_json delta = ordered_json::object();
    for (int s = 0; s < m.num_states(); ++s) {
        ordered_json acts = ordered_json::array();
        ordered_json rows = ordered_json::object();
        for (size_t k = 0; k < m.avail[s].size(); ++k) {
            const std::string& action = m.actions[m.avail[s][k]];
            acts.push_back(action);
            ordered_json row = ordered_json::object();
            for (int t = 0; t < m.num_states(); ++t) {
                if (m.delta[s][k][t] != 0) {
                    row[m.states[t]] = rat_str(m.delta[s][k][t]);
                }
            }
            rows[action] = std::move(row);
        }
        avail[m.states[s]] = std::move(acts);
        delta[m.states[s]] = std::move(rows);
    }
    j["avail"] = std::move(avail);
    j["delta"] = std::move(delta);
    return j;
}

ordered_json ineq_to_json(const AffineInequality& c, const Mdp& m) {
    ordered_json j;
    ordered_json coeffs = ordered_json::object();
    for (size_t i = 0; i < c.expr.coeffs.size(); ++i) {
        if (c.expr.coeffs[i] != 0) {
            coeffs[m.states[i]] = rat_str(c.expr.coeffs[i]);
        }
    }
    j["coeffs"] = std::move(coeffs);
    j["const"] = rat_str(c.expr.constant);
    j["rel"] = c.rel == Rel::Geq ? ">=" : "=";
    return j;
}

ordered_json dist_to_json(const StateDist& d, const Mdp& m) {
    ordered_json j = ordered_json::object();
    for (size_t i = 0; i < d.p.size(); ++i) {
        if (d.p[i] != 0) {
            j[m.states[i]] = rat_str(d.p[i]);
        }
    }
    return j;
}

}  // namespace

Mdp parse_model(const std::string& text) {
    return mdp_from_json(parse_json(text));
}

std::string print_model(const Mdp& m) {
    return mdp_to_json(m).dump(2) + "\n";
}

SynthesisProblem parse_problem(const std::string& text) {
    json j = parse_json(text);
    SynthesisProblem p;
    p.mdp = mdp_from_json(j);
    for (const auto& c : require(j, "safe")) {
        p.safe.conjuncts.push_back(ineq_from_json(c, p.mdp));
    }
    const json& initial = require(j, "initial");
    if (initial.is_string() && initial.get<std::string>() == "free") {
        p.initial.kind = InitialSpec::Kind::Free;
    } else if (initial.is_object() && initial.contains("fixed")) {
        p.initial.kind = InitialSpec::Kind::Fixed;
        p.initial.fixed = dist_from_json(initial.at("fixed"), p.mdp);
    } else if (initial.is_object() && initial.contains("constrained")) {
        p.initial.kind = InitialSpec::Kind::Constrained;
        for (const auto& c : initial.at("constrained")) {
            p.initial.constraints.push_back(ineq_from_json(c, p.mdp));
        }
    } else {
        throw ParseError("initial must be \"free\", {\"fixed\":...} or {\"constrained\":[...]}");
    }
    p.invariant_size = require(j, "ni").get<int>();
    if (p.invariant_size < 0) {
        throw ParseError("ni must be nonnegative");
    }
    p.handelman_degree = j.value("k", 2);
    if (p.handelman_degree < 1) {
        throw ParseError("k must be positive");
    }
    std::string mode = require(j, "mode").get<std::string>();
    if (mode == "memless") {
        p.mode = StrategyMode::Memoryless;
    } else if (mode == "dist") {
        p.mode = StrategyMode::Distribution;
    } else {
        throw ParseError("mode must be \"memless\" or \"dist\"");
    }
    p.unroll = j.value("unroll", 0);
    if (p.unroll < 0) {
        throw ParseError("unroll must be nonnegative");
    }
    if (j.contains("hints")) {
        for (const auto& [name, value] : j.at("hints").items()) {
            p.hints[name] = rat_from_json(value);
        }
    }
    return p;
}

std::string print_problem(const SynthesisProblem& p) {
    ordered_json j = mdp_to_json(p.mdp);
    ordered_json safe = ordered_json::array();
    for (const auto& c : p.safe.conjuncts) {
        safe.push_back(ineq_to_json(c, p.mdp));
    }
    j["safe"] = std::move(safe);
    switch (p.initial.kind) {
        case InitialSpec::Kind::Fixed:
            j["initial"] = ordered_json{{"fixed", dist_to_json(*p.initial.fixed, p.mdp)}};
            break;
        case InitialSpec::Kind::Free:
            j["initial"] = "free";
            break;
        case InitialSpec::Kind::Constrained: {
            ordered_json cs = ordered_json::array();
            for (const auto& c : p.initial.constraints) {
                cs.push_back(ineq_to_json(c, p.mdp));
            }
            j["initial"] = ordered_json{{"constrained", std::move(cs)}};
            break;
        }
    }
    j["ni"] = p.invariant_size;
    j["k"] = p.handelman_degree;
    j["mode"] = p.mode == StrategyMode::Memoryless ? "memless" : "dist";
    j["unroll"] = p.unroll;
    if (!p.hints.empty()) {
        ordered_json hints = ordered_json::object();
        for (const auto& [name, value] : p.hints) {
            hints[name] = rat_str(value);
        }
        j["hints"] = std::move(hints);
    }
    return j.dump(2) + "\n";
}

namespace {

Mdp running_mdp() {
    Mdp m;
    m.states = {"A", "B", "C"};
    m.actions = {"a", "b"};
    m.avail = {{0, 1}, {0}, {0}};
    Rat half(1, 2);
    m.delta = {
        {{Rat(1), Rat(0), Rat(0)}, {Rat(0), Rat(1), Rat(0)}},
        {{Rat(0), Rat(0), Rat(1)}},
        {{half, Rat(0), half}},
    };
    m.validate();
    return m;
}

AffineInequality single_coeff(const Mdp& m, const std::string& state, const Rat& coeff,
                              const Rat& constant, Rel rel) {
    AffineInequality c;
    c.expr.constant = constant;
    c.expr.coeffs.assign(m.states.size(), Rat(0));
    c.expr.coeffs[m.state_index(state)] = coeff;
    c.rel = rel;
    return c;
}

}  // namespace

SynthesisProblem builtin_fixture(std::string_view name) {
    SynthesisProblem p;
    if (name == "running" || name == "running-ex1") {
        p.mdp = running_mdp();
        // H = { mu(C) >= 1/4 }
        p.safe.conjuncts = {single_coeff(p.mdp, "C", Rat(1), Rat(-1, 4), Rel::Geq)};
        p.initial.kind = InitialSpec::Kind::Fixed;
        p.initial.fixed = StateDist{{Rat(1, 3), Rat(1, 3), Rat(1, 3)}};
        p.invariant_size = 2;
        p.mode = StrategyMode::Memoryless;
    } else if (name == "running-ex2") {
        p.mdp = running_mdp();
        // H = { mu(B) = 1/4 }
        p.safe.conjuncts = {single_coeff(p.mdp, "B", Rat(1), Rat(-1, 4), Rel::Eq)};
        p.initial.kind = InitialSpec::Kind::Fixed;
        p.initial.fixed = StateDist{{Rat(3, 4), Rat(1, 4), Rat(0)}};
        p.invariant_size = 3;
        p.handelman_degree = 2;
        p.mode = StrategyMode::Distribution;
        // Strategy hints taken from the published certificate:
        // num(A,a) = 4A - 1, num(A,b) = 1, den(A) = 4A.
        p.hints = {
            {"r0_0_0", Rat(-1)}, {"r0_0_1", Rat(4)}, {"r0_0_2", Rat(0)}, {"r0_0_3", Rat(0)},
            {"r0_1_0", Rat(1)},  {"r0_1_1", Rat(0)}, {"r0_1_2", Rat(0)}, {"r0_1_3", Rat(0)},
            {"d0_0", Rat(0)},    {"d0_1", Rat(4)},   {"d0_2", Rat(0)},   {"d0_3", Rat(0)},
        };
    } else if (name == "chain") {
        Mdp m;
        for (int i = 1; i <= 10; ++i) {
            m.states.push_back("s" + std::to_string(i));
        }
        m.actions = {"a"};
        m.avail.assign(10, {0});
        m.delta.assign(10, {});
        for (int i = 0; i < 9; ++i) {
            std::vector<Rat> row(10, Rat(0));
            row[i + 1] = 1;
            m.delta[i] = {row};
        }
        std::vector<Rat> last(10, Rat(0));
        last[8] = Rat(1, 2);
        last[9] = Rat(1, 2);
        m.delta[9] = {last};
        m.validate();
        p.mdp = std::move(m);
        p.safe.conjuncts = {single_coeff(p.mdp, "s10", Rat(1), Rat(-1, 10), Rel::Geq)};
        p.initial.kind = InitialSpec::Kind::Fixed;
        p.initial.fixed = StateDist{std::vector<Rat>(10, Rat(1, 10))};
        p.invariant_size = 2;
        p.mode = StrategyMode::Memoryless;
    } else if (name == "split") {
        Mdp m;
        m.states = {"A", "B", "C", "D"};
        m.actions = {"a1", "a2"};
        m.avail = {{0, 1}, {0}, {0}, {0}};
        m.delta = {
            {{Rat(9, 10), Rat(1, 10), Rat(0), Rat(0)}, {Rat(0), Rat(1), Rat(0), Rat(0)}},
            {{Rat(0), Rat(1), Rat(0), Rat(0)}},
            {{Rat(0), Rat(0), Rat(1, 2), Rat(1, 2)}},
            {{Rat(0), Rat(0), Rat(0), Rat(1)}},
        };
        m.validate();
        p.mdp = std::move(m);
        AffineInequality c;
        c.expr.constant = Rat(-1, 2);
        c.expr.coeffs = {Rat(1), Rat(0), Rat(0), Rat(1)};
        c.rel = Rel::Geq;
        p.safe.conjuncts = {c};
        p.initial.kind = InitialSpec::Kind::Fixed;
        p.initial.fixed = StateDist{{Rat(1, 2), Rat(0), Rat(1, 2), Rat(0)}};
        p.invariant_size = 3;
        p.mode = StrategyMode::Memoryless;
    } else {
        throw ParseError("unknown fixture: " + std::string(name));
    }
    if (p.initial.fixed) {
        p.initial.fixed->validate();
    }
    return p;
}

}  // namespace distinv::model
