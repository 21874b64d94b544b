// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "distinv/constraints.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace distinv;
using constraints::GroundRel;
using constraints::Implication;
using ring::Polynomial;
using ring::VarId;
using test::Rng;

namespace {

std::map<VarId, Rat> dist_point(const model::StateDist& mu) {
    std::map<VarId, Rat> pt;
    for (size_t i = 0; i < mu.p.size(); ++i) {
        pt[VarId::state(int(i))] = mu.p[i];
    }
    return pt;
}

int count_label(const constraints::ConstraintSystem& sys, const std::string& prefix) {
    int n = 0;
    for (const auto& g : sys.ground) {
        n += g.label.rfind(prefix, 0) == 0;
    }
    for (const auto& imp : sys.implications) {
        n += imp.label.rfind(prefix, 0) == 0;
    }
    return n;
}

}  // namespace

TEST_CASE("one step of the running example under the deterministic b-strategy") {
    auto prob = model::builtin_fixture("running-ex1");
    const auto& m = prob.mdp;
    // A plays b: mass A -> B; B -> C; C -> {C: 1/2, A: 1/2}
    auto pf = [&](int s, int k) {
        if (!m.multi_action(s)) {
            return Polynomial::constant(1);
        }
        return Polynomial::constant(k == 1 ? 1 : 0);
    };
    std::vector<Polynomial> x = {Polynomial::var(VarId::state(0)), Polynomial::var(VarId::state(1)),
                                 Polynomial::var(VarId::state(2))};
    auto next = constraints::step_apply(m, pf, x);
    CHECK(next[0] == x[2] * Rat(1, 2));
    CHECK(next[1] == x[0]);
    CHECK(next[2] == x[1] + x[2] * Rat(1, 2));
}

TEST_CASE("step conserves mass on random instances") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        auto m = test::random_mdp(rng, 2 + int(rng() % 3), 2);
        auto strat = test::random_strategy(rng, m);
        auto mu = test::random_dist(rng, m.num_states());
        auto pf = [&](int s, int k) { return Polynomial::constant(strat.probs[size_t(s)][size_t(k)]); };
        std::vector<Polynomial> entries;
        for (const auto& v : mu.p) {
            entries.push_back(Polynomial::constant(v));
        }
        auto next = constraints::step_apply(m, pf, entries);
        Rat total = 0;
        for (const auto& e : next) {
            REQUIRE(e.is_constant());
            Rat v = e.eval({});
            CHECK(v >= 0);
            total += v;
        }
        CHECK(total == 1);
    }
}

TEST_CASE("memoryless system has the expected constraint groups") {
    auto prob = model::builtin_fixture("running-ex1");
    prob.invariant_size = 1;
    auto tpl = constraints::make_templates(prob);
    auto sys = constraints::build_system(prob, tpl);
    CHECK(count_label(sys, "strat[") == 2);
    CHECK(count_label(sys, "strat-row") == 1);
    CHECK(count_label(sys, "initial[") == 1);
    CHECK(count_label(sys, "inductive[") == 1);
    CHECK(count_label(sys, "safe[") == 1);
    // every implication antecedent: invariant, simplex facts, trivial fact
    for (const auto& imp : sys.implications) {
        CHECK(imp.route == Implication::Route::Farkas);
        size_t base = size_t(prob.invariant_size) + size_t(prob.mdp.num_states()) + 3;
        CHECK(imp.antecedent.size() >= base);
        // strengthening may append H after the base block
        CHECK(imp.antecedent[base - 1] == Polynomial::constant(1));
    }
}

TEST_CASE("strengthening adds H to inductiveness antecedents only") {
    auto prob = model::builtin_fixture("running-ex1");
    auto tpl = constraints::make_templates(prob);
    auto on = constraints::build_system(prob, tpl, true);
    auto off = constraints::build_system(prob, tpl, false);
    for (size_t i = 0; i < on.implications.size(); ++i) {
        const auto& a = on.implications[i];
        const auto& b = off.implications[i];
        CHECK(a.label == b.label);
        if (a.label.rfind("inductive", 0) == 0) {
            CHECK(a.antecedent.size() == b.antecedent.size() + 1);
        } else {
            CHECK(a.antecedent.size() == b.antecedent.size());
        }
    }
}

TEST_CASE("chain system size is stable") {
    auto prob = model::builtin_fixture("chain");
    auto tpl = constraints::make_templates(prob);
    auto sys = constraints::build_system(prob, tpl);
    // pure chain: no strategy or orbit constraints, N_I initial rows,
    // N_I inductiveness implications, one safety implication
    CHECK(count_label(sys, "strat") == 0);
    CHECK(count_label(sys, "orbit") == 0);
    CHECK(sys.ground.size() == 2);
    CHECK(sys.implications.size() == 3);
}

TEST_CASE("orbit cuts appear in memoryless mode and vanish with unroll") {
    auto prob = model::builtin_fixture("running-ex2");
    prob.mode = model::StrategyMode::Memoryless;
    prob.hints.clear();
    auto tpl = constraints::make_templates(prob);
    auto sys = constraints::build_system(prob, tpl);
    CHECK(count_label(sys, "orbit[") > 0);
    // cuts are sound: the fixture's known violating strategy must break them
    // while pure b-looping... there is none; instead check they vanish with unroll
    prob.unroll = 1;
    auto sys2 = constraints::build_system(prob, tpl);
    CHECK(count_label(sys2, "orbit[") == 0);
    CHECK(count_label(sys2, "unroll-step") > 0);
}

TEST_CASE("orbit cuts hold for any genuine strategy point") {
    // running-ex1: substitute an arbitrary strategy and check each cut
    // equals H evaluated on the exactly simulated orbit
    auto prob = model::builtin_fixture("running-ex1");
    auto tpl = constraints::make_templates(prob);
    auto sys = constraints::build_system(prob, tpl);
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        Rat pa = test::random_rat(rng, 0, 4, 4);
        if (pa > 1) {
            pa = 1;
        }
        std::map<VarId, Rat> pt = {{VarId::strat_prob(0, 0), pa},
                                   {VarId::strat_prob(0, 1), Rat(1) - pa}};
        certificate::MemorylessStrategy strat;
        strat.probs = {{pa, Rat(1) - pa}, {Rat(1)}, {Rat(1)}};
        auto stream = certificate::simulate(prob.mdp, strat, *prob.initial.fixed,
                                            prob.mdp.num_states());
        for (const auto& g : sys.ground) {
            if (g.label.rfind("orbit[", 0) != 0) {
                continue;
            }
            int t = std::stoi(g.label.substr(6));
            Rat direct = prob.safe.conjuncts[0].expr.eval(stream[size_t(t)]);
            CHECK(g.poly.eval(pt) == direct);
        }
    }
}

TEST_CASE("clear_denominators stays quadratic and matches pointwise") {
    auto prob = model::builtin_fixture("running-ex2");
    auto tpl = constraints::make_templates(prob);
    std::set<VarId> xs;
    for (int i = 0; i < prob.mdp.num_states(); ++i) {
        xs.insert(VarId::state(i));
    }
    // Table 2 strategy: num(A,a) = 4A - 1, num(A,b) = 1, den(A) = 4A
    std::map<VarId, Rat> vals = {
        {VarId::numer_coeff(0, 0, 0), Rat(-1)}, {VarId::numer_coeff(0, 0, 1), Rat(4)},
        {VarId::numer_coeff(0, 0, 2), Rat(0)},  {VarId::numer_coeff(0, 0, 3), Rat(0)},
        {VarId::numer_coeff(0, 1, 0), Rat(1)},  {VarId::numer_coeff(0, 1, 1), Rat(0)},
        {VarId::numer_coeff(0, 1, 2), Rat(0)},  {VarId::numer_coeff(0, 1, 3), Rat(0)},
        {VarId::denom_coeff(0, 0), Rat(0)},     {VarId::denom_coeff(0, 1), Rat(4)},
        {VarId::denom_coeff(0, 2), Rat(0)},     {VarId::denom_coeff(0, 3), Rat(0)},
    };
    // conjunct x_B - 1/4 over the one-step successor
    Polynomial conj = Polynomial::var(VarId::state(1)) - Polynomial::constant(Rat(1, 4));
    Polynomial cleared = constraints::clear_denominators(conj, prob.mdp, tpl);
    CHECK(cleared.degree_in(xs) <= 2);

    certificate::DistStrategy strat;
    strat.num = {{model::AffineExpr{Rat(-1), {Rat(4), Rat(0), Rat(0)}},
                  model::AffineExpr{Rat(1), {Rat(0), Rat(0), Rat(0)}}},
                 {},
                 {}};
    strat.den = {model::AffineExpr{Rat(0), {Rat(4), Rat(0), Rat(0)}}, std::nullopt, std::nullopt};
    Rng rng(13);
    for (int i = 0; i < 30; ++i) {
        auto mu = test::random_dist(rng, 3);
        Rat den = strat.den[0]->eval(mu);
        Rat num_a = strat.num[0][0].eval(mu);
        if (den < 1 || num_a < 0) {
            continue;  // strategy undefined here; cleared form makes no claim
        }
        auto next = certificate::simulate(prob.mdp, strat, mu, 1)[1];
        Rat direct = next.p[1] - Rat(1, 4);
        auto pt = dist_point(mu);
        for (const auto& [v, val] : vals) {
            pt[v] = val;
        }
        // cleared = D(x) * conj(step(x)) with D = den(A)
        CHECK(cleared.eval(pt) == den * direct);
    }
}

TEST_CASE("unroll 0 and a one-step prefix agree with exact simulation") {
    auto prob = model::builtin_fixture("running-ex2");
    prob.mode = model::StrategyMode::Memoryless;
    prob.hints.clear();
    prob.unroll = 2;
    auto tpl = constraints::make_templates(prob);
    auto sys = constraints::build_system(prob, tpl);
    // the prefix distributions are pinned by equalities; H at step 1 forces
    // q0 for action b to be 1/3 : 3/4 * q_b = 1/4
    bool found = false;
    for (const auto& g : sys.ground) {
        if (g.label.rfind("unroll-safe[0", 0) == 0) {
            found = true;
            // mu_0 fixed: evaluates to B - 1/4 = 0
            CHECK(g.poly.is_zero());
        }
    }
    CHECK(found);
    CHECK(count_label(sys, "unroll-strat-row") == 2);
    CHECK(count_label(sys, "unroll-dist[2]-sum") == 1);
}

TEST_CASE("hints must name real template variables") {
    auto prob = model::builtin_fixture("running-ex1");
    prob.hints["nonsense"] = Rat(1);
    auto tpl = constraints::make_templates(prob);
    CHECK_THROWS_AS(constraints::build_system(prob, tpl), ParseError);
    prob.hints.clear();
    prob.hints["p0_1"] = Rat(1);
    CHECK_NOTHROW(constraints::build_system(prob, tpl));
}
