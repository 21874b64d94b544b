// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "distinv/certificate.hpp"
#include "distinv/model.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace distinv;
using certificate::Certificate;
using certificate::DistStrategy;
using certificate::MemorylessStrategy;
using model::Rel;
using model::StateDist;
using test::Rng;

namespace {

// Example 1's manual certificate: I = {C >= 1/4, C - A >= 0}, play b at A.
Certificate ex1_certificate(const model::Mdp& m) {
    Certificate cert;
    model::AffineInequality c1;
    c1.expr.constant = Rat(-1, 4);
    c1.expr.coeffs = {Rat(0), Rat(0), Rat(1)};
    model::AffineInequality c2;
    c2.expr.coeffs = {Rat(-1), Rat(0), Rat(1)};
    cert.invariant = {c1, c2};
    MemorylessStrategy strat;
    strat.probs = {{Rat(0), Rat(1)}, {Rat(1)}, {Rat(1)}};
    strat.validate(m);
    cert.strategy = strat;
    cert.initial = StateDist{{Rat(1, 3), Rat(1, 3), Rat(1, 3)}};
    return cert;
}

DistStrategy ratio_strategy() {
    DistStrategy strat;
    strat.num = {{model::AffineExpr{Rat(-1), {Rat(4), Rat(0), Rat(0)}},
                  model::AffineExpr{Rat(1), {Rat(0), Rat(0), Rat(0)}}},
                 {},
                 {}};
    strat.den = {model::AffineExpr{Rat(0), {Rat(4), Rat(0), Rat(0)}}, std::nullopt, std::nullopt};
    return strat;
}

}  // namespace

TEST_CASE("certificate json round-trips") {
    auto prob = model::builtin_fixture("running-ex1");
    Certificate cert = ex1_certificate(prob.mdp);
    std::string text = certificate::print_certificate(cert, prob.mdp);
    Certificate back = certificate::parse_certificate(text, prob.mdp);
    CHECK(certificate::print_certificate(back, prob.mdp) == text);
    CHECK(back.invariant == cert.invariant);
    CHECK(back.initial == cert.initial);

    auto ex2 = model::builtin_fixture("running-ex2");
    Certificate dc;
    model::AffineInequality beq;
    beq.rel = Rel::Eq;
    beq.expr.constant = Rat(-1, 4);
    beq.expr.coeffs = {Rat(0), Rat(1), Rat(0)};
    dc.invariant = {beq};
    dc.strategy = ratio_strategy();
    dc.initial = *ex2.initial.fixed;
    std::string dtext = certificate::print_certificate(dc, ex2.mdp);
    Certificate dback = certificate::parse_certificate(dtext, ex2.mdp);
    CHECK(certificate::print_certificate(dback, ex2.mdp) == dtext);
}

TEST_CASE("strategy validation rejects broken rows") {
    auto prob = model::builtin_fixture("running-ex1");
    MemorylessStrategy bad;
    bad.probs = {{Rat(1, 2), Rat(1, 4)}, {Rat(1)}, {Rat(1)}};
    CHECK_THROWS_AS(bad.validate(prob.mdp), ParseError);
    bad.probs = {{Rat(3, 2), Rat(-1, 2)}, {Rat(1)}, {Rat(1)}};
    CHECK_THROWS_AS(bad.validate(prob.mdp), ParseError);
}

TEST_CASE("simulation reproduces the example 2 closed form") {
    auto prob = model::builtin_fixture("running-ex2");
    auto stream = certificate::simulate(prob.mdp, ratio_strategy(), *prob.initial.fixed, 10);
    Rat tail(1, 2);  // 1/2^{i+1}
    for (int i = 0; i <= 10; ++i) {
        // mu_i = (1/4 + 1/2^{i+1}, 1/4, 1/2 - 1/2^{i+1})
        CHECK(stream[size_t(i)].p[0] == Rat(1, 4) + tail);
        CHECK(stream[size_t(i)].p[1] == Rat(1, 4));
        CHECK(stream[size_t(i)].p[2] == Rat(1, 2) - tail);
        tail /= 2;
    }
}

TEST_CASE("example 2 strategy probabilities at the initial distribution") {
    auto prob = model::builtin_fixture("running-ex2");
    DistStrategy strat = ratio_strategy();
    StateDist mu0 = *prob.initial.fixed;
    Rat den = strat.den[0]->eval(mu0);
    CHECK(strat.num[0][0].eval(mu0) / den == Rat(2, 3));  // action a
    CHECK(strat.num[0][1].eval(mu0) / den == Rat(1, 3));  // action b
}

TEST_CASE("always-a strategy is falsified at step 3 with the exact witness") {
    auto prob = model::builtin_fixture("running-ex1");
    MemorylessStrategy always_a;
    always_a.probs = {{Rat(1), Rat(0)}, {Rat(1)}, {Rat(1)}};
    auto hit = certificate::falsify_bounded(prob.mdp, prob.safe, always_a,
                                            *prob.initial.fixed, 25);
    REQUIRE(hit.has_value());
    CHECK(hit->first == 3);
    CHECK(hit->second == StateDist{{Rat(7, 8), Rat(0), Rat(1, 8)}});
}

TEST_CASE("the certified b-strategy stays safe for a long horizon") {
    auto prob = model::builtin_fixture("running-ex1");
    auto cert = ex1_certificate(prob.mdp);
    auto hit = certificate::falsify_bounded(prob.mdp, prob.safe, cert.strategy,
                                            cert.initial, 100);
    CHECK(!hit.has_value());
}

TEST_CASE("monostate strategy requires a markov chain") {
    auto prob = model::builtin_fixture("running-ex1");
    CHECK_THROWS(certificate::simulate(prob.mdp, std::monostate{}, *prob.initial.fixed, 5));
    auto chain = model::builtin_fixture("chain");
    CHECK_NOTHROW(certificate::simulate(chain.mdp, std::monostate{}, *chain.initial.fixed, 5));
}

TEST_CASE("distribution strategies are validated at every step") {
    auto prob = model::builtin_fixture("running-ex2");
    DistStrategy strat = ratio_strategy();
    // den(A) = 4A drops below 1 when A < 1/4: simulation must flag the step
    StateDist low{{Rat(1, 8), Rat(1, 8), Rat(3, 4)}};
    try {
        certificate::simulate(prob.mdp, strat, low, 5);
        FAIL("expected SimulationError");
    } catch (const certificate::SimulationError& e) {
        CHECK(e.step == 0);
    }
}

TEST_CASE("simulate_sequence cycles per-step strategies") {
    auto prob = model::builtin_fixture("running-ex1");
    MemorylessStrategy a{{{Rat(1), Rat(0)}, {Rat(1)}, {Rat(1)}}};
    MemorylessStrategy b{{{Rat(0), Rat(1)}, {Rat(1)}, {Rat(1)}}};
    auto seq = certificate::simulate_sequence(prob.mdp, {a, b}, *prob.initial.fixed, 4);
    // step 0 plays a, step 1 plays b, then repeats
    auto direct0 = certificate::simulate(prob.mdp, a, *prob.initial.fixed, 1);
    CHECK(seq[1] == direct0[1]);
    auto direct1 = certificate::simulate(prob.mdp, b, seq[1], 1);
    CHECK(seq[2] == direct1[1]);
}

TEST_CASE("mass conservation over random simulations") {
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        auto m = test::random_mdp(rng, 2 + int(rng() % 3), 2);
        auto strat = test::random_strategy(rng, m);
        auto mu = test::random_dist(rng, m.num_states());
        auto stream = certificate::simulate(m, strat, mu, 5);
        for (const auto& d : stream) {
            CHECK_NOTHROW(d.validate());
        }
    }
}
