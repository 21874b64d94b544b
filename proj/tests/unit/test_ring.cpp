// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <random>
#include <set>

#include "distinv/ring.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace distinv;
using ring::Monomial;
using ring::Polynomial;
using ring::VarId;
using test::Rng;

namespace {

Polynomial random_poly(Rng& rng, const std::vector<VarId>& vars, int max_terms, int max_deg) {
    std::uniform_int_distribution<int> terms_d(0, max_terms);
    std::uniform_int_distribution<int> deg_d(0, max_deg);
    std::uniform_int_distribution<size_t> var_d(0, vars.size() - 1);
    Polynomial p;
    int n_terms = terms_d(rng);
    for (int t = 0; t < n_terms; ++t) {
        Polynomial term = Polynomial::constant(test::random_rat(rng, -6, 6, 4));
        int deg = deg_d(rng);
        for (int d = 0; d < deg; ++d) {
            term = term * Polynomial::var(vars[var_d(rng)]);
        }
        p += term;
    }
    return p;
}

std::map<VarId, Rat> random_point(Rng& rng, const std::vector<VarId>& vars) {
    std::map<VarId, Rat> pt;
    for (const auto& v : vars) {
        pt[v] = test::random_rat(rng, -5, 5, 3);
    }
    return pt;
}

const std::vector<VarId> kVars = {VarId::state(0), VarId::state(1), VarId::inv_coeff(0, 1),
                                  VarId::multiplier(2, 3)};

}  // namespace

TEST_CASE("ring axioms hold on random polynomials") {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        Polynomial a = random_poly(rng, kVars, 4, 3);
        Polynomial b = random_poly(rng, kVars, 4, 3);
        Polynomial c = random_poly(rng, kVars, 4, 3);
        CHECK(a + b == b + a);
        CHECK(a * b == b * a);
        CHECK((a + b) + c == a + (b + c));
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
        CHECK((a - a).is_zero());
        CHECK(a * Polynomial::constant(1) == a);
        CHECK((a * Polynomial::constant(0)).is_zero());
    }
}

TEST_CASE("evaluation is a ring homomorphism") {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        Polynomial a = random_poly(rng, kVars, 4, 3);
        Polynomial b = random_poly(rng, kVars, 4, 3);
        auto pt = random_point(rng, kVars);
        CHECK((a + b).eval(pt) == a.eval(pt) + b.eval(pt));
        CHECK((a * b).eval(pt) == a.eval(pt) * b.eval(pt));
    }
}

TEST_CASE("substitute commutes with evaluation") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        Polynomial a = random_poly(rng, kVars, 4, 3);
        Polynomial repl = random_poly(rng, {kVars[1], kVars[2]}, 3, 2);
        auto pt = random_point(rng, kVars);
        std::map<VarId, Polynomial> sigma = {{kVars[0], repl}};
        auto pt2 = pt;
        pt2[kVars[0]] = repl.eval(pt);
        CHECK(a.substitute(sigma).eval(pt) == a.eval(pt2));
    }
}

TEST_CASE("collect groups exactly and reassembles") {
    Rng rng(4);
    std::set<VarId> xs = {kVars[0], kVars[1]};
    for (int i = 0; i < 100; ++i) {
        Polynomial a = random_poly(rng, kVars, 6, 3);
        Polynomial sum;
        for (const auto& [mono, part] : a.collect(xs)) {
            for (const auto& v : part.vars()) {
                CHECK(!xs.count(v));
            }
            Polynomial m = Polynomial::constant(1);
            for (const auto& [v, e] : mono) {
                for (int q = 0; q < e; ++q) {
                    m = m * Polynomial::var(v);
                }
            }
            sum += m * part;
        }
        CHECK(sum == a);
    }
}

TEST_CASE("canonical printing is injective on random polynomials") {
    Rng rng(5);
    std::map<std::string, Polynomial> seen;
    for (int i = 0; i < 300; ++i) {
        Polynomial a = random_poly(rng, kVars, 5, 3);
        auto [it, inserted] = seen.emplace(a.str(), a);
        if (!inserted) {
            CHECK(it->second == a);
        }
    }
}

TEST_CASE("variable names are distinct across kinds and groups") {
    std::vector<VarId> vars = {
        VarId::state(1),          VarId::inv_coeff(1, 0),      VarId::strat_prob(1, 0),
        VarId::numer_coeff(1, 0, 0), VarId::denom_coeff(1, 0), VarId::initial_prob(1),
        VarId::unroll_dist(1, 0), VarId::unroll_prob(1, 0, 0), VarId::multiplier(1, 0),
    };
    std::set<std::string> names;
    for (const auto& v : vars) {
        names.insert(ring::var_name(v));
    }
    CHECK(names.size() == vars.size());
}

TEST_CASE("degrees") {
    Polynomial x = Polynomial::var(kVars[0]);
    Polynomial y = Polynomial::var(kVars[2]);
    Polynomial p = x * x * y + y + Polynomial::constant(3);
    CHECK(p.total_degree() == 3);
    CHECK(p.degree_in({kVars[0]}) == 2);
    CHECK(p.degree_in({kVars[2]}) == 1);
    CHECK(Polynomial().total_degree() == 0);
}

TEST_CASE("graded lex order is a strict total order on small monomials") {
    ring::MonoCmp cmp;
    Monomial one = {};
    Monomial x = {{kVars[0], 1}};
    Monomial x2 = {{kVars[0], 2}};
    Monomial xy = {{kVars[0], 1}, {kVars[1], 1}};
    // graded: higher total degree first
    CHECK(cmp(x, one));
    CHECK(cmp(x2, x));
    CHECK(cmp(xy, x));
    CHECK(!cmp(one, one));
    CHECK((cmp(x2, xy) != cmp(xy, x2)));
}
