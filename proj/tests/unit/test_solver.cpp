// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>

#include "distinv/solver.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace distinv;
using qelim::ExistentialSystem;
using ring::Polynomial;
using ring::VarId;
using solver::SolveOutcome;

namespace {

solver::SolverCommand shell(const std::string& body) {
    // tiny fake solver: ignores the script, prints a canned response
    return {{"sh", "-c", body + " # "}};
}

ExistentialSystem tiny_system() {
    // a >= 2, a + b = 3, b >= 0
    ExistentialSystem sys;
    VarId a = VarId::inv_coeff(0, 0);
    VarId b = VarId::inv_coeff(0, 1);
    sys.variables = {a, b};
    sys.constraints.push_back(
        {Polynomial::var(a) - Polynomial::constant(2), qelim::GroundRel::Geq, "lo"});
    sys.constraints.push_back(
        {Polynomial::var(a) + Polynomial::var(b) - Polynomial::constant(3),
         qelim::GroundRel::Eq, "sum"});
    sys.constraints.push_back({Polynomial::var(b), qelim::GroundRel::Geq, "nn"});
    return sys;
}

ExistentialSystem nonlinear_system() {
    // c*c = 4, c >= 0: immune to presolve, forces real solver work
    ExistentialSystem sys;
    VarId c = VarId::inv_coeff(0, 0);
    sys.variables = {c};
    sys.constraints.push_back({Polynomial::var(c) * Polynomial::var(c) - Polynomial::constant(4),
                               qelim::GroundRel::Eq, "sq"});
    sys.constraints.push_back({Polynomial::var(c), qelim::GroundRel::Geq, "nn"});
    return sys;
}

}  // namespace

TEST_CASE("smt rational literals") {
    CHECK(solver::smt_rat(Rat(1, 2)) == "(/ 1 2)");
    CHECK(solver::smt_rat(Rat(-1, 2)) == "(- (/ 1 2))");
    CHECK(solver::smt_rat(Rat(3)) == "3");
    CHECK(solver::smt_rat(Rat(-3)) == "(- 3)");
    CHECK(solver::smt_rat(Rat(0)) == "0");
}

TEST_CASE("parse_value covers solver answer shapes") {
    CHECK(solver::parse_value("(/ 1 2)") == Rat(1, 2));
    CHECK(solver::parse_value("(/ 1.0 2.0)") == Rat(1, 2));
    CHECK(solver::parse_value("(- (/ 1 3))") == Rat(-1, 3));
    CHECK(solver::parse_value("(- 2)") == Rat(-2));
    CHECK(solver::parse_value("0.25") == Rat(1, 4));
    CHECK(solver::parse_value("7") == Rat(7));
    CHECK(!solver::parse_value("(root-obj (+ (^ x 2) (- 2)) 1)").has_value());
    CHECK_THROWS_AS(solver::parse_value("(/ 1"), ParseError);
}

TEST_CASE("emit_smt is deterministic and declares in order") {
    auto sys = tiny_system();
    std::string s1 = solver::emit_smt(sys, "QF_NRA");
    std::string s2 = solver::emit_smt(sys, "QF_NRA");
    CHECK(s1 == s2);
    CHECK(s1.find("(set-logic QF_NRA)") != std::string::npos);
    CHECK(s1.find("declare-const c0_0") < s1.find("declare-const c0_1"));
    CHECK(s1.find("(check-sat)") != std::string::npos);
}

TEST_CASE("presolve eliminates linear variables and pins constants") {
    auto sys = tiny_system();
    auto pre = solver::presolve(sys);
    // gaussian elimination takes b; a stays (bounded from both sides)
    CHECK(pre.sys.variables.size() == 1);
    CHECK(pre.sys.constraints.size() == 2);
    REQUIRE(pre.steps.size() == 1);
    CHECK(pre.steps[0].exact.has_value());

    // a variable bounded from one side only loses all its rows
    ExistentialSystem one_sided;
    VarId a = VarId::inv_coeff(0, 0);
    one_sided.variables = {a};
    one_sided.constraints.push_back(
        {Polynomial::var(a) - Polynomial::constant(2), qelim::GroundRel::Geq, "lo1"});
    one_sided.constraints.push_back({Polynomial::var(a), qelim::GroundRel::Geq, "lo2"});
    auto pre1 = solver::presolve(one_sided);
    CHECK(pre1.sys.variables.empty());
    CHECK(pre1.sys.constraints.empty());
    REQUIRE(pre1.steps.size() == 1);
    CHECK(!pre1.steps[0].exact.has_value());
    CHECK(pre1.steps[0].lowers.size() == 2);

    // constant pinning reaches variables that occur inside products
    ExistentialSystem s2;
    VarId p = VarId::strat_prob(0, 0);
    VarId c = VarId::inv_coeff(0, 0);
    s2.variables = {c, p};
    s2.constraints.push_back(
        {Polynomial::var(p) - Polynomial::constant(1), qelim::GroundRel::Eq, "pin"});
    s2.constraints.push_back({Polynomial::var(p) * Polynomial::var(c) - Polynomial::constant(5),
                              qelim::GroundRel::Eq, "prod"});
    auto pre2 = solver::presolve(s2);
    CHECK(pre2.sys.variables.size() <= 1);
}

TEST_CASE("presolve keeps falsified constraints") {
    ExistentialSystem sys;
    VarId a = VarId::inv_coeff(0, 0);
    sys.variables = {a};
    sys.constraints.push_back(
        {Polynomial::var(a) - Polynomial::constant(1), qelim::GroundRel::Eq, "pin"});
    sys.constraints.push_back(
        {Polynomial::constant(-1) - Polynomial::var(a), qelim::GroundRel::Geq, "impossible"});
    auto pre = solver::presolve(sys);
    REQUIRE(pre.sys.constraints.size() == 1);
    CHECK(pre.sys.constraints[0].poly.is_constant());
}

TEST_CASE("fake solver subprocess paths") {
    auto sys = tiny_system();
    solver::SolverConfig cfg;
    cfg.timeout_secs = 5;
    cfg.portfolio = false;

    SUBCASE("solver error surfaces") {
        cfg.commands = {shell("echo '(error \"boom\")' >&2; exit 1")};
        auto out = solver::solve(sys, cfg);
        CHECK(out.kind == SolveOutcome::Kind::SolverError);
    }
    SUBCASE("unsat passes through") {
        cfg.commands = {shell("echo unsat")};
        auto out = solver::solve(sys, cfg);
        CHECK(out.kind == SolveOutcome::Kind::Unsat);
    }
    SUBCASE("unknown passes through") {
        cfg.commands = {shell("echo unknown")};
        auto out = solver::solve(sys, cfg);
        CHECK(out.kind == SolveOutcome::Kind::Unknown);
    }
    SUBCASE("timeout is enforced") {
        cfg.timeout_secs = 1;
        cfg.commands = {shell("sleep 30; echo sat")};
        auto out = solver::solve(sys, cfg);
        CHECK(out.kind == SolveOutcome::Kind::Timeout);
    }
    SUBCASE("a lying sat answer is caught by exact re-validation") {
        // model claims c=0, violating c*c = 4; must degrade to Unknown
        cfg.commands = {shell("echo sat; echo '((c0_0 0))'")};
        auto out = solver::solve(nonlinear_system(), cfg);
        CHECK(out.kind == SolveOutcome::Kind::Unknown);
    }
    SUBCASE("portfolio: first definitive answer wins") {
        cfg.portfolio = true;
        cfg.timeout_secs = 10;
        cfg.commands = {shell("sleep 8; echo unknown"), shell("echo unsat")};
        auto out = solver::solve(sys, cfg);
        CHECK(out.kind == SolveOutcome::Kind::Unsat);
    }
}

TEST_CASE("presolved systems reconstruct full exact models") {
    // the tiny system presolves to nothing; the model must still assign
    // every original variable consistently
    auto cfg = solver::default_solver_config();
    REQUIRE(!cfg.commands.empty());
    cfg.timeout_secs = 60;
    auto sys = tiny_system();
    auto out = solver::solve(sys, cfg);
    REQUIRE(out.kind == SolveOutcome::Kind::Sat);
    VarId a = VarId::inv_coeff(0, 0);
    VarId b = VarId::inv_coeff(0, 1);
    CHECK(out.model.at(a) >= 2);
    CHECK(out.model.at(a) + out.model.at(b) == 3);
    CHECK(out.model.at(b) >= 0);
}

TEST_CASE("real backend solves a nonlinear system exactly") {
    auto cfg = solver::default_solver_config();
    REQUIRE(!cfg.commands.empty());
    cfg.timeout_secs = 60;
    auto out = solver::solve(nonlinear_system(), cfg);
    REQUIRE(out.kind == SolveOutcome::Kind::Sat);
    CHECK(out.model.at(VarId::inv_coeff(0, 0)) == 2);
}
