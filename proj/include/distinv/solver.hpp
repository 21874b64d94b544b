// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "distinv/qelim.hpp"

namespace distinv::solver {

using qelim::ExistentialSystem;
using ring::Polynomial;
using ring::VarId;

struct SolverCommand {
    /// argv of the solver executable; the script path is appended.
    std::vector<std::string> argv;
};

struct SolverConfig {
    std::vector<SolverCommand> commands;
    double timeout_secs = 300;
    std::string logic = "QF_NRA";
    /// Run all commands concurrently; the first definitive answer wins.
    bool portfolio = true;
};

struct SolveOutcome {
    enum class Kind { Sat, Unsat, Unknown, Timeout, SolverError };
    Kind kind = Kind::Unknown;
    std::map<VarId, Rat> model;  // assigns every declared variable when Sat
    std::string detail;

    bool sat() const { return kind == Kind::Sat; }
};

/// Deterministic SMT-LIB2 script: declarations in variable order, one
/// assert per constraint, check-sat, then get-value over all variables.
std::string emit_smt(const ExistentialSystem& sys, const std::string& logic);

/// Rational literal in SMT-LIB2 syntax: (/ p q), (- ...) for negatives.
std::string smt_rat(const Rat& r);
std::string smt_poly(const Polynomial& p);

/// Exact presolve. Two reductions, both satisfiability-preserving:
///  - Gaussian: an equality whose variable occurs only linearly system-wide
///    (or is pinned to a constant) is solved and substituted away.
///  - One-sided Fourier-Motzkin: a variable occurring only linearly in
///    inequalities and bounded from one side only is eliminated by
///    dropping its rows (they hold for a large enough value).
/// `steps` reconstructs eliminated values from a reduced model; apply in
/// reverse order.
struct Presolved {
    struct Step {
        VarId v;
        std::optional<Polynomial> exact;  // equality back-substitution
        std::vector<Polynomial> lowers;   // v >= l(rest)
        std::vector<Polynomial> uppers;   // v <= u(rest)
    };
    ExistentialSystem sys;
    std::vector<Step> steps;
};
Presolved presolve(const ExistentialSystem& sys);

/// Runs the configured solvers on the system (after presolve). A Sat
/// result is re-validated in exact arithmetic against the original system
/// before being reported; models that fail validation or contain
/// non-rational values degrade to Unknown.
SolveOutcome solve(const ExistentialSystem& sys, const SolverConfig& cfg);

/// Runs a raw SMT-LIB2 script; `values` maps response names to parsed
/// rationals when the verdict is sat and values were requested.
struct RawResult {
    SolveOutcome::Kind kind = SolveOutcome::Kind::Unknown;
    std::map<std::string, std::optional<Rat>> values;  // nullopt = non-rational
    std::string detail;
};
RawResult run_script(const std::string& script, const SolverConfig& cfg);

/// Parses one get-value s-expression fragment into an exact rational;
/// nullopt flags non-rational answers (e.g. root-obj). Throws ParseError
/// on malformed input.
std::optional<Rat> parse_value(const std::string& sexpr);

/// Solver commands from the environment (DISTINV_SOLVER, split on
/// whitespace) or by probing for z3 / cvc5 / the bundled wasm wrapper.
SolverConfig default_solver_config();

}  // namespace distinv::solver
