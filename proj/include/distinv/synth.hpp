// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "distinv/certificate.hpp"
#include "distinv/constraints.hpp"
#include "distinv/qelim.hpp"
#include "distinv/solver.hpp"

namespace distinv::synth {

using model::SynthesisProblem;

struct Options {
    bool strengthen = true;
    solver::SolverConfig solver;
};

struct Result {
    solver::SolveOutcome::Kind kind = solver::SolveOutcome::Kind::Unknown;
    std::optional<certificate::Certificate> cert;  // populated when Sat
    std::string detail;

    // existential-system size, for reporting
    int num_variables = 0;
    int num_constraints = 0;

    // wall-clock seconds per phase
    double build_secs = 0;
    double solve_secs = 0;

    std::string smt_script;  // the exact script handed to the solver
};

/// Full pipeline: templates -> constraint system -> multiplier elimination
/// -> solver -> certificate extraction. Unsat means "no certificate with
/// these template sizes", never "unsafe".
Result synthesize(const SynthesisProblem& prob, const Options& opt);

/// Uninitialized fixpoint variant: finds mu with mu = step(mu) under a
/// one-step (memoryless) strategy and mu in H. Purely existential, no
/// universally quantified implications. The certificate pins the invariant
/// to the single point mu.
Result synthesize_fixpoint(const SynthesisProblem& prob, const Options& opt);

/// Reads a concrete certificate out of a solver model for the template set.
certificate::Certificate extract_certificate(const SynthesisProblem& prob,
                                             const constraints::TemplateSet& tpl,
                                             const std::map<ring::VarId, Rat>& model);

}  // namespace distinv::synth
