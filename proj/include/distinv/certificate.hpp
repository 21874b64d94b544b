// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "distinv/model.hpp"
#include "distinv/solver.hpp"

namespace distinv::certificate {

using model::AffineExpr;
using model::AffineInequality;
using model::Mdp;
using model::SafeSet;
using model::StateDist;

/// Fixed distribution over avail(s) per state; rows sum to 1 exactly.
struct MemorylessStrategy {
    /// probs[s][k]: probability of the k-th available action of s.
    std::vector<std::vector<Rat>> probs;

    void validate(const Mdp& m) const;  // throws ParseError
};

/// Action probabilities depend on the current distribution:
/// pi(mu)(s, a_k) = num[s][k](mu) / den[s](mu). Valid wherever every
/// den[s](mu) >= 1, each num >= 0 and the numerators sum to den.
struct DistStrategy {
    /// Indexed like avail; single-action states carry empty rows and no
    /// denominator.
    std::vector<std::vector<AffineExpr>> num;
    std::vector<std::optional<AffineExpr>> den;

    void validate(const Mdp& m) const;  // structural only
};

/// monostate = no strategy (Markov-chain models only).
using Strategy = std::variant<std::monostate, MemorylessStrategy, DistStrategy>;

struct Certificate {
    std::vector<AffineInequality> invariant;
    Strategy strategy;
    StateDist initial;
};

Certificate parse_certificate(const std::string& text, const Mdp& m);
std::string print_certificate(const Certificate& cert, const Mdp& m);

struct Verdict {
    enum class Kind { Pass, Fail, Inconclusive };
    Kind kind = Kind::Pass;
    std::optional<StateDist> witness;  // populated on Fail of an entailment
    std::string detail;

    bool pass() const { return kind == Kind::Pass; }
};

struct CheckReport {
    Verdict initial_membership;
    Verdict invariant_in_safe;
    Verdict strategy_wellformed;
    Verdict inductiveness;
    int simulation_horizon = 0;
    Verdict simulation;

    bool all_pass() const;
    std::string str(const Mdp& m) const;
    std::string json() const;
};

/// Independent verification of a concrete certificate. Entailments are
/// decided by asserting their negation (QF_LRA for affine queries, QF_NRA
/// after exact denominator clearing in distribution mode); a Sat model is
/// re-validated exactly before being reported as a Fail witness. Solver
/// trouble degrades to Inconclusive, never to Pass. An all-Pass report
/// certifies that cert.initial is safe w.r.t. `safe` under the strategy.
CheckReport check(const Mdp& m, const SafeSet& safe, const Certificate& cert,
                  const solver::SolverConfig& cfg, int simulation_horizon = 25);

struct SimulationError : std::runtime_error {
    int step;
    SimulationError(int step_, const std::string& what_)
        : std::runtime_error(what_), step(step_) {}
};

/// Exact distribution stream mu_0..mu_horizon. Distribution strategies are
/// evaluated at each step; den >= 1, num >= 0 and sum-matching are asserted
/// at use (SimulationError with the offending step otherwise). A monostate
/// strategy requires a Markov chain.
std::vector<StateDist> simulate(const Mdp& m, const Strategy& strat, const StateDist& mu0,
                                int horizon);

/// Markov sequence: one memoryless strategy per step (cycled if shorter
/// than the horizon).
std::vector<StateDist> simulate_sequence(const Mdp& m,
                                         const std::vector<MemorylessStrategy>& strats,
                                         const StateDist& mu0, int horizon);

/// First step whose distribution leaves `safe`, if any within the horizon.
std::optional<std::pair<int, StateDist>> falsify_bounded(const Mdp& m, const SafeSet& safe,
                                                         const Strategy& strat,
                                                         const StateDist& mu0, int horizon);

}  // namespace distinv::certificate
