// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "distinv/rational.hpp"

namespace distinv::model {

/// Finite MDP with exact rational transition kernel. State and action
/// orderings follow the input file and drive deterministic variable naming.
struct Mdp {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    /// Per state: indices into `actions` of the available actions (file order).
    std::vector<std::vector<int>> avail;
    /// delta[s][k][t]: probability of moving to state t when playing the
    /// k-th available action of state s. Each row sums to 1 exactly.
    std::vector<std::vector<std::vector<Rat>>> delta;

    int num_states() const { return int(states.size()); }
    bool multi_action(int s) const { return avail[s].size() > 1; }
    int state_index(std::string_view name) const;   // -1 if unknown
    int action_index(std::string_view name) const;  // -1 if unknown
    /// Position of global action `a` in avail[s], -1 if unavailable.
    int avail_index(int s, int a) const;
    int num_state_action_pairs() const;

    /// Checks all structural invariants; throws ParseError on violation.
    void validate() const;
};

struct StateDist {
    std::vector<Rat> p;

    /// Throws unless entries are nonnegative and sum to 1 exactly.
    void validate() const;
    bool operator==(const StateDist&) const = default;
};

/// constant + sum(coeffs[i] * mu(s_i))
struct AffineExpr {
    Rat constant;
    std::vector<Rat> coeffs;

    Rat eval(const StateDist& mu) const;
    bool operator==(const AffineExpr&) const = default;
};

enum class Rel { Geq, Eq };

struct AffineInequality {
    AffineExpr expr;
    Rel rel = Rel::Geq;

    bool holds(const StateDist& mu) const;
    bool operator==(const AffineInequality&) const = default;
};

/// Splits equalities into {expr >= 0, -expr >= 0}; passes >= through.
std::vector<AffineInequality> normalize(const std::vector<AffineInequality>& conjuncts);

/// Affine safe set; the probability simplex is implicit and never stored.
struct SafeSet {
    std::vector<AffineInequality> conjuncts;

    bool member(const StateDist& mu) const;
    bool operator==(const SafeSet&) const = default;
};

struct InitialSpec {
    enum class Kind { Fixed, Free, Constrained };
    Kind kind = Kind::Fixed;
    std::optional<StateDist> fixed;
    std::vector<AffineInequality> constraints;  // over initial-distribution entries
};

enum class StrategyMode { Memoryless, Distribution };

struct SynthesisProblem {
    Mdp mdp;
    SafeSet safe;
    InitialSpec initial;
    int invariant_size = 1;   // N_I
    int handelman_degree = 2; // K
    StrategyMode mode = StrategyMode::Memoryless;
    int unroll = 0;
    std::map<std::string, Rat> hints;  // template variable name -> value
};

Mdp parse_model(const std::string& text);
std::string print_model(const Mdp& m);

SynthesisProblem parse_problem(const std::string& text);
std::string print_problem(const SynthesisProblem& p);

/// Built-in benchmark fixtures: "running" / "running-ex1", "running-ex2",
/// "chain", "split".
SynthesisProblem builtin_fixture(std::string_view name);

}  // namespace distinv::model
