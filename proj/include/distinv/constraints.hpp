// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "distinv/model.hpp"
#include "distinv/ring.hpp"

namespace distinv::constraints {

using model::Mdp;
using model::SynthesisProblem;
using ring::Polynomial;
using ring::VarId;

/// Symbolic templates for one synthesis problem: the invariant conjuncts,
/// the strategy (memoryless probabilities or affine numerator/denominator
/// forms), and the initial-distribution variables when the initial
/// distribution is not fixed. States with a single available action carry
/// no strategy template; their probability is the constant 1.
struct TemplateSet {
    model::StrategyMode mode;
    int n_inv = 0;

    /// invariant[i] = c{i}_0 + sum_j c{i}_{j+1} * x_j, affine in x.
    std::vector<Polynomial> invariant;

    /// Memoryless mode: prob[s][k] for the k-th available action of s
    /// (constant 1 for single-action states, otherwise a template var).
    std::vector<std::vector<Polynomial>> prob;

    /// Distribution mode: affine numerators per (s, k) and denominators
    /// per s; both empty at single-action states.
    std::vector<std::vector<Polynomial>> numer;
    std::vector<Polynomial> denom;

    /// Initial-distribution variables (empty when the initial spec is Fixed).
    std::vector<VarId> initial_vars;

    /// Every template variable, in the canonical VarId order.
    std::vector<VarId> variables;
};

TemplateSet make_templates(const SynthesisProblem& prob);

struct Implication {
    enum class Route { Farkas, Handelman };
    Route route = Route::Farkas;
    std::string label;
    /// Affine-in-x rows, each read as >= 0. Always starts with the
    /// invariant conjuncts and contains the simplex facts and the trivial
    /// fact 1 >= 0.
    std::vector<Polynomial> antecedent;
    /// Read as >= 0; affine in x on Farkas routes.
    Polynomial consequent;
};

enum class GroundRel { Geq, Eq };

struct GroundConstraint {
    Polynomial poly;
    GroundRel rel = GroundRel::Geq;
    std::string label;
};

struct ConstraintSystem {
    std::vector<GroundConstraint> ground;
    std::vector<Implication> implications;
    /// The universally quantified state variables x_1..x_n.
    std::vector<VarId> state_vars;
    int handelman_degree = 2;

    /// Canonical one-constraint-per-line dump of the Step-2 system.
    std::string dump(const ring::Namer& namer) const;
    std::string dump() const;
};

/// One step of the distribution transformer: result[i] is the polynomial
/// for the next-step probability of state i, where `prob(s, k)` yields the
/// probability of the k-th available action of s and `x[s]` the current
/// probability of s. Mass moves from the source state: the coefficient of
/// x_k in result[i] is sum_a prob(k, a) * delta(k, a, i).
std::vector<Polynomial> step_apply(const Mdp& m,
                                   const std::function<Polynomial(int, int)>& prob,
                                   const std::vector<Polynomial>& x);

/// Step under the symbolic strategy template (memoryless mode or a
/// concrete strategy baked into the template set).
std::vector<Polynomial> step_symbolic(const Mdp& m, const TemplateSet& tpl);

/// Distribution mode, after clearing all denominators: applies the
/// invariant conjunct (an affine form over x) to the one-step successor and
/// multiplies through by D(x), the product of all denominators. The result
/// is a polynomial in x; it agrees in sign with the original inequality
/// wherever every denominator is positive.
Polynomial clear_denominators(const Polynomial& conjunct, const Mdp& m, const TemplateSet& tpl);

/// Builds the Step-2 system: ground constraints (strategy simplex in
/// memoryless mode, initial membership, hints) plus the universally
/// quantified implications for strategy well-formedness (distribution
/// mode), inductiveness and safety. With `strengthen`, the safe-set
/// conjuncts join the inductiveness antecedents.
ConstraintSystem build_system(const SynthesisProblem& prob, const TemplateSet& tpl,
                              bool strengthen = true);

}  // namespace distinv::constraints
