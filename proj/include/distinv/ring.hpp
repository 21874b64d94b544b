// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "distinv/rational.hpp"

namespace distinv::ring {

enum class VarKind : uint8_t { State = 0, Template = 1, Multiplier = 2 };

// Template variable families. The numeric values fix the canonical
// variable order, which in turn fixes monomial order, constraint order
// and SMT output. Do not reorder.
enum class TemplateGroup : uint8_t {
    InvariantCoeff = 0,  // c{i}_{j}: coefficient j of invariant conjunct i (j = 0 is the constant)
    StratProb = 1,       // p{s}_{a}: memoryless strategy probability
    Numerator = 2,       // r{s}_{a}_{k}: distribution-strategy numerator coefficient
    Denominator = 3,     // d{s}_{k}: distribution-strategy denominator coefficient
    InitialProb = 4,     // m{s}: synthesized initial distribution entry
    UnrollDist = 5,      // u{t}_{s}: unrolled distribution at step t
    UnrollProb = 6,      // q{t}_{s}_{a}: one-step strategy probability at unroll step t
};

struct VarId {
    VarKind kind = VarKind::State;
    uint8_t group = 0;
    int32_t i = 0;
    int32_t j = 0;
    int32_t k = 0;

    auto operator<=>(const VarId&) const = default;

    static VarId state(int i) { return {VarKind::State, 0, i, 0, 0}; }
    static VarId inv_coeff(int conjunct, int j) {
        return {VarKind::Template, uint8_t(TemplateGroup::InvariantCoeff), conjunct, j, 0};
    }
    static VarId strat_prob(int s, int a) {
        return {VarKind::Template, uint8_t(TemplateGroup::StratProb), s, a, 0};
    }
    static VarId numer_coeff(int s, int a, int k) {
        return {VarKind::Template, uint8_t(TemplateGroup::Numerator), s, a, k};
    }
    static VarId denom_coeff(int s, int k) {
        return {VarKind::Template, uint8_t(TemplateGroup::Denominator), s, k, 0};
    }
    static VarId initial_prob(int s) {
        return {VarKind::Template, uint8_t(TemplateGroup::InitialProb), s, 0, 0};
    }
    static VarId unroll_dist(int t, int s) {
        return {VarKind::Template, uint8_t(TemplateGroup::UnrollDist), t, s, 0};
    }
    static VarId unroll_prob(int t, int s, int a) {
        return {VarKind::Template, uint8_t(TemplateGroup::UnrollProb), t, s, a};
    }
    static VarId multiplier(int implication, int row) {
        return {VarKind::Multiplier, 0, implication, row, 0};
    }
};

/// Canonical SMT-safe name, a bijection on VarIds.
std::string var_name(const VarId& v);

using Namer = std::function<std::string(const VarId&)>;

/// A monomial: sorted (variable, exponent) pairs, exponents > 0.
using Monomial = std::vector<std::pair<VarId, int>>;

int monomial_degree(const Monomial& m);

/// Graded lexicographic order, largest monomial first.
struct MonoCmp {
    bool operator()(const Monomial& a, const Monomial& b) const;
};

class Polynomial {
public:
    Polynomial() = default;
    static Polynomial constant(const Rat& c);
    static Polynomial var(const VarId& v);

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator-() const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(const Rat& c) const;
    Polynomial& operator+=(const Polynomial& o);
    Polynomial& operator-=(const Polynomial& o);

    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    bool operator==(const Polynomial& o) const { return terms_ == o.terms_; }

    /// Simultaneous substitution of the mapped variables.
    Polynomial substitute(const std::map<VarId, Polynomial>& sigma) const;

    /// Full numeric evaluation; throws if a variable is unassigned.
    Rat eval(const std::map<VarId, Rat>& assignment) const;

    int total_degree() const;
    int degree_in(const std::set<VarId>& vars) const;

    /// Groups terms by their monomial part over `vars`; the value
    /// polynomials contain none of `vars` and the grouped sum equals *this.
    std::map<Monomial, Polynomial, MonoCmp> collect(const std::set<VarId>& vars) const;

    std::set<VarId> vars() const;

    /// Canonical printing; injective on polynomials for the default namer.
    std::string str() const;
    std::string str(const Namer& namer) const;

    const std::map<Monomial, Rat, MonoCmp>& terms() const { return terms_; }

private:
    void add_term(const Monomial& m, const Rat& c);

    std::map<Monomial, Rat, MonoCmp> terms_;
};

inline Polynomial operator*(const Rat& c, const Polynomial& p) { return p * c; }

}  // namespace distinv::ring
