// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "distinv/constraints.hpp"

namespace distinv::qelim {

using constraints::ConstraintSystem;
using constraints::GroundRel;
using constraints::Implication;
using ring::Polynomial;
using ring::VarId;

struct ExistentialConstraint {
    Polynomial poly;
    GroundRel rel = GroundRel::Geq;
    std::string label;
};

/// Purely existential polynomial system: no state variables remain.
struct ExistentialSystem {
    std::vector<VarId> variables;  // deterministic order: templates, then multipliers
    std::vector<ExistentialConstraint> constraints;

    std::string dump(const ring::Namer& namer) const;
    std::string dump() const;
};

/// Farkas translation of one implication with an affine consequent:
/// one fresh nonnegative multiplier per antecedent row (the trivial fact
/// 1 >= 0 realizes the constant slack) plus one matching equation per
/// x-monomial of consequent - sum(y_j * antecedent_j).
void farkas_eliminate(const Implication& imp, int imp_index, ExistentialSystem& out);

/// Prod_K: all products of multisets of antecedent rows of size 0..K,
/// in deterministic order. |result| = C(N+K, K) for N rows.
std::vector<Polynomial> handelman_products(const std::vector<Polynomial>& antecedent, int K);

/// Handelman translation: like Farkas but with one multiplier per product
/// in Prod_K. Sound for >= consequents; incomplete for fixed K, so an
/// unsatisfiable fragment means "no certificate at this K", never "unsafe".
void handelman_eliminate(const Implication& imp, int imp_index, int K, ExistentialSystem& out);

ExistentialSystem eliminate_all(const ConstraintSystem& sys, int K);

}  // namespace distinv::qelim
