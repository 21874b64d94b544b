// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "distinv/qelim.hpp"

#include <set>
#include <sstream>

namespace distinv::qelim {

using ring::VarKind;

namespace {

std::set<VarId> state_vars_of(const Polynomial& p) {
    std::set<VarId> r;
    for (const auto& v : p.vars()) {
        if (v.kind == VarKind::State) {
            r.insert(v);
        }
    }
    return r;
}

std::set<VarId> state_vars_of(const Implication& imp) {
    std::set<VarId> xs = state_vars_of(imp.consequent);
    for (const auto& row : imp.antecedent) {
        xs.merge(state_vars_of(row));
    }
    return xs;
}

void match_coefficients(const Polynomial& residual, const std::set<VarId>& xs,
                        const std::string& label, ExistentialSystem& out) {
    for (const auto& [mono, coeff] : residual.collect(xs)) {
        std::ostringstream l;
        l << label << " @ ";
        if (mono.empty()) {
            l << "1";
        } else {
            bool first = true;
            for (const auto& [v, e] : mono) {
                if (!first) {
                    l << "*";
                }
                first = false;
                l << ring::var_name(v);
                if (e > 1) {
                    l << "^" << e;
                }
            }
        }
        out.constraints.push_back({coeff, GroundRel::Eq, l.str()});
    }
}

}  // namespace

void farkas_eliminate(const Implication& imp, int imp_index, ExistentialSystem& out) {
    std::set<VarId> xs = state_vars_of(imp);
    if (imp.consequent.degree_in(xs) > 1) {
        throw std::invalid_argument("farkas_eliminate: consequent is not affine in x (" +
                                    imp.label + ")");
    }
    Polynomial residual = imp.consequent;
    for (size_t j = 0; j < imp.antecedent.size(); ++j) {
        VarId y = VarId::multiplier(imp_index, int(j));
        out.variables.push_back(y);
        out.constraints.push_back(
            {Polynomial::var(y), GroundRel::Geq, imp.label + " y" + std::to_string(j)});
        residual -= Polynomial::var(y) * imp.antecedent[j];
    }
    match_coefficients(residual, xs, imp.label, out);
}

std::vector<Polynomial> handelman_products(const std::vector<Polynomial>& antecedent, int K) {
    if (K < 1) {
        throw std::invalid_argument("handelman_products: K must be positive");
    }
    std::vector<Polynomial> products = {Polynomial::constant(1)};
    // Multisets of size 1..K over row indices, in nondecreasing index order.
    std::vector<int> pick;
    auto emit = [&]() {
        Polynomial p = Polynomial::constant(1);
        for (int idx : pick) {
            p = p * antecedent[idx];
        }
        products.push_back(p);
    };
    std::function<void(int, int)> rec = [&](int start, int remaining) {
        if (remaining == 0) {
            return;
        }
        for (int i = start; i < int(antecedent.size()); ++i) {
            pick.push_back(i);
            emit();
            rec(i, remaining - 1);
            pick.pop_back();
        }
    };
    rec(0, K);
    return products;
}

void handelman_eliminate(const Implication& imp, int imp_index, int K, ExistentialSystem& out) {
    std::set<VarId> xs = state_vars_of(imp);
    for (const auto& row : imp.antecedent) {
        if (row.degree_in(xs) > 1) {
            throw std::invalid_argument("handelman_eliminate: antecedent row not affine in x (" +
                                        imp.label + ")");
        }
    }
    std::vector<Polynomial> products = handelman_products(imp.antecedent, K);
    Polynomial residual = imp.consequent;
    for (size_t j = 0; j < products.size(); ++j) {
        VarId y = VarId::multiplier(imp_index, int(j));
        out.variables.push_back(y);
        out.constraints.push_back(
            {Polynomial::var(y), GroundRel::Geq, imp.label + " y" + std::to_string(j)});
        residual -= Polynomial::var(y) * products[j];
    }
    match_coefficients(residual, xs, imp.label, out);
}

ExistentialSystem eliminate_all(const ConstraintSystem& sys, int K) {
    ExistentialSystem out;

    // Template variables of the whole system, in canonical order.
    std::set<VarId> tvars;
    auto note = [&](const Polynomial& p) {
        for (const auto& v : p.vars()) {
            if (v.kind != VarKind::State) {
                tvars.insert(v);
            }
        }
    };
    for (const auto& g : sys.ground) {
        note(g.poly);
    }
    for (const auto& imp : sys.implications) {
        for (const auto& row : imp.antecedent) {
            note(row);
        }
        note(imp.consequent);
    }
    out.variables.assign(tvars.begin(), tvars.end());

    for (const auto& g : sys.ground) {
        if (!state_vars_of(g.poly).empty()) {
            throw std::invalid_argument("ground constraint contains a state variable: " +
                                        g.label);
        }
        out.constraints.push_back({g.poly, g.rel, g.label});
    }
    for (size_t i = 0; i < sys.implications.size(); ++i) {
        const Implication& imp = sys.implications[i];
        if (imp.route == Implication::Route::Farkas) {
            farkas_eliminate(imp, int(i), out);
        } else {
            handelman_eliminate(imp, int(i), K, out);
        }
    }
    for (const auto& c : out.constraints) {
        if (!state_vars_of(c.poly).empty()) {
            throw std::logic_error("state variable left after elimination: " + c.label);
        }
    }
    return out;
}

std::string ExistentialSystem::dump(const ring::Namer& namer) const {
    std::ostringstream out;
    out << "; " << variables.size() << " variables, " << constraints.size() << " constraints\n";
    for (const auto& c : constraints) {
        out << c.label << ": " << c.poly.str(namer)
            << (c.rel == GroundRel::Eq ? " = 0" : " >= 0") << "\n";
    }
    return out.str();
}

std::string ExistentialSystem::dump() const {
    return dump(ring::var_name);
}

}  // namespace distinv::qelim
