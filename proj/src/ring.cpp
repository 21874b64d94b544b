// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "distinv/ring.hpp"

#include <algorithm>
#include <sstream>

namespace distinv::ring {

std::string var_name(const VarId& v) {
    std::ostringstream out;
    switch (v.kind) {
        case VarKind::State:
            out << "x" << v.i;
            break;
        case VarKind::Template:
            switch (TemplateGroup(v.group)) {
                case TemplateGroup::InvariantCoeff: out << "c" << v.i << "_" << v.j; break;
                case TemplateGroup::StratProb: out << "p" << v.i << "_" << v.j; break;
                case TemplateGroup::Numerator: out << "r" << v.i << "_" << v.j << "_" << v.k; break;
                case TemplateGroup::Denominator: out << "d" << v.i << "_" << v.j; break;
                case TemplateGroup::InitialProb: out << "m" << v.i; break;
                case TemplateGroup::UnrollDist: out << "u" << v.i << "_" << v.j; break;
                case TemplateGroup::UnrollProb: out << "q" << v.i << "_" << v.j << "_" << v.k; break;
            }
            break;
        case VarKind::Multiplier:
            out << "y" << v.i << "_" << v.j;
            break;
    }
    return out.str();
}

int monomial_degree(const Monomial& m) {
    int d = 0;
    for (const auto& [v, e] : m) {
        d += e;
    }
    return d;
}

bool MonoCmp::operator()(const Monomial& a, const Monomial& b) const {
    int da = monomial_degree(a);
    int db = monomial_degree(b);
    if (da != db) {
        return da > db;
    }
    // Same degree: lexicographic on the (variable, exponent) sequence,
    // earlier variables and higher exponents first.
    size_t i = 0;
    while (i < a.size() && i < b.size()) {
        if (a[i].first != b[i].first) {
            return a[i].first < b[i].first;
        }
        if (a[i].second != b[i].second) {
            return a[i].second > b[i].second;
        }
        ++i;
    }
    return a.size() < b.size();
}

void Polynomial::add_term(const Monomial& m, const Rat& c) {
    if (c == 0) {
        return;
    }
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        terms_.emplace(m, c);
    } else {
        it->second += c;
        if (it->second == 0) {
            terms_.erase(it);
        }
    }
}

Polynomial Polynomial::constant(const Rat& c) {
    Polynomial p;
    p.add_term({}, c);
    return p;
}

Polynomial Polynomial::var(const VarId& v) {
    Polynomial p;
    p.add_term({{v, 1}}, 1);
    return p;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    Polynomial r = *this;
    r += o;
    return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
    for (const auto& [m, c] : o.terms_) {
        add_term(m, c);
    }
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
    for (const auto& [m, c] : o.terms_) {
        add_term(m, Rat(-c));
    }
    return *this;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    Polynomial r = *this;
    r -= o;
    return r;
}

Polynomial Polynomial::operator-() const {
    Polynomial r;
    for (const auto& [m, c] : terms_) {
        r.terms_.emplace(m, Rat(-c));
    }
    return r;
}

namespace {

Monomial mul_monomials(const Monomial& a, const Monomial& b) {
    Monomial r;
    r.reserve(a.size() + b.size());
    size_t i = 0;
    size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first == b[j].first) {
            r.emplace_back(a[i].first, a[i].second + b[j].second);
            ++i;
            ++j;
        } else if (a[i].first < b[j].first) {
            r.push_back(a[i++]);
        } else {
            r.push_back(b[j++]);
        }
    }
    for (; i < a.size(); ++i) {
        r.push_back(a[i]);
    }
    for (; j < b.size(); ++j) {
        r.push_back(b[j]);
    }
    return r;
}

}  // namespace

Polynomial Polynomial::operator*(const Polynomial& o) const {
    Polynomial r;
    for (const auto& [ma, ca] : terms_) {
        for (const auto& [mb, cb] : o.terms_) {
            r.add_term(mul_monomials(ma, mb), Rat(ca * cb));
        }
    }
    return r;
}

Polynomial Polynomial::operator*(const Rat& c) const {
    Polynomial r;
    if (c == 0) {
        return r;
    }
    for (const auto& [m, coeff] : terms_) {
        r.terms_.emplace(m, Rat(coeff * c));
    }
    return r;
}

bool Polynomial::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

Polynomial Polynomial::substitute(const std::map<VarId, Polynomial>& sigma) const {
    Polynomial result;
    for (const auto& [m, c] : terms_) {
        Polynomial term = Polynomial::constant(c);
        for (const auto& [v, e] : m) {
            auto it = sigma.find(v);
            Polynomial base = it != sigma.end() ? it->second : Polynomial::var(v);
            for (int p = 0; p < e; ++p) {
                term = term * base;
            }
        }
        result += term;
    }
    return result;
}

Rat Polynomial::eval(const std::map<VarId, Rat>& assignment) const {
    Rat result = 0;
    for (const auto& [m, c] : terms_) {
        Rat term = c;
        for (const auto& [v, e] : m) {
            auto it = assignment.find(v);
            if (it == assignment.end()) {
                throw std::invalid_argument("unassigned variable in evaluation: " + var_name(v));
            }
            for (int p = 0; p < e; ++p) {
                term *= it->second;
            }
        }
        result += term;
    }
    return result;
}

int Polynomial::total_degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) {
        d = std::max(d, monomial_degree(m));
    }
    return d;
}

int Polynomial::degree_in(const std::set<VarId>& vars) const {
    int d = 0;
    for (const auto& [m, c] : terms_) {
        int dm = 0;
        for (const auto& [v, e] : m) {
            if (vars.count(v)) {
                dm += e;
            }
        }
        d = std::max(d, dm);
    }
    return d;
}

std::map<Monomial, Polynomial, MonoCmp> Polynomial::collect(const std::set<VarId>& vars) const {
    std::map<Monomial, Polynomial, MonoCmp> result;
    for (const auto& [m, c] : terms_) {
        Monomial key;
        Monomial rest;
        for (const auto& [v, e] : m) {
            (vars.count(v) ? key : rest).emplace_back(v, e);
        }
        Polynomial piece;
        piece.add_term(rest, c);
        result[key] += piece;
    }
    return result;
}

std::set<VarId> Polynomial::vars() const {
    std::set<VarId> r;
    for (const auto& [m, c] : terms_) {
        for (const auto& [v, e] : m) {
            r.insert(v);
        }
    }
    return r;
}

std::string Polynomial::str() const {
    return str(var_name);
}

std::string Polynomial::str(const Namer& namer) const {
    if (terms_.empty()) {
        return "0";
    }
    std::ostringstream out;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        if (!first) {
            out << (c < 0 ? " - " : " + ");
        } else if (c < 0) {
            out << "-";
        }
        first = false;
        Rat a = abs(c);
        bool coeff_shown = a != 1 || m.empty();
        if (coeff_shown) {
            out << rat_str(a);
        }
        bool first_factor = !coeff_shown;
        for (const auto& [v, e] : m) {
            if (!first_factor) {
                out << "*";
            }
            first_factor = false;
            out << namer(v);
            if (e > 1) {
                out << "^" << e;
            }
        }
    }
    return out.str();
}

}  // namespace distinv::ring
