// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "distinv/rational.hpp"

#include <cctype>

namespace distinv {

namespace {

bool all_digits(const std::string& s) {
    if (s.empty()) {
        return false;
    }
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            return false;
        }
    }
    return true;
}

}  // namespace

Rat parse_rat(const std::string& text) {
    std::string s = text;
    // trim
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.erase(s.begin());
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.pop_back();
    }
    if (s.empty()) {
        throw ParseError("empty rational literal");
    }
    bool negative = false;
    if (s.front() == '+' || s.front() == '-') {
        negative = s.front() == '-';
        s.erase(s.begin());
    }
    Rat value;
    if (auto slash = s.find('/'); slash != std::string::npos) {
        std::string num = s.substr(0, slash);
        std::string den = s.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) {
            throw ParseError("malformed rational literal: " + text);
        }
        mpz_class d(den);
        if (d == 0) {
            throw ParseError("zero denominator in rational literal: " + text);
        }
        value = Rat(mpz_class(num), d);
        value.canonicalize();
    } else if (auto dot = s.find('.'); dot != std::string::npos) {
        std::string intpart = s.substr(0, dot);
        std::string fracpart = s.substr(dot + 1);
        if (intpart.empty()) {
            intpart = "0";
        }
        if (fracpart.empty() || !all_digits(intpart) || !all_digits(fracpart)) {
            throw ParseError("malformed decimal literal: " + text);
        }
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, fracpart.size());
        value = Rat(mpz_class(intpart) * scale + mpz_class(fracpart), scale);
        value.canonicalize();
    } else {
        if (!all_digits(s)) {
            throw ParseError("malformed rational literal: " + text);
        }
        value = Rat(mpz_class(s));
    }
    return negative ? Rat(-value) : value;
}

std::string rat_str(const Rat& r) {
    return r.get_str();
}

}  // namespace distinv
