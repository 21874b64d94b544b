// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>

namespace distinv {

/// Arbitrary-precision rational. All arithmetic in the project is exact.
using Rat = mpq_class;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses "p/q", integer, or decimal literals ("0.5" becomes 1/2 exactly).
Rat parse_rat(const std::string& text);

/// Canonical form: "p/q" with q > 1, otherwise just "p".
std::string rat_str(const Rat& r);

}  // namespace distinv
