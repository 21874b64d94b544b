# Copyright (c) distinv contributors.
# SPDX-License-Identifier: Apache-2.0
"""Exact synthesis of affine distribution invariants for MDPs."""

from distinv._core import (
    ParseError,
    Problem,
    SimulationError,
    check,
    fixture,
    parse_problem,
    simulate,
    synthesize,
)

__all__ = [
    "ParseError",
    "Problem",
    "SimulationError",
    "check",
    "fixture",
    "parse_problem",
    "simulate",
    "synthesize",
]
