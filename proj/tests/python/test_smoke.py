# Copyright (c) distinv contributors.
# SPDX-License-Identifier: Apache-2.0
"""Smoke tests for the python bindings: fixtures, simulation, synthesis
and certificate checking end to end."""

from fractions import Fraction

import pytest

import distinv


def frac(s):
    return Fraction(s)


def test_fixture_shape():
    prob = distinv.fixture("running-ex1")
    assert prob.states == ["A", "B", "C"]
    assert prob.invariant_size >= 1
    with pytest.raises(distinv.ParseError):
        distinv.fixture("no-such-fixture")


def test_parse_problem_roundtrip():
    prob = distinv.fixture("chain")
    again = distinv.parse_problem(str(prob))
    assert again.states == prob.states


def test_synthesize_and_check_chain():
    prob = distinv.fixture("chain")
    prob.invariant_size = 2
    res = distinv.synthesize(prob, timeout=120)
    assert res["status"] == "sat", res["detail"]
    report = distinv.check(prob, res["certificate"])
    assert report["all_pass"], report["report"]


def test_simulate_is_exact():
    prob = distinv.fixture("running-ex1")
    prob.invariant_size = 2
    res = distinv.synthesize(prob, timeout=120)
    assert res["status"] == "sat", res["detail"]
    stream = distinv.simulate(prob, res["certificate"], horizon=10)
    assert len(stream) == 11
    for row in stream:
        assert sum(frac(v) for v in row) == 1
        assert all(frac(v) >= 0 for v in row)


def test_mode_validation():
    prob = distinv.fixture("running-ex2")
    assert prob.mode == "dist"
    prob.mode = "memless"
    assert prob.mode == "memless"
    with pytest.raises(distinv.ParseError):
        prob.mode = "bogus"
