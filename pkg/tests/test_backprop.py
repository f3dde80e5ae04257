"""Branch bookkeeping and the two-path worked example.

The single-qubit case U = RX(theta) after H with observable Z back-propagates
to cos(theta) X - sin(theta) Y; every number in that expansion is frozen here.
"""

import math

import numpy as np
import pytest

import quepp.statevector as sv
from quepp.backprop import (COS, PASSTHROUGH, SIN, BranchAssignment,
                            backpropagate, ideal_clifford_expectation,
                            ideal_path_expectation)
from quepp.circuits import Circuit, PauliRotation
from quepp.engine import TruncationPolicy, enumerate_paths
from quepp.errors import InconsistentBranchError
from quepp.pauli import CliffordGate, PauliString

from helpers import random_circuit, single_site_observable


def hx_circuit(theta, input_kind="all_zero"):
    return Circuit(1, (CliffordGate("h", (0,)),
                       PauliRotation(PauliString(1, 1, 0), theta)),
                   input_kind=input_kind)


def expand(circuit, observable):
    paths = list(enumerate_paths(circuit, observable,
                                 TruncationPolicy.order(circuit.num_rotations),
                                 keep_zero_expectation=True))
    # signed Pauli times coefficient, keyed by unsigned frame label
    return {p.frame.with_sign(1).label(): p.coeff.value * p.frame.sign
            for p in paths}, paths


def test_two_path_expansion_exact():
    # the enumeration engine works on normalized circuits, so draw residual
    # angles; the full angle range is covered through backpropagate below
    rng = np.random.default_rng(11)
    obs = PauliString.from_label("Z")
    for theta in rng.uniform(-math.pi / 4, math.pi / 4, size=10):
        if abs(theta) < 1e-6:
            theta = 0.3
        terms, paths = expand(hx_circuit(float(theta)), obs)
        # Z back-propagates to cos(theta) X - sin(theta) Y
        assert set(terms) == {"X", "Y"}
        assert terms["X"] == pytest.approx(math.cos(theta), abs=1e-12)
        assert terms["Y"] == pytest.approx(-math.sin(theta), abs=1e-12)
        orders = {p.frame.with_sign(1).label(): p.coeff.order for p in paths}
        assert orders == {"X": 0, "Y": 1}
        sins = {p.frame.with_sign(1).label(): set(p.coeff.sin_indices)
                for p in paths}
        assert sins == {"X": set(), "Y": {1}}


def test_two_path_frames_via_backpropagate():
    # frames are angle-independent, so this pins the expansion for any theta:
    # Z -> cos X + sin * (-Y)
    c = hx_circuit(0.7)
    obs = PauliString.from_label("Z")
    cos_frame = backpropagate(c, obs, BranchAssignment.from_mapping({1: COS}))
    assert cos_frame == PauliString.from_label("X")
    sin_frame = backpropagate(c, obs, BranchAssignment.from_mapping({1: SIN}))
    # sin branch takes Z to i X Z = Y, then H sends Y to -Y
    assert sin_frame == PauliString.from_label("-Y")


def test_two_path_sum_matches_statevector():
    rng = np.random.default_rng(12)
    obs = PauliString.from_label("Z")
    for theta in rng.uniform(-math.pi, math.pi, size=10):
        for kind in ("all_zero", "all_plus"):
            c = hx_circuit(float(theta), kind)
            # ideal_path_expectation folds in the frame sign, so the path
            # contribution is just trig factor times that
            total = sum(
                (math.cos(theta) if code == COS else math.sin(theta))
                * ideal_path_expectation(c, obs,
                                         BranchAssignment.from_mapping({1: code}))
                for code in (COS, SIN))
            assert total == pytest.approx(sv.expectation(c, obs), abs=1e-12)


def test_inconsistent_branch_raises():
    c = Circuit(1, (PauliRotation(PauliString(1, 0, 1), 0.4),))  # Z rotation
    obs = PauliString.from_label("Z")  # commutes: only passthrough is legal
    for bad in (COS, SIN):
        with pytest.raises(InconsistentBranchError) as err:
            backpropagate(c, obs, BranchAssignment.from_mapping({1: bad}))
        assert err.value.rotation_index == 1
    # and the opposite direction: anticommuting needs cos or sin
    c2 = hx_circuit(0.4)
    with pytest.raises(InconsistentBranchError):
        backpropagate(c2, PauliString.from_label("Z"),
                      BranchAssignment.from_mapping({1: PASSTHROUGH}))


def test_missing_decision_raises():
    c = hx_circuit(0.4)
    with pytest.raises(InconsistentBranchError):
        backpropagate(c, PauliString.from_label("Z"), BranchAssignment(()))


def test_branch_assignment_canonical_order():
    a = BranchAssignment(((3, SIN), (1, COS)))
    assert a.items == ((1, COS), (3, SIN))
    assert a.sin_indices() == (3,)
    assert a.cos_indices() == (1,)
    assert a.order() == 1
    assert a.decision_for(1) == COS
    assert a.decision_for(2) is None


def test_codes_string():
    a = BranchAssignment(((1, COS), (2, SIN), (3, PASSTHROUGH)))
    assert a.codes(3) == "csp"
    with pytest.raises(ValueError):
        a.codes(4)  # rotation 4 has no decision


def test_duplicate_decision_rejected():
    with pytest.raises(ValueError):
        BranchAssignment(((1, COS), (1, SIN)))


def test_ideal_clifford_expectation_matches_statevector():
    rng = np.random.default_rng(13)
    for trial in range(30):
        n = int(rng.integers(1, 5))
        kind = "all_plus" if trial % 3 == 0 else "all_zero"
        c = random_circuit(n, 10, 2, rng, input_kind=kind,
                           rotation_angle=math.pi / 2)
        obs = single_site_observable(n, rng)
        got = ideal_clifford_expectation(c, obs)
        assert got == pytest.approx(sv.expectation(c, obs), abs=1e-12)
        assert got in (-1.0, 0.0, 1.0)
