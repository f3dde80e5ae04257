"""Circuit text format, angle normalization, and inversion."""

import math

import numpy as np
import pytest

import quepp.statevector as sv
from quepp.circuits import (ANGLE_TOLERANCE, Circuit, PauliRotation,
                            clifford_angle_steps, inverse_circuit,
                            is_clifford_equivalent, normalize_rotations,
                            parse_circuit, serialize_circuit)
from quepp.errors import ParseError
from quepp.pauli import CliffordGate, PauliString

from helpers import random_circuit, random_pauli


def overlap(a: np.ndarray, b: np.ndarray) -> float:
    return abs(np.vdot(a, b))


def test_parse_basic():
    c = parse_circuit("""
        # a comment
        qubits 3
        h 0
        cx 0 1
        rx 2 0.5
        rot XYZ -1.25
        cz 1 2
    """)
    assert c.num_qubits == 3
    assert c.input_kind == "all_zero"
    assert len(c.ops) == 5
    assert isinstance(c.ops[2], PauliRotation)
    assert c.ops[2].generator == PauliString(3, x=0b100, z=0)
    assert c.ops[3].generator == PauliString.from_label("XYZ")
    assert c.ops[3].angle == -1.25


def test_parse_input_kind():
    c = parse_circuit("qubits 2\ninput all_plus\nh 0\n")
    assert c.input_kind == "all_plus"
    with pytest.raises(ParseError):
        parse_circuit("qubits 2\ninput ghz\n")


@pytest.mark.parametrize("text,line", [
    ("h 0", 1),                       # missing header
    ("qubits 2\nh 5", 2),             # qubit out of range
    ("qubits 2\nfoo 0", 2),           # unknown gate
    ("qubits 2\ncx 0 0", 2),          # duplicate qubits
    ("qubits 2\nrot XYZ 0.5", 2),     # label length mismatch
    ("qubits 2\nrx 0 fast", 2),       # bad angle
    ("qubits 2\nrot II 0.5", 2),      # identity generator
    ("qubits 0", 1),                  # empty register
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as err:
        parse_circuit(text)
    assert err.value.line == line


def test_serialize_round_trip_random():
    rng = np.random.default_rng(3)
    for trial in range(60):
        n = int(rng.integers(1, 6))
        kind = "all_plus" if trial % 4 == 0 else "all_zero"
        c = random_circuit(n, 10, 3, rng, input_kind=kind)
        again = parse_circuit(serialize_circuit(c))
        assert again == c


def test_serialize_uses_rx_sugar():
    c = Circuit(2, (PauliRotation(PauliString(2, x=1, z=0), 0.25),))
    text = serialize_circuit(c)
    assert "rx 0 " in text
    assert parse_circuit(text) == c


def test_clifford_angle_steps():
    assert clifford_angle_steps(0.0) == 0
    assert clifford_angle_steps(math.pi / 2) == 1
    assert clifford_angle_steps(math.pi) == 2
    assert clifford_angle_steps(3 * math.pi / 2) == 3
    assert clifford_angle_steps(2 * math.pi) == 0
    assert clifford_angle_steps(-math.pi / 2) == 3
    assert clifford_angle_steps(math.pi / 2 + 1e-12) == 1
    assert clifford_angle_steps(math.pi / 5) is None
    assert clifford_angle_steps(math.pi / 2 + 1e-3) is None


def test_is_clifford_equivalent():
    quarter = Circuit(1, (PauliRotation(PauliString(1, 1, 0), math.pi / 2),))
    assert is_clifford_equivalent(quarter)
    generic = Circuit(1, (PauliRotation(PauliString(1, 1, 0), 0.3),))
    assert not is_clifford_equivalent(generic)
    pure = Circuit(1, (CliffordGate("h", (0,)),))
    assert is_clifford_equivalent(pure)


def test_normalize_bounds_residual_angles():
    rng = np.random.default_rng(4)
    for _ in range(40):
        n = int(rng.integers(1, 4))
        c = random_circuit(n, 8, 4, rng, rotation_weight=2)
        norm = normalize_rotations(c)
        for _, _, rot in norm.rotations():
            assert abs(rot.angle) <= math.pi / 4 + 1e-9
            assert abs(rot.angle) > ANGLE_TOLERANCE


def test_normalize_preserves_state():
    # the normalized circuit must prepare the same state up to global phase
    rng = np.random.default_rng(5)
    for trial in range(40):
        n = int(rng.integers(1, 4))
        kind = "all_plus" if trial % 3 == 0 else "all_zero"
        c = random_circuit(n, 8, 4, rng, input_kind=kind, rotation_weight=2)
        norm = normalize_rotations(c)
        a = sv.run_statevector(c).reshape(-1)
        b = sv.run_statevector(norm).reshape(-1)
        assert overlap(a, b) == pytest.approx(1.0, abs=1e-12)


def test_normalize_specific_angle_split():
    # 3*pi/5 = pi/2 + pi/10: one quarter turn plus a small residual
    c = Circuit(1, (PauliRotation(PauliString(1, 1, 0), 3 * math.pi / 5),))
    norm = normalize_rotations(c)
    residuals = [rot.angle for _, _, rot in norm.rotations()]
    assert len(residuals) == 1
    assert residuals[0] == pytest.approx(math.pi / 10, abs=1e-12)
    assert any(isinstance(op, CliffordGate) and op.kind == "sx"
               for op in norm.ops)


def test_normalize_drops_pure_quarter_turns():
    c = Circuit(1, (PauliRotation(PauliString(1, 1, 0), math.pi / 2),))
    norm = normalize_rotations(c)
    assert norm.num_rotations == 0
    assert is_clifford_equivalent(norm)
    a = sv.run_statevector(c).reshape(-1)
    b = sv.run_statevector(norm).reshape(-1)
    assert overlap(a, b) == pytest.approx(1.0, abs=1e-12)


def test_normalize_multi_qubit_generator():
    gen = PauliString.from_label("YX")
    c = Circuit(2, (PauliRotation(gen, 2.1),))
    norm = normalize_rotations(c)
    a = sv.run_statevector(c).reshape(-1)
    b = sv.run_statevector(norm).reshape(-1)
    assert overlap(a, b) == pytest.approx(1.0, abs=1e-12)
    for _, _, rot in norm.rotations():
        assert abs(rot.angle) <= math.pi / 4 + 1e-9


def test_inverse_circuit_round_trip():
    rng = np.random.default_rng(6)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        c = random_circuit(n, 8, 3, rng, rotation_weight=2)
        inv = inverse_circuit(c)
        combined = Circuit(n, c.ops + inv.ops, input_kind=c.input_kind)
        state = sv.run_statevector(combined).reshape(-1)
        start = sv.input_state(n, c.input_kind).reshape(-1)
        assert overlap(state, start) == pytest.approx(1.0, abs=1e-12)


def test_inverse_swaps_adjoint_pairs():
    c = Circuit(1, (CliffordGate("s", (0,)), CliffordGate("sx", (0,))))
    inv = inverse_circuit(c)
    assert [op.kind for op in inv.ops] == ["sxdg", "sdg"]
    rot = Circuit(1, (PauliRotation(PauliString(1, 1, 0), 0.4),))
    assert inverse_circuit(rot).ops[0].angle == -0.4


def test_gate_census():
    c = parse_circuit("qubits 2\nh 0\nh 1\ncx 0 1\nrx 0 0.3\n")
    census = c.gate_census()
    assert census["h"] == 2
    assert census["cx"] == 1
    assert census["rot"] == 1


def test_rotations_index_one_based():
    c = parse_circuit("qubits 1\nh 0\nrx 0 0.5\nrx 0 0.6\n")
    rots = c.rotations()
    assert [j for j, _, _ in rots] == [1, 2]
    assert [pos for _, pos, _ in rots] == [1, 2]


def test_circuit_validation():
    with pytest.raises(ValueError):
        Circuit(2, (CliffordGate("h", (5,)),))
    with pytest.raises(ValueError):
        Circuit(2, (), input_kind="bell")
    with pytest.raises(ValueError):
        Circuit(2, (PauliRotation(PauliString(3, 1, 0), 0.5),))
