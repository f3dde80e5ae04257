"""Symplectic Pauli algebra against dense matrix oracles.

Every conjugation table entry is checked against explicit unitaries, so the
whole back-propagation stack can trust the bit-level layer.
"""

import itertools

import numpy as np
import pytest

import quepp.statevector as sv
from quepp.circuits import Circuit
from quepp.pauli import (GATE_KINDS, CliffordGate, PauliString, commutes,
                         conjugate_by_clifford, expectation_on_stabilizer_input,
                         is_z_diagonal, multiply_by_generator)

ONE_QUBIT = [k for k in GATE_KINDS if k not in ("cx", "cz")]
TWO_QUBIT = ["cx", "cz"]


def all_paulis(n, signed=True):
    for x in range(1 << n):
        for z in range(1 << n):
            for sign in ((1, -1) if signed else (1,)):
                yield PauliString(n, x, z, sign)


def gate_unitary(kind, qubits, n):
    return sv.circuit_unitary(Circuit(n, (CliffordGate(kind, qubits),)))


@pytest.mark.parametrize("kind", ONE_QUBIT)
def test_single_qubit_conjugation_exhaustive(kind):
    # convention: conjugation is U^dagger P U, the Heisenberg direction
    U = gate_unitary(kind, (0,), 1)
    for p in all_paulis(1):
        got = sv.pauli_matrix(conjugate_by_clifford(p, CliffordGate(kind, (0,))))
        want = U.conj().T @ sv.pauli_matrix(p) @ U
        assert np.allclose(got, want, atol=1e-12), (kind, p.label())


@pytest.mark.parametrize("kind", TWO_QUBIT)
@pytest.mark.parametrize("qubits", [(0, 1), (1, 0)])
def test_two_qubit_conjugation_exhaustive(kind, qubits):
    U = gate_unitary(kind, qubits, 2)
    for p in all_paulis(2):
        got = sv.pauli_matrix(conjugate_by_clifford(p, CliffordGate(kind, qubits)))
        want = U.conj().T @ sv.pauli_matrix(p) @ U
        assert np.allclose(got, want, atol=1e-12), (kind, qubits, p.label())


@pytest.mark.parametrize("qubits", [(0, 2), (2, 0), (1, 2)])
def test_two_qubit_conjugation_embedded(qubits):
    # nonadjacent qubit pairs exercise the bit packing of the lookup code
    for kind in TWO_QUBIT:
        U = gate_unitary(kind, qubits, 3)
        rng = np.random.default_rng(5)
        for _ in range(40):
            x = int(rng.integers(8))
            z = int(rng.integers(8))
            p = PauliString(3, x, z, int(rng.choice([1, -1])))
            got = sv.pauli_matrix(conjugate_by_clifford(p, CliffordGate(kind, qubits)))
            want = U.conj().T @ sv.pauli_matrix(p) @ U
            assert np.allclose(got, want, atol=1e-12), (kind, qubits, p.label())


def test_commutes_matches_matrix_commutator():
    for a in all_paulis(2, signed=False):
        for b in all_paulis(2, signed=False):
            ma, mb = sv.pauli_matrix(a), sv.pauli_matrix(b)
            zero = np.allclose(ma @ mb - mb @ ma, 0)
            assert commutes(a, b) == zero


def test_multiply_by_generator_matches_matrix():
    # i * G * P for anticommuting pairs is again a signed Pauli; this is the
    # sin-branch frame update
    for gen in all_paulis(2, signed=False):
        for p in all_paulis(2):
            if commutes(gen, p) or gen.is_identity():
                continue
            got = sv.pauli_matrix(multiply_by_generator(p, gen))
            want = 1j * sv.pauli_matrix(gen) @ sv.pauli_matrix(p)
            assert np.allclose(got, want, atol=1e-12), (gen.label(), p.label())


def test_label_round_trip():
    for p in all_paulis(3):
        assert PauliString.from_label(p.label()) == p
    assert PauliString.from_label("-XIZ").sign == -1
    assert PauliString.from_label("+YY") == PauliString.from_label("YY")
    # qubit 0 is the leftmost letter
    p = PauliString.from_label("XIZ")
    assert p.letter(0) == "X" and p.letter(2) == "Z"
    assert p.support() == (0, 2)
    assert p.weight() == 2


def test_label_rejects_garbage():
    with pytest.raises(ValueError):
        PauliString.from_label("XQ")
    with pytest.raises(ValueError):
        PauliString.from_label("")


def test_expectation_on_stabilizer_inputs():
    for n in (1, 2, 3):
        zero = sv.input_state(n, "all_zero").reshape(-1)
        plus = sv.input_state(n, "all_plus").reshape(-1)
        for p in all_paulis(n):
            m = sv.pauli_matrix(p)
            want_zero = complex(zero.conj() @ m @ zero)
            want_plus = complex(plus.conj() @ m @ plus)
            assert expectation_on_stabilizer_input(p, "all_zero") == pytest.approx(want_zero.real, abs=1e-12)
            assert expectation_on_stabilizer_input(p, "all_plus") == pytest.approx(want_plus.real, abs=1e-12)


def test_is_z_diagonal():
    assert is_z_diagonal(PauliString.from_label("ZIZ"))
    assert is_z_diagonal(PauliString.from_label("III"))
    assert not is_z_diagonal(PauliString.from_label("ZXI"))
    assert not is_z_diagonal(PauliString.from_label("YII"))


def test_gate_validation():
    with pytest.raises(ValueError):
        CliffordGate("toffoli", (0, 1, 2))
    with pytest.raises(ValueError):
        CliffordGate("cx", (1, 1))
    with pytest.raises(ValueError):
        CliffordGate("h", (0, 1))


def test_pauli_validation():
    with pytest.raises(ValueError):
        PauliString(2, x=4, z=0)  # bit outside register
    with pytest.raises(ValueError):
        PauliString(2, x=0, z=0, sign=2)


def test_sign_flows_through_conjugation():
    gate = CliffordGate("s", (0,))
    plain = conjugate_by_clifford(PauliString.from_label("X"), gate)
    flipped = conjugate_by_clifford(PauliString.from_label("-X"), gate)
    assert flipped == plain.with_sign(-plain.sign)


def test_commutes_with_is_symmetric():
    for a, b in itertools.product(all_paulis(2, signed=False), repeat=2):
        assert a.commutes_with(b) == b.commutes_with(a)
