"""Shared builders for randomized tests."""

import math

import numpy as np

from quepp.circuits import Circuit, PauliRotation
from quepp.pauli import CliffordGate, PauliString

ONE_QUBIT_KINDS = ("h", "s", "sdg", "x", "y", "z", "sx", "sxdg")
TWO_QUBIT_KINDS = ("cx", "cz")
AXES = ("X", "Y", "Z")


def random_pauli(n: int, rng: np.random.Generator, *,
                 allow_identity: bool = False,
                 signed: bool = True) -> PauliString:
    while True:
        x = int(rng.integers(0, 1 << n))
        z = int(rng.integers(0, 1 << n))
        if allow_identity or x or z:
            break
    sign = int(rng.choice([1, -1])) if signed else 1
    return PauliString(n, x, z, sign)


def single_site_observable(n: int, rng: np.random.Generator) -> PauliString:
    q = int(rng.integers(n))
    axis = str(rng.choice(AXES))
    letters = ["I"] * n
    letters[q] = axis
    return PauliString.from_label("".join(letters))


def random_rotation(n: int, rng: np.random.Generator, *,
                    angle: float = None, max_weight: int = 1) -> PauliRotation:
    weight = int(rng.integers(1, max_weight + 1))
    qubits = rng.choice(n, size=min(weight, n), replace=False)
    x = z = 0
    for q in qubits:
        axis = str(rng.choice(AXES))
        if axis in ("X", "Y"):
            x |= 1 << int(q)
        if axis in ("Y", "Z"):
            z |= 1 << int(q)
    if angle is None:
        angle = float(rng.uniform(-math.pi, math.pi))
        if abs(angle) < 1e-3:
            angle = 0.7
    return PauliRotation(PauliString(n, x, z), angle)


def random_circuit(n: int, depth: int, num_rotations: int,
                   rng: np.random.Generator, *,
                   input_kind: str = "all_zero",
                   rotation_angle: float = None,
                   rotation_weight: int = 1,
                   two_qubit_prob: float = 0.4) -> Circuit:
    """Random Clifford ops with rotations scattered at random depths."""
    ops = []
    slots = set(int(s) for s in
                rng.choice(depth, size=min(num_rotations, depth),
                           replace=False))
    for d in range(depth):
        if d in slots:
            ops.append(random_rotation(n, rng, angle=rotation_angle,
                                       max_weight=rotation_weight))
        elif n >= 2 and rng.random() < two_qubit_prob:
            a, b = rng.choice(n, size=2, replace=False)
            ops.append(CliffordGate(str(rng.choice(TWO_QUBIT_KINDS)),
                                    (int(a), int(b))))
        else:
            ops.append(CliffordGate(str(rng.choice(ONE_QUBIT_KINDS)),
                                    (int(rng.integers(n)),)))
    return Circuit(n, tuple(ops), input_kind=input_kind)
