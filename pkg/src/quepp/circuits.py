"""Circuit representation: Clifford gates interleaved with Pauli rotations.

A circuit is an ordered op list over a fixed qubit count plus a declared
stabilizer input state (``all_zero`` or ``all_plus``).  Rotations are
``exp(-i theta P / 2)`` for a +1-signed, non-identity Pauli generator P and
are numbered 1..K in circuit order; those indices are what branch records
refer to.

The text format is line based::

    qubits 4
    input all_plus        # optional, defaults to all_zero
    h 0
    cz 0 1
    rx 2 0.6283185307179586
    rot XIZY -0.1

with ``#`` starting a comment and angles in decimal radians.  ``rx q t`` is
sugar for a single-qubit X rotation.
"""

import math
from dataclasses import dataclass
from typing import Union

from .errors import ParseError
from .pauli import CliffordGate, PauliString, GATE_KINDS, INPUT_KINDS

__all__ = [
    "PauliRotation",
    "GateOp",
    "Circuit",
    "parse_circuit",
    "serialize_circuit",
    "normalize_rotations",
    "inverse_circuit",
    "clifford_angle_steps",
    "is_clifford_equivalent",
]

# Residual angles smaller than this are treated as exact Clifford multiples
# and dropped during normalization.
ANGLE_TOLERANCE = 1e-12

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class PauliRotation:
    """exp(-i angle/2 * generator); generator is non-identity with sign +1."""

    generator: PauliString
    angle: float

    def __post_init__(self):
        if self.generator.is_identity():
            raise ValueError("rotation generator must be non-identity")
        if self.generator.sign != 1:
            raise ValueError("rotation generator must carry sign +1")
        if not math.isfinite(self.angle):
            raise ValueError(f"rotation angle must be finite, got {self.angle}")


GateOp = Union[CliffordGate, PauliRotation]


@dataclass(frozen=True)
class Circuit:
    """Immutable gate list over ``num_qubits`` qubits with a declared input."""

    num_qubits: int
    ops: tuple[GateOp, ...]
    input_kind: str = "all_zero"

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        if self.input_kind not in INPUT_KINDS:
            raise ValueError(f"unknown input kind {self.input_kind!r}")
        object.__setattr__(self, "ops", tuple(self.ops))
        for pos, op in enumerate(self.ops):
            if isinstance(op, CliffordGate):
                if any(q >= self.num_qubits for q in op.qubits):
                    raise ValueError(f"op {pos}: qubit out of range in {op}")
            elif isinstance(op, PauliRotation):
                if op.generator.num_qubits != self.num_qubits:
                    raise ValueError(
                        f"op {pos}: rotation generator on {op.generator.num_qubits} "
                        f"qubits in a {self.num_qubits}-qubit circuit")
            else:
                raise TypeError(f"op {pos}: not a gate op: {op!r}")

    @property
    def num_rotations(self) -> int:
        return sum(1 for op in self.ops if isinstance(op, PauliRotation))

    def rotations(self) -> tuple[tuple[int, int, PauliRotation], ...]:
        """All rotations as (rotation_index from 1, op position, rotation)."""
        out = []
        j = 0
        for pos, op in enumerate(self.ops):
            if isinstance(op, PauliRotation):
                j += 1
                out.append((j, pos, op))
        return tuple(out)

    def gate_census(self) -> dict[str, int]:
        """Counts per Clifford kind plus a ``rot`` bucket for rotations."""
        census = {kind: 0 for kind in GATE_KINDS}
        census["rot"] = 0
        for op in self.ops:
            if isinstance(op, CliffordGate):
                census[op.kind] += 1
            else:
                census["rot"] += 1
        return census


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_ONE_QUBIT_KINDS = tuple(k for k in GATE_KINDS if k not in ("cx", "cz"))


def parse_circuit(text: str) -> Circuit:
    """Parse the line format; raises :class:`ParseError` with a line number."""
    num_qubits = None
    input_kind = "all_zero"
    input_seen = False
    ops: list[GateOp] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        head = fields[0]

        if num_qubits is None:
            if head != "qubits":
                raise ParseError(f"expected 'qubits <n>' header, got {head!r}", line_no)
            if len(fields) != 2:
                raise ParseError("qubits header takes exactly one argument", line_no)
            try:
                num_qubits = int(fields[1])
            except ValueError:
                raise ParseError(f"bad qubit count {fields[1]!r}", line_no) from None
            if num_qubits < 1:
                raise ParseError("qubit count must be positive", line_no)
            continue

        if head == "qubits":
            raise ParseError("duplicate qubits header", line_no)

        if head == "input":
            if ops or input_seen:
                raise ParseError("input line must come before gates", line_no)
            if len(fields) != 2 or fields[1] not in INPUT_KINDS:
                raise ParseError(
                    f"input expects one of {'/'.join(INPUT_KINDS)}", line_no)
            input_kind = fields[1]
            input_seen = True
            continue

        if head in _ONE_QUBIT_KINDS:
            if len(fields) != 2:
                raise ParseError(f"{head} takes exactly one qubit", line_no)
            ops.append(CliffordGate(head, (_parse_qubit(fields[1], num_qubits, line_no),)))
        elif head in ("cx", "cz"):
            if len(fields) != 3:
                raise ParseError(f"{head} takes exactly two qubits", line_no)
            a = _parse_qubit(fields[1], num_qubits, line_no)
            b = _parse_qubit(fields[2], num_qubits, line_no)
            if a == b:
                raise ParseError(f"{head} qubits must be distinct", line_no)
            ops.append(CliffordGate(head, (a, b)))
        elif head == "rx":
            if len(fields) != 3:
                raise ParseError("rx takes a qubit and an angle", line_no)
            q = _parse_qubit(fields[1], num_qubits, line_no)
            angle = _parse_angle(fields[2], line_no)
            gen = PauliString(num_qubits, x=1 << q)
            ops.append(PauliRotation(gen, angle))
        elif head == "rot":
            if len(fields) != 3:
                raise ParseError("rot takes a Pauli string and an angle", line_no)
            label = fields[1]
            if label[0] in "+-":
                raise ParseError("rotation generator must be unsigned", line_no)
            try:
                gen = PauliString.from_label(label)
            except ValueError as exc:
                raise ParseError(str(exc), line_no) from None
            if gen.num_qubits != num_qubits:
                raise ParseError(
                    f"generator has {gen.num_qubits} letters, circuit has "
                    f"{num_qubits} qubits", line_no)
            if gen.is_identity():
                raise ParseError("rotation generator must be non-identity", line_no)
            ops.append(PauliRotation(gen, _parse_angle(fields[2], line_no)))
        else:
            raise ParseError(f"unknown op {head!r}", line_no)

    if num_qubits is None:
        raise ParseError("missing 'qubits <n>' header", max(1, text.count("\n") + 1))
    return Circuit(num_qubits, tuple(ops), input_kind)


def _parse_qubit(token: str, num_qubits: int, line_no: int) -> int:
    try:
        q = int(token)
    except ValueError:
        raise ParseError(f"bad qubit index {token!r}", line_no) from None
    if not 0 <= q < num_qubits:
        raise ParseError(f"qubit {q} out of range [0, {num_qubits})", line_no)
    return q


def _parse_angle(token: str, line_no: int) -> float:
    try:
        angle = float(token)
    except ValueError:
        raise ParseError(f"bad angle {token!r}", line_no) from None
    if not math.isfinite(angle):
        raise ParseError(f"angle must be finite, got {token!r}", line_no)
    return angle


def serialize_circuit(circuit: Circuit) -> str:
    """Render to the text format; ``parse_circuit`` inverts this exactly."""
    lines = [f"qubits {circuit.num_qubits}"]
    if circuit.input_kind != "all_zero":
        lines.append(f"input {circuit.input_kind}")
    for op in circuit.ops:
        if isinstance(op, CliffordGate):
            lines.append(" ".join([op.kind, *map(str, op.qubits)]))
        else:
            gen = op.generator
            if gen.weight() == 1 and gen.x and not gen.z:
                lines.append(f"rx {gen.support()[0]} {op.angle!r}")
            else:
                lines.append(f"rot {gen.label()} {op.angle!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Rotation normalization
# ---------------------------------------------------------------------------


def clifford_angle_steps(angle: float, tol: float = 1e-9):
    """Return m with angle == m*pi/2 within tol (m in 0..3), else None."""
    m = round(angle / _HALF_PI)
    if abs(angle - m * _HALF_PI) <= tol:
        return m % 4
    return None


def is_clifford_equivalent(circuit: Circuit, tol: float = 1e-9) -> bool:
    """True when every rotation sits at an exact multiple of pi/2."""
    return all(
        clifford_angle_steps(op.angle, tol) is not None
        for op in circuit.ops
        if isinstance(op, PauliRotation)
    )


def normalize_rotations(circuit: Circuit) -> Circuit:
    """Fold every rotation angle into [-pi/4, pi/4] by factoring quarter turns.

    Each rotation R_P(theta) is rewritten as explicit Clifford quarter turns
    about P followed by a residual rotation R_P(theta') with
    |theta'| <= pi/4; residuals indistinguishable from zero are dropped, so
    afterwards every surviving rotation has sin(theta') != 0.  The quarter
    turns commute with the residual, which keeps this exactly unitary (up to
    global phase for the named-gate substitutions).
    """
    ops: list[GateOp] = []
    for op in circuit.ops:
        if isinstance(op, CliffordGate):
            ops.append(op)
            continue
        m = round(op.angle / _HALF_PI)
        residual = op.angle - m * _HALF_PI
        ops.extend(_quarter_turn_ops(op.generator, m % 4))
        if abs(residual) > ANGLE_TOLERANCE:
            ops.append(PauliRotation(op.generator, residual))
    return Circuit(circuit.num_qubits, tuple(ops), circuit.input_kind)


_X_QUARTER = {1: "sx", 2: "x", 3: "sxdg"}
_Z_QUARTER = {1: "s", 2: "z", 3: "sdg"}


def _quarter_turn_ops(generator: PauliString, m: int) -> list[CliffordGate]:
    """Clifford gates realizing R_P(m * pi/2) up to global phase."""
    if m == 0:
        return []
    support = generator.support()
    if len(support) == 1:
        q = support[0]
        letter = generator.letter(q)
        if letter == "X":
            return [CliffordGate(_X_QUARTER[m], (q,))]
        if letter == "Z":
            return [CliffordGate(_Z_QUARTER[m], (q,))]
    # General case: rotate every support qubit into the Z basis, fan parities
    # into a pivot with CX, apply the quarter turn there, then undo.
    pivot = support[-1]
    basis: list[CliffordGate] = []
    basis_dag: list[CliffordGate] = []
    for q in support:
        letter = generator.letter(q)
        if letter == "X":
            basis.append(CliffordGate("h", (q,)))
            basis_dag.append(CliffordGate("h", (q,)))
        elif letter == "Y":
            # B = S H maps Z to Y; time order below is B^dag ... B
            basis.append(CliffordGate("h", (q,)))
            basis.append(CliffordGate("s", (q,)))
            basis_dag.append(CliffordGate("sdg", (q,)))
            basis_dag.append(CliffordGate("h", (q,)))
    ladder = [CliffordGate("cx", (q, pivot)) for q in support[:-1]]
    turn = CliffordGate(_Z_QUARTER[m], (pivot,))
    return basis_dag + ladder + [turn] + ladder + basis


def inverse_circuit(circuit: Circuit) -> Circuit:
    """Exact inverse: reversed ops with each op inverted."""
    inverse_kind = {"s": "sdg", "sdg": "s", "sx": "sxdg", "sxdg": "sx"}
    ops: list[GateOp] = []
    for op in reversed(circuit.ops):
        if isinstance(op, CliffordGate):
            ops.append(CliffordGate(inverse_kind.get(op.kind, op.kind), op.qubits))
        else:
            ops.append(PauliRotation(op.generator, -op.angle))
    return Circuit(circuit.num_qubits, tuple(ops), circuit.input_kind)
