"""Signed n-qubit Pauli strings in symplectic (x, z, sign) form.

A Pauli string is stored as two n-bit Python integers plus a sign:

    bit j of ``x`` set  ->  X component on qubit j
    bit j of ``z`` set  ->  Z component on qubit j

Per qubit the pair (x, z) decodes as (0,0) I, (1,0) X, (0,1) Z and (1,1) Y,
where Y means the literal Hermitian matrix (not i*X*Z).  Arbitrary-precision
integers make every bitwise operation act on machine words, so commutation
and conjugation cost O(n/64) independent of Pauli weight.

Only signs +1 and -1 are representable.  Conjugation by the supported
Clifford alphabet and the anticommuting generator product both preserve
Hermiticity, so a phase of +/-i can never legitimately appear; if the
internal phase arithmetic produces one, something upstream is broken and a
``ValueError`` is raised rather than silently absorbed.
"""

from dataclasses import dataclass

__all__ = [
    "PauliString",
    "CliffordGate",
    "GATE_KINDS",
    "commutes",
    "conjugate_by_clifford",
    "multiply_by_generator",
    "expectation_on_stabilizer_input",
    "is_z_diagonal",
]

INPUT_KINDS = ("all_zero", "all_plus")

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}


@dataclass(frozen=True)
class PauliString:
    """Immutable signed Pauli string on ``num_qubits`` qubits."""

    num_qubits: int
    x: int = 0
    z: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError(f"num_qubits must be positive, got {self.num_qubits}")
        mask = (1 << self.num_qubits) - 1
        if self.x & ~mask or self.x < 0:
            raise ValueError("x bits outside qubit range")
        if self.z & ~mask or self.z < 0:
            raise ValueError("z bits outside qubit range")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @classmethod
    def identity(cls, num_qubits: int) -> "PauliString":
        return cls(num_qubits)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse text like ``-XIZY``; qubit 0 is the leftmost letter."""
        if not label:
            raise ValueError("empty Pauli label")
        sign = 1
        body = label
        if body[0] in "+-":
            sign = -1 if body[0] == "-" else 1
            body = body[1:]
        if not body:
            raise ValueError(f"no Pauli letters in {label!r}")
        x = z = 0
        for q, letter in enumerate(body):
            try:
                xb, zb = _LETTER_BITS[letter]
            except KeyError:
                raise ValueError(f"bad Pauli letter {letter!r} in {label!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(body), x, z, sign)

    def label(self) -> str:
        """Render as text; ``from_label`` is the exact inverse."""
        letters = "".join(
            _BITS_LETTER[(self.x >> q) & 1, (self.z >> q) & 1]
            for q in range(self.num_qubits)
        )
        return ("-" if self.sign < 0 else "") + letters

    def __str__(self) -> str:
        return self.label()

    @property
    def support_mask(self) -> int:
        return self.x | self.z

    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(q for q in range(self.num_qubits) if (m >> q) & 1)

    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def with_sign(self, sign: int) -> "PauliString":
        return PauliString(self.num_qubits, self.x, self.z, sign)

    def letter(self, q: int) -> str:
        return _BITS_LETTER[(self.x >> q) & 1, (self.z >> q) & 1]

    def commutes_with(self, other: "PauliString") -> bool:
        return commutes(self, other)


GATE_KINDS = ("h", "s", "sdg", "x", "y", "z", "sx", "sxdg", "cx", "cz")
_TWO_QUBIT_KINDS = frozenset({"cx", "cz"})


@dataclass(frozen=True)
class CliffordGate:
    """A named Clifford gate from the fixed alphabet, acting on 1 or 2 qubits."""

    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind in _TWO_QUBIT_KINDS else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} expects {arity} qubit(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"{self.kind} qubits must be distinct, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")

    def is_two_qubit(self) -> bool:
        return self.kind in _TWO_QUBIT_KINDS


# ---------------------------------------------------------------------------
# Phase-exact products of literal Paulis.
#
# _SITE_PHASE[a][b] is k in sigma_a * sigma_b = i^k * sigma_(a xor b) for
# single-site literal Paulis indexed by the 2-bit code (x << 1) | z.
# ---------------------------------------------------------------------------

_I, _Z, _X, _Y = 0, 1, 2, 3  # codes (x << 1) | z

_SITE_PHASE = [[0] * 4 for _ in range(4)]
for _a, _b, _k in [
    (_X, _Y, 1), (_Y, _Z, 1), (_Z, _X, 1),   # cyclic order gains +i
    (_Y, _X, 3), (_Z, _Y, 3), (_X, _Z, 3),   # reversed order gains -i
]:
    _SITE_PHASE[_a][_b] = _k


def _mul_phase(x1: int, z1: int, x2: int, z2: int, sites: int) -> tuple[int, int, int]:
    """Product of two unsigned literal Paulis: returns (x, z, phase mod 4).

    ``sites`` masks the qubits that can contribute a phase; callers pass the
    support of the narrower factor so the loop stays short.
    """
    k = 0
    m = sites
    while m:
        low = m & -m
        q = low.bit_length() - 1
        a = (((x1 >> q) & 1) << 1) | ((z1 >> q) & 1)
        b = (((x2 >> q) & 1) << 1) | ((z2 >> q) & 1)
        k += _SITE_PHASE[a][b]
        m ^= low
    return x1 ^ x2, z1 ^ z2, k & 3


# ---------------------------------------------------------------------------
# Conjugation tables.
#
# Every gate is defined by the Heisenberg images g^dag X_q g and g^dag Z_q g
# of the single-qubit generators on its site(s); the full lookup tables are
# derived from those images with phase-exact multiplication at import time.
# Local encoding: bit i of a local mask corresponds to gate.qubits[i].
# ---------------------------------------------------------------------------

# kind -> tuple over sites of (image of X_site, image of Z_site),
# each image given as (x_mask, z_mask, sign) in local bits.
_GENERATOR_IMAGES = {
    "h":    (((0b0, 0b1, 1), (0b1, 0b0, 1)),),              # X->Z, Z->X
    "s":    (((0b1, 0b1, -1), (0b0, 0b1, 1)),),             # X->-Y, Z->Z
    "sdg":  (((0b1, 0b1, 1), (0b0, 0b1, 1)),),              # X->Y, Z->Z
    "x":    (((0b1, 0b0, 1), (0b0, 0b1, -1)),),             # X->X, Z->-Z
    "y":    (((0b1, 0b0, -1), (0b0, 0b1, -1)),),
    "z":    (((0b1, 0b0, -1), (0b0, 0b1, 1)),),
    "sx":   (((0b1, 0b0, 1), (0b1, 0b1, 1)),),              # X->X, Z->Y
    "sxdg": (((0b1, 0b0, 1), (0b1, 0b1, -1)),),             # X->X, Z->-Y
    "cx": (
        ((0b11, 0b00, 1), (0b00, 0b01, 1)),                 # X0->X0X1, Z0->Z0
        ((0b10, 0b00, 1), (0b00, 0b11, 1)),                 # X1->X1,   Z1->Z0Z1
    ),
    "cz": (
        ((0b01, 0b10, 1), (0b00, 0b01, 1)),                 # X0->X0Z1, Z0->Z0
        ((0b10, 0b01, 1), (0b00, 0b10, 1)),                 # X1->Z0X1, Z1->Z1
    ),
}


def _build_table(kind: str) -> tuple:
    """Derive the full local conjugation table for one gate kind.

    Entry at code sum_i ((x_i << 1 | z_i) << 2i) is (x', z', sign) such that
    g^dag sigma(x,z) g = sign * sigma(x', z') in local bits.
    """
    images = _GENERATOR_IMAGES[kind]
    width = len(images)
    table = []
    for code in range(4 ** width):
        x_in = z_in = 0
        k = 0
        for i in range(width):
            xi = (code >> (2 * i + 1)) & 1
            zi = (code >> (2 * i)) & 1
            x_in |= xi << i
            z_in |= zi << i
            k += xi & zi  # sigma(1,1) = i * X * Z
        # multiply the images of the generator decomposition X^x then Z^z
        ax = az = 0
        sites = (1 << width) - 1
        for i in range(width):
            if (x_in >> i) & 1:
                gx, gz, gs = images[i][0]
                ax, az, dk = _mul_phase(ax, az, gx, gz, sites)
                k += dk + (0 if gs > 0 else 2)
        for i in range(width):
            if (z_in >> i) & 1:
                gx, gz, gs = images[i][1]
                ax, az, dk = _mul_phase(ax, az, gx, gz, sites)
                k += dk + (0 if gs > 0 else 2)
        k &= 3
        if k & 1:
            raise AssertionError(f"non-Hermitian conjugation image for {kind}")
        table.append((ax, az, 1 if k == 0 else -1))
    return tuple(table)


_TABLE1 = {kind: _build_table(kind) for kind in GATE_KINDS if kind not in _TWO_QUBIT_KINDS}
_TABLE2 = {kind: _build_table(kind) for kind in _TWO_QUBIT_KINDS}


def _conjugate_bits(x: int, z: int, sign: int, kind: str, qubits: tuple[int, ...]):
    """Raw-integer conjugation core shared by the hot walk loops."""
    if kind in _TWO_QUBIT_KINDS:
        a, b = qubits
        code = ((((x >> a) & 1) << 1) | ((z >> a) & 1)
                | (((x >> b) & 1) << 3) | (((z >> b) & 1) << 2))
        nx, nz, s = _TABLE2[kind][code]
        keep_x = x & ~((1 << a) | (1 << b))
        keep_z = z & ~((1 << a) | (1 << b))
        x = keep_x | ((nx & 1) << a) | (((nx >> 1) & 1) << b)
        z = keep_z | ((nz & 1) << a) | (((nz >> 1) & 1) << b)
    else:
        q = qubits[0]
        code = (((x >> q) & 1) << 1) | ((z >> q) & 1)
        nx, nz, s = _TABLE1[kind][code]
        x = (x & ~(1 << q)) | (nx << q)
        z = (z & ~(1 << q)) | (nz << q)
    return x, z, sign * s


def commutes(a: PauliString, b: PauliString) -> bool:
    """True when the two strings commute (symplectic product is even)."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(
            f"size mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return ((a.x & b.z) ^ (a.z & b.x)).bit_count() % 2 == 0


def conjugate_by_clifford(p: PauliString, gate: CliffordGate) -> PauliString:
    """Heisenberg image g^dag p g for a gate from the fixed alphabet."""
    for q in gate.qubits:
        if q >= p.num_qubits:
            raise IndexError(f"gate qubit {q} out of range for {p.num_qubits} qubits")
    x, z, sign = _conjugate_bits(p.x, p.z, p.sign, gate.kind, gate.qubits)
    return PauliString(p.num_qubits, x, z, sign)


def multiply_by_generator(p: PauliString, gen: PauliString) -> PauliString:
    """Return i * gen * p, defined only when gen anticommutes with p.

    This is the sine-branch image of p under a quarter-turn rotation
    generated by gen.  For anticommuting Hermitian inputs the result is
    Hermitian with sign +/-1; a commuting pair would produce +/-i and is a
    precondition error.
    """
    if p.num_qubits != gen.num_qubits:
        raise ValueError(
            f"size mismatch: {p.num_qubits} vs {gen.num_qubits} qubits")
    x, z, k = _mul_phase(gen.x, gen.z, p.x, p.z, gen.x | gen.z)
    k = (k + 1) & 3
    if k & 1:
        raise ValueError("multiply_by_generator requires an anticommuting pair")
    sign = p.sign * gen.sign * (1 if k == 0 else -1)
    return PauliString(p.num_qubits, x, z, sign)


def expectation_on_stabilizer_input(p: PauliString, input_kind: str) -> int:
    """Exact expectation of p on |0..0> or |+..+>, always -1, 0 or +1."""
    if input_kind == "all_zero":
        return p.sign if p.x == 0 else 0
    if input_kind == "all_plus":
        return p.sign if p.z == 0 else 0
    raise ValueError(f"unknown input kind {input_kind!r}")


def is_z_diagonal(p: PauliString) -> bool:
    """True when p has no X component anywhere."""
    return p.x == 0
