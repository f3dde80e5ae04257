"""Monte Carlo path sampling for ensembles too large to enumerate.

The walk mirrors the depth-first enumeration, but at every anticommuting
rotation a coin decides the branch: cosine with probability
|cos t| / (|cos t| + |sin t|), sine otherwise.  Every walk completes, so the
sampled distribution (call it the greedy distribution) is slightly biased
toward paths with fewer branch points relative to weights proportional to
|g|; the bias is a factor of at most sqrt(2) per commuting point.  The
post-selection variant removes the bias by continuing through each commuting
rotation only with probability 1 / (|cos t| + |sin t|), which makes the
completion probability of any path exactly |g| times a path-independent
constant.

Ensembles are built by drawing until the target number of unique paths is
reached, deduplicating on path identity; exhausting the attempt budget first
is a normal outcome in rare-path regimes and is reported, not raised.
"""

import hashlib
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from ._walk import (
    STEP_ROTATION,
    anticommutes_bits,
    apply_clifford_step,
    compile_reversed,
    sin_branch_bits,
)
from .backprop import BranchAssignment, COS, PASSTHROUGH, SIN
from .circuits import Circuit, normalize_rotations
from .engine import PathCoefficient, PauliPath, _check_enumerable, enumerate_paths, TruncationPolicy
from .errors import EnumerationLimitError
from .pauli import PauliString, expectation_on_stabilizer_input

__all__ = [
    "SamplerConfig",
    "SamplingReport",
    "DistributionCheck",
    "sample_path",
    "build_ensemble",
    "empirical_distribution_check",
    "D_TILDE",
    "D_POSTSELECTED",
]

D_TILDE = "d_tilde"
D_POSTSELECTED = "d_postselected"
_DISTRIBUTIONS = (D_TILDE, D_POSTSELECTED)


@dataclass(frozen=True)
class SamplerConfig:
    target_unique_paths: int
    max_attempts: int
    distribution: str = D_TILDE
    rng_seed: int = 0

    def __post_init__(self):
        if self.target_unique_paths < 1:
            raise ValueError("target_unique_paths must be >= 1")
        if self.max_attempts < self.target_unique_paths:
            raise ValueError("max_attempts must be >= target_unique_paths")
        if self.distribution not in _DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")


@dataclass(frozen=True)
class SamplingReport:
    """Outcome counters for one ensemble build.

    attempts == accepted + aborted + zero_expectation; unique counts the
    distinct paths kept.  ``saturated`` is set when the attempt budget ran
    out before the unique target was met.
    """

    attempts: int
    accepted: int
    unique: int
    aborted: int
    zero_expectation: int
    saturated: bool

    def to_json_dict(self) -> dict:
        return {
            "attempts": self.attempts,
            "accepted": self.accepted,
            "unique": self.unique,
            "aborted": self.aborted,
            "zero_expectation": self.zero_expectation,
            "saturated": self.saturated,
        }


class _UniformStream:
    """Block-buffered uniforms; much cheaper than per-call Generator.random()."""

    __slots__ = ("_rng", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator, block: int = 8192):
        self._rng = rng
        self._buf = rng.random(block)
        self._pos = 0

    def random(self) -> float:
        pos = self._pos
        buf = self._buf
        if pos >= len(buf):
            self._buf = buf = self._rng.random(len(buf))
            pos = 0
        self._pos = pos + 1
        return buf[pos]


def _walk_once(steps, num_rotations, x, z, sign, rng, postselect):
    """One stochastic reverse walk.

    Returns (codes, x, z, sign, coeff, order) for a completed walk, or None
    if the post-selection variant aborted at a commuting rotation.
    """
    coeff = 1.0
    order = 0
    codes = [""] * num_rotations
    for step in steps:
        if step[0] != STEP_ROTATION:
            x, z, sign = apply_clifford_step(step, x, z, sign)
            continue
        _, j, gx, gz, cos_t, sin_t = step
        if anticommutes_bits(gx, gz, x, z):
            weight = abs(cos_t) + abs(sin_t)
            if rng.random() < abs(cos_t) / weight:
                coeff *= cos_t
                codes[j - 1] = "c"
            else:
                x, z, sign = sin_branch_bits(gx, gz, x, z, sign)
                coeff *= sin_t
                order += 1
                codes[j - 1] = "s"
        else:
            if postselect and rng.random() >= 1.0 / (abs(cos_t) + abs(sin_t)):
                return None
            codes[j - 1] = "p"
    return "".join(codes), x, z, sign, coeff, order


def _path_from_walk(result, num_qubits: int, input_kind: str) -> PauliPath:
    codes, x, z, sign, coeff, order = result
    items = []
    for idx, code in enumerate(codes):
        decision = COS if code == "c" else SIN if code == "s" else PASSTHROUGH
        items.append((idx + 1, decision))
    branches = BranchAssignment(tuple(items))
    frame = PauliString(num_qubits, x, z, sign)
    return PauliPath(
        branches=branches,
        coeff=PathCoefficient(
            value=coeff,
            order=order,
            sin_indices=frozenset(branches.sin_indices()),
            cos_indices=frozenset(branches.cos_indices()),
        ),
        frame=frame,
        ideal_expectation=expectation_on_stabilizer_input(frame, input_kind),
        path_id=hashlib.sha256(codes.encode("ascii")).hexdigest()[:16],
    )


def sample_path(circuit: Circuit, observable: PauliString, rng,
                distribution: str = D_TILDE) -> tuple[Optional[PauliPath], bool]:
    """Draw one path.  Returns (path, accepted).

    ``(None, False)`` means the post-selection variant aborted mid-walk.
    A completed path is accepted when its frame has nonzero expectation on
    the circuit's input state; rejected paths are still returned so callers
    can account for them.  ``rng`` needs only a ``random()`` method.
    """
    if distribution not in _DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {distribution!r}")
    _check_enumerable(circuit, observable)
    steps, num_rotations = compile_reversed(circuit)
    result = _walk_once(steps, num_rotations, observable.x, observable.z,
                        observable.sign, rng, distribution == D_POSTSELECTED)
    if result is None:
        return None, False
    path = _path_from_walk(result, circuit.num_qubits, circuit.input_kind)
    return path, path.ideal_expectation != 0


def build_ensemble(circuit: Circuit, observable: PauliString,
                   config: SamplerConfig) -> tuple[list[PauliPath], SamplingReport]:
    """Sample until ``target_unique_paths`` distinct accepted paths or budget.

    The returned list is in discovery order, which is what an
    estimate-versus-ensemble-size convergence study wants.  Duplicates of an
    already present path count as accepted attempts but add nothing.
    """
    _check_enumerable(circuit, observable)
    steps, num_rotations = compile_reversed(circuit)
    rng = _UniformStream(np.random.default_rng(np.random.SeedSequence(config.rng_seed)))
    postselect = config.distribution == D_POSTSELECTED

    found: dict[str, PauliPath] = {}
    attempts = accepted = aborted = zero_expectation = 0
    while attempts < config.max_attempts and len(found) < config.target_unique_paths:
        attempts += 1
        result = _walk_once(steps, num_rotations, observable.x, observable.z,
                            observable.sign, rng, postselect)
        if result is None:
            aborted += 1
            continue
        codes = result[0]
        if codes in found:
            accepted += 1
            continue
        path = _path_from_walk(result, circuit.num_qubits, circuit.input_kind)
        if path.ideal_expectation == 0:
            zero_expectation += 1
            continue
        accepted += 1
        found[codes] = path
    report = SamplingReport(
        attempts=attempts,
        accepted=accepted,
        unique=len(found),
        aborted=aborted,
        zero_expectation=zero_expectation,
        saturated=len(found) < config.target_unique_paths,
    )
    return list(found.values()), report


@dataclass(frozen=True)
class DistributionCheck:
    distribution: str
    num_paths: int
    num_draws: int
    aborted: int
    statistic: float
    p_value: float
    path_ids: tuple[str, ...]
    observed: tuple[int, ...]
    expected: tuple[float, ...]


def empirical_distribution_check(circuit: Circuit, observable: PauliString,
                                 num_draws: int, *,
                                 distribution: str = D_TILDE,
                                 rng_seed: int = 0,
                                 max_paths: int = 4096) -> DistributionCheck:
    """Chi-square test of sampled path frequencies against the analytic law.

    Enumerates the full tree (zero-expectation paths included, since the
    walk does not know expectations), computes each path's analytic
    probability, draws ``num_draws`` completed walks, and compares.  For the
    greedy distribution the analytic probability is the product of branch
    probabilities; for the post-selection variant it is |g| normalized over
    all paths, conditioned on completion.  The circuit is normalized here,
    so raw angles are accepted.
    """
    if distribution not in _DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {distribution!r}")
    circuit = normalize_rotations(circuit)
    num_rotations = circuit.num_rotations
    policy = TruncationPolicy.order(num_rotations)
    all_paths = []
    for path in enumerate_paths(circuit, observable, policy,
                                keep_zero_expectation=True):
        all_paths.append(path)
        if len(all_paths) > max_paths:
            raise EnumerationLimitError(
                f"more than {max_paths} paths; this check needs a fully "
                "enumerable circuit")
    all_paths.sort(key=lambda p: p.branches.codes(num_rotations))

    angles = {j: op.angle for j, _, op in circuit.rotations()}
    probs = []
    if distribution == D_TILDE:
        for path in all_paths:
            prob = 1.0
            for j, decision in path.branches.items:
                if decision == PASSTHROUGH:
                    continue
                cos_t = abs(math.cos(angles[j]))
                sin_t = abs(math.sin(angles[j]))
                chosen = cos_t if decision == COS else sin_t
                prob *= chosen / (cos_t + sin_t)
            probs.append(prob)
    else:
        probs = [abs(p.coeff.value) for p in all_paths]
    norm = math.fsum(probs)
    probs = [p / norm for p in probs]

    steps, _ = compile_reversed(circuit)
    rng = _UniformStream(np.random.default_rng(np.random.SeedSequence(rng_seed)))
    postselect = distribution == D_POSTSELECTED
    index = {path.branches.codes(num_rotations): i for i, path in enumerate(all_paths)}
    counts = [0] * len(all_paths)
    completed = 0
    aborted = 0
    walk_guard = 100 * num_draws + 1000
    walks = 0
    while completed < num_draws:
        walks += 1
        if walks > walk_guard:
            raise RuntimeError("post-selection abort rate implausibly high")
        result = _walk_once(steps, num_rotations, observable.x, observable.z,
                            observable.sign, rng, postselect)
        if result is None:
            aborted += 1
            continue
        counts[index[result[0]]] += 1
        completed += 1

    expected = [p * num_draws for p in probs]
    statistic, p_value = stats.chisquare(counts, f_exp=expected)
    return DistributionCheck(
        distribution=distribution,
        num_paths=len(all_paths),
        num_draws=num_draws,
        aborted=aborted,
        statistic=float(statistic),
        p_value=float(p_value),
        path_ids=tuple(p.path_id for p in all_paths),
        observed=tuple(counts),
        expected=tuple(expected),
    )
