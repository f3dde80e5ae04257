"""Noisy execution: a stand-in for the quantum computer.

The built-in backend is a trajectory simulator with stochastic Pauli noise.
Each gate is a noise location: after the gate acts, one Pauli error from the
location's rate table is inserted with the configured probability.  Readout
is a per-qubit classical flip.  Twirl conjugation by Pauli pairs that leave
the ideal gate invariant is part of the execution plan; for a channel that
is already Pauli-stochastic it maps every sampled error to itself up to a
global sign, so twirl instances differ only through their shot RNG streams.
The structure (instances, per-instance shots, interleaving) is still
honored, which is where a drift model would plug in.

Two engines, chosen per circuit:

* Clifford-equivalent circuits (every rotation a multiple of pi/2) run on a
  Pauli-frame engine at any qubit count.  One reverse walk back-propagates
  the observable and collects, per location, the probability that a sampled
  error anticommutes with the frame passing through it.  A shot is then a
  single sign coin: independent flips with probabilities a_1..a_L compose
  into one Bernoulli with q = (1 - prod(1 - 2 a_l)) / 2.
* Anything else runs dense statevector trajectories, capped in qubit count.
  Expectations are cached per sampled error configuration, which pays off
  because the no-error configuration dominates.

Estimates are means of per-shot +-1 outcomes pooled across twirl instances,
with the sample standard error.  RNG streams are derived from
(seed, circuit index, twirl index), so results do not depend on worker
scheduling or the interleave flag.
"""

import math
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circuits import Circuit, clifford_angle_steps, is_clifford_equivalent
from .errors import CapabilityError
from .pauli import (
    CliffordGate,
    PauliString,
    expectation_on_stabilizer_input,
)
from ._walk import (
    STEP_ROTATION,
    anticommutes_bits,
    apply_clifford_step,
    compile_reversed,
    sin_branch_bits,
)
from . import statevector as sv

__all__ = [
    "NoiseModel",
    "ExecutionPlan",
    "NoisyEstimate",
    "Backend",
    "TrajectorySimulator",
    "estimate_noisy_expectation",
    "noisy_density_expectation",
    "TWO_QUBIT_PAULIS",
    "SINGLE_QUBIT_PAULIS",
]

SINGLE_QUBIT_PAULIS = ("X", "Y", "Z")
TWO_QUBIT_PAULIS = tuple(
    a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II"
)

_LOCAL_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


def _validate_rates(items, valid_labels, what):
    total = 0.0
    for label, prob in items:
        if label not in valid_labels:
            raise ValueError(f"{what}: unknown Pauli label {label!r}")
        if prob < 0:
            raise ValueError(f"{what}: negative probability for {label}")
        total += prob
    if total > 1.0 + 1e-12:
        raise ValueError(f"{what}: probabilities sum to {total} > 1")


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic Pauli rates per gate location plus readout flips.

    ``two_qubit_rates`` applies at every two-qubit gate, ``single_qubit_rates``
    at every single-qubit gate and rotation (zero-angle rotations included:
    they are still physical gate slots).  Unlisted Paulis have rate 0; the
    remainder up to 1 is the no-error probability.
    """

    two_qubit_rates: tuple[tuple[str, float], ...] = ()
    single_qubit_rates: tuple[tuple[str, float], ...] = ()
    readout_flip: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "two_qubit_rates",
                           tuple(sorted(dict(self.two_qubit_rates).items())))
        object.__setattr__(self, "single_qubit_rates",
                           tuple(sorted(dict(self.single_qubit_rates).items())))
        _validate_rates(self.two_qubit_rates, TWO_QUBIT_PAULIS, "two_qubit_rates")
        _validate_rates(self.single_qubit_rates, SINGLE_QUBIT_PAULIS,
                        "single_qubit_rates")
        if not 0.0 <= self.readout_flip <= 1.0:
            raise ValueError("readout_flip must be a probability")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def depolarizing(cls, lambda2: float = 5e-3, lambda1: float = 2e-4,
                     readout: float = 1e-2) -> "NoiseModel":
        """Uniform depolarizing: total error rate split evenly over Paulis."""
        return cls(
            two_qubit_rates=tuple((p, lambda2 / 15) for p in TWO_QUBIT_PAULIS),
            single_qubit_rates=tuple((p, lambda1 / 3) for p in SINGLE_QUBIT_PAULIS),
            readout_flip=readout,
        )

    @property
    def is_noiseless(self) -> bool:
        return (not any(p for _, p in self.two_qubit_rates)
                and not any(p for _, p in self.single_qubit_rates)
                and self.readout_flip == 0.0)

    def to_json_dict(self) -> dict:
        return {
            "two_qubit_rates": dict(self.two_qubit_rates),
            "single_qubit_rates": dict(self.single_qubit_rates),
            "readout_flip": self.readout_flip,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "NoiseModel":
        unknown = set(data) - {"two_qubit_rates", "single_qubit_rates",
                               "readout_flip", "depolarizing"}
        if unknown:
            raise ValueError(f"noise: unknown keys {sorted(unknown)}")
        if "depolarizing" in data:
            if len(data) != 1:
                raise ValueError("noise: the depolarizing shorthand replaces "
                                 "explicit rates, not supplements them")
            shorthand = data["depolarizing"]
            extra = set(shorthand) - {"lambda2", "lambda1", "readout"}
            if extra:
                raise ValueError(
                    f"noise.depolarizing: unknown keys {sorted(extra)}")
            return cls.depolarizing(lambda2=shorthand.get("lambda2", 5e-3),
                                    lambda1=shorthand.get("lambda1", 2e-4),
                                    readout=shorthand.get("readout", 1e-2))
        return cls(
            two_qubit_rates=tuple(data.get("two_qubit_rates", {}).items()),
            single_qubit_rates=tuple(data.get("single_qubit_rates", {}).items()),
            readout_flip=data.get("readout_flip", 0.0),
        )


@dataclass(frozen=True)
class ExecutionPlan:
    num_twirls: int = 1
    shots_per_twirl: int = 1
    rng_seed: int = 0
    interleave: bool = False

    def __post_init__(self):
        if self.num_twirls < 1 or self.shots_per_twirl < 1:
            raise ValueError("num_twirls and shots_per_twirl must be >= 1")

    @property
    def total_shots(self) -> int:
        return self.num_twirls * self.shots_per_twirl

    def to_json_dict(self) -> dict:
        return {
            "num_twirls": self.num_twirls,
            "shots_per_twirl": self.shots_per_twirl,
            "rng_seed": self.rng_seed,
            "interleave": self.interleave,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExecutionPlan":
        unknown = set(data) - {"num_twirls", "shots_per_twirl", "rng_seed",
                               "interleave"}
        if unknown:
            raise ValueError(f"plan: unknown keys {sorted(unknown)}")
        return cls(
            num_twirls=data.get("num_twirls", 1),
            shots_per_twirl=data.get("shots_per_twirl", 1),
            rng_seed=data.get("rng_seed", 0),
            interleave=data.get("interleave", False),
        )


@dataclass(frozen=True)
class NoisyEstimate:
    """Pooled mean of +-1 shot outcomes.  total_shots == 0 marks the
    analytic infinite-shot mode (std_error is exactly 0 there)."""

    mean: float
    std_error: float
    total_shots: int

    def __post_init__(self):
        if abs(self.mean) > 1.0 + 1e-9:
            raise ValueError("mean of +-1 outcomes cannot exceed 1")
        if self.std_error < 0 or self.total_shots < 0:
            raise ValueError("std_error and total_shots must be >= 0")

    def to_json_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "total_shots": self.total_shots,
        }


class Backend(ABC):
    """What the pipeline needs from a quantum execution service.

    Implementations must return one estimate per submitted (circuit,
    observable) pair, in submission order, and must not silently drop
    items: anything unrunnable raises before any execution starts.  A
    hardware client implementing this interface is interchangeable with
    the simulator.
    """

    @abstractmethod
    def submit_batch(self, items: Sequence[tuple[Circuit, PauliString]],
                     plan: ExecutionPlan) -> list[NoisyEstimate]:
        raise NotImplementedError

    def estimate(self, circuit: Circuit, observable: PauliString,
                 plan: ExecutionPlan) -> NoisyEstimate:
        return self.submit_batch([(circuit, observable)], plan)[0]


def _rate_table(items):
    """(x_bits, z_bits, prob) per listed Pauli, plus the total rate."""
    table = []
    total = 0.0
    for label, prob in items:
        if prob == 0.0:
            continue
        x = z = 0
        for i, letter in enumerate(label):
            lx, lz = _LOCAL_BITS[letter]
            x |= lx << i
            z |= lz << i
        table.append((x, z, prob))
        total += prob
    return table, total


def _anticommute_rate(table, fx, fz):
    """Probability that a sampled error anticommutes with local frame bits."""
    rate = 0.0
    for ex, ez, prob in table:
        if (((ex & fz) ^ (ez & fx)).bit_count()) & 1:
            rate += prob
    return rate


class _Location:
    """One noise location: which qubits, which rate table."""

    __slots__ = ("qubits", "table", "total")

    def __init__(self, qubits, table, total):
        self.qubits = qubits
        self.table = table
        self.total = total


def _op_support(op) -> tuple[int, ...]:
    if isinstance(op, CliffordGate):
        return op.qubits
    return tuple(op.generator.support())


def _noise_locations(circuit: Circuit, noise: NoiseModel) -> list[_Location]:
    table1, total1 = _rate_table(noise.single_qubit_rates)
    table2, total2 = _rate_table(noise.two_qubit_rates)
    locations = []
    for op in circuit.ops:
        support = _op_support(op)
        if len(support) == 1:
            locations.append(_Location(support, table1, total1))
        elif len(support) == 2:
            locations.append(_Location(support, table2, total2))
        elif total1 > 0 or total2 > 0:
            raise CapabilityError(
                f"no noise channel defined for a {len(support)}-qubit operation")
        else:
            locations.append(_Location(support, [], 0.0))
    return locations


def _readout_flip_probability(noise: NoiseModel, observable: PauliString) -> float:
    r = noise.readout_flip
    if r == 0.0:
        return 0.0
    # odd number of flips among the measured support flips the eigenvalue
    return (1.0 - (1.0 - 2.0 * r) ** observable.weight()) / 2.0


def _frame_walk_attenuation(circuit: Circuit, observable: PauliString,
                            locations: list[_Location]) -> tuple[int, float]:
    """One reverse walk: ideal +-1/0 outcome and the product of (1 - 2 a_l).

    Valid only for Clifford-equivalent circuits.  The noise channel of a
    gate acts after it in circuit time, so in the Heisenberg walk it sees
    the frame before the gate conjugates it.
    """
    quarter = {}
    for j, _, op in circuit.rotations():
        m = clifford_angle_steps(op.angle)
        if m is None:
            raise CapabilityError("frame engine needs quarter-turn rotations only")
        quarter[j] = m
    steps, _ = compile_reversed(circuit)
    x, z, sign = observable.x, observable.z, observable.sign
    attenuation = 1.0
    # compile_reversed emits one step per op, last op first, matching
    # reversed(locations)
    loc_iter = reversed(locations)
    for step in steps:
        loc = next(loc_iter)
        if loc.total > 0.0:
            fx = fz = 0
            for i, q in enumerate(loc.qubits):
                fx |= ((x >> q) & 1) << i
                fz |= ((z >> q) & 1) << i
            if fx or fz:
                rate = _anticommute_rate(loc.table, fx, fz)
                attenuation *= 1.0 - 2.0 * rate
        if step[0] == STEP_ROTATION:
            _, j, gx, gz, _, _ = step
            m = quarter[j]
            if m == 0 or not anticommutes_bits(gx, gz, x, z):
                continue
            if m == 2:
                sign = -sign
            else:
                x, z, sign = sin_branch_bits(gx, gz, x, z, sign)
                if m == 3:
                    sign = -sign
        else:
            x, z, sign = apply_clifford_step(step, x, z, sign)
    outcome = expectation_on_stabilizer_input(
        PauliString(circuit.num_qubits, x, z, sign), circuit.input_kind)
    return outcome, attenuation


def _pooled_estimate(count: int, outcome_sum: float) -> NoisyEstimate:
    mean = outcome_sum / count
    if count > 1:
        # outcomes are +-1, so the sample variance has a closed form
        variance = count * (1.0 - mean * mean) / (count - 1)
        std_error = math.sqrt(max(variance, 0.0) / count)
    else:
        std_error = 0.0
    return NoisyEstimate(mean=float(mean), std_error=float(std_error),
                         total_shots=count)


def _clifford_twirl_sum(o0: int, flip_prob: float, shots: int,
                        num_locations: int, rng: np.random.Generator) -> int:
    # twirl Paulis are drawn to honor the plan structure; for a Pauli
    # channel they conjugate every sampled error onto itself up to sign
    if num_locations:
        rng.integers(0, 4, size=num_locations)
    draws = rng.random(shots)
    if o0 == 0:
        return int(np.sum(draws < 0.5)) * 2 - shots
    flips = int(np.sum(draws < flip_prob))
    return o0 * (shots - 2 * flips)


def _run_clifford_item(circuit, observable, noise, plan, circuit_index,
                       infinite_shots):
    locations = _noise_locations(circuit, noise)
    o0, attenuation = _frame_walk_attenuation(circuit, observable, locations)
    readout = 1.0 - 2.0 * _readout_flip_probability(noise, observable)
    if infinite_shots:
        return NoisyEstimate(mean=o0 * attenuation * readout,
                             std_error=0.0, total_shots=0)
    flip_prob = (1.0 - attenuation * readout) / 2.0
    total = 0
    for twirl in range(plan.num_twirls):
        rng = np.random.default_rng(
            np.random.SeedSequence(plan.rng_seed,
                                   spawn_key=(circuit_index, twirl)))
        total += _clifford_twirl_sum(o0, flip_prob, plan.shots_per_twirl,
                                     len(locations), rng)
    return _pooled_estimate(plan.total_shots, total)


def _embedded_pauli(n: int, qubits: tuple[int, ...], x_local: int,
                    z_local: int) -> PauliString:
    x = z = 0
    for i, q in enumerate(qubits):
        x |= ((x_local >> i) & 1) << q
        z |= ((z_local >> i) & 1) << q
    return PauliString(n, x, z)


class _DenseTrajectoryRun:
    """Statevector trajectories for one (circuit, observable) item.

    The expectation for a given error configuration is deterministic, so it
    is cached keyed by the sparse configuration tuple.
    """

    def __init__(self, circuit: Circuit, observable: PauliString,
                 noise: NoiseModel):
        self.circuit = circuit
        self.observable = observable
        self.locations = _noise_locations(circuit, noise)
        self.readout = 1.0 - 2.0 * _readout_flip_probability(noise, observable)
        self.active = [i for i, loc in enumerate(self.locations) if loc.total > 0]
        self.config_cache: dict[tuple, float] = {}

    def _expectation(self, config: tuple) -> float:
        cached = self.config_cache.get(config)
        if cached is not None:
            return cached
        inserted = dict(config)
        state = sv.input_state(self.circuit.num_qubits, self.circuit.input_kind)
        for index, op in enumerate(self.circuit.ops):
            if isinstance(op, CliffordGate):
                state = sv.apply_clifford(state, op)
            else:
                state = sv.apply_rotation(state, op)
            err = inserted.get(index)
            if err is not None:
                loc = self.locations[index]
                pauli = _embedded_pauli(self.circuit.num_qubits, loc.qubits,
                                        err[0], err[1])
                state = sv.apply_pauli(state, pauli)
        value = sv.expectation_of_state(state, self.observable)
        self.config_cache[config] = value
        return value

    def run_twirl(self, shots: int, rng: np.random.Generator) -> int:
        if self.active:
            rng.integers(0, 16, size=len(self.active))
        uniforms = rng.random((shots, len(self.active)))
        outcome_draws = rng.random(shots)
        total = 0
        for shot in range(shots):
            config = []
            for column, index in enumerate(self.active):
                loc = self.locations[index]
                u = uniforms[shot, column]
                if u >= loc.total:
                    continue
                acc = 0.0
                for ex, ez, prob in loc.table:
                    acc += prob
                    if u < acc:
                        config.append((index, (ex, ez)))
                        break
            mu = self._expectation(tuple(config))
            p_plus = (1.0 + mu * self.readout) / 2.0
            total += 1 if outcome_draws[shot] < p_plus else -1
        return total


def _run_dense_item(circuit, observable, noise, plan, circuit_index):
    run = _DenseTrajectoryRun(circuit, observable, noise)
    total = 0
    for twirl in range(plan.num_twirls):
        rng = np.random.default_rng(
            np.random.SeedSequence(plan.rng_seed,
                                   spawn_key=(circuit_index, twirl)))
        total += run.run_twirl(plan.shots_per_twirl, rng)
    return _pooled_estimate(plan.total_shots, total)


def _run_item(args):
    engine, circuit, observable, noise, plan, index, infinite = args
    if engine == "clifford":
        return index, _run_clifford_item(circuit, observable, noise, plan,
                                         index, infinite)
    if engine == "density":
        mean = noisy_density_expectation(circuit, observable, noise)
        return index, NoisyEstimate(mean=mean, std_error=0.0, total_shots=0)
    return index, _run_dense_item(circuit, observable, noise, plan, index)


class TrajectorySimulator(Backend):
    """The built-in noisy backend.

    ``infinite_shots`` replaces sampling with the exact noisy mean: the
    analytic frame product for Clifford-equivalent circuits, the density
    oracle for small non-Clifford ones, a capability error otherwise.  It
    exists so tests can separate mitigation error from shot noise.
    ``workers`` parallelizes over batch items; results are identical to the
    serial run.
    """

    def __init__(self, noise: NoiseModel, *, dense_qubit_cap: int = 14,
                 infinite_shots: bool = False, workers: int = 1):
        self.noise = noise
        self.dense_qubit_cap = dense_qubit_cap
        self.infinite_shots = infinite_shots
        self.workers = workers

    def _engine_for(self, circuit: Circuit, index: int) -> str:
        if is_clifford_equivalent(circuit):
            return "clifford"
        if self.infinite_shots:
            if circuit.num_qubits <= _MAX_DENSITY_QUBITS:
                return "density"
            raise CapabilityError(
                f"item {index}: infinite-shot mode needs a Clifford-equivalent "
                f"circuit beyond {_MAX_DENSITY_QUBITS} qubits (the exact "
                "density fallback is exponential)")
        if circuit.num_qubits > self.dense_qubit_cap:
            raise CapabilityError(
                f"item {index}: {circuit.num_qubits} qubits exceeds the dense "
                f"trajectory cap of {self.dense_qubit_cap}; reduce the circuit "
                "or raise dense_qubit_cap")
        return "dense"

    def submit_batch(self, items: Sequence[tuple[Circuit, PauliString]],
                     plan: ExecutionPlan) -> list[NoisyEstimate]:
        tasks = []
        for index, (circuit, observable) in enumerate(items):
            if observable.num_qubits != circuit.num_qubits:
                raise ValueError(f"item {index}: observable size mismatch")
            engine = self._engine_for(circuit, index)
            tasks.append((engine, circuit, observable, self.noise, plan,
                          index, self.infinite_shots))
        # interleave only permutes (circuit, twirl) execution order; every
        # stream is derived from (seed, circuit, twirl), so results match
        if self.workers > 1 and len(tasks) > 1:
            results: list[Optional[NoisyEstimate]] = [None] * len(tasks)
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                for index, estimate in pool.map(_run_item, tasks):
                    results[index] = estimate
            return results  # type: ignore[return-value]
        return [_run_item(task)[1] for task in tasks]


def estimate_noisy_expectation(circuit: Circuit, observable: PauliString,
                               noise: NoiseModel,
                               plan: ExecutionPlan) -> NoisyEstimate:
    return TrajectorySimulator(noise).estimate(circuit, observable, plan)


_MAX_DENSITY_QUBITS = 7


def noisy_density_expectation(circuit: Circuit, observable: PauliString,
                              noise: NoiseModel) -> float:
    """Exact noisy expectation by explicit channel composition.

    Reference implementation for tests: evolves the full density matrix,
    applying each gate's unitary and then its Pauli channel.  Exponential in
    qubits twice over, hence the small cap.
    """
    n = circuit.num_qubits
    if n > _MAX_DENSITY_QUBITS:
        raise CapabilityError(
            f"density oracle capped at {_MAX_DENSITY_QUBITS} qubits")
    if observable.num_qubits != n:
        raise ValueError("observable size mismatch")
    locations = _noise_locations(circuit, noise)
    dim = 2 ** n
    state = sv.input_state(n, circuit.input_kind).reshape(dim)
    rho = np.outer(state, state.conj())
    for op, loc in zip(circuit.ops, locations):
        unitary = sv.circuit_unitary(Circuit(n, (op,), circuit.input_kind))
        rho = unitary @ rho @ unitary.conj().T
        if loc.total > 0.0:
            mixed = (1.0 - loc.total) * rho
            for ex, ez, prob in loc.table:
                pauli = sv.pauli_matrix(_embedded_pauli(n, loc.qubits, ex, ez))
                mixed = mixed + prob * (pauli @ rho @ pauli.conj().T)
            rho = mixed
    readout = 1.0 - 2.0 * _readout_flip_probability(noise, observable)
    value = np.trace(sv.pauli_matrix(observable) @ rho) * readout
    assert abs(value.imag) < 1e-9
    return float(value.real)
