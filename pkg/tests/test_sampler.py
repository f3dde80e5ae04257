"""Stochastic path sampling: acceptance, dedup, and distribution law."""

import math

import numpy as np
import pytest

from quepp.circuits import Circuit, PauliRotation
from quepp.engine import TruncationPolicy, enumerate_paths
from quepp.pauli import CliffordGate, PauliString
from quepp.sampler import (D_POSTSELECTED, D_TILDE, SamplerConfig,
                           build_ensemble, empirical_distribution_check,
                           sample_path)

THETA = 0.3


def plus_state_circuit():
    # one anticommuting rotation; the sine branch lands on a frame with
    # zero expectation on |+>, so only the cosine path is ever accepted
    return Circuit(1, (CliffordGate("h", (0,)),
                       PauliRotation(PauliString(1, 1, 0), THETA)),
                   input_kind="all_plus")


def branching_circuit():
    # reverse walk: three guaranteed branch points (X rotations against a
    # Z/Y frame), then a final rotation that is a passthrough for half the
    # frames and a branch for the other half; 12 leaves in total
    ops = (PauliRotation(PauliString.from_label("Z"), 0.5),
           PauliRotation(PauliString.from_label("X"), 0.7),
           PauliRotation(PauliString.from_label("X"), 0.7),
           PauliRotation(PauliString.from_label("X"), 0.7))
    return Circuit(1, ops)


def test_acceptance_rate_tracks_cos_weight():
    c = plus_state_circuit()
    obs = PauliString.from_label("Z")
    rng = np.random.default_rng(40)
    draws = 20000
    hits = 0
    for _ in range(draws):
        path, accepted = sample_path(c, obs, rng)
        assert path is not None
        hits += accepted
    p = abs(math.cos(THETA)) / (abs(math.cos(THETA)) + abs(math.sin(THETA)))
    se = math.sqrt(p * (1 - p) / draws)
    assert hits / draws == pytest.approx(p, abs=5 * se)


def test_sampled_paths_agree_with_enumeration():
    c = branching_circuit()
    obs = PauliString.from_label("Z")
    policy = TruncationPolicy.order(c.num_rotations)
    by_id = {p.path_id: p
             for p in enumerate_paths(c, obs, policy,
                                      keep_zero_expectation=True)}
    assert len(by_id) == 12
    rng = np.random.default_rng(41)
    for _ in range(50):
        path, _ = sample_path(c, obs, rng)
        want = by_id[path.path_id]
        assert path.frame == want.frame
        assert path.branches == want.branches
        assert path.ideal_expectation == want.ideal_expectation
        assert path.coeff.value == pytest.approx(want.coeff.value, abs=1e-14)
        assert path.coeff.order == want.coeff.order


def test_postselection_aborts_at_commuting_rotations():
    c = Circuit(1, (PauliRotation(PauliString.from_label("Z"), 0.5),))
    obs = PauliString.from_label("Z")
    rng = np.random.default_rng(42)
    outcomes = {True: 0, False: 0}
    for _ in range(200):
        path, accepted = sample_path(c, obs, rng, distribution=D_POSTSELECTED)
        outcomes[path is None] += 1
        if path is not None:
            assert accepted
            assert path.branches.codes(1) == "p"
    assert outcomes[True] > 0 and outcomes[False] > 0


def test_sample_path_rejects_unknown_distribution():
    c = plus_state_circuit()
    with pytest.raises(ValueError):
        sample_path(c, PauliString.from_label("Z"),
                    np.random.default_rng(0), distribution="exact")


@pytest.mark.parametrize("distribution", [D_TILDE, D_POSTSELECTED])
def test_empirical_distribution_matches_analytic_law(distribution):
    c = branching_circuit()
    obs = PauliString.from_label("Z")
    check = empirical_distribution_check(c, obs, 100000,
                                         distribution=distribution,
                                         rng_seed=7)
    assert check.num_paths == 12
    assert sum(check.observed) == check.num_draws == 100000
    assert sum(check.expected) == pytest.approx(100000, abs=1e-6)
    assert check.p_value > 0.01
    if distribution == D_TILDE:
        assert check.aborted == 0
    else:
        assert check.aborted > 0


def test_ensemble_dedupes_and_reports():
    c = plus_state_circuit()
    obs = PauliString.from_label("Z")
    config = SamplerConfig(target_unique_paths=2, max_attempts=200,
                           rng_seed=5)
    paths, report = build_ensemble(c, obs, config)
    # the only nonzero-expectation path is the cosine branch, so the
    # unique target can never be met
    assert len(paths) == 1
    assert paths[0].branches.codes(1) == "c"
    assert report.unique == 1
    assert report.saturated
    assert report.attempts == 200
    assert report.zero_expectation > 0
    assert report.attempts == (report.accepted + report.aborted
                               + report.zero_expectation)


def test_ensemble_saturates_on_single_path_circuit():
    c = Circuit(1, (CliffordGate("h", (0,)),))
    obs = PauliString.from_label("X")
    config = SamplerConfig(target_unique_paths=5, max_attempts=50)
    paths, report = build_ensemble(c, obs, config)
    assert len(paths) == 1
    assert paths[0].ideal_expectation == 1
    assert report.unique == 1
    assert report.accepted == 50
    assert report.saturated


def test_ensemble_is_deterministic():
    c = branching_circuit()
    obs = PauliString.from_label("Z")
    config = SamplerConfig(target_unique_paths=10, max_attempts=500,
                           rng_seed=11)
    first, report_a = build_ensemble(c, obs, config)
    second, report_b = build_ensemble(c, obs, config)
    assert [p.path_id for p in first] == [p.path_id for p in second]
    assert report_a == report_b


def test_ensemble_meets_target_when_reachable():
    c = branching_circuit()
    obs = PauliString.from_label("Z")
    config = SamplerConfig(target_unique_paths=4, max_attempts=5000,
                           rng_seed=3)
    paths, report = build_ensemble(c, obs, config)
    assert len(paths) == 4
    assert not report.saturated
    assert len({p.path_id for p in paths}) == 4
    assert all(p.ideal_expectation != 0 for p in paths)


def test_sampler_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(target_unique_paths=0, max_attempts=10)
    with pytest.raises(ValueError):
        SamplerConfig(target_unique_paths=10, max_attempts=5)
    with pytest.raises(ValueError):
        SamplerConfig(target_unique_paths=1, max_attempts=1,
                      distribution="uniform")


def test_report_json_shape():
    c = plus_state_circuit()
    obs = PauliString.from_label("Z")
    _, report = build_ensemble(c, obs, SamplerConfig(1, 10))
    data = report.to_json_dict()
    assert set(data) == {"attempts", "accepted", "unique", "aborted",
                         "zero_expectation", "saturated"}
