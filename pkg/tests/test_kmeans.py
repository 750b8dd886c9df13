"""Private k-means protocol: GHZ phase aggregation, rotation budgets,
round simulation, distinguishability analysis, and group-median
aggregation."""

import math

import numpy as np
import pytest

from aqml import kmeans
from aqml.util import stream


def make_blobs(rng, centers, sigma, n):
    centers = np.asarray(centers, dtype=np.float64)
    k = len(centers)
    pts = []
    for i in range(n):
        c = centers[i % k]
        pts.append(np.clip(c + rng.normal(scale=sigma, size=len(c)), -1, 1))
    return [kmeans.Participant(p) for p in pts]


def test_ghz_channel_closed_form():
    thetas = [0.3, -0.1, 0.2]
    total = sum(thetas)
    assert kmeans.ghz_phase_channel(thetas) == pytest.approx(
        math.cos(total / 2.0) ** 2
    )
    assert kmeans.ghz_phase_channel([0.0] * 5) == pytest.approx(1.0)


def test_ghz_channel_rejects_wrap():
    with pytest.raises(ValueError):
        kmeans.ghz_phase_channel([2.0, 2.0])


def test_ghz_statevector_matches_channel():
    rng = stream(0, "km", "ghz")
    for trial in range(20):
        thetas = rng.uniform(-0.4, 0.4, 6)
        a = kmeans.ghz_phase_channel(thetas)
        b = kmeans.ghz_phase_statevector(thetas)
        assert abs(a - b) <= 1e-12


def test_rotation_budget_example():
    cfg = kmeans.ProtocolConfig(k=2, d=2, n_participants=1000, epsilon=0.1,
                                rounds=1)
    budget = kmeans.rotation_budget(cfg, min_p=0.5, c1=1.0, c2=1.0)
    assert budget.q1 == 10
    assert budget.q2 == 40
    assert budget.total == 50


def test_rotation_budget_zero_dim_and_halving():
    cfg0 = kmeans.ProtocolConfig(k=2, d=0, n_participants=100, epsilon=0.1)
    assert kmeans.rotation_budget(cfg0, min_p=0.5, c1=1.0, c2=1.0).q2 == 0
    cfg = kmeans.ProtocolConfig(k=2, d=2, n_participants=1000, epsilon=0.2)
    half = kmeans.rotation_budget(cfg, min_p=0.5, c1=1.0, c2=1.0)
    assert half.q1 == 5 and half.q2 == 20  # doubling epsilon halves both


def test_rotation_budget_rejects_small_min_p():
    cfg = kmeans.ProtocolConfig(k=2, d=2, n_participants=100, epsilon=0.1)
    with pytest.raises(ValueError):
        kmeans.rotation_budget(cfg, min_p=0.05)


def test_participant_validation():
    with pytest.raises(ValueError):
        kmeans.Participant(np.array([1.5, 0.0]))
    with pytest.raises(ValueError):
        kmeans.Participant(np.array([np.nan, 0.0]))


def test_run_round_two_clusters_accuracy():
    rng = stream(0, "km", "round")
    cfg = kmeans.ProtocolConfig(k=2, d=2, n_participants=2000, epsilon=0.05)
    parts = make_blobs(rng, [[0.8, 0.8], [-0.8, -0.8]], 0.05, 2000)
    init = np.array([[0.5, 0.5], [-0.5, -0.5]])
    res = kmeans.run_round(parts, init, cfg, rng)
    vecs = np.array([p.x for p in parts])
    exact, exact_probs, _ = kmeans.classical_iteration(vecs, init)
    assert np.max(np.abs(res.centroids - exact)) <= cfg.epsilon
    assert np.max(np.abs(res.probs - exact_probs)) <= cfg.epsilon
    assert not res.aborted


def test_run_round_zero_participation_aborts():
    rng = stream(0, "km", "idle")
    cfg = kmeans.ProtocolConfig(k=2, d=1, n_participants=100, epsilon=0.05)
    parts = [kmeans.Participant(np.array([0.5]), participating=False)
             for _ in range(100)]
    res = kmeans.run_round(parts, np.array([[0.5], [-0.5]]), cfg, rng)
    assert res.aborted
    assert sorted(res.empty_clusters) == [0, 1]


def test_ratio_error_inequality():
    # |S/P - S/(P + e)| <= |S| e / P^2 for the ratio readout error model
    rng = stream(0, "km", "ratio")
    for trial in range(200):
        P = rng.uniform(0.1, 1.0)
        S = rng.uniform(-P, P)
        e = rng.uniform(0, P / 2)
        lhs = abs(S / P - S / (P + e))
        assert lhs <= abs(S) * e / P**2 + 1e-12


def test_privacy_idle_participant_is_half():
    report = kmeans.privacy_analysis(
        kmeans.RotationBudget(q1=0, q2=0), n_participants=100
    )
    assert report.p_opt_exact == 0.5
    assert report.bound == 0.0


def test_privacy_example_value():
    # q = 10 rotations among N = 100 participants
    closed = kmeans.privacy_closed_form(10, 100)
    assert closed == pytest.approx(0.5 + 0.5 * math.sin(0.05), abs=1e-12)
    assert closed == pytest.approx(0.52498, abs=1e-5)
    exact = kmeans.privacy_density_matrix(10, 100, qubits=8)
    assert abs(exact - closed) <= 1e-9


def test_privacy_density_matrix_matches_closed_form():
    for q, N in [(1, 10), (5, 50), (25, 100), (99, 200)]:
        closed = kmeans.privacy_closed_form(q, N)
        exact = kmeans.privacy_density_matrix(q, N, qubits=6)
        assert abs(exact - closed) <= 1e-9


def test_privacy_bound_envelope_and_monotonicity():
    prev = 0.5
    for q in range(0, 100, 5):
        p = kmeans.privacy_closed_form(q, 100)
        assert p - 0.5 <= q / 200.0 + 1e-12
        assert p >= prev - 1e-12
        prev = p


def test_privacy_precondition_rejected():
    budget = kmeans.RotationBudget(q1=60, q2=60)
    with pytest.raises(ValueError):
        kmeans.privacy_analysis(budget, n_participants=100)


def test_required_population_examples():
    assert kmeans.required_population(1, 1, 1, 0.1, 0.1) == 100
    assert kmeans.required_population(2, 1, 1, 0.1, 0.1) == 200
    assert kmeans.required_population(1, 3, 2, 0.1, 0.1) == 600
    with pytest.raises(ValueError):
        kmeans.required_population(1, 1, 1, 1e-6, 1e-6)


def test_run_protocol_tracks_lloyd():
    rng = stream(0, "km", "proto")
    n = 4000
    cfg = kmeans.ProtocolConfig(k=2, d=2, n_participants=n, epsilon=0.05,
                                rounds=4)
    parts = make_blobs(rng, [[0.6, 0.6], [-0.6, -0.6]], 0.05, n)
    init = np.array([[0.3, 0.2], [-0.3, -0.2]])
    out = kmeans.run_protocol(parts, cfg, init, rng)
    assert np.max(np.abs(out.trajectory[-1] - out.classical_reference)) <= (
        2.0 * cfg.epsilon
    )
    assert out.privacy is not None
    assert out.privacy.p_opt_exact <= 0.5 + out.privacy.bound + 1e-9


def test_run_protocol_privacy_delta_zero_runs_nothing():
    rng = stream(0, "km", "pd0")
    cfg = kmeans.ProtocolConfig(k=2, d=1, n_participants=1000, epsilon=0.1,
                                rounds=3, privacy_delta=0.0)
    parts = make_blobs(rng, [[0.5], [-0.5]], 0.05, 200)
    out = kmeans.run_protocol(parts, cfg, np.array([[0.4], [-0.4]]), rng)
    assert out.privacy_exhausted
    assert len(out.trajectory) == 1
    assert out.budget.total == 0


def test_group_median_identical_groups():
    rng = stream(0, "km", "gm0")
    n = 3000
    cfg = kmeans.ProtocolConfig(k=2, d=2, n_participants=n // 3, epsilon=0.05,
                                rounds=2)
    parts = make_blobs(rng, [[0.7, 0.7], [-0.7, -0.7]], 0.05, n)
    init = np.array([[0.4, 0.4], [-0.4, -0.4]])
    out = kmeans.group_median_aggregate(parts, cfg, init, groups=3, rng=rng)
    whole = kmeans.run_protocol(parts, kmeans.ProtocolConfig(
        k=2, d=2, n_participants=n, epsilon=0.05, rounds=2), init, rng)
    assert np.max(np.abs(out["aggregate"] - whole.trajectory[-1])) <= (
        2.0 * cfg.epsilon
    )


def test_group_median_survives_one_corrupted_group():
    rng = stream(0, "km", "gm1")
    n = 5000
    cfg = kmeans.ProtocolConfig(k=2, d=2, n_participants=n // 5, epsilon=0.05,
                                rounds=2)
    parts = make_blobs(rng, [[0.7, 0.7], [-0.7, -0.7]], 0.05, n)
    init = np.array([[0.4, 0.4], [-0.4, -0.4]])
    out = kmeans.group_median_aggregate(
        parts, cfg, init, groups=5, rng=rng, corrupted_groups={2}
    )
    clean = kmeans.group_median_aggregate(parts, cfg, init, groups=5, rng=rng)
    assert np.max(np.abs(out["aggregate"] - clean["aggregate"])) <= (
        2.0 * cfg.epsilon
    )


def test_group_median_rejects_even_groups():
    rng = stream(0, "km", "gm2")
    cfg = kmeans.ProtocolConfig(k=2, d=1, n_participants=10, epsilon=0.1)
    parts = make_blobs(rng, [[0.5], [-0.5]], 0.05, 40)
    with pytest.raises(ValueError):
        kmeans.group_median_aggregate(parts, cfg, np.array([[0.4], [-0.4]]),
                                      groups=4, rng=rng)


def test_assign_clusters_deterministic_ties():
    vecs = np.array([[0.0, 0.0]])
    cents = np.array([[1.0, 0.0], [-1.0, 0.0]])
    a1 = kmeans.assign_clusters(vecs, cents, stream(7, "km", "tie"))
    a2 = kmeans.assign_clusters(vecs, cents, stream(7, "km", "tie"))
    assert a1[0] == a2[0]
