"""Privacy-preserving distributed k-means: GHZ-phase aggregation of
cluster membership and centroid sums, phase-estimation readout with an
explicit rotation budget, the trace-norm distinguishability analysis of a
single participant, and group-median robustness against a corrupted
channel."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg


@dataclass(frozen=True)
class ProtocolConfig:
    k: int
    d: int
    n_participants: int
    epsilon: float
    rounds: int = 1
    ae_constant: float = 8.0  # sum |t_q| <= c / epsilon for the readout ladder
    convergence_tol: float | None = None
    privacy_delta: float | None = None  # stop when P_opt - 1/2 would exceed this

    def __post_init__(self):
        if self.k < 1 or self.n_participants < 1 or self.d < 0:
            raise ValueError("k >= 1, N >= 1, d >= 0 required")
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("readout precision must lie in (0, 1)")
        if self.rounds < 0:
            raise ValueError("round count must be nonnegative")


@dataclass(frozen=True)
class Participant:
    x: np.ndarray
    participating: bool = True

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if np.any(~np.isfinite(x)):
            raise ValueError("participant vector must be finite")
        if np.max(np.abs(x)) > 1.0 + 1e-12:
            raise ValueError("participant coordinates must lie in [-1, 1]")
        object.__setattr__(self, "x", np.clip(x, -1.0, 1.0))


@dataclass
class RotationBudget:
    q1: int
    q2: int
    per_round: list = field(default_factory=list)

    def __post_init__(self):
        if self.q1 < 0 or self.q2 < 0:
            raise ValueError("rotation counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.q1 + self.q2

    def check_privacy_precondition(self, n_participants: int) -> None:
        if self.total >= n_participants:
            raise ValueError(
                "privacy analysis requires q1 + q2 < N "
                f"(got {self.total} >= {n_participants})"
            )


def ghz_phase_channel(contributions, t: int = 1) -> float:
    """Readout probability of the phase-aggregation channel: participants
    imprint angles theta_j on the shared GHZ state, the register collapses
    to one qubit, and a Hadamard basis measurement returns
    cos^2(sum theta_j * t / 2)."""
    total = float(np.sum(contributions)) * t
    if abs(total) >= math.pi:
        raise ValueError("accumulated phase would wrap past pi")
    return math.cos(total / 2.0) ** 2


def ghz_phase_statevector(contributions, t: int = 1) -> float:
    """Same channel via explicit 2^N state-vector simulation (cross-check
    oracle, N <= 10): GHZ state, per-qubit Z-rotations, parity collapse,
    Hadamard readout."""
    thetas = np.asarray(contributions, dtype=np.float64) * t
    n = len(thetas)
    if n > 10:
        raise ValueError("state-vector cross-check capped at 10 participants")
    psi = np.zeros(2**n, dtype=np.complex128)
    psi[0] = 1.0 / math.sqrt(2.0)
    psi[-1] = 1.0 / math.sqrt(2.0)
    # diag of the product of single-qubit phase rotations diag(1, e^{-i theta_j})
    for j, th in enumerate(thetas):
        bit = (np.arange(2**n) >> (n - 1 - j)) & 1
        psi = psi * np.where(bit == 1, np.exp(-1j * th), 1.0)
    # CNOT cascade maps |0...0> and |1...1> onto a single qubit's |0>, |1>
    amp0, amp1 = psi[0], psi[-1]
    plus = abs(amp0 + amp1) ** 2 / 2.0
    return float(plus)


def _phase_readout(
    true_value: float,
    epsilon: float,
    rng: np.random.Generator,
    lo: float = 0.0,
    hi: float = 1.0,
) -> float:
    """Phase-estimation readout model: the estimate lands within epsilon of
    the true value, uniformly distributed inside the window."""
    est = true_value + rng.uniform(-epsilon, epsilon)
    return min(max(est, lo), hi)


def rotation_budget(
    cfg: ProtocolConfig, min_p: float, c1: float | None = None, c2: float | None = None
) -> RotationBudget:
    """Per-participant rotation counts for the two readout phases:
    q1 = c1 R / eps for the k membership probabilities and
    q2 = c2 R d / (min_p eps) for the centroid components."""
    if min_p <= cfg.epsilon:
        raise ValueError("minimum cluster probability must exceed epsilon")
    c1 = cfg.ae_constant if c1 is None else c1
    c2 = cfg.ae_constant if c2 is None else c2
    q1 = int(math.ceil(c1 * cfg.rounds / cfg.epsilon))
    q2 = int(math.ceil(c2 * cfg.rounds * cfg.d / (min_p * cfg.epsilon)))
    per_round = [
        (int(math.ceil(c1 / cfg.epsilon)), int(math.ceil(c2 * cfg.d / (min_p * cfg.epsilon))))
        for _ in range(cfg.rounds)
    ]
    return RotationBudget(q1=q1, q2=q2, per_round=per_round)


def assign_clusters(
    vectors: np.ndarray, centroids: np.ndarray, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Nearest-centroid assignment; exact distance ties are broken by RNG
    so reruns with the same seed reproduce."""
    d2 = np.sum((vectors[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    best = np.min(d2, axis=1)
    assign = np.empty(len(vectors), dtype=np.int64)
    for j in range(len(vectors)):
        ties = np.flatnonzero(d2[j] <= best[j] + 1e-15)
        if len(ties) == 1 or rng is None:
            assign[j] = ties[0]
        else:
            assign[j] = ties[rng.integers(0, len(ties))]
    return assign


def classical_iteration(
    vectors: np.ndarray, centroids: np.ndarray, rng: np.random.Generator | None = None
):
    """One exact Lloyd step: assign to nearest centroid, recompute means.
    Empty clusters keep their previous centroid."""
    assign = assign_clusters(vectors, centroids, rng)
    new = centroids.copy()
    probs = np.zeros(len(centroids))
    for p in range(len(centroids)):
        members = assign == p
        probs[p] = members.mean() if len(vectors) else 0.0
        if members.any():
            new[p] = vectors[members].mean(axis=0)
    return new, probs, assign


@dataclass
class RoundResult:
    centroids: np.ndarray
    probs: np.ndarray
    budget: RotationBudget
    empty_clusters: list
    aborted: bool = False


def run_round(
    participants: list,
    centroids: np.ndarray,
    cfg: ProtocolConfig,
    rng: np.random.Generator,
) -> RoundResult:
    """One protocol round: membership probabilities P(f = p) and summed
    components are aggregated as collective phases and read out to
    precision epsilon; centroid components are ratio estimates.

    The two readout phases split the precision so the ratio stays within
    epsilon of the exact assignment-then-average step in infinity norm;
    non-participants contribute zero phase and zero rotations.
    """
    centroids = np.asarray(centroids, dtype=np.float64)
    k, d = centroids.shape
    if (k, d) != (cfg.k, cfg.d):
        raise ValueError("centroid array shape disagrees with the config")
    N = cfg.n_participants
    active = [p for p in participants if p.participating]
    frac = len(active) / N
    vecs = (
        np.array([p.x for p in active]) if active else np.zeros((0, d))
    )
    assign = assign_clusters(vecs, centroids, rng) if len(vecs) else np.array([], int)

    # ratio error budget: |S_hat/P_hat - S/P| <= (e_s + e_p)/P_hat, so a
    # coarse population read picks the scale and the refined population and
    # sum reads are taken at eps * P_hat / 4 each, giving error <= eps/2
    eps_coarse = cfg.epsilon / 4.0

    probs = np.zeros(k)
    sums_est = np.zeros((k, d))
    empty = []
    for p in range(k):
        members = assign == p
        # phase 1: each member contributes angle 1/N; the accumulated phase
        # equals the cluster population fraction
        true_p = members.sum() / N
        coarse = _phase_readout(true_p, eps_coarse, rng)
        if coarse <= cfg.epsilon:
            probs[p] = coarse
            empty.append(p)
            continue
        eps_fine = cfg.epsilon * coarse / 4.0
        probs[p] = max(_phase_readout(true_p, eps_fine, rng), eps_fine)
        # phase 2: component sums, angles x_jq / N
        for q in range(d):
            true_s = vecs[members, q].sum() / N if members.any() else 0.0
            sums_est[p, q] = _phase_readout(true_s, eps_fine, rng, lo=-1.0)

    new_centroids = centroids.copy()
    for p in range(k):
        if p in empty:
            # reseed to the farthest participant from any current centroid
            # (public information only)
            if len(vecs):
                dist = np.min(
                    np.sum((vecs[:, None, :] - centroids[None, :, :]) ** 2, axis=2),
                    axis=1,
                )
                new_centroids[p] = vecs[np.argmax(dist)]
            continue
        new_centroids[p] = sums_est[p] / probs[p]
    new_centroids = np.clip(new_centroids, -1.0, 1.0)

    min_p = float(np.min(probs[probs > cfg.epsilon])) if len(probs[probs > cfg.epsilon]) else 1.0
    single = ProtocolConfig(
        k=cfg.k, d=cfg.d, n_participants=cfg.n_participants, epsilon=cfg.epsilon,
        rounds=1, ae_constant=cfg.ae_constant,
    )
    budget = rotation_budget(single, max(min_p, cfg.epsilon * 1.0001))
    aborted = len(empty) == k
    if np.sum(probs) > frac + k * eps_coarse + 1e-12:
        raise AssertionError("estimated populations exceed the participation fraction")
    return RoundResult(
        centroids=new_centroids, probs=probs, budget=budget,
        empty_clusters=empty, aborted=aborted,
    )


@dataclass
class PrivacyReport:
    p_opt_exact: float
    p_opt_closed_form: float
    bound: float
    n_participants: int
    q_total: int

    def __post_init__(self):
        if not (0.5 - 1e-12 <= self.p_opt_exact <= 1.0 + 1e-12):
            raise ValueError("distinguishing probability must lie in [1/2, 1]")
        if self.p_opt_exact > 0.5 + self.bound + 1e-9:
            raise ValueError("exact optimum exceeds the claimed bound")


def privacy_closed_form(q_total: int, n_participants: int) -> float:
    """Best distinguishing probability against a participant who applies
    q phase rotations of e^{-iZ/2N} each: the extremal input is the equal
    superposition of the largest and smallest collective-phase
    eigenvectors, giving P_opt = 1/2 + |sin(q/2N)| / 2."""
    return 0.5 + 0.5 * abs(math.sin(q_total / (2.0 * n_participants)))


def privacy_density_matrix(q_total: int, n_participants: int, qubits: int) -> float:
    """Exact optimum by trace distance of the pure states before and after
    the participant's rotations, on an explicit `qubits`-qubit register
    prepared in the extremal superposition."""
    if qubits > 12:
        raise ValueError("density-matrix check capped at 12 qubits")
    dim = 2**qubits
    # the participant's q rotations e^{-iZ/(2N)} act on their own qubit
    # (qubit 0 here); other register qubits are untouched adversary space
    b0 = (np.arange(dim) >> (qubits - 1)) & 1
    phases = np.exp(-1j * q_total * (1 - 2 * b0) / (2.0 * n_participants))
    # extremal probe: equal superposition of the rotation's two eigenstates
    psi = np.zeros(dim, dtype=np.complex128)
    psi[0] = 1.0 / math.sqrt(2.0)
    psi[dim // 2] = 1.0 / math.sqrt(2.0)
    rho = np.outer(psi, psi.conj())
    rho_u = np.outer(phases * psi, (phases * psi).conj())
    return 0.5 + 0.25 * linalg.trace_distance(rho, rho_u)


def privacy_analysis(
    budget: RotationBudget, n_participants: int, check_qubits: int | None = 10
) -> PrivacyReport:
    budget.check_privacy_precondition(n_participants)
    q = budget.total
    closed = privacy_closed_form(q, n_participants)
    bound = q / (2.0 * n_participants)  # |sin x| <= x envelope
    exact = closed
    if check_qubits is not None and q > 0:
        exact = privacy_density_matrix(q, n_participants, check_qubits)
        if abs(exact - closed) > 1e-9:
            raise AssertionError(
                "density-matrix optimum disagrees with the closed form"
            )
    return PrivacyReport(
        p_opt_exact=exact, p_opt_closed_form=closed, bound=bound,
        n_participants=n_participants, q_total=q,
    )


POPULATION_CAP = 10**9


def required_population(
    R: int, d: int, k: int, epsilon: float, delta: float, c: float = 1.0
) -> int:
    """Planning figure: participants needed for R rounds at precision
    epsilon and privacy budget delta, N = c R d k / (eps delta)."""
    if min(R, d, k) < 1 or epsilon <= 0 or delta <= 0 or c <= 0:
        raise ValueError("all arguments must be positive")
    n = c * R * d * k / (epsilon * delta)
    if n > POPULATION_CAP:
        raise ValueError(
            f"required population {n:.3g} exceeds the cap {POPULATION_CAP}; "
            "tighten delta or epsilon"
        )
    return int(math.ceil(n))


@dataclass
class ProtocolResult:
    trajectory: list  # list of centroid arrays per round (including seed)
    probs: list
    budget: RotationBudget
    privacy: PrivacyReport | None
    converged: bool
    privacy_exhausted: bool
    classical_reference: np.ndarray | None = None


def run_protocol(
    participants: list,
    cfg: ProtocolConfig,
    init: np.ndarray,
    rng: np.random.Generator,
) -> ProtocolResult:
    """Iterate rounds until centroid movement falls below the convergence
    tolerance or the cumulative rotation budget crosses the privacy
    allowance; returns the full trajectory plus a classical Lloyd reference
    run on the same data."""
    centroids = np.asarray(init, dtype=np.float64).copy()
    tol = cfg.convergence_tol if cfg.convergence_tol is not None else cfg.epsilon
    trajectory = [centroids.copy()]
    probs_hist = []
    q1 = q2 = 0
    converged = False
    exhausted = False
    rounds_run = 0
    for _ in range(cfg.rounds):
        # privacy pre-check: would this round's budget break the allowance?
        probe = rotation_budget(
            ProtocolConfig(
                k=cfg.k, d=cfg.d, n_participants=cfg.n_participants,
                epsilon=cfg.epsilon, rounds=1, ae_constant=cfg.ae_constant,
            ),
            min_p=max(2 * cfg.epsilon, 1.0 / cfg.k),
        )
        next_total = q1 + q2 + probe.total
        if cfg.privacy_delta is not None:
            if (
                next_total >= cfg.n_participants
                or privacy_closed_form(next_total, cfg.n_participants) - 0.5
                > cfg.privacy_delta
            ):
                exhausted = True
                break
        res = run_round(participants, centroids, cfg, rng)
        q1 += res.budget.q1
        q2 += res.budget.q2
        rounds_run += 1
        move = float(np.max(np.abs(res.centroids - centroids)))
        centroids = res.centroids
        trajectory.append(centroids.copy())
        probs_hist.append(res.probs)
        if move < tol:
            converged = True
            break
    budget = RotationBudget(q1=q1, q2=q2)
    privacy = None
    if budget.total < cfg.n_participants:
        privacy = privacy_analysis(budget, cfg.n_participants, check_qubits=None)
    vecs = np.array([p.x for p in participants if p.participating])
    ref = centroids
    if len(vecs):
        ref = np.asarray(init, dtype=np.float64).copy()
        for _ in range(max(rounds_run, 1)):
            ref, _, _ = classical_iteration(vecs, ref)
    return ProtocolResult(
        trajectory=trajectory, probs=probs_hist, budget=budget, privacy=privacy,
        converged=converged, privacy_exhausted=exhausted, classical_reference=ref,
    )


def group_median_aggregate(
    participants: list,
    cfg: ProtocolConfig,
    init: np.ndarray,
    groups: int,
    rng: np.random.Generator,
    corrupted_groups: set | None = None,
) -> dict:
    """Run the protocol independently on `groups` disjoint participant
    groups and take the componentwise median of the group centroids; a
    fully corrupted channel (random phases) in one group shifts the
    aggregate by at most the inter-group spread."""
    if groups < 3 or groups % 2 == 0:
        raise ValueError("group count must be odd and at least 3")
    n = len(participants)
    if n // groups < 1:
        raise ValueError("not enough participants per group")
    corrupted_groups = corrupted_groups or set()
    # groups must be statistically alike, so split a shuffled index set
    splits = np.array_split(rng.permutation(n), groups)
    group_centroids = []
    for g, idx in enumerate(splits):
        members = [participants[i] for i in idx]
        gcfg = ProtocolConfig(
            k=cfg.k, d=cfg.d, n_participants=len(members), epsilon=cfg.epsilon,
            rounds=cfg.rounds, ae_constant=cfg.ae_constant,
            convergence_tol=cfg.convergence_tol,
        )
        out = run_protocol(members, gcfg, init, rng)
        cent = out.trajectory[-1]
        if g in corrupted_groups:
            # phase-spamming eavesdropper: readouts are garbage phases, so
            # the reconstructed centroids are arbitrary points in [-1,1]^d
            cent = rng.uniform(-1.0, 1.0, cent.shape)
        group_centroids.append(cent)
    stack = np.stack(group_centroids)
    aggregate = np.median(stack, axis=0)
    spread = float(np.max(np.max(stack, axis=0) - np.min(stack, axis=0)))
    return {
        "aggregate": aggregate,
        "group_centroids": stack,
        "spread": spread,
        "corrupted": sorted(corrupted_groups),
    }
