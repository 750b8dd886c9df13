"""Truncated-Taylor simulation of e^{-iM} for sparse Hermitian M whose
entries arrive through noisy probabilistic oracles: one-sparse decomposition
by greedy edge coloring, sign discretization, segmented evolution, and
recovery of the effective (average) Hamiltonian."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .util import QueryCounter


@dataclass(frozen=True)
class SparseHermitian:
    """Dense storage of a d-sparse Hermitian matrix with its sparsity
    metadata; the entry accessor view is (row p, slot j) -> (column, value)."""

    matrix: np.ndarray
    threshold: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "matrix", linalg.check_hermitian(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def sparsity(self) -> int:
        """Max nonzeros in any row."""
        return int(np.max(np.sum(np.abs(self.matrix) > self.threshold, axis=1)))

    @property
    def max_norm(self) -> float:
        return float(np.max(np.abs(self.matrix)))

    def row_entries(self, p: int):
        cols = np.flatnonzero(np.abs(self.matrix[p]) > self.threshold)
        return [(int(c), complex(self.matrix[p, c])) for c in cols]


@dataclass
class OneSparseDecomposition:
    """Sum of one-sparse Hermitian terms reconstructing the source matrix;
    colors[i] labels term i (color 0 is the diagonal term when present)."""

    terms: list  # list of (dim, dim) arrays, each one-sparse Hermitian
    colors: list

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def reconstruct(self) -> np.ndarray:
        return np.sum(self.terms, axis=0)


def one_sparse_decompose(H: SparseHermitian | np.ndarray) -> OneSparseDecomposition:
    """Split a sparse Hermitian matrix into one-sparse Hermitian layers.

    The diagonal gets a dedicated term; the off-diagonal support graph is
    edge-colored greedily (at most 2d-1 colors for max off-diagonal degree
    d), each color class being a matching and hence one-sparse.
    """
    if not isinstance(H, SparseHermitian):
        H = SparseHermitian(np.asarray(H))
    A = H.matrix
    dim = H.dim
    terms, colors = [], []
    diag = np.diag(np.diag(A))
    if np.any(np.abs(np.diag(A)) > H.threshold):
        terms.append(diag.astype(np.complex128))
        colors.append(0)
    # greedy edge coloring of the off-diagonal support
    edges = [
        (p, q)
        for p in range(dim)
        for q in range(p + 1, dim)
        if abs(A[p, q]) > H.threshold
    ]
    edge_color = {}
    used_at = [set() for _ in range(dim)]
    for p, q in edges:
        c = 1
        while c in used_at[p] or c in used_at[q]:
            c += 1
        edge_color[(p, q)] = c
        used_at[p].add(c)
        used_at[q].add(c)
    for c in sorted(set(edge_color.values())):
        term = np.zeros_like(A)
        for (p, q), cc in edge_color.items():
            if cc == c:
                term[p, q] = A[p, q]
                term[q, p] = A[q, p]
        terms.append(term)
        colors.append(c)
    dec = OneSparseDecomposition(terms=terms, colors=colors)
    # one-sparse guarantee: every term has at most one nonzero per row
    for term in dec.terms:
        if np.max(np.sum(np.abs(term) > H.threshold, axis=1)) > 1:
            raise AssertionError("edge coloring produced a non-matching layer")
    return dec


def sign_count_average(values: np.ndarray, max_norm: float, m_disc: int) -> np.ndarray:
    """Average over m = 1..m_disc of the discretized sign
    (-1)^(m * [|v| m_disc < m max_norm]); equals |v|/max_norm within
    O(1/m_disc).  Vectorized closed form of the sum over m."""
    mag = np.abs(np.asarray(values, dtype=np.float64))
    # number of m with indicator false, i.e. m <= |v| m_disc / max_norm
    n_plus = np.floor(mag * m_disc / max_norm).astype(np.int64)
    n_plus = np.minimum(n_plus, m_disc)
    # remaining m alternate (-1)^m starting at m = n_plus + 1
    n_alt = m_disc - n_plus
    # sum of (-1)^m over m = a+1 .. m_disc: 0 if even count, else (-1)^(a+1)
    alt_sum = np.where(n_alt % 2 == 0, 0, np.where((n_plus + 1) % 2 == 0, 1, -1))
    return (n_plus + alt_sum) / m_disc


def sign_decompose(term: np.ndarray, m_disc: int, max_norm: float | None = None) -> list:
    """Self-inverse signed unitary summands of a one-sparse Hermitian term.

    Averaging the returned matrices over m reproduces term / max_norm within
    O(1/m_disc) per entry.  Magnitudes are encoded by the discretized sign
    count; entry phases ride along so negative and complex entries decompose
    too (the nonnegative case reduces to the plain (-1)^(...) rule).
    """
    term = np.asarray(term, dtype=np.complex128)
    if max_norm is None:
        max_norm = float(np.max(np.abs(term)))
    if max_norm == 0:
        return []
    if m_disc < 1:
        raise ValueError("m_disc must be >= 1")
    support = np.abs(term) > 1e-15
    mag = np.abs(term)
    phase = np.where(support, np.where(mag > 0, term / np.where(mag == 0, 1, mag), 0), 0)
    # permutation-with-phases pattern on the support; unit entries
    base = np.where(support, phase, 0).astype(np.complex128)
    n_plus = np.minimum(np.floor(mag * m_disc / max_norm).astype(np.int64), m_disc)
    out = []
    for m in range(1, m_disc + 1):
        signs = np.where(m <= n_plus, 1.0, (-1.0) ** m)
        out.append(base * signs)
    return out


# noisy-oracle mode requires delta <= DELTA_MDISC_CONSTANT / m_disc so the
# failure rate stays within the sign-discretization resolution
DELTA_MDISC_CONSTANT = 100.0


@dataclass
class TaylorConfig:
    """Parameters of the segmented truncated-Taylor simulation."""

    order: int = 12  # truncation order K per segment
    segments: int | None = None  # r; derived from the norm budget if None
    m_disc: int = 10**4  # sign-discretization count M
    eta: float = 0.0  # per-entry oracle error bound
    delta: float = 0.0  # per-entry oracle failure probability
    failure_mode: str = "uniform"  # failure content: 'uniform' or 'worst-case'
    n_trials: int = 400  # Monte Carlo averages defining the effective channel
    time: float = 1.0

    def __post_init__(self):
        if self.order < 1 or self.m_disc < 1:
            raise ValueError("order and m_disc must be >= 1")
        if self.segments is not None and self.segments < 1:
            raise ValueError("segments must be >= 1")
        if not (0.0 <= self.delta < 1.0 and self.eta >= 0.0):
            raise ValueError("invalid oracle noise parameters")
        if self.delta > 0.0 and self.delta > DELTA_MDISC_CONSTANT / self.m_disc:
            raise ValueError("delta must satisfy delta <= %g / m_disc" % DELTA_MDISC_CONSTANT)


def segment_count(H: SparseHermitian, cfg: TaylorConfig, n_layers: int) -> int:
    if cfg.segments is not None:
        return cfg.segments
    budget = abs(cfg.time) * H.max_norm * max(1, n_layers)
    return max(1, int(math.ceil(budget / math.log(2.0))))


def taylor_segment(H, t: float, K: int):
    """Truncated series S = sum_{q<=K} (-iHt)^q / q! and the worst-case
    success amplitude min_psi ||S psi||.

    The segment must satisfy ||H|| |t| <= ln 2; the analytic remainder bound
    (||H|| t)^(K+1)/(K+1)! e^(||H|| t) applies to ||S - e^{-iHt}||.
    """
    H = linalg.check_hermitian(H)
    hnorm = linalg.norm(H, "spectral")
    if hnorm * abs(t) > math.log(2.0) + 1e-9:
        raise ValueError("segment too long: ||H|| |t| must be <= ln 2")
    dim = H.shape[0]
    S = np.eye(dim, dtype=np.complex128)
    power = np.eye(dim, dtype=np.complex128)
    for q in range(1, K + 1):
        power = power @ (-1j * t * H) / q
        S = S + power
    smin = float(np.min(np.linalg.svd(S, compute_uv=False)))
    return S, smin


def taylor_remainder_bound(h_norm: float, t: float, K: int) -> float:
    x = h_norm * abs(t)
    return x ** (K + 1) / math.factorial(K + 1) * math.exp(x)


def _noisy_entry_samples(
    values: np.ndarray,
    cfg: TaylorConfig,
    max_norm: float,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """Draw `size` oracle readouts for each entry value: within eta except
    with probability delta, when the value is replaced by failure content."""
    vals = np.asarray(values, dtype=np.float64)
    out = vals[None, :] + cfg.eta * rng.uniform(-1.0, 1.0, (size, len(vals)))
    if cfg.delta > 0.0:
        fail = rng.random((size, len(vals))) < cfg.delta
        if cfg.failure_mode == "worst-case":
            bad = -vals[None, :] * np.ones((size, 1))
        else:
            bad = rng.uniform(-max_norm, max_norm, (size, len(vals)))
        out = np.where(fail, bad, out)
    return np.clip(out, -max_norm, max_norm)


@dataclass
class NoisySimulationReport:
    effective_channel: np.ndarray
    effective_hamiltonian: np.ndarray
    deviation_spectral: float
    bound_scale: float  # d * (max_norm * delta + eta)
    achieved_layers: int
    order: int
    segments: int
    m_disc: int
    unitarity_drift: float
    queries: QueryCounter


def simulate_noisy(
    H: SparseHermitian | np.ndarray,
    cfg: TaylorConfig,
    rng: np.random.Generator,
) -> NoisySimulationReport:
    """Simulate e^{-iM t} with every matrix-element read drawn from the
    noisy oracle and pushed through the sign-discretized one-sparse
    decomposition; the averaged channel realizes the average Hamiltonian.

    Returns the Monte Carlo average Q of the segmented truncated-Taylor
    product, the effective Hamiltonian extracted from Q, and the measured
    deviation against the bound scale d (max_norm * delta + eta).
    """
    if not isinstance(H, SparseHermitian):
        H = SparseHermitian(np.asarray(H))
    dec = one_sparse_decompose(H)
    layers = dec.n_terms
    r = segment_count(H, cfg, layers)
    t_seg = cfg.time / r
    max_norm = H.max_norm
    counter = QueryCounter()
    dim = H.dim

    # sparse entry bookkeeping: positions of upper-triangle + diagonal support
    rows, cols = np.nonzero(np.abs(np.triu(H.matrix)) > H.threshold)
    base_vals = np.real(H.matrix[rows, cols])
    if np.max(np.abs(np.imag(H.matrix[rows, cols]))) > 1e-12:
        raise ValueError("noisy simulation path assumes real symmetric input")

    n_slots = len(rows)
    T = cfg.n_trials
    # one oracle read per entry per segment per trial
    reads = _noisy_entry_samples(base_vals, cfg, max_norm, rng, T * r).reshape(
        T, r, n_slots
    )
    counter.charge("matrix_element_oracle", T * r * n_slots)
    # sign discretization quantizes each read to a multiple of max_norm/m_disc
    quant = np.sign(reads) * sign_count_average(reads, max_norm, cfg.m_disc) * max_norm

    eye = np.eye(dim, dtype=np.complex128)
    prod = np.tile(eye, (T, 1, 1))
    for s in range(r):
        Ms = np.zeros((T, dim, dim), dtype=np.complex128)
        Ms[:, rows, cols] = quant[:, s, :]
        upper = np.triu(Ms, 1)
        Ms = Ms + np.transpose(upper, (0, 2, 1))
        A = (-1j * t_seg) * Ms
        S = np.tile(eye, (T, 1, 1))
        power = np.tile(eye, (T, 1, 1))
        for q in range(1, cfg.order + 1):
            power = np.matmul(power, A) / q
            S = S + power
        prod = np.matmul(S, prod)
    counter.charge("lcu_segment_queries", T * r * cfg.order)
    Q = prod.mean(axis=0)

    M_eff = extract_effective_hamiltonian(Q, cfg.time)
    deviation = linalg.norm(H.matrix - M_eff, "spectral")
    drift = linalg.norm(Q.conj().T @ Q - eye, "spectral")
    d = H.sparsity
    return NoisySimulationReport(
        effective_channel=Q,
        effective_hamiltonian=M_eff,
        deviation_spectral=deviation,
        bound_scale=d * (max_norm * cfg.delta + cfg.eta),
        achieved_layers=layers,
        order=cfg.order,
        segments=r,
        m_disc=cfg.m_disc,
        unitarity_drift=drift,
        queries=counter,
    )


def polar_unitary(Q: np.ndarray) -> np.ndarray:
    """Closest unitary to Q (polar factor via SVD)."""
    u, _, vh = np.linalg.svd(np.asarray(Q, dtype=np.complex128))
    return u @ vh


def extract_effective_hamiltonian(Q, t: float) -> np.ndarray:
    """Recover H with Q ~ e^{-iHt}: principal log of the polar-unitary part.

    Requires Q within 0.1 of unitary in spectral norm and eigenphases away
    from the branch cut (|phase| < pi - 0.1); ambiguous phases are an error,
    never silently unwrapped.
    """
    if t == 0:
        raise ValueError("t must be nonzero")
    Q = linalg.as_operator(Q)
    U = polar_unitary(Q)
    if linalg.norm(Q - U, "spectral") > 0.1:
        raise ValueError("operator is too far from unitary to extract a generator")
    vals, vecs = np.linalg.eig(U)
    phases = np.angle(vals)
    if np.any(np.abs(phases) >= math.pi - 0.1):
        raise ValueError("eigenphase too close to the branch cut; wrap ambiguous")
    energies = -phases / t
    H_eff = vecs @ np.diag(energies) @ np.linalg.inv(vecs)
    return linalg.check_hermitian(H_eff, tol=1e-6)
