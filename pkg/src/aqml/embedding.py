"""Isometry embedding of bounded-norm data into unit vectors, median
statistics, the median-based covariance analogue, the mean baseline and the
contamination model."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import statevec


@dataclass(frozen=True)
class RawDataset:
    """Real data vectors with a shared norm bound R >= max_j ||x_j||."""

    vectors: np.ndarray  # shape (count, dim)
    norm_bound: float

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=np.float64)
        if vecs.ndim != 2 or vecs.shape[0] < 1:
            raise ValueError("vectors must be a nonempty 2-D array")
        if not np.all(np.isfinite(vecs)):
            raise ValueError("dataset contains NaN or Inf")
        norms = np.linalg.norm(vecs, axis=1)
        if np.any(norms > self.norm_bound + 1e-12):
            raise ValueError(
                f"norm bound violated: max ||x|| = {norms.max()} > R = {self.norm_bound}"
            )
        object.__setattr__(self, "vectors", vecs)

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def save_dataset(data: RawDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dim", "R"])
        writer.writerow([data.dim, format(data.norm_bound, ".17g")])
        for row in data.vectors:
            writer.writerow([format(x, ".17g") for x in row])


def load_dataset(path) -> RawDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["dim", "R"]:
            raise ValueError(f"bad dataset header {header!r}; expected ['dim', 'R']")
        dim_str, r_str = next(reader)
        dim, R = int(dim_str), float(r_str)
        if not math.isfinite(R):
            raise ValueError("R must be finite")
        rows = []
        for row in reader:
            if len(row) != dim:
                raise ValueError(f"row length {len(row)} != declared dim {dim}")
            vals = [float(x) for x in row]
            if not all(math.isfinite(v) for v in vals):
                raise ValueError("dataset contains NaN or Inf")
            rows.append(vals)
    return RawDataset(np.array(rows), R)


@dataclass(frozen=True)
class UnitDataset:
    """Unit-vector embedding of a RawDataset in dimension N(2 N_v + 1).

    Index layout is (feature component) x (tag component): tag 0 carries the
    ||x||/R weight, tags 1..N_v and N_v+1..2N_v label the plain and dagger
    copies.  Inner products satisfy <x_j^dag | x_k> = <x_j, x_k> / R^2.
    """

    vectors: np.ndarray  # shape (count, N*(2*count+1))
    dagger_vectors: np.ndarray
    source: RawDataset

    @property
    def count(self) -> int:
        return self.vectors.shape[0]


def embed(raw: RawDataset) -> UnitDataset:
    N, Nv, R = raw.dim, raw.count, raw.norm_bound
    tag_dim = 2 * Nv + 1
    out = np.zeros((Nv, N * tag_dim))
    out_dag = np.zeros((Nv, N * tag_dim))
    for j, x in enumerate(raw.vectors):
        nrm = np.linalg.norm(x)
        direction = np.zeros(N)
        if nrm > 0:
            direction = x / nrm
        else:
            direction[0] = 1.0  # weight on this factor is zero anyway
        if R == 0:
            tag = np.zeros(tag_dim)
            tag[1 + j] = 1.0
            tag_dag = np.zeros(tag_dim)
            tag_dag[1 + Nv + j] = 1.0
            direction = np.zeros(N)
            direction[0] = 1.0
        else:
            w = nrm / R
            tag = np.zeros(tag_dim)
            tag[0] = w
            tag[1 + j] = math.sqrt(max(0.0, 1.0 - w * w))
            tag_dag = np.zeros(tag_dim)
            tag_dag[0] = w
            tag_dag[1 + Nv + j] = math.sqrt(max(0.0, 1.0 - w * w))
        out[j] = np.kron(direction, tag)
        out_dag[j] = np.kron(direction, tag_dag)
    return UnitDataset(vectors=out, dagger_vectors=out_dag, source=raw)


def median(values) -> float:
    """Middle order statistic; midpoint of the central pair for even counts."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("median of an empty list")
    return float(np.median(values))


def _inner_products(data, mode: str) -> np.ndarray:
    """Matrix ip[j, k] = e_k^T x_j, exactly or through the Hadamard-test
    circuit (which requires unit real rows)."""
    if isinstance(data, UnitDataset):
        vecs = data.vectors
    elif isinstance(data, RawDataset):
        vecs = data.vectors
    else:
        vecs = np.asarray(data, dtype=np.float64)
        if vecs.ndim != 2:
            raise ValueError("expected a 2-D array of row vectors")
    if mode == "exact":
        return vecs.copy()
    if mode == "hadamard":
        ips = np.empty_like(vecs)
        for j in range(vecs.shape[0]):
            for k in range(vecs.shape[1]):
                ips[j, k] = 2.0 * statevec.hadamard_test(vecs, j, k) - 1.0
        return ips
    raise ValueError(f"unknown inner-product mode {mode!r}")


def robust_pca_matrix(data, mode: str = "exact") -> np.ndarray:
    """Median analogue of the covariance matrix:
    M[k, l] = median_j((ip_kj - median_j ip_kj) * (ip_lj - median_j ip_lj))."""
    ips = _inner_products(data, mode)
    dev = ips - np.median(ips, axis=0, keepdims=True)
    dim = ips.shape[1]
    M = np.empty((dim, dim))
    for k in range(dim):
        prods = dev[:, k, None] * dev  # (count, dim) products against column k
        M[k] = np.median(prods, axis=0)
    return (M + M.T) / 2.0


def classical_pca_matrix(data, mode: str = "exact") -> np.ndarray:
    """Mean version of the same construction: the biased covariance matrix."""
    ips = _inner_products(data, mode)
    dev = ips - np.mean(ips, axis=0, keepdims=True)
    return dev.T @ dev / ips.shape[0]


@dataclass(frozen=True)
class ContaminationSpec:
    """Adversary model: fraction alpha of vectors replaced per strategy."""

    alpha: float
    strategy: str = "replace-prefix"
    adversary_vectors: np.ndarray | None = None
    spike_direction: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")
        if self.strategy not in ("replace-prefix", "spike-direction", "custom"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


def poison(data: RawDataset, spec: ContaminationSpec) -> RawDataset:
    """Replace floor(alpha * N_v) vectors according to the attack strategy."""
    n_replace = int(math.floor(spec.alpha * data.count))
    vecs = data.vectors.copy()
    if n_replace == 0:
        return RawDataset(vecs, data.norm_bound)
    R = data.norm_bound
    if spec.strategy == "spike-direction":
        u = spec.spike_direction
        if u is None:
            u = np.zeros(data.dim)
            u[0] = 1.0
        u = np.asarray(u, dtype=np.float64)
        u = u / np.linalg.norm(u)
        replacement = np.tile(R * u, (n_replace, 1))
    elif spec.strategy == "custom":
        if spec.adversary_vectors is None:
            raise ValueError("custom strategy requires adversary_vectors")
        replacement = np.asarray(spec.adversary_vectors, dtype=np.float64)[:n_replace]
        if replacement.shape != (n_replace, data.dim):
            raise ValueError("adversary_vectors shape mismatch")
        if np.any(np.linalg.norm(replacement, axis=1) > R + 1e-12):
            raise ValueError("adversary vector exceeds the norm bound R")
    else:  # replace-prefix with rescaled random directions at norm R
        rng = np.random.default_rng(spec.seed)
        raw = rng.standard_normal((n_replace, data.dim))
        replacement = R * raw / np.linalg.norm(raw, axis=1, keepdims=True)
    vecs[:n_replace] = replacement
    return RawDataset(vecs, data.norm_bound)


@dataclass(frozen=True)
class DistributionSpec:
    """Distribution given by its inverse CDF Q: [0,1] -> [-1,1] with a
    Lipschitz constant L."""

    inverse_cdf: callable
    lipschitz: float
    name: str = "distribution"

    def __post_init__(self):
        if self.lipschitz <= 0:
            raise ValueError("Lipschitz constant must be positive")
        grid = np.linspace(0.0, 1.0, 1001)
        vals = np.array([self.inverse_cdf(u) for u in grid])
        steps = np.abs(np.diff(vals))
        if np.any(steps > self.lipschitz * (grid[1] - grid[0]) + 1e-9):
            raise ValueError("inverse CDF violates the declared Lipschitz bound")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.array([self.inverse_cdf(u) for u in rng.random(size)])

    def median(self) -> float:
        return float(self.inverse_cdf(0.5))


def uniform_dist() -> DistributionSpec:
    return DistributionSpec(lambda u: 2.0 * u - 1.0, 2.0, "uniform[-1,1]")


def sine_dist() -> DistributionSpec:
    return DistributionSpec(lambda u: math.sin(math.pi * (u - 0.5)), math.pi, "sine")


def cubic_dist() -> DistributionSpec:
    return DistributionSpec(lambda u: (2.0 * u - 1.0) ** 3, 6.0, "cubic")


def median_stability_check(
    dist: DistributionSpec,
    alpha: float,
    trials: int,
    n_samples: int = 10**5,
    rng: np.random.Generator | None = None,
    adversarial: bool = True,
) -> dict:
    """Empirically verify the alpha*L bound on the median shift under
    contamination at total variational distance <= alpha.

    The adversarial mode moves an alpha mass to the top quantile (one-sided
    placement, which saturates the bound); otherwise mass moves to the upper
    end point.  Returns measured shifts and the bound with sampling slack.
    """
    if not 0.0 <= alpha < 0.5:
        raise ValueError("alpha must lie in [0, 1/2)")
    if rng is None:
        rng = np.random.default_rng(0)
    L = dist.lipschitz
    slack = 3.0 * L / (2.0 * math.sqrt(n_samples))
    bound = alpha * L + slack
    shifts = []
    for _ in range(trials):
        u = rng.random(n_samples)
        clean = np.array([dist.inverse_cdf(x) for x in u])
        n_poison = int(math.floor(alpha * n_samples))
        poisoned = clean.copy()
        if n_poison:
            # worst placement: move an alpha mass from below the median to the
            # top, pushing the median to the (1/2 + alpha) quantile
            low = np.flatnonzero(u < 0.5)[:n_poison]
            poisoned[low] = dist.inverse_cdf(1.0)
        shift = abs(np.median(poisoned) - np.median(clean))
        shifts.append(float(shift))
    shifts = np.array(shifts)
    return {
        "distribution": dist.name,
        "alpha": alpha,
        "lipschitz": L,
        "bound": alpha * L,
        "slack": slack,
        "max_shift": float(shifts.max()),
        "mean_shift": float(shifts.mean()),
        "ok": bool(np.all(shifts <= bound)),
    }
