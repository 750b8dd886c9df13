"""Small state-vector simulator: gates, the Hadamard-test inner-product
circuit, phase estimation and the amplitude-estimation contract.

Qubit 0 is the most significant bit of a basis index, so |10> means qubit 0
in state 1 and qubit 1 in state 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .util import QueryCounter

QUBIT_CAP = 24
PHASE_BITS_CAP = 16

H_GATE = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
X_GATE = np.array([[0, 1], [1, 0]], dtype=np.complex128)


@dataclass
class QuantumRegister:
    state: np.ndarray
    n_qubits: int

    def __post_init__(self):
        self.state = np.asarray(self.state, dtype=np.complex128)
        if self.n_qubits < 1 or self.n_qubits > QUBIT_CAP:
            raise ValueError(f"n_qubits must be in [1, {QUBIT_CAP}]")
        if self.state.shape != (2**self.n_qubits,):
            raise ValueError("state length does not match qubit count")
        nrm = np.linalg.norm(self.state)
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: |psi| = {nrm}")

    @classmethod
    def zeros(cls, n_qubits: int) -> "QuantumRegister":
        state = np.zeros(2**n_qubits, dtype=np.complex128)
        state[0] = 1.0
        return cls(state, n_qubits)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "QuantumRegister":
        state = np.zeros(2**n_qubits, dtype=np.complex128)
        state[index] = 1.0
        return cls(state, n_qubits)

    @classmethod
    def from_vector(cls, vec) -> "QuantumRegister":
        vec = np.asarray(vec, dtype=np.complex128)
        n = int(round(math.log2(len(vec))))
        if 2**n != len(vec):
            raise ValueError("state vector length must be a power of two")
        return cls(vec, n)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.state) ** 2


def apply_unitary(reg: QuantumRegister, U, targets, controls=()) -> QuantumRegister:
    """Apply U on `targets`, conditioned on every qubit in `controls` being 1."""
    targets = list(targets)
    controls = list(controls)
    n = reg.n_qubits
    if len(set(targets + controls)) != len(targets) + len(controls):
        raise ValueError("targets and controls must be disjoint")
    for q in targets + controls:
        if not 0 <= q < n:
            raise ValueError(f"qubit index {q} out of range for {n} qubits")
    U = np.asarray(U, dtype=np.complex128)
    if U.shape != (2 ** len(targets), 2 ** len(targets)):
        raise ValueError("unitary dimension does not match target count")

    psi = reg.state.reshape((2,) * n)
    rest = [q for q in range(n) if q not in targets and q not in controls]
    perm = controls + targets + rest
    psi = psi.transpose(perm).reshape(2 ** len(controls), 2 ** len(targets), -1)
    out = psi.copy()
    out[-1] = U @ psi[-1]  # block where all controls are 1
    out = out.reshape((2,) * n).transpose(np.argsort(perm)).reshape(-1)
    nrm = np.linalg.norm(out)
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError("gate application broke normalization; U not unitary?")
    return QuantumRegister(out / nrm, n)


def _n_qubits_for(dim: int) -> int:
    n = max(1, int(math.ceil(math.log2(dim))))
    if 2**n < dim:
        n += 1
    return n


def _pad_to_power_of_two(vec: np.ndarray) -> np.ndarray:
    n = _n_qubits_for(len(vec))
    if 2**n == len(vec):
        return vec
    out = np.zeros(2**n, dtype=vec.dtype)
    out[: len(vec)] = vec
    return out


def state_prep_unitary(vec: np.ndarray) -> np.ndarray:
    """Real orthogonal matrix mapping |0> to `vec` (a real unit vector),
    built from a Householder reflection."""
    vec = np.asarray(vec, dtype=np.float64)
    e0 = np.zeros_like(vec)
    e0[0] = 1.0
    w = e0 - vec
    nw2 = np.dot(w, w)
    if nw2 < 1e-24:
        return np.eye(len(vec))
    return np.eye(len(vec)) - 2.0 * np.outer(w, w) / nw2


def xor_permutation(n_qubits: int, k: int) -> np.ndarray:
    """Permutation matrix |x> -> |x XOR k> on an n-qubit register."""
    dim = 2**n_qubits
    P = np.zeros((dim, dim))
    for x in range(dim):
        P[x ^ k, x] = 1.0
    return P


def hadamard_test(vectors, j: int, k: int) -> float:
    """Exact P(0) of the one-ancilla inner-product circuit.

    `vectors` is the state-preparation oracle: row j is the real unit vector
    |v_j>.  The circuit is: H on the ancilla, controlled preparation of
    |v_j>, controlled XOR against the basis index k, H on the ancilla.
    Returns P(ancilla = 0) = (1 + <k|v_j>) / 2.
    """
    vectors = np.asarray(vectors)
    if np.max(np.abs(np.imag(vectors.astype(np.complex128)))) > 1e-12:
        raise ValueError("hadamard_test requires real-valued training vectors")
    v = np.real(vectors[j]).astype(np.float64)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("training vector must be unit norm")
    v = _pad_to_power_of_two(v)
    if not 0 <= k < len(v):
        raise ValueError("basis index out of range")
    n_data = int(round(math.log2(len(v))))

    reg = QuantumRegister.zeros(1 + n_data)
    data = list(range(1, 1 + n_data))
    reg = apply_unitary(reg, H_GATE, [0])
    reg = apply_unitary(reg, state_prep_unitary(v), data, controls=[0])
    reg = apply_unitary(reg, xor_permutation(n_data, k), data, controls=[0])
    reg = apply_unitary(reg, H_GATE, [0])
    probs = reg.probabilities()
    return float(np.sum(probs[: 2**n_data]))


# --- amplitude estimation -------------------------------------------------

AE_COST_CONSTANT = 8  # constant inside the O(1/(eps0*delta0)) query charge
_DELTA_FLOOR = 1e-9  # avoids a divide-by-zero charge when delta0 = 0


def ae_query_charge(epsilon0: float, delta0: float, c: float = AE_COST_CONSTANT) -> int:
    return int(math.ceil(c / (epsilon0 * max(delta0, _DELTA_FLOOR))))


def amplitude_estimate(
    success_prob: float,
    epsilon0: float,
    delta0: float,
    rng: np.random.Generator,
    failure_mode: str = "worst-case",
    counter: QueryCounter | None = None,
    c: float = AE_COST_CONSTANT,
) -> float:
    """Contract-level amplitude estimation.

    With probability >= 1 - delta0 the returned value is within epsilon0 of
    success_prob; otherwise the value is adversarial ('worst-case') or
    uniform on [0, 1] ('uniform').  Charges ceil(c / (epsilon0 * delta0))
    oracle queries.
    """
    if not 0.0 <= success_prob <= 1.0:
        raise ValueError("success_prob must lie in [0, 1]")
    if not 0.0 < epsilon0 < 1.0:
        raise ValueError("epsilon0 must lie in (0, 1)")
    if not 0.0 <= delta0 < 1.0:
        raise ValueError("delta0 must lie in [0, 1)")
    if counter is not None:
        counter.charge("amplitude_estimation", ae_query_charge(epsilon0, delta0, c))
    if delta0 > 0.0 and rng.random() < delta0:
        if failure_mode == "uniform":
            return float(rng.random())
        # worst case: the point of [0, 1] farthest from the truth
        return 0.0 if success_prob > 0.5 else 1.0
    value = success_prob + epsilon0 * (2.0 * rng.random() - 1.0)
    return float(min(1.0, max(0.0, value)))


def grover_iterate(success_prob: float) -> np.ndarray:
    """Single-qubit Grover iterate G = A S0 A^dag S_chi for an amplitude
    sqrt(p); a rotation by 2*theta with sin^2(theta) = p."""
    theta = math.asin(math.sqrt(success_prob))
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def amplitude_estimate_circuit(success_prob: float, bits: int) -> np.ndarray:
    """Exact outcome distribution of circuit-level amplitude estimation:
    QPE on the Grover iterate applied to A|0>.  Entry y of the result is the
    probability of reading y, whose estimate is sin^2(pi * y / 2^bits)."""
    theta = math.asin(math.sqrt(success_prob))
    amp = np.array([math.cos(theta), math.sin(theta)], dtype=np.complex128)
    result = phase_estimate_distribution(grover_iterate(success_prob), amp, bits)
    return result


@dataclass
class PhaseEstimateResult:
    samples: list  # (phase in [0,1), multiplicity) pairs
    bits: int
    failure_prob: float
    distribution: np.ndarray = field(repr=False, default=None)

    def phases(self) -> np.ndarray:
        return np.array([p for p, _ in self.samples])

    def multiplicities(self) -> np.ndarray:
        return np.array([m for _, m in self.samples])


def phase_estimate_distribution(U, psi, bits: int) -> np.ndarray:
    """Exact outcome distribution of textbook QPE by state-vector simulation.

    Simulates the circuit: `bits` control qubits in |+>, controlled-U^(2^m)
    powers, inverse QFT on the control register (applied as the DFT along
    the control axis, which is the same unitary).  Entry y is the
    probability of reading the phase y / 2^bits.
    """
    if bits < 1 or bits > PHASE_BITS_CAP:
        raise ValueError(f"bits must be in [1, {PHASE_BITS_CAP}]")
    U = np.asarray(U, dtype=np.complex128)
    psi = np.asarray(psi, dtype=np.complex128)
    dim = len(psi)
    if U.shape != (dim, dim):
        raise ValueError("U and psi dimensions disagree")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("psi must be normalized")
    if np.max(np.abs(U @ U.conj().T - np.eye(dim))) > 1e-9:
        raise ValueError("U is not unitary")

    n_ctrl = 2**bits
    # joint state, control register as the leading axis, all controls in |+>
    joint = np.tile(psi, (n_ctrl, 1)) / math.sqrt(n_ctrl)
    U_pow = U
    for m in range(bits):  # controlled-U^(2^m) on control bit of weight 2^m
        rows = np.arange(n_ctrl) & (1 << m) != 0
        joint[rows] = joint[rows] @ U_pow.T
        if m + 1 < bits:
            U_pow = U_pow @ U_pow
    # inverse QFT on the control register: y-amplitudes sum_x e^{-2pi i xy/N}
    joint = np.fft.fft(joint, axis=0) / math.sqrt(n_ctrl)
    dist = np.sum(np.abs(joint) ** 2, axis=1)
    return dist / np.sum(dist)


def phase_estimate(
    U,
    psi: QuantumRegister | np.ndarray,
    bits: int,
    shots: int,
    rng: np.random.Generator | None = None,
) -> PhaseEstimateResult:
    """Sample `shots` QPE outcomes; each phase is a multiple of 2^-bits."""
    if isinstance(psi, QuantumRegister):
        psi = psi.state
    dist = phase_estimate_distribution(U, psi, bits)
    if rng is None:
        rng = np.random.default_rng(0)
    counts = rng.multinomial(shots, dist)
    samples = [(y / 2**bits, int(c)) for y, c in enumerate(counts) if c > 0]
    return PhaseEstimateResult(samples=samples, bits=bits, failure_prob=0.0, distribution=dist)


def phase_to_eigenvalue(phase: float, scale: float = 1.0) -> float:
    """Recover the H-eigenvalue from a QPE phase of U = e^{-iH}.

    The eigenphase phi in [0, 1) satisfies e^{-iE} = e^{2 pi i phi}; E is
    -2*pi*phi wrapped to (-pi, pi], then divided by `scale`.
    """
    E = -2.0 * math.pi * phase
    while E <= -math.pi:
        E += 2.0 * math.pi
    return E / scale
