"""Dense statevector primitives: kets, weighted ensembles, gates, measurement.

Conventions shared by every module in this package:

* Qubit 0 is the most significant bit of the computational-basis index, so
  the amplitude of ``|b0 b1 ... b_{n-1}>`` sits at index ``int(b0 b1 ..., 2)``.
* Tensor products place the left factor on the high-order qubits
  (``tensor(a, b)`` is ``kron(a, b)``).
* Measurement outcomes are bitstrings over the measured qubits listed in
  ascending qubit order.
* States are only ever compared through fidelities or density matrices,
  never amplitude-wise, because branch-dependent global phases are
  unphysical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

NORM_ATOL = 1e-10
ENSEMBLE_WEIGHT_ATOL = 1e-9
BRANCH_PROB_FLOOR = 1e-14

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


class Ket:
    """Unit-norm pure state on ``n_qubits`` qubits as a dense amplitude vector."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, amplitudes: Iterable[complex]):
        amp = np.ascontiguousarray(amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size < 2 or amp.size & (amp.size - 1):
            raise ValueError(
                f"amplitude vector must have length 2**n for n >= 1, got {amp.shape}"
            )
        norm = float(np.linalg.norm(amp))
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm {norm!r} is not 1 within {NORM_ATOL}")
        self.amplitudes = amp
        self.n_qubits = int(amp.size.bit_length() - 1)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        """Rank-one density matrix |psi><psi|, the phase-free representation."""
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def __repr__(self) -> str:  # pragma: no cover
        return f"Ket(n_qubits={self.n_qubits})"


def basis_state(n_qubits: int, index: int | str) -> Ket:
    """Computational basis state, from an integer index or a bitstring."""
    if isinstance(index, str):
        if len(index) != n_qubits:
            raise ValueError(f"bitstring {index!r} does not have {n_qubits} bits")
        index = int(index, 2)
    amp = np.zeros(2**n_qubits, dtype=complex)
    amp[index] = 1.0
    return Ket(amp)


@dataclass(frozen=True)
class MeasurementRecord:
    """One projective-measurement branch: outcome, Born probability, post-state."""

    outcome: str
    probability: float
    post_state: Ket


class StateEnsemble:
    """Weighted collection of kets with a shared qubit count.

    Weights default to uniform ``1/N`` (the empirical-sample case) and must
    be nonnegative and sum to one within ``1e-9``.
    """

    __slots__ = ("states", "weights", "n_qubits")

    def __init__(self, states: Sequence[Ket], weights: Iterable[float] | None = None):
        states = list(states)
        if not states:
            raise ValueError("ensemble must contain at least one state")
        n = states[0].n_qubits
        if any(s.n_qubits != n for s in states):
            raise ValueError("all ensemble members must share the same qubit count")
        if weights is None:
            w = np.full(len(states), 1.0 / len(states))
        else:
            w = np.asarray(list(weights), dtype=float)
            if w.shape != (len(states),):
                raise ValueError("one weight per state is required")
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            if abs(w.sum() - 1.0) > ENSEMBLE_WEIGHT_ATOL:
                raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        self.states = states
        self.weights = w
        self.n_qubits = n

    @classmethod
    def from_matrix(cls, amplitudes: np.ndarray, weights=None) -> "StateEnsemble":
        """Build from a row-stacked ``(N, 2**n)`` amplitude array."""
        return cls([Ket(row) for row in np.asarray(amplitudes)], weights)

    @property
    def members(self) -> list[tuple[float, Ket]]:
        return list(zip(self.weights.tolist(), self.states))

    def matrix(self) -> np.ndarray:
        """Row-stacked ``(N, 2**n)`` amplitude array."""
        return np.array([s.amplitudes for s in self.states])

    def average_density(self) -> np.ndarray:
        """First moment sum_i w_i |psi_i><psi_i|."""
        m = self.matrix()
        return (m.conj().T * self.weights) @ m

    def __len__(self) -> int:
        return len(self.states)

    def __repr__(self) -> str:  # pragma: no cover
        return f"StateEnsemble(n={len(self.states)}, n_qubits={self.n_qubits})"


# ---------------------------------------------------------------------------
# primitive operations


def tensor(a: Ket, b: Ket) -> Ket:
    """Tensor product with ``a`` on the high-order (leftmost) qubits."""
    return Ket(np.kron(a.amplitudes, b.amplitudes))


def _as_targets(targets: int | Iterable[int]) -> tuple[int, ...]:
    if isinstance(targets, (int, np.integer)):
        return (int(targets),)
    return tuple(int(t) for t in targets)


def apply_gate_raw(
    amplitudes: np.ndarray, gate: np.ndarray, targets: tuple[int, ...], n_qubits: int
) -> np.ndarray:
    """Unvalidated gate application on a bare amplitude vector."""
    m = len(targets)
    psi = amplitudes.reshape((2,) * n_qubits)
    g = gate.reshape((2,) * (2 * m))
    psi = np.tensordot(g, psi, axes=(tuple(range(m, 2 * m)), targets))
    psi = np.moveaxis(psi, tuple(range(m)), targets)
    return np.ascontiguousarray(psi).reshape(-1)


def apply_gate(state: Ket, gate: np.ndarray, targets: int | Iterable[int]) -> Ket:
    """Apply a 1- or 2-qubit unitary to the given target qubits.

    The result equals the full ``2**n x 2**n`` embedding of ``gate`` acting on
    the amplitude vector; norm is preserved to machine precision.
    """
    targets = _as_targets(targets)
    m = len(targets)
    if m not in (1, 2):
        raise ValueError(f"only 1- and 2-qubit gates are supported, got {m} targets")
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2**m, 2**m):
        raise ValueError(f"gate shape {gate.shape} does not match {m} targets")
    if not np.allclose(gate @ gate.conj().T, np.eye(2**m), atol=1e-10):
        raise ValueError("gate is not unitary within 1e-10")
    if len(set(targets)) != m:
        raise ValueError(f"duplicate target qubits {targets}")
    if any(t < 0 or t >= state.n_qubits for t in targets):
        raise ValueError(f"targets {targets} out of range for {state.n_qubits} qubits")
    return Ket(apply_gate_raw(state.amplitudes, gate, targets, state.n_qubits))


def fidelity(a: Ket, b: Ket) -> float:
    """State fidelity ``|<a|b>|**2``; 1 iff equal up to global phase."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    return float(min(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2, 1.0))


def _branch_matrix(state: Ket, measured: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Reorganize amplitudes into a (2**n_keep, 2**n_meas) matrix.

    Column z holds the unnormalized conditional state for outcome z, with
    measured qubits mapped to bits of z in ascending qubit order.
    """
    n = state.n_qubits
    keep = tuple(q for q in range(n) if q not in measured)
    psi = state.amplitudes.reshape((2,) * n)
    mat = psi.transpose(keep + measured).reshape(2 ** len(keep), 2 ** len(measured))
    probs = np.einsum("kz,kz->z", mat.conj(), mat).real
    return mat, probs


def _validate_measured(state: Ket, measured_qubits: Iterable[int]) -> tuple[int, ...]:
    measured = tuple(sorted({int(q) for q in measured_qubits}))
    if not measured:
        raise ValueError("measured_qubits must be non-empty")
    if any(q < 0 or q >= state.n_qubits for q in measured):
        raise ValueError(f"measured qubits {measured} out of range")
    if len(measured) == state.n_qubits:
        raise ValueError("measuring every qubit would leave an empty post-state")
    return measured


def measure_subset(
    state: Ket, measured_qubits: Iterable[int], rng: np.random.Generator
) -> MeasurementRecord:
    """Sample a computational-basis measurement of a subset of qubits.

    Returns the sampled outcome, its Born probability, and the normalized
    post-measurement state on the remaining qubits (in ascending qubit order).
    Deterministic for a fixed generator state.
    """
    measured = _validate_measured(state, measured_qubits)
    mat, probs = _branch_matrix(state, measured)
    cum = np.cumsum(probs)
    z = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    z = min(z, probs.size - 1)
    p = float(probs[z])
    post = Ket(mat[:, z] / np.sqrt(p))
    return MeasurementRecord(format(z, f"0{len(measured)}b"), p, post)


def enumerate_branches(
    state: Ket, measured_qubits: Iterable[int]
) -> list[MeasurementRecord]:
    """All measurement branches with probability above ``BRANCH_PROB_FLOOR``."""
    measured = _validate_measured(state, measured_qubits)
    mat, probs = _branch_matrix(state, measured)
    records = []
    for z in range(probs.size):
        p = float(probs[z])
        if p < BRANCH_PROB_FLOOR:
            continue
        post = Ket(mat[:, z] / np.sqrt(p))
        records.append(MeasurementRecord(format(z, f"0{len(measured)}b"), p, post))
    return records


def measure_trailing_batch(
    amplitudes: np.ndarray, keep_dim: int, uniforms: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized computational-basis measurement of trailing qubits.

    ``amplitudes`` is ``(B, keep_dim * meas_dim)`` row-stacked joint states;
    one uniform in [0, 1) per row selects the branch. Returns integer
    outcomes ``(B,)``, normalized post-states ``(B, keep_dim)``, and Born
    probabilities ``(B,)``. This is the batch counterpart of
    :func:`measure_subset` for the common "complement on the low-order
    qubits" layout used by the diffusion and denoising drivers.
    """
    batch = amplitudes.shape[0]
    meas_dim = amplitudes.shape[1] // keep_dim
    blocks = amplitudes.reshape(batch, keep_dim, meas_dim)
    probs = np.einsum("bkz,bkz->bz", blocks.conj(), blocks).real
    cum = np.cumsum(probs, axis=1)
    z = (uniforms[:, None] * cum[:, -1:] >= cum).sum(axis=1)
    z = np.minimum(z, meas_dim - 1)
    rows = np.arange(batch)
    p = probs[rows, z]
    posts = blocks[rows, :, z] / np.sqrt(p)[:, None]
    return z, posts, p


def haar_product_state(n_qubits: int, rng: np.random.Generator) -> Ket:
    """Tensor product of independent single-qubit Haar-random states."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    return Ket(haar_product_batch(n_qubits, 1, rng)[0])


def haar_product_batch(
    n_qubits: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """``(count, 2**n)`` array of product-Haar samples (isotropic Gaussian trick)."""
    v = rng.normal(size=(count, n_qubits, 2)) + 1j * rng.normal(size=(count, n_qubits, 2))
    v /= np.linalg.norm(v, axis=2, keepdims=True)
    amps = v[:, 0, :]
    for q in range(1, n_qubits):
        amps = (amps[:, :, None] * v[:, q, None, :]).reshape(count, -1)
    return amps


def gram_matrix(x: StateEnsemble, y: StateEnsemble) -> np.ndarray:
    """Pairwise fidelity table, entry ``(i, j) = |<x_i|y_j>|**2``."""
    if x.n_qubits != y.n_qubits:
        raise ValueError(f"qubit counts differ: {x.n_qubits} vs {y.n_qubits}")
    inner = x.matrix().conj() @ y.matrix().T
    return np.clip(np.abs(inner) ** 2, 0.0, 1.0)
