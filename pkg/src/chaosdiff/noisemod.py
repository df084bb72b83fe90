"""Trajectory-level noise channels and their measurement-side equivalences.

Noise is unraveled on statevectors: a stochastic Pauli insertion after noisy
gates (scrambling circuits) and independent per-qubit Z flips after coherent
evolution segments (chaotic diffusion). Exact channel forms are only ever
constructed by tests at small scale.

Two executable facts about noise on the *measured* complement are exposed:

* any CPTP channel applied right before a computational-basis measurement is
  equivalent to measuring the noiseless state with the POVM
  ``E_z = sum_k K_k^dag |z><z| K_k`` (:func:`povm_from_channel`), and
* a single Pauli on a measured qubit either leaves the projected ensemble
  untouched (Z) or relabels outcomes by an XOR mask (X, Y), so any
  permutation-invariant ensemble statistic is unchanged
  (:func:`pauli_relabel_check`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import circuits
from .qstate import PAULIS, Ket, enumerate_branches

PAULI_ORDER = ("X", "Y", "Z")


@dataclass(frozen=True)
class NoiseConfig:
    """Noise strengths: per-gate Pauli rate ``p1`` (scrambling circuits) and
    per-step dephasing probability ``p2`` (chaotic evolution).

    ``p2`` is the single-step flip probability ``p_phi(dt)``; the cumulative
    probability after a longer segment follows :func:`dephasing_prob_after_steps`.
    ``gamma_phi`` records the underlying dephasing rate when known.
    """

    p1: float = 0.0
    p2: float = 0.0
    gamma_phi: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.p1 <= 0.5:
            raise ValueError(f"p1 must be in [0, 0.5], got {self.p1}")
        if not 0.0 <= self.p2 <= 0.5:
            raise ValueError(f"p2 must be in [0, 0.5], got {self.p2}")
        if self.gamma_phi is not None and self.gamma_phi < 0:
            raise ValueError(f"gamma_phi must be nonnegative, got {self.gamma_phi}")

    @classmethod
    def from_rate(cls, gamma_phi: float, dt: float, p1: float = 0.0) -> "NoiseConfig":
        """Derive the per-step flip probability from a dephasing rate."""
        return cls(p1=p1, p2=dephasing_prob(dt, gamma_phi), gamma_phi=gamma_phi)


@dataclass(frozen=True)
class PovmElement:
    """One POVM effect ``E_z`` on the measured space, keyed by its outcome."""

    outcome: str
    operator: np.ndarray


def dephasing_prob(t: float, gamma_phi: float) -> float:
    """Stochastic Z-flip probability after evolving for time ``t``."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if gamma_phi < 0:
        raise ValueError(f"gamma_phi must be nonnegative, got {gamma_phi}")
    return (1.0 - np.exp(-gamma_phi * t)) / 2.0


def dephasing_prob_after_steps(k: int, p2: float) -> float:
    """Composition of ``k`` independent per-step flips: (1 - (1-2 p2)**k) / 2."""
    if k < 0:
        raise ValueError(f"step count must be nonnegative, got {k}")
    return (1.0 - (1.0 - 2.0 * p2) ** k) / 2.0


def _z_sign(n_qubits: int, qubit: int) -> np.ndarray:
    """Diagonal of Z on one qubit over the full basis, as +/-1 floats."""
    idx = np.arange(2**n_qubits)
    bit = (idx >> (n_qubits - 1 - qubit)) & 1
    return 1.0 - 2.0 * bit


def apply_dephasing_batch(
    amplitudes: np.ndarray,
    n_qubits: int,
    per_qubit_prob: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Independent stochastic Z per qubit on row-stacked states; 0 prob is a no-op."""
    if not 0.0 <= per_qubit_prob <= 0.5:
        raise ValueError(f"per-qubit probability must be in [0, 0.5], got {per_qubit_prob}")
    if per_qubit_prob == 0.0:
        return amplitudes
    out = amplitudes.copy()
    for q in range(n_qubits):
        flip = rng.random(out.shape[0]) < per_qubit_prob
        if np.any(flip):
            out[flip] *= _z_sign(n_qubits, q)[None, :]
    return out


def apply_dephasing(state: Ket, per_qubit_prob: float, rng: np.random.Generator) -> Ket:
    """Trajectory unraveling of pure dephasing on every qubit of a ket."""
    out = apply_dephasing_batch(state.amplitudes[None, :], state.n_qubits, per_qubit_prob, rng)
    return Ket(out[0])


def pauli_noise_batch(
    amplitudes: np.ndarray,
    n_qubits: int,
    qubit: int,
    p1: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, int]:
    """One noisy gate location: with probability ``p1`` per row, apply a
    uniformly random Pauli at ``qubit``. Returns the new batch and how many
    rows were hit."""
    if p1 == 0.0:
        return amplitudes, 0
    hit = rng.random(amplitudes.shape[0]) < p1
    which = rng.integers(0, 3, size=amplitudes.shape[0])
    if not np.any(hit):
        return amplitudes, 0
    out = amplitudes.copy()
    for w, name in enumerate(PAULI_ORDER):
        rows = hit & (which == w)
        if np.any(rows):
            out[rows] = circuits._apply_matrix(out[rows], PAULIS[name], (qubit,), n_qubits)
    return out, int(hit.sum())


def inject_rucd_pauli(
    state: Ket,
    ops: Sequence[circuits.Op],
    p1: float,
    rng: np.random.Generator,
    theta: np.ndarray | None = None,
) -> tuple[Ket, int]:
    """Execute a gate sequence with the per-gate Pauli-depolarizing unraveling.

    After every single-qubit rotation, a uniformly random Pauli hits its
    target with probability ``p1``. Entangling gates are noiseless. With
    ``p1 = 0`` the execution is bit-identical to the ideal circuit.
    """
    if not 0.0 <= p1 <= 0.5:
        raise ValueError(f"p1 must be in [0, 0.5], got {p1}")
    amps = state.amplitudes[None, :]
    injected = 0
    for op in ops:
        amps = circuits._apply_matrix(amps, circuits.op_matrix(op, theta), op.targets, state.n_qubits)
        if op.kind in ("rx", "ry", "rz") and p1 > 0.0:
            amps, hits = pauli_noise_batch(amps, state.n_qubits, op.targets[0], p1, rng)
            injected += hits
    return Ket(amps[0]), injected


def povm_from_channel(kraus: Sequence[np.ndarray]) -> list[PovmElement]:
    """POVM equivalent to "apply the channel, then measure in the computational basis".

    ``kraus`` are operator-sum elements on the measured space. The effects
    ``E_z = sum_k K_k^dag |z><z| K_k`` are positive semidefinite and complete
    by construction whenever the channel is trace preserving.
    """
    mats = [np.asarray(k, dtype=complex) for k in kraus]
    if not mats:
        raise ValueError("channel needs at least one Kraus element")
    dim = mats[0].shape[0]
    if any(m.shape != (dim, dim) for m in mats):
        raise ValueError("all Kraus elements must be square with equal dimension")
    total = sum(m.conj().T @ m for m in mats)
    if not np.allclose(total, np.eye(dim), atol=1e-10):
        raise ValueError("Kraus elements do not satisfy sum K^dag K = I (not trace preserving)")
    n_bits = int(dim.bit_length() - 1)
    elements = []
    for z in range(dim):
        effect = np.zeros((dim, dim), dtype=complex)
        for m in mats:
            row = m[z, :]
            effect += np.outer(row.conj(), row)
        elements.append(PovmElement(format(z, f"0{n_bits}b"), effect))
    return elements


def povm_probs(state: Ket, elements: Sequence[PovmElement], n_measured: int) -> np.ndarray:
    """Outcome probabilities ``<Phi|(I (x) E_z)|Phi>`` for trailing measured qubits."""
    dim_meas = 2**n_measured
    blocks = state.amplitudes.reshape(-1, dim_meas)
    probs = np.array(
        [np.einsum("mf,fg,mg->", blocks.conj(), e.operator, blocks).real for e in elements]
    )
    return probs


@dataclass(frozen=True)
class RelabelVerdict:
    """Outcome of comparing a projected ensemble with its Pauli-corrupted twin."""

    pauli: str
    relabeled: bool
    max_prob_deviation: float
    max_state_deviation: float
    ok: bool


def pauli_relabel_check(
    generator: Ket,
    measured_qubits: Sequence[int],
    qubit: int,
    pauli: str,
    atol: float = 1e-12,
) -> RelabelVerdict:
    """Check the outcome-relabeling equivalence for one Pauli on a measured qubit.

    Z must leave every branch untouched; X and Y must map the branch at
    outcome ``z`` to ``z XOR e_q``. Branches are compared by Born probability
    and by conditional projector (phase-free), both at ``atol``.
    """
    pauli = pauli.upper()
    if pauli not in PAULIS:
        raise ValueError(f"pauli must be one of X, Y, Z, got {pauli!r}")
    measured = tuple(sorted({int(q) for q in measured_qubits}))
    if qubit not in measured:
        raise ValueError(f"qubit {qubit} is not in the measured subset {measured}")
    bitpos = measured.index(qubit)
    mask = 1 << (len(measured) - 1 - bitpos)

    noisy_gen = Ket(
        circuits._apply_matrix(
            generator.amplitudes[None, :], PAULIS[pauli], (qubit,), generator.n_qubits
        )[0]
    )
    base = {int(r.outcome, 2): r for r in enumerate_branches(generator, measured)}
    noisy = {int(r.outcome, 2): r for r in enumerate_branches(noisy_gen, measured)}

    relabeled = pauli in ("X", "Y")
    max_dp = 0.0
    max_ds = 0.0
    keys = set(base) | {(z ^ mask if relabeled else z) for z in noisy}
    for z in keys:
        zn = z ^ mask if relabeled else z
        b, n = base.get(z), noisy.get(zn)
        if b is None or n is None:
            missing = b or n
            max_dp = max(max_dp, missing.probability if missing else np.inf)
            continue
        max_dp = max(max_dp, abs(b.probability - n.probability))
        diff = b.post_state.projector() - n.post_state.projector()
        max_ds = max(max_ds, float(np.linalg.norm(diff)))
    return RelabelVerdict(pauli, relabeled, max_dp, max_ds, max_dp <= atol and max_ds <= atol)
