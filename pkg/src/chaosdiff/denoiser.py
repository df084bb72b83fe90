"""Measurement-enabled backward denoising.

One denoising step tensors the data state with ancillas in |0...0>, applies a
hardware-efficient ansatz V(theta) on the joint register, measures the
ancillas in the computational basis, and keeps the normalized projected data
state. The measurement makes the channel non-unitary, which is what lets a
sequence of such steps pull a scrambled ensemble back toward structure.

Ansatz layout per layer: every qubit gets an X rotation then a Y rotation
(parameters interleaved per qubit), followed by a fixed CZ brick: pairs
(0,1), (2,3), ... then (1,2), (3,4), .... All CZs commute, so the internal
brick order is immaterial. A step on ``n`` qubits with ``L`` layers consumes
``2 n L`` angles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import seeding
from .circuits import Op, apply_ops
from .qstate import (
    Ket,
    StateEnsemble,
    haar_product_batch,
    measure_trailing_batch,
)


@dataclass
class DenoiserStack:
    """Trainable parameters of the whole backward chain.

    ``thetas[i]`` drives step ``i + 1``; generation applies steps
    ``steps, steps-1, ..., 1`` in that order.
    """

    steps: int
    n_data: int
    n_ancilla: int
    layers: int
    thetas: list[np.ndarray]

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.n_ancilla < 0:
            raise ValueError("n_ancilla must be >= 0")
        expected = 2 * (self.n_data + self.n_ancilla) * self.layers
        if len(self.thetas) != self.steps:
            raise ValueError(f"need {self.steps} parameter vectors, got {len(self.thetas)}")
        self.thetas = [np.asarray(t, dtype=float) for t in self.thetas]
        if any(t.shape != (expected,) for t in self.thetas):
            raise ValueError(f"every parameter vector must have length {expected}")

    @property
    def n_qubits(self) -> int:
        return self.n_data + self.n_ancilla

    @classmethod
    def random_init(
        cls,
        steps: int,
        n_data: int,
        n_ancilla: int,
        layers: int,
        rng: np.random.Generator,
    ) -> "DenoiserStack":
        """Angles drawn uniformly in [-pi, pi], the conventional VQC init."""
        size = 2 * (n_data + n_ancilla) * layers
        thetas = [rng.uniform(-np.pi, np.pi, size=size) for _ in range(steps)]
        return cls(steps, n_data, n_ancilla, layers, thetas)


@dataclass(frozen=True)
class DenoiseStepRecord:
    """Ancilla outcome, its Born probability, and the projected data state."""

    step: int
    outcome: str
    born_prob: float
    state: Ket


def ansatz_ops(n_qubits: int, layers: int) -> list[Op]:
    """Gate sequence of the hardware-efficient ansatz (parameter indices
    reference a vector of length ``2 * n_qubits * layers``)."""
    ops: list[Op] = []
    for layer in range(layers):
        base = 2 * n_qubits * layer
        for q in range(n_qubits):
            ops.append(Op("rx", (q,), param=base + 2 * q))
            ops.append(Op("ry", (q,), param=base + 2 * q + 1))
        for q in range(0, n_qubits - 1, 2):
            ops.append(Op("cz", (q, q + 1)))
        for q in range(1, n_qubits - 1, 2):
            ops.append(Op("cz", (q, q + 1)))
    return ops


def build_ansatz_unitary(theta: np.ndarray, n_qubits: int, layers: int) -> list[Op]:
    """The ansatz as a composable gate sequence (validating the parameter count)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (2 * n_qubits * layers,):
        raise ValueError(
            f"parameter vector must have length {2 * n_qubits * layers}, got {theta.shape}"
        )
    return ansatz_ops(n_qubits, layers)


def _layers_from_theta(theta: np.ndarray, n_qubits: int) -> int:
    if theta.size % (2 * n_qubits) != 0:
        raise ValueError(
            f"parameter vector of length {theta.size} does not fit {n_qubits} qubits"
        )
    return theta.size // (2 * n_qubits)


def attach_ancillas(amps: np.ndarray, n_ancilla: int) -> np.ndarray:
    """Tensor row-stacked data states with |0...0> ancillas on the low side."""
    if n_ancilla == 0:
        return amps
    batch, d = amps.shape
    joint = np.zeros((batch, d, 2**n_ancilla), dtype=complex)
    joint[:, :, 0] = amps
    return joint.reshape(batch, -1)


def denoise_step(
    state: Ket, theta: np.ndarray, n_ancilla: int, rng: np.random.Generator
) -> DenoiseStepRecord:
    """One sampled denoising step on a single ket.

    With ``n_ancilla = 0`` the channel degenerates to plain unitary
    application: the outcome is the empty string with probability 1.
    """
    theta = np.asarray(theta, dtype=float)
    n = state.n_qubits + n_ancilla
    layers = _layers_from_theta(theta, n)
    joint = attach_ancillas(state.amplitudes[None, :], n_ancilla)
    joint = apply_ops(joint, n, ansatz_ops(n, layers), theta)
    if n_ancilla == 0:
        return DenoiseStepRecord(0, "", 1.0, Ket(joint[0]))
    z, posts, probs = measure_trailing_batch(joint, state.dim, rng.random(1))
    return DenoiseStepRecord(
        0, format(int(z[0]), f"0{n_ancilla}b"), float(probs[0]), Ket(posts[0])
    )


def denoise_branches(
    state: Ket, theta: np.ndarray, n_ancilla: int
) -> list[DenoiseStepRecord]:
    """All ancilla branches of one denoising step, weighted by Born probability."""
    theta = np.asarray(theta, dtype=float)
    n = state.n_qubits + n_ancilla
    layers = _layers_from_theta(theta, n)
    joint = attach_ancillas(state.amplitudes[None, :], n_ancilla)
    joint = apply_ops(joint, n, ansatz_ops(n, layers), theta)
    if n_ancilla == 0:
        return [DenoiseStepRecord(0, "", 1.0, Ket(joint[0]))]
    blocks = joint.reshape(state.dim, 2**n_ancilla)
    probs = np.einsum("kz,kz->z", blocks.conj(), blocks).real
    records = []
    for z in range(2**n_ancilla):
        p = float(probs[z])
        if p < 1e-14:
            continue
        records.append(
            DenoiseStepRecord(
                0, format(z, f"0{n_ancilla}b"), p, Ket(blocks[:, z] / np.sqrt(p))
            )
        )
    return records


def denoise_batch(
    amps: np.ndarray,
    theta: np.ndarray,
    n_data: int,
    n_ancilla: int,
    layers: int,
    uniforms: np.ndarray,
) -> np.ndarray:
    """Vectorized sampled denoising step on row-stacked data states."""
    n = n_data + n_ancilla
    joint = attach_ancillas(amps, n_ancilla)
    joint = apply_ops(joint, n, ansatz_ops(n, layers), theta)
    if n_ancilla == 0:
        return joint
    _, posts, _ = measure_trailing_batch(joint, 2**n_data, uniforms)
    return posts


@dataclass(frozen=True)
class GenerationResult:
    """Backward-chain output: ``ensembles[k]`` holds the intermediate ensemble
    after denoising down to step k (``ensembles[steps]`` is the product-Haar
    input, ``ensembles[0]`` the generated data)."""

    ensembles: list[StateEnsemble]

    @property
    def final(self) -> StateEnsemble:
        return self.ensembles[0]


def generate(
    stack: DenoiserStack, n_samples: int, seed: seeding.SeedLike
) -> GenerationResult:
    """Run the full backward chain from fresh product-Haar inputs."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    root = seeding.root_sequence(seed)
    amps = haar_product_batch(stack.n_data, n_samples, seeding.substream(root, 0))
    intermediates = {stack.steps: StateEnsemble.from_matrix(amps)}
    for k in range(stack.steps, 0, -1):
        uniforms = seeding.substream(root, k).random(n_samples)
        amps = denoise_batch(
            amps, stack.thetas[k - 1], stack.n_data, stack.n_ancilla, stack.layers, uniforms
        )
        intermediates[k - 1] = StateEnsemble.from_matrix(amps)
    return GenerationResult([intermediates[k] for k in range(stack.steps + 1)])
