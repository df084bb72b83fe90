"""Quantum autoencoder for latent-space diffusion.

The encoder is a layered circuit of per-qubit Y rotations followed by a
cyclic CNOT ring. Training drives the non-latent ("trash") qubits toward
|0...0> by minimizing one minus the mean trash-block overlap; once that loss
is small, projecting the trash register onto |0...0> compresses a state into
the latent register almost deterministically, and the exact inverse circuit
decodes latent states back to the full space.

Encoding uses post-selection on the trash outcome rather than a partial
trace so that the latent ensemble stays pure, which is what the diffusion
pipeline consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import seeding
from .circuits import Op, adjoint_gradient, apply_ops
from .qstate import Ket, StateEnsemble
from .train import TrainingError, _Adam, finite_difference_gradient

COMPRESSIBLE_EPS = 1e-12
DEFAULT_DEPTH = 20


@dataclass
class QaeModel:
    """Encoder shape and angles, one Y rotation per qubit per layer."""

    n_total: int
    n_latent: int
    depth: int
    params: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_latent < self.n_total:
            raise ValueError(
                f"need 1 <= n_latent < n_total, got {self.n_latent}, {self.n_total}"
            )
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        self.params = np.asarray(self.params, dtype=float)
        if self.params.shape != (self.n_total * self.depth,):
            raise ValueError(
                f"params must have length n_total*depth = {self.n_total * self.depth}"
            )

    @property
    def n_trash(self) -> int:
        return self.n_total - self.n_latent

    @classmethod
    def random_init(
        cls,
        n_total: int,
        n_latent: int,
        depth: int = DEFAULT_DEPTH,
        rng: np.random.Generator | None = None,
    ) -> "QaeModel":
        if rng is None:
            rng = np.random.default_rng()
        return cls(n_total, n_latent, depth, rng.uniform(-np.pi, np.pi, n_total * depth))


def encoder_ops(n_total: int, depth: int) -> list[Op]:
    """Per layer: RY on every qubit, then the CNOT ring q -> q+1 (cyclic)."""
    ops: list[Op] = []
    for layer in range(depth):
        for q in range(n_total):
            ops.append(Op("ry", (q,), param=layer * n_total + q))
        for q in range(n_total):
            ops.append(Op("cnot", (q, (q + 1) % n_total)))
    return ops


def encoder_circuit(model: QaeModel) -> list[Op]:
    return encoder_ops(model.n_total, model.depth)


def decoder_ops(model: QaeModel) -> tuple[list[Op], np.ndarray]:
    """Exact inverse of the trained encoder: reversed gates, negated angles."""
    ops = [
        Op(op.kind, op.targets, param=op.param) for op in reversed(encoder_circuit(model))
    ]
    return ops, -model.params


def _encode_batch(amps: np.ndarray, model: QaeModel) -> np.ndarray:
    return apply_ops(amps, model.n_total, encoder_circuit(model), model.params)


def _trash_zero_prob(encoded: np.ndarray, model: QaeModel) -> np.ndarray:
    """Per-row overlap of the trash marginal with |0...0>, which equals the
    total weight of the trash = 0...0 block of the encoded state."""
    blocks = encoded.reshape(encoded.shape[0], 2**model.n_latent, 2**model.n_trash)
    block0 = blocks[:, :, 0]
    return np.einsum("bk,bk->b", block0.conj(), block0).real


def trash_loss(model: QaeModel, batch: StateEnsemble) -> float:
    """One minus the mean trash-block fidelity with |0...0> over the batch."""
    if batch.n_qubits != model.n_total:
        raise ValueError(f"batch has {batch.n_qubits} qubits, model wants {model.n_total}")
    encoded = _encode_batch(batch.matrix(), model)
    return float(1.0 - _trash_zero_prob(encoded, model).mean())


def trash_loss_and_gradient(model: QaeModel, batch: StateEnsemble) -> tuple[float, np.ndarray]:
    """Loss plus its adjoint-mode gradient in the encoder angles."""
    if batch.n_qubits != model.n_total:
        raise ValueError(f"batch has {batch.n_qubits} qubits, model wants {model.n_total}")
    amps = batch.matrix()
    encoded = _encode_batch(amps, model)
    probs = _trash_zero_prob(encoded, model)
    loss = float(1.0 - probs.mean())
    # d(loss)/d(psi) = -conj(psi) restricted to the trash |0...0> block / batch
    cot = np.zeros_like(encoded)
    blocks = cot.reshape(cot.shape[0], 2**model.n_latent, 2**model.n_trash)
    enc_blocks = encoded.reshape(*blocks.shape)
    blocks[:, :, 0] = -enc_blocks[:, :, 0].conj() / amps.shape[0]
    grad = adjoint_gradient(
        encoded, cot, model.n_total, encoder_circuit(model), model.params
    )
    return loss, grad


def train_qae(
    model: QaeModel,
    data: StateEnsemble,
    epochs: int = 2000,
    learning_rate: float = 0.001,
    seed: seeding.SeedLike = None,
    batch_size: int | None = None,
    gradient_mode: str = "adjoint",
) -> tuple[QaeModel, np.ndarray]:
    """Adam descent on the trash loss; full-batch unless ``batch_size`` is set.

    Returns a new model with trained angles and the per-epoch loss curve.
    ``epochs = 0`` leaves the model untouched.
    """
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    params = model.params.copy()
    adam = _Adam(learning_rate, 0.9, 0.999, 1e-8)
    losses = np.zeros(epochs)
    root = seeding.root_sequence(seed)
    for epoch in range(epochs):
        if batch_size is None or batch_size >= len(data):
            batch = data
        else:
            picks = seeding.substream(root, epoch).choice(len(data), batch_size, replace=False)
            batch = StateEnsemble([data.states[i] for i in picks])
        current = QaeModel(model.n_total, model.n_latent, model.depth, params)
        if gradient_mode == "finite_difference":
            loss = trash_loss(current, batch)
            grad = finite_difference_gradient(
                lambda t: trash_loss(
                    QaeModel(model.n_total, model.n_latent, model.depth, t), batch
                ),
                params,
            )
        else:
            loss, grad = trash_loss_and_gradient(current, batch)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise TrainingError(f"non-finite autoencoder loss/gradient at epoch {epoch}")
        losses[epoch] = loss
        params = adam.update(params, grad)
    return QaeModel(model.n_total, model.n_latent, model.depth, params), losses


def encode(model: QaeModel, state: Ket) -> Ket:
    """Compress by encoding then post-selecting the trash register on |0...0>."""
    if state.n_qubits != model.n_total:
        raise ValueError(f"state has {state.n_qubits} qubits, model wants {model.n_total}")
    encoded = _encode_batch(state.amplitudes[None, :], model)
    block0 = encoded.reshape(2**model.n_latent, 2**model.n_trash)[:, 0]
    prob = float(np.real(np.vdot(block0, block0)))
    if prob < COMPRESSIBLE_EPS:
        raise ValueError(
            f"trash projection probability {prob:.3e} is below {COMPRESSIBLE_EPS}; "
            "the state is not compressible under this model"
        )
    return Ket(block0 / np.sqrt(prob))


def decode(model: QaeModel, latent: Ket) -> Ket:
    """Tensor |0...0> onto the trash register and run the exact inverse circuit."""
    if latent.n_qubits != model.n_latent:
        raise ValueError(f"latent has {latent.n_qubits} qubits, model wants {model.n_latent}")
    joint = np.zeros((1, 2**model.n_total), dtype=complex)
    joint.reshape(1, 2**model.n_latent, 2**model.n_trash)[0, :, 0] = latent.amplitudes
    ops, angles = decoder_ops(model)
    out = apply_ops(joint, model.n_total, ops, angles)
    return Ket(out[0])


def encode_ensemble(model: QaeModel, data: StateEnsemble) -> StateEnsemble:
    return StateEnsemble([encode(model, s) for s in data.states], data.weights)


def decode_ensemble(model: QaeModel, latents: StateEnsemble) -> StateEnsemble:
    return StateEnsemble([decode(model, s) for s in latents.states], latents.weights)
