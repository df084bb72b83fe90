"""Parameterized gate-sequence substrate shared by the scrambler, denoiser, and autoencoder.

A circuit is a flat list of :class:`Op` entries. Rotation gates either read
their angle from a parameter vector (``param`` set) or carry a fixed ``angle``
(the random scrambling circuits). Application is batched over row-stacked
statevectors, and :func:`adjoint_gradient` back-propagates a real-valued cost
through the whole sequence with two sweeps instead of one circuit per
parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import PAULI_X, PAULI_Y, PAULI_Z


@dataclass(frozen=True)
class Op:
    """One gate: kind in {rx, ry, rz, rzz, cz, cnot}, acting on ``targets``."""

    kind: str
    targets: tuple[int, ...]
    param: int | None = None
    angle: float | None = None


def rot_x(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def rot_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rot_z(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def rot_zz(theta: float) -> np.ndarray:
    """exp(-i theta/2 Z(x)Z) as a diagonal two-qubit gate."""
    e = np.exp(-0.5j * theta)
    return np.diag([e, e.conjugate(), e.conjugate(), e]).astype(complex)


CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

_ROTATIONS = {"rx": rot_x, "ry": rot_y, "rz": rot_z, "rzz": rot_zz}
# generator G such that gate = exp(-i theta G / 2); d(gate)/dtheta = -i/2 G gate
_GENERATORS = {
    "rx": PAULI_X,
    "ry": PAULI_Y,
    "rz": PAULI_Z,
    "rzz": np.kron(PAULI_Z, PAULI_Z),
}


def op_angle(op: Op, theta: np.ndarray | None) -> float:
    if op.param is not None:
        if theta is None:
            raise ValueError(f"op {op} needs a parameter vector")
        return float(theta[op.param])
    if op.angle is None:
        raise ValueError(f"rotation op {op} has neither param nor angle")
    return op.angle


def op_matrix(op: Op, theta: np.ndarray | None = None) -> np.ndarray:
    if op.kind == "cz":
        return CZ
    if op.kind == "cnot":
        return CNOT
    if op.kind in _ROTATIONS:
        return _ROTATIONS[op.kind](op_angle(op, theta))
    raise ValueError(f"unknown op kind {op.kind!r}")


def _apply_matrix(batch: np.ndarray, mat: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """Apply one gate to a (B, 2**n) batch via axis contraction."""
    m = len(targets)
    psi = batch.reshape((-1,) + (2,) * n)
    g = mat.reshape((2,) * (2 * m))
    axes = tuple(t + 1 for t in targets)
    psi = np.tensordot(psi, g, axes=(axes, tuple(range(m, 2 * m))))
    psi = np.moveaxis(psi, tuple(range(-m, 0)), axes)
    return np.ascontiguousarray(psi).reshape(batch.shape[0], -1)


def apply_ops(
    batch: np.ndarray, n_qubits: int, ops: list[Op], theta: np.ndarray | None = None
) -> np.ndarray:
    """Run a gate sequence over row-stacked statevectors ``(B, 2**n)``."""
    out = batch
    for op in ops:
        out = _apply_matrix(out, op_matrix(op, theta), op.targets, n_qubits)
    return out


def ops_matrix(ops: list[Op], n_qubits: int, theta: np.ndarray | None = None) -> np.ndarray:
    """Dense unitary of the whole sequence (small systems; used by callers' oracles)."""
    eye = np.eye(2**n_qubits, dtype=complex)
    return apply_ops(eye, n_qubits, ops, theta).T


def adjoint_gradient(
    final: np.ndarray,
    cotangents: np.ndarray,
    n_qubits: int,
    ops: list[Op],
    theta: np.ndarray,
) -> np.ndarray:
    """Gradient of a real cost through the circuit by reverse sweep.

    ``final`` holds the circuit outputs ``(B, 2**n)`` and ``cotangents`` the
    Wirtinger derivatives ``w = df/dpsi`` (holding conj(psi) fixed) at those
    outputs. For each parameterized rotation ``exp(-i theta G/2)`` the chain
    rule gives ``df/dtheta = sum_b 2 Re[w_b^T (-i/2) G psi_b]`` with both
    vectors transported to that gate's position, so one forward state and one
    cotangent sweep recover the full gradient.
    """
    grad = np.zeros(theta.size)
    ket = final
    bra = cotangents.conj()
    for op in reversed(ops):
        mat = op_matrix(op, theta)
        if op.param is not None:
            gen = _GENERATORS[op.kind]
            deriv = -0.5j * _apply_matrix(ket, gen, op.targets, n_qubits)
            grad[op.param] += 2.0 * float(np.real(np.sum(bra.conj() * deriv)))
        ket = _apply_matrix(ket, mat.conj().T, op.targets, n_qubits)
        bra = _apply_matrix(bra, mat.conj().T, op.targets, n_qubits)
    return grad
