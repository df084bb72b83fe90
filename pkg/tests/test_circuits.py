import numpy as np
import pytest

from chaosdiff.circuits import (
    CNOT,
    CZ,
    Op,
    adjoint_gradient,
    apply_ops,
    ops_matrix,
    rot_x,
    rot_y,
    rot_z,
    rot_zz,
)

from oracles import embed_gate, random_ket


def test_rotation_matrices_are_unitary():
    for rot in (rot_x, rot_y, rot_z, rot_zz):
        m = rot(0.37)
        assert np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=1e-12)


def test_rotation_at_zero_is_identity():
    for rot in (rot_x, rot_y, rot_z):
        assert np.allclose(rot(0.0), np.eye(2))


def test_rzz_diagonal_signs():
    m = rot_zz(0.8)
    e = np.exp(-0.4j)
    assert np.allclose(np.diag(m), [e, e.conjugate(), e.conjugate(), e])


def test_apply_ops_matches_dense_product():
    rng = np.random.default_rng(0)
    theta = rng.uniform(-np.pi, np.pi, 4)
    ops = [
        Op("rx", (0,), param=0),
        Op("ry", (2,), param=1),
        Op("cz", (0, 1)),
        Op("rz", (1,), param=2),
        Op("cnot", (2, 0)),
        Op("rzz", (1, 2), param=3),
    ]
    mats = {
        0: embed_gate(rot_x(theta[0]), (0,), 3),
        1: embed_gate(rot_y(theta[1]), (2,), 3),
        2: embed_gate(CZ, (0, 1), 3),
        3: embed_gate(rot_z(theta[2]), (1,), 3),
        4: embed_gate(CNOT, (2, 0), 3),
        5: embed_gate(rot_zz(theta[3]), (1, 2), 3),
    }
    dense = np.eye(8, dtype=complex)
    for i in range(len(ops)):
        dense = mats[i] @ dense
    for _ in range(5):
        psi = random_ket(8, rng)
        out = apply_ops(psi[None, :], 3, ops, theta)[0]
        assert np.allclose(out, dense @ psi, atol=1e-12)
    assert np.allclose(ops_matrix(ops, 3, theta), dense, atol=1e-12)


def test_fixed_angle_ops():
    rng = np.random.default_rng(1)
    ops = [Op("ry", (0,), angle=0.9), Op("rz", (1,), angle=-0.4)]
    psi = random_ket(4, rng)
    out = apply_ops(psi[None, :], 2, ops)[0]
    dense = embed_gate(rot_z(-0.4), (1,), 2) @ embed_gate(rot_y(0.9), (0,), 2)
    assert np.allclose(out, dense @ psi, atol=1e-12)


def test_batched_application_matches_loop():
    rng = np.random.default_rng(2)
    theta = rng.uniform(-1, 1, 2)
    ops = [Op("rx", (0,), param=0), Op("cz", (0, 1)), Op("ry", (1,), param=1)]
    batch = np.array([random_ket(4, rng) for _ in range(6)])
    out = apply_ops(batch, 2, ops, theta)
    for row_in, row_out in zip(batch, out):
        assert np.allclose(apply_ops(row_in[None, :], 2, ops, theta)[0], row_out)


class TestAdjointGradient:
    """Check the reverse sweep against finite differences of simple costs."""

    def _ops_theta(self, rng, n=3, layers=2):
        ops = []
        idx = 0
        for _ in range(layers):
            for q in range(n):
                ops.append(Op("rx", (q,), param=idx))
                idx += 1
                ops.append(Op("ry", (q,), param=idx))
                idx += 1
            ops.append(Op("cz", (0, 1)))
            ops.append(Op("cnot", (1, 2)))
            ops.append(Op("rzz", (0, 2), param=idx))
            idx += 1
        theta = rng.uniform(-np.pi, np.pi, idx)
        return ops, theta

    def test_linear_cost(self):
        # f = 2 Re[c^T psi] has Wirtinger derivative c
        rng = np.random.default_rng(3)
        ops, theta = self._ops_theta(rng)
        psi0 = np.array([random_ket(8, rng), random_ket(8, rng)])
        c = rng.normal(size=(2, 8)) + 1j * rng.normal(size=(2, 8))

        def f(t):
            out = apply_ops(psi0, 3, ops, t)
            return float(2 * np.real(np.sum(c * out)))

        final = apply_ops(psi0, 3, ops, theta)
        grad = adjoint_gradient(final, c, 3, ops, theta)
        fd = np.array(
            [
                (f(theta + h * e) - f(theta - h * e)) / (2 * h)
                for h, e in ((1e-6, np.eye(theta.size)[i]) for i in range(theta.size))
            ]
        )
        assert np.allclose(grad, fd, atol=1e-7)

    def test_overlap_cost(self):
        # f = sum_b |<phi_b|psi_b>|^2, cotangent conj(phi) <psi|phi>
        rng = np.random.default_rng(4)
        ops, theta = self._ops_theta(rng)
        psi0 = np.array([random_ket(8, rng) for _ in range(3)])
        phi = np.array([random_ket(8, rng) for _ in range(3)])

        def f(t):
            out = apply_ops(psi0, 3, ops, t)
            return float(np.sum(np.abs(np.sum(phi.conj() * out, axis=1)) ** 2))

        final = apply_ops(psi0, 3, ops, theta)
        overlaps = np.sum(phi.conj() * final, axis=1)  # <phi|psi>
        cot = overlaps.conj()[:, None] * phi.conj()
        grad = adjoint_gradient(final, cot, 3, ops, theta)
        fd = np.zeros(theta.size)
        for i in range(theta.size):
            e = np.eye(theta.size)[i]
            fd[i] = (f(theta + 1e-6 * e) - f(theta - 1e-6 * e)) / 2e-6
        assert np.allclose(grad, fd, atol=1e-7)
